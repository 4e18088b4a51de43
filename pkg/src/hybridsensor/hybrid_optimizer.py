"""Hybrid sensor noise budget, sensitivity and bandwidth optimization.

The hybrid acceleration noise PSD is the retro-reflector self-noise up to
its resonance and the ambient model above it (the sensor loses sensitivity
there and vibration correction stops helping). The harmonic variance sum is
evaluated inside the hybrid measurement band only, DC to ``band_hz``;
ambient values beyond the seismic table's top frequency are held at the
band-edge value and counted as substitutions.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .atom_interferometer import (
    AccelSensitivity,
    InterferometerConfig,
    accel_sensitivity,
    qpn_accel_asd,
)
from .constants import DEFAULT_HYBRID_BAND_HZ
from .noise_models import NoisePsd
from .omrr_model import OmrrConfig, required_sigma_x, self_noise_accel_psd

__all__ = [
    "HybridConfig",
    "SweepResult",
    "SpectrumTable",
    "GridError",
    "hybrid_noise_psd",
    "hybrid_psd",
    "hybrid_sigma",
    "sweep_bandwidth",
    "hybrid_spectrum",
]


class GridError(ValueError):
    """A sweep grid cannot bracket a minimum."""


@dataclass(frozen=True)
class HybridConfig:
    """Everything needed to evaluate the hybrid sensor's noise budget."""

    ai: InterferometerConfig
    omrr: OmrrConfig
    ambient: NoisePsd
    n_max: int = 2**20
    tau: float = 1.0                       # averaging time for sigma_a, s
    band_hz: float = DEFAULT_HYBRID_BAND_HZ  # hybrid measurement band top

    def __post_init__(self) -> None:
        if self.ambient.kind != "acceleration":
            raise ValueError("ambient must be an acceleration PSD")
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.band_hz <= self.ai.cycle_rate:
            raise ValueError("band_hz must exceed the cycle rate")
        if self.ambient.band[0] > self.ai.cycle_rate:
            raise ValueError("ambient band must cover the cycle rate")


def hybrid_noise_psd(omega, cfg: HybridConfig):
    """Effective acceleration noise PSD of the hybrid sensor, (m/s^2)^2/Hz.

    Self-noise of the retro-reflector for omega <= omega0, ambient noise
    above. The model is deliberately discontinuous at the resonance.
    Ambient queries beyond the table band use the nearest band-edge value.
    """
    scalar = np.ndim(omega) == 0
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any(omega <= 0.0):
        raise ValueError("omega must be positive")
    out = np.empty_like(omega)
    below = omega <= cfg.omrr.omega0
    if np.any(below):
        out[below] = self_noise_accel_psd(omega[below], cfg.omrr)
    if np.any(~below):
        out[~below] = cfg.ambient.psd_nearest(omega[~below] / (2.0 * math.pi))[0]
    return float(out[0]) if scalar else out


def hybrid_psd(cfg: HybridConfig) -> NoisePsd:
    """The hybrid noise PSD as a band-limited :class:`NoisePsd`.

    The band top is the hybrid measurement band; harmonic sums over this
    object therefore stop at ``band_hz``.
    """
    return NoisePsd(
        kind="acceleration",
        eval_fn=lambda f: np.asarray(hybrid_noise_psd(2.0 * math.pi * f, cfg)),
        band=(0.0, cfg.band_hz),
        label="hybrid",
    )


def _count_substituted(cfg: HybridConfig, n_harmonics: int) -> int:
    """Harmonics inside the band that used the ambient band-edge value."""
    f_c = cfg.ai.cycle_rate
    n_band = min(n_harmonics, int(math.floor(cfg.band_hz / f_c + 1e-12)))
    n = np.arange(1, n_band + 1)
    f = n * f_c
    above_res = f > cfg.omrr.f0
    outside = (f < cfg.ambient.band[0]) | (f > cfg.ambient.band[1])
    return int(np.count_nonzero(above_res & outside))


def hybrid_sigma(cfg: HybridConfig) -> AccelSensitivity:
    """Hybrid acceleration sensitivity sigma_a at ``cfg.tau``, m/s^2/sqrt(Hz).

    Harmonic variance sum over the hybrid noise PSD; exact within the
    measurement band (harmonics above ``band_hz`` contribute nothing).
    """
    res = accel_sensitivity(
        hybrid_psd(cfg),
        cfg.ai,
        tau=cfg.tau,
        n_max=cfg.n_max,
        out_of_band="zero",
    )
    return AccelSensitivity(
        sigma=res.sigma,
        n_harmonics=res.n_harmonics,
        n_substituted=_count_substituted(cfg, res.n_harmonics),
    )


@dataclass(frozen=True)
class SweepResult:
    """Tabulated bandwidth sweep with the refined optimum."""

    omega0: np.ndarray            # rad/s, sorted ascending
    sigma_a: np.ndarray           # m/s^2/sqrt(Hz) at the sweep's tau
    required_sigma_x: np.ndarray  # m/sqrt(Hz), DC-referred per point
    opt_omega0: float
    opt_sigma: float


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(fn, a: float, b: float, rel_tol: float) -> float:
    """Golden-section minimum of ``fn`` on [a, b] to relative x tolerance.

    Ties move the upper bound down, biasing toward the lower abscissa.
    """
    c = b - (b - a) * _INVPHI
    d = a + (b - a) * _INVPHI
    fc, fd = fn(c), fn(d)
    while (b - a) > rel_tol * 0.5 * (a + b):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * _INVPHI
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * _INVPHI
            fd = fn(d)
    return 0.5 * (a + b)


def sweep_bandwidth(
    cfg: HybridConfig,
    omega0_grid,
    rel_tol: float = 1e-3,
    workers: int = 1,
) -> SweepResult:
    """Sweep the resonance over ``omega0_grid`` (rad/s) and locate the optimum.

    Evaluates the hybrid sensitivity per grid point, then refines the grid
    minimum by golden-section search within the bracketing interval to
    ``rel_tol`` in omega0. The grid must be sorted, have at least 16 points
    and bracket the minimum away from its edges. Points are independent;
    ``workers`` > 1 evaluates them concurrently with deterministic assembly.
    """
    grid = np.asarray(omega0_grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 16:
        raise GridError("omega0 grid must be one-dimensional with >= 16 points")
    if np.any(np.diff(grid) <= 0.0):
        raise GridError("omega0 grid must be sorted strictly ascending")

    def objective(omega0: float) -> float:
        point = replace(cfg, omrr=replace(cfg.omrr, omega0=float(omega0)))
        return hybrid_sigma(point).sigma

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            sigma = np.array(list(pool.map(objective, grid)))
    else:
        sigma = np.array([objective(w0) for w0 in grid])

    req = np.array(
        [required_sigma_x(replace(cfg.omrr, omega0=float(w0))) for w0 in grid]
    )

    i_min = int(np.argmin(sigma))
    if i_min == 0 or i_min == len(grid) - 1:
        raise GridError(
            f"grid minimum at edge (omega0 = {grid[i_min]:.6g} rad/s); "
            "extend the grid to bracket the optimum"
        )
    opt_w0 = _golden_min(objective, grid[i_min - 1], grid[i_min + 1], rel_tol)
    opt_sigma = objective(opt_w0)
    grid_min = float(sigma[i_min])
    if grid_min < opt_sigma:  # keep the better of grid and refinement
        opt_w0, opt_sigma = float(grid[i_min]), grid_min
    return SweepResult(
        omega0=grid,
        sigma_a=sigma,
        required_sigma_x=req,
        opt_omega0=float(opt_w0),
        opt_sigma=float(opt_sigma),
    )


@dataclass(frozen=True)
class SpectrumTable:
    """Hybrid spectrum with reference curves, all as amplitude densities."""

    f_hz: np.ndarray
    hybrid_asd: np.ndarray
    regime: np.ndarray            # "AI" below the cycle rate, "OMRR" above
    ambient_asd: np.ndarray
    uncorrected_ai_asd: float
    qpn_asd: float


def hybrid_spectrum(cfg: HybridConfig, f_grid) -> SpectrumTable:
    """Linear spectral density of the hybrid sensor over ``f_grid`` (Hz).

    Below the cycle rate the output is referenced to the interferometer and
    drawn flat at the hybrid sigma; above it the retro-reflector noise
    budget applies. Reference curves: ambient ASD, the uncorrected
    interferometer level computed from the ambient model, and the
    projection-noise line.
    """
    f = np.asarray(f_grid, dtype=float)
    if f.ndim != 1 or len(f) == 0:
        raise ValueError("frequency grid must be a non-empty 1-D array")
    if np.any(f <= 0.0) or np.any(np.diff(f) <= 0.0):
        raise ValueError("frequency grid must be positive and sorted ascending")

    f_c = cfg.ai.cycle_rate
    sigma = hybrid_sigma(cfg).sigma
    ai_region = f < f_c
    asd = np.empty_like(f)
    asd[ai_region] = sigma
    if np.any(~ai_region):
        asd[~ai_region] = np.sqrt(
            np.asarray(hybrid_noise_psd(2.0 * math.pi * f[~ai_region], cfg))
        )
    regime = np.where(ai_region, "AI", "OMRR")

    ambient_asd = np.sqrt(cfg.ambient.psd_nearest(f)[0])
    uncorrected = accel_sensitivity(
        cfg.ambient,
        cfg.ai,
        tau=cfg.tau,
        n_max=cfg.n_max,
        out_of_band="nearest",
    ).sigma
    return SpectrumTable(
        f_hz=f,
        hybrid_asd=asd,
        regime=regime,
        ambient_asd=ambient_asd,
        uncorrected_ai_asd=float(uncorrected),
        qpn_asd=qpn_accel_asd(cfg.ai),
    )
