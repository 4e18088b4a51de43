"""Three-pulse Mach-Zehnder interferometer response model.

Covers the population fringe, the sensitivity function g(t) weighting phase
jumps during the pulse sequence, the squared phase transfer function, quantum
projection noise, the aliased harmonic variance sum that converts an ambient
acceleration PSD into an acceleration sensitivity, and the phase accumulated
from retro-reflector motion.

Conventions: one-sided PSDs; t is measured from the first beam-splitter
pulse; for instantaneous pulses g(t) = -1 on (0, T) and +1 on (T, 2T).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import (
    DEFAULT_ATOM_NUMBER,
    DEFAULT_CONTRAST,
    DEFAULT_KEFF,
    DEFAULT_T,
    DEFAULT_TC,
    STANDARD_GRAVITY,
)
from .noise_models import NoisePsd

__all__ = [
    "InterferometerConfig",
    "AccelSensitivity",
    "ConvergenceError",
    "RecordError",
    "NonUniformSamplingError",
    "population",
    "sensitivity_g",
    "transfer_fn_sq",
    "transfer_fn_sq_numeric",
    "qpn_phase",
    "qpn_accel_asd",
    "accel_sensitivity",
    "phase_from_mirror_motion",
]


class ConvergenceError(RuntimeError):
    """Harmonic sum failed to converge within the configured ceiling."""


class RecordError(ValueError):
    """A sampled record does not cover the required interval."""


class NonUniformSamplingError(ValueError):
    """A sampled record is not uniformly spaced."""


@dataclass(frozen=True)
class InterferometerConfig:
    """Timing, atom number and readout parameters of the interferometer.

    ``tau_p`` is the pi/2 pulse duration; the mirror (pi) pulse lasts
    ``2 * tau_p``. ``tau_p = 0`` selects the instantaneous-pulse model.
    """

    T: float = DEFAULT_T          # pulse separation, s
    T_c: float = DEFAULT_TC       # cycle time, s
    N: float = DEFAULT_ATOM_NUMBER
    C0: float = DEFAULT_CONTRAST  # fringe contrast, (0, 1]
    B: float = 0.0                # fringe offset
    k_eff: float = DEFAULT_KEFF   # effective wave number, rad/m
    tau_p: float = 0.0            # pi/2 pulse duration, s
    g0: float = STANDARD_GRAVITY  # nominal gravitational acceleration, m/s^2

    def __post_init__(self) -> None:
        if self.T <= 0.0:
            raise ValueError("pulse separation T must be positive")
        if self.tau_p < 0.0:
            raise ValueError("pulse duration tau_p must be non-negative")
        if self.T_c < self.window:
            raise ValueError("cycle time T_c must cover the pulse sequence")
        if self.N < 1:
            raise ValueError("atom number N must be at least 1")
        if not 0.0 < self.C0 <= 1.0:
            raise ValueError("contrast C0 must lie in (0, 1]")
        if self.k_eff <= 0.0:
            raise ValueError("k_eff must be positive")

    @property
    def window(self) -> float:
        """Duration of the pulse sequence, 2T + 4*tau_p."""
        return 2.0 * self.T + 4.0 * self.tau_p

    @property
    def cycle_rate(self) -> float:
        """Cycle frequency f_c = 1/T_c in Hz."""
        return 1.0 / self.T_c

    @property
    def phase_to_accel(self) -> float:
        """Conversion from interferometer phase to acceleration, 1/(k_eff T^2)."""
        return 1.0 / (self.k_eff * self.T**2)


def population(dphi, cfg: InterferometerConfig):
    """Excited-state population fraction for phase difference ``dphi``.

    Returns ``C0/2 * (1 + cos(dphi)) + B``, bounded to [B, B + C0].
    """
    dphi = np.asarray(dphi, dtype=float)
    out = 0.5 * cfg.C0 * (1.0 + np.cos(dphi)) + cfg.B
    return out if out.ndim else float(out)


def sensitivity_g(t, cfg: InterferometerConfig):
    """Sensitivity function g(t): weight of a phase jump at time ``t``.

    Instantaneous pulses give the two-level square wave; with finite pulses
    the transitions become sinusoidal ramps at the Rabi frequency
    ``pi / (2 tau_p)`` and g is continuous. g is odd about the sequence
    midpoint and zero outside the pulse window, with |g| <= 1.
    """
    t = np.asarray(t, dtype=float)
    T, tp = cfg.T, cfg.tau_p
    out = np.zeros_like(t)
    if tp == 0.0:
        out = np.where((t > 0.0) & (t < T), -1.0, out)
        out = np.where((t > T) & (t < 2.0 * T), 1.0, out)
        return out if out.ndim else float(out)

    omega_r = math.pi / (2.0 * tp)
    # pi/2 [0, tp], free -1 [tp, T+tp], pi [T+tp, T+3tp],
    # free +1 [T+3tp, 2T+3tp], pi/2 [2T+3tp, 2T+4tp]
    ramp_in = (t > 0.0) & (t < tp)
    out = np.where(ramp_in, -np.sin(omega_r * t), out)
    out = np.where((t >= tp) & (t <= T + tp), -1.0, out)
    mid = (t > T + tp) & (t < T + 3.0 * tp)
    out = np.where(mid, -np.cos(omega_r * (t - T - tp)), out)
    out = np.where((t >= T + 3.0 * tp) & (t <= 2.0 * T + 3.0 * tp), 1.0, out)
    ramp_out = (t > 2.0 * T + 3.0 * tp) & (t < 2.0 * T + 4.0 * tp)
    out = np.where(ramp_out, np.cos(omega_r * (t - 2.0 * T - 3.0 * tp)), out)
    return out if out.ndim else float(out)


def _g_segments(cfg: InterferometerConfig) -> list[tuple[float, float]]:
    """Boundaries of the smooth pieces of g(t)."""
    T, tp = cfg.T, cfg.tau_p
    if tp == 0.0:
        return [(0.0, T), (T, 2.0 * T)]
    return [
        (0.0, tp),
        (tp, T + tp),
        (T + tp, T + 3.0 * tp),
        (T + 3.0 * tp, 2.0 * T + 3.0 * tp),
        (2.0 * T + 3.0 * tp, 2.0 * T + 4.0 * tp),
    ]


def transfer_fn_sq_numeric(omega, cfg: InterferometerConfig, nodes: int = 4097):
    """|H_phi(omega)|^2 from the Fourier transform of g(t).

    Composite Simpson quadrature on each smooth piece of g; ``nodes`` per
    piece (odd). This is the generic route used whenever ``tau_p > 0`` and
    serves as the independent cross-check of the closed form.
    """
    scalar = np.ndim(omega) == 0
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if nodes % 2 == 0:
        nodes += 1
    gt = np.zeros(omega.shape, dtype=complex)
    for a, b in _g_segments(cfg):
        t = np.linspace(a, b, nodes)
        h = (b - a) / (nodes - 1)
        w = np.ones(nodes)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w *= h / 3.0
        # evaluate g strictly inside the open segment to dodge edge ties
        tm = t.copy()
        tm[0] = min(a + 1e-12 * (b - a), b)
        tm[-1] = max(b - 1e-12 * (b - a), a)
        gv = sensitivity_g(tm, cfg) * w
        gt += np.exp(-1j * np.outer(omega, t)) @ gv
    out = (omega ** 2) * np.abs(gt) ** 2
    return float(out[0]) if scalar else out


def transfer_fn_sq(omega, cfg: InterferometerConfig):
    """Squared phase transfer function |H_phi(omega)|^2.

    For instantaneous pulses this is ``16 sin^4(omega T / 2)``, zero at
    multiples of ``2 pi / T``. With ``tau_p > 0`` it is computed numerically
    from g(t).
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise ValueError("omega must be non-negative")
    if cfg.tau_p == 0.0:
        out = 16.0 * np.sin(omega * cfg.T / 2.0) ** 4
        return out if out.ndim else float(out)
    return transfer_fn_sq_numeric(omega, cfg)


def qpn_phase(cfg: InterferometerConfig) -> float:
    """Quantum projection noise of the phase readout, 1/(C0 sqrt(N)) rad."""
    return 1.0 / (cfg.C0 * math.sqrt(cfg.N))


def qpn_accel_asd(cfg: InterferometerConfig) -> float:
    """Projection-noise acceleration floor as an ASD, m/s^2/sqrt(Hz).

    Per-shot phase noise converted through 1/(k_eff T^2) and scaled by
    sqrt(T_c) to a spectral density at the cycle rate.
    """
    return qpn_phase(cfg) * cfg.phase_to_accel * math.sqrt(cfg.T_c)


@dataclass(frozen=True)
class AccelSensitivity:
    """Result of the harmonic variance sum.

    ``sigma`` is the one-sigma acceleration sensitivity; ``n_substituted``
    counts harmonics that fell outside the PSD band and were evaluated at
    the nearest band edge (zero when the zero-fill policy was used).
    """

    sigma: float
    n_harmonics: int
    n_substituted: int

    def __float__(self) -> float:
        return self.sigma


_BLOCK = 2**17


def _sum_block(
    s_a: NoisePsd,
    cfg: InterferometerConfig,
    tau: float,
    n_lo: int,
    n_hi: int,
    out_of_band: str,
) -> tuple[float, int]:
    """Weighted PSD sum over harmonics n in (n_lo, n_hi], chunked."""
    total = 0.0
    n_sub = 0
    f_c = cfg.cycle_rate
    for start in range(n_lo + 1, n_hi + 1, _BLOCK):
        n = np.arange(start, min(start + _BLOCK, n_hi + 1), dtype=float)
        w = 2.0 * math.pi * n * f_c
        weight = transfer_fn_sq(w, cfg) / (tau * cfg.T**4 * w**4)
        if out_of_band == "nearest":
            values, sub = s_a.psd_nearest(n * f_c)
        else:
            values, sub = s_a.psd_zero_fill(n * f_c)
            sub = 0
        total += float(np.sum(weight * values))
        n_sub += sub
    return total, n_sub


def accel_sensitivity(
    s_a: NoisePsd,
    cfg: InterferometerConfig,
    tau: float,
    n_max: int = 2**20,
    rtol: float = 1e-3,
    out_of_band: str = "nearest",
) -> AccelSensitivity:
    """Acceleration sensitivity from an ambient acceleration PSD.

    Evaluates

        sigma_a^2(tau) = 1/(tau T^4) * sum_{n>=1} |H(w_n)|^2 / w_n^4 * S_a(w_n)

    at the cycle-rate harmonics ``w_n = 2 pi n / T_c``. The n = 0 term is
    excluded (the DC reference belongs to the interferometer itself).

    ``out_of_band`` selects how harmonics beyond the PSD band contribute.
    With ``"zero"`` they are dropped, which makes the sum exact once every
    in-band harmonic is included. With ``"nearest"`` they are substituted
    with the band-edge value (counted in the result); the sum is then grown
    by doubling until a doubling changes sigma by less than ``rtol``.
    Convergence is only accepted past the PSD band edge, where the
    substituted tail decays monotonically; declaring it earlier could miss
    structure hiding above the current harmonic. Exceeding ``n_max``
    unconverged raises :class:`ConvergenceError`.
    """
    if s_a.kind != "acceleration":
        raise ValueError("s_a must be an acceleration PSD")
    if tau <= 0.0:
        raise ValueError("averaging time tau must be positive")
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    if out_of_band not in ("nearest", "zero"):
        raise ValueError("out_of_band must be 'nearest' or 'zero'")

    f_c = cfg.cycle_rate
    n_band = int(math.floor(s_a.band[1] / f_c + 1e-9))

    if out_of_band == "zero":
        n_exact = max(1, min(n_band, n_max))
        if n_band > n_max:
            raise ConvergenceError(
                f"PSD band reaches harmonic {n_band}, beyond n_max={n_max}"
            )
        total, _ = _sum_block(s_a, cfg, tau, 0, n_exact, "zero")
        return AccelSensitivity(math.sqrt(total), n_exact, 0)

    n_floor = max(64, n_band)
    if n_floor > n_max:
        raise ConvergenceError(
            f"PSD band needs {n_floor} harmonics, beyond n_max={n_max}"
        )
    total = 0.0
    n_sub = 0
    n_done = 0
    sigma_prev: float | None = None
    block_end = min(n_floor, n_max)
    while True:
        part, sub = _sum_block(s_a, cfg, tau, n_done, block_end, "nearest")
        total += part
        n_sub += sub
        n_done = block_end
        sigma = math.sqrt(total)
        if sigma_prev is not None and n_done >= n_floor:
            if sigma == 0.0 or abs(sigma - sigma_prev) <= rtol * sigma:
                return AccelSensitivity(sigma, n_done, n_sub)
        if n_done >= n_max:
            raise ConvergenceError(
                f"harmonic sum not converged at n_max={n_max} "
                f"(last doubling moved sigma from {sigma_prev} to {sigma})"
            )
        sigma_prev = sigma
        block_end = min(2 * n_done, n_max)


def _interp_at(v: np.ndarray, x: float) -> float:
    """Linear interpolation of samples ``v`` at fractional index ``x``."""
    i = int(math.floor(x))
    if i >= len(v) - 1:
        return float(v[-1])
    frac = x - i
    return float(v[i] * (1.0 - frac) + v[i + 1] * frac)


def _integrate_samples(v: np.ndarray, a: float, b: float) -> float:
    """Integral of the piecewise-linear interpolant of ``v`` over [a, b].

    ``a`` and ``b`` are fractional sample indices; the result is in sample
    units (multiply by dt for time units). Exact for linear records, which
    pins the constant-acceleration closed form even when segment boundaries
    fall between samples.
    """
    if b <= a:
        return 0.0
    ia, ib = math.ceil(a), math.floor(b)
    if ia > ib:  # both endpoints inside one cell
        va, vb = _interp_at(v, a), _interp_at(v, b)
        return 0.5 * (va + vb) * (b - a)
    total = 0.0
    if a < ia:
        total += 0.5 * (_interp_at(v, a) + v[ia]) * (ia - a)
    if ib > ia:
        total += float(np.trapezoid(v[ia : ib + 1]))
    if b > ib:
        total += 0.5 * (v[ib] + _interp_at(v, b)) * (b - ib)
    return total


def phase_from_mirror_motion(
    velocity,
    fs: float,
    cfg: InterferometerConfig,
    t0: float = 0.0,
    t=None,
) -> float:
    """Inertial phase k_eff * integral of g(t - t0) * v(t) dt, in rad.

    ``velocity`` is the mirror velocity sampled at ``fs``; ``t0`` is the
    time of the first pulse on the record's time axis (record start is time
    zero unless an explicit ``t`` axis is supplied). The record must cover
    the full pulse window at a rate of at least ``20 / T``.

    Instantaneous pulses use exact segment-split trapezoidal integration,
    so a linear velocity record reproduces ``k_eff a T^2`` to rounding.
    """
    v = np.asarray(velocity, dtype=float)
    if v.ndim != 1:
        raise RecordError("velocity record must be one-dimensional")
    t_start = 0.0
    if t is not None:
        t = np.asarray(t, dtype=float)
        if t.shape != v.shape:
            raise RecordError("time and velocity arrays must match")
        dt_all = np.diff(t)
        if len(dt_all) == 0 or np.any(
            np.abs(dt_all - dt_all[0]) > 1e-9 * abs(dt_all[0])
        ):
            raise NonUniformSamplingError("record is not uniformly sampled")
        fs = 1.0 / float(dt_all[0])
        t_start = float(t[0])
    if fs < 20.0 / cfg.T:
        raise RecordError(f"sample rate {fs:g} Hz below 20/T")
    window = cfg.window
    start = (t0 - t_start) * fs
    stop = start + window * fs
    if start < 0.0 or stop > len(v) - 1:
        raise RecordError("record does not cover the pulse window")

    dt = 1.0 / fs
    if cfg.tau_p == 0.0:
        i_mid = start + cfg.T * fs
        integral = -_integrate_samples(v, start, i_mid) + _integrate_samples(
            v, i_mid, stop
        )
        return cfg.k_eff * integral * dt

    # finite pulses: g is continuous, plain trapezoid on the sampled product
    i0, i1 = math.ceil(start), math.floor(stop)
    idx = np.arange(i0, i1 + 1)
    g = sensitivity_g(idx / fs - (t0 - t_start), cfg)
    return cfg.k_eff * float(np.trapezoid(g * v[idx])) * dt
