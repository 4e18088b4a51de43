"""Optomechanical retro-reflector as a damped harmonic oscillator.

The test mass doubles as the interferometer's retro-reflection mirror. Its
displacement response to acceleration follows the second-order transfer
function; its self-noise combines the Brownian force noise of the suspension
(taken at first order as the white acceleration floor) with the
displacement-readout noise referred back to acceleration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import (
    BOLTZMANN,
    DEFAULT_QUALITY_FACTOR,
    DEFAULT_TEST_MASS,
    DEFAULT_TM_TEMPERATURE,
)

__all__ = [
    "OmrrConfig",
    "disp_to_accel_tf",
    "thermal_accel_floor",
    "thermal_displacement_psd",
    "readout_limited_accel_asd",
    "self_noise_accel_psd",
    "required_sigma_x",
]


@dataclass(frozen=True)
class OmrrConfig:
    """Mechanical and readout parameters of the retro-reflector.

    ``loss_model`` selects the loss coefficient phi(omega) entering the
    thermal displacement PSD: ``structural`` uses phi = 1/Q (constant),
    ``velocity`` uses phi = omega / (omega0 Q).
    """

    omega0: float                          # resonance, rad/s
    Q: float = DEFAULT_QUALITY_FACTOR
    m: float = DEFAULT_TEST_MASS           # test mass, kg
    T_TM: float = DEFAULT_TM_TEMPERATURE   # test-mass temperature, K
    sigma_x: float = 0.0                   # displacement readout ASD, m/sqrt(Hz)
    loss_model: str = "structural"

    def __post_init__(self) -> None:
        if self.omega0 <= 0.0:
            raise ValueError("resonance omega0 must be positive")
        if self.Q <= 0.5:
            raise ValueError("quality factor Q must exceed 0.5")
        if self.m <= 0.0:
            raise ValueError("test mass m must be positive")
        if self.T_TM <= 0.0:
            raise ValueError("temperature T_TM must be positive")
        if self.sigma_x < 0.0:
            raise ValueError("readout noise sigma_x must be non-negative")
        if self.loss_model not in ("structural", "velocity"):
            raise ValueError("loss_model must be 'structural' or 'velocity'")

    @property
    def f0(self) -> float:
        """Resonance frequency in Hz."""
        return self.omega0 / (2.0 * math.pi)


def disp_to_accel_tf(omega, cfg: OmrrConfig):
    """Displacement-per-acceleration transfer function z(w)/a(w), complex s^2.

    -1 / (omega0^2 - omega^2 + i (omega0/Q) omega); magnitude 1/omega0^2 at
    DC and Q/omega0^2 on resonance.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise ValueError("omega must be non-negative")
    out = -1.0 / (
        cfg.omega0**2 - omega**2 + 1j * (cfg.omega0 / cfg.Q) * omega
    )
    return out if out.ndim else complex(out)


def thermal_accel_floor(cfg: OmrrConfig) -> float:
    """White Brownian acceleration floor sqrt(4 kB T_TM omega0 / (m Q)).

    First-order acceleration self-noise of the suspension, m/s^2/sqrt(Hz).
    """
    return math.sqrt(4.0 * BOLTZMANN * cfg.T_TM * cfg.omega0 / (cfg.m * cfg.Q))


def _loss_coefficient(omega: np.ndarray, cfg: OmrrConfig) -> np.ndarray:
    if cfg.loss_model == "structural":
        return np.full_like(omega, 1.0 / cfg.Q)
    return omega / (cfg.omega0 * cfg.Q)


def thermal_displacement_psd(omega, cfg: OmrrConfig):
    """Thermal displacement PSD of the test mass, m^2/Hz.

    Fluctuation-dissipation form

        S_z(w) = 4 kB T_TM k phi(w) / (w ((k - m w^2)^2 + k^2 phi(w)^2))

    with spring constant k = m omega0^2 and phi(w) set by ``loss_model``.
    Structural loss diverges at DC, so omega must be positive there.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise ValueError("omega must be non-negative")
    if cfg.loss_model == "structural" and np.any(omega == 0.0):
        raise ValueError("structural loss diverges at omega = 0")
    k = cfg.m * cfg.omega0**2
    phi = _loss_coefficient(omega, cfg)
    num = 4.0 * BOLTZMANN * cfg.T_TM * k * phi
    den = omega * ((k - cfg.m * omega**2) ** 2 + (k * phi) ** 2)
    out = num / den
    return out if out.ndim else float(out)


def readout_limited_accel_asd(omega, cfg: OmrrConfig):
    """Readout displacement noise referred to acceleration, m/s^2/sqrt(Hz).

    sigma_x divided by |z/a|, i.e.
    sigma_x * sqrt((omega0^2 - omega^2)^2 + (omega0 omega / Q)^2).
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0.0):
        raise ValueError("omega must be non-negative")
    out = cfg.sigma_x * np.sqrt(
        (cfg.omega0**2 - omega**2) ** 2 + (cfg.omega0 * omega / cfg.Q) ** 2
    )
    return out if out.ndim else float(out)


def self_noise_accel_psd(omega, cfg: OmrrConfig):
    """Total acceleration self-noise PSD, (m/s^2)^2/Hz.

    Quadrature sum of the white thermal floor and the readout-limited term;
    the two noise sources are independent.
    """
    omega = np.asarray(omega, dtype=float)
    thermal = thermal_accel_floor(cfg) ** 2
    readout = np.asarray(readout_limited_accel_asd(omega, cfg)) ** 2
    out = thermal + readout
    return out if out.ndim else float(out)


def required_sigma_x(cfg: OmrrConfig) -> float:
    """Displacement sensitivity needed to resolve the thermal floor, m/sqrt(Hz).

    DC-referred: thermal_accel_floor / omega0^2. Scales as omega0^(-3/2) and
    as 1/sqrt(m Q).
    """
    return thermal_accel_floor(cfg) / cfg.omega0**2
