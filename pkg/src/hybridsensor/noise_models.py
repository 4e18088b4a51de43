"""Ambient seismic noise model and generic one-sided PSD utilities.

The ambient model is a piecewise log-linear table of acceleration PSD in dB
(the standard high-noise-model form): on each period segment

    PSD_dB(P) = A + B * log10(P),   P in seconds,

with the PSD in dB re 1 (m/s^2)^2/Hz. Everything here is pure and reentrant;
parallel sweep workers may share model objects freely.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

__all__ = [
    "PsdError",
    "OutOfBandError",
    "TableParseError",
    "MalformedRowError",
    "UnsortedPeriodsError",
    "EmptyTableError",
    "PiecewiseLogPsd",
    "NoisePsd",
    "load_peterson_table",
    "default_peterson_table",
    "peterson_accel_psd",
    "peterson_noise_psd",
    "white_noise_psd",
    "asd_of",
    "PETERSON_TABLE_ENV",
]

PETERSON_TABLE_ENV = "HYBRIDSENSOR_PETERSON_TABLE"


class PsdError(ValueError):
    """Base class for PSD evaluation errors."""


class OutOfBandError(PsdError):
    """Evaluation requested outside a model's covered range."""


class TableParseError(ValueError):
    """Base class for noise-table parse failures."""


class MalformedRowError(TableParseError):
    """A data row does not parse as three floats."""


class EmptyTableError(TableParseError):
    """The table file contains no data rows."""


class UnsortedPeriodsError(TableParseError):
    """Period column is not strictly increasing."""


@dataclass(frozen=True)
class PiecewiseLogPsd:
    """Piecewise log-linear PSD in dB versus period.

    ``segments`` holds one ``(period_start_s, A_dB, B_dB)`` triple per table
    row. Row i's coefficients apply on ``[P_i, P_{i+1})``; the final row
    closes the covered period range and applies exactly at its own period.
    Queries at a segment edge resolve to the segment starting at that edge
    (the larger-period segment), so behavior at breakpoints is deterministic.
    """

    segments: tuple[tuple[float, float, float], ...]

    # derived arrays, cached at construction
    _periods: np.ndarray = field(init=False, repr=False, compare=False)
    _coeff_a: np.ndarray = field(init=False, repr=False, compare=False)
    _coeff_b: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.segments) == 0:
            raise EmptyTableError("piecewise PSD needs at least one segment")
        periods = np.array([s[0] for s in self.segments], dtype=float)
        if np.any(np.diff(periods) <= 0.0):
            raise UnsortedPeriodsError("segment periods must be strictly increasing")
        if not np.all(np.isfinite(periods)) or periods[0] <= 0.0:
            raise MalformedRowError("segment periods must be finite and positive")
        object.__setattr__(self, "_periods", periods)
        object.__setattr__(self, "_coeff_a", np.array([s[1] for s in self.segments]))
        object.__setattr__(self, "_coeff_b", np.array([s[2] for s in self.segments]))

    @property
    def period_range(self) -> tuple[float, float]:
        """Covered period range (min_s, max_s), both inclusive."""
        return float(self._periods[0]), float(self._periods[-1])

    @property
    def frequency_band(self) -> tuple[float, float]:
        """Covered frequency band (f_min, f_max) in Hz."""
        pmin, pmax = self.period_range
        return 1.0 / pmax, 1.0 / pmin

    def psd_db(self, period_s) -> np.ndarray | float:
        """PSD in dB at the given period(s). Out-of-range input raises."""
        period = np.asarray(period_s, dtype=float)
        pmin, pmax = self.period_range
        if np.any(period < pmin) or np.any(period > pmax):
            raise OutOfBandError(
                f"period outside covered range [{pmin:g}, {pmax:g}] s"
            )
        idx = np.searchsorted(self._periods, period, side="right") - 1
        # the closing row owns only its exact period
        idx = np.clip(idx, 0, len(self._periods) - 1)
        out = self._coeff_a[idx] + self._coeff_b[idx] * np.log10(period)
        return out if out.ndim else float(out)

    def serialize(self) -> str:
        """Render the data rows exactly as the loader consumes them."""
        return "\n".join(f"{p:.2f} {a:.2f} {b:.2f}" for p, a, b in self.segments)

    def validate_continuity(self, tol_db: float = 0.5) -> None:
        """Check PSD continuity at interior breakpoints.

        The published table is continuous to within transcription rounding;
        a jump larger than ``tol_db`` indicates a corrupt data file.
        """
        for i in range(1, len(self.segments)):
            p = self._periods[i]
            left = self._coeff_a[i - 1] + self._coeff_b[i - 1] * math.log10(p)
            right = self._coeff_a[i] + self._coeff_b[i] * math.log10(p)
            if abs(left - right) > tol_db:
                raise TableParseError(
                    f"PSD discontinuous at period {p:g} s: "
                    f"{left:.2f} dB vs {right:.2f} dB"
                )


def _parse_rows(text: str) -> list[tuple[float, float, float]]:
    rows: list[tuple[float, float, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise MalformedRowError(
                f"line {lineno}: expected 'period_s A_dB B_dB', got {raw!r}"
            )
        try:
            rows.append((float(parts[0]), float(parts[1]), float(parts[2])))
        except ValueError as exc:
            raise MalformedRowError(f"line {lineno}: {exc}") from exc
    return rows


def load_peterson_table(data_file) -> PiecewiseLogPsd:
    """Load a piecewise log-linear acceleration PSD table.

    The file holds whitespace-delimited ``period_s A_dB B_dB`` rows; ``#``
    starts a comment. Rows must be sorted by strictly increasing period.
    Raises :class:`MalformedRowError`, :class:`UnsortedPeriodsError` or
    :class:`EmptyTableError` on the corresponding defect.
    """
    with open(data_file, "r", encoding="utf-8") as fh:
        rows = _parse_rows(fh.read())
    if not rows:
        raise EmptyTableError(f"no data rows in {data_file}")
    periods = [r[0] for r in rows]
    if any(b <= a for a, b in zip(periods, periods[1:])):
        raise UnsortedPeriodsError(f"periods not strictly increasing in {data_file}")
    return PiecewiseLogPsd(segments=tuple(rows))


def default_peterson_table_path() -> str:
    """Path of the shipped table, unless overridden via the environment."""
    override = os.environ.get(PETERSON_TABLE_ENV)
    if override:
        return override
    return str(resources.files("hybridsensor").joinpath("data/nhnm_acceleration.txt"))


def default_peterson_table() -> PiecewiseLogPsd:
    """Load the high-noise ambient model shipped with the package."""
    model = load_peterson_table(default_peterson_table_path())
    model.validate_continuity()
    return model


def peterson_accel_psd(model: PiecewiseLogPsd, f_hz) -> np.ndarray | float:
    """One-sided acceleration PSD in (m/s^2)^2/Hz at frequency ``f_hz``.

    ``1/f`` must lie inside the model's covered period range.
    """
    f = np.asarray(f_hz, dtype=float)
    if np.any(f <= 0.0):
        raise OutOfBandError("frequency must be positive")
    out = 10.0 ** (np.asarray(model.psd_db(1.0 / f)) / 10.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class NoisePsd:
    """A one-sided noise PSD as an evaluable function of frequency.

    ``kind`` is one of ``acceleration``, ``displacement`` or ``phase`` and is
    fixed at construction; ``band`` is the (f_min, f_max) validity range in
    Hz. ``eval_fn`` must accept an ndarray of in-band frequencies and return
    non-negative PSD values in unit^2/Hz.
    """

    kind: str
    eval_fn: Callable[[np.ndarray], np.ndarray]
    band: tuple[float, float]
    label: str = ""

    _KINDS = ("acceleration", "displacement", "phase")

    def __post_init__(self) -> None:
        if self.kind not in self._KINDS:
            raise ValueError(f"kind must be one of {self._KINDS}, got {self.kind!r}")
        f_min, f_max = self.band
        if not (0.0 <= f_min < f_max):
            raise ValueError(f"invalid band {self.band}")

    def psd(self, f_hz) -> np.ndarray | float:
        """Strict evaluation; raises :class:`OutOfBandError` outside ``band``."""
        f = np.asarray(f_hz, dtype=float)
        if np.any(f < self.band[0]) or np.any(f > self.band[1]):
            raise OutOfBandError(
                f"frequency outside band [{self.band[0]:g}, {self.band[1]:g}] Hz"
            )
        out = np.asarray(self.eval_fn(np.atleast_1d(f)))
        return out.reshape(f.shape) if f.ndim else float(out[0])

    def psd_nearest(self, f_hz) -> tuple[np.ndarray, int]:
        """Evaluate with out-of-band frequencies clamped to the band edge.

        Returns ``(values, n_substituted)`` so callers can flag substitution.
        """
        f = np.atleast_1d(np.asarray(f_hz, dtype=float))
        clamped = np.clip(f, self.band[0], self.band[1])
        n_sub = int(np.count_nonzero(clamped != f))
        return np.asarray(self.eval_fn(clamped)), n_sub

    def psd_zero_fill(self, f_hz) -> tuple[np.ndarray, int]:
        """Evaluate with zero power outside the band.

        Returns ``(values, n_zeroed)``.
        """
        f = np.atleast_1d(np.asarray(f_hz, dtype=float))
        inside = (f >= self.band[0]) & (f <= self.band[1])
        out = np.zeros_like(f)
        if np.any(inside):
            out[inside] = self.eval_fn(f[inside])
        return out, int(np.count_nonzero(~inside))


def peterson_noise_psd(
    model: PiecewiseLogPsd, extend_to_hz: float | None = None
) -> NoisePsd:
    """Wrap a piecewise table as an acceleration :class:`NoisePsd`.

    With ``extend_to_hz`` set beyond the table's highest frequency, the band
    is widened and the PSD above the table edge is held at the edge value
    (the same nearest-value rule used for harmonic sums).
    """
    f_min, f_table_max = model.frequency_band
    f_max = f_table_max if extend_to_hz is None else max(extend_to_hz, f_table_max)

    def _eval(f: np.ndarray) -> np.ndarray:
        return np.asarray(
            peterson_accel_psd(model, np.clip(f, f_min, f_table_max))
        )

    return NoisePsd(
        kind="acceleration", eval_fn=_eval, band=(f_min, f_max), label="ambient"
    )


def white_noise_psd(
    level: float,
    kind: str = "acceleration",
    band: tuple[float, float] = (0.0, 1e5),
    label: str = "white",
) -> NoisePsd:
    """Flat PSD at ``level`` unit^2/Hz over ``band``."""
    if level < 0.0:
        raise ValueError("PSD level must be non-negative")
    return NoisePsd(
        kind=kind,
        eval_fn=lambda f: np.full_like(f, float(level)),
        band=band,
        label=label,
    )


def asd_of(psd_value):
    """Amplitude spectral density for a PSD value, sqrt(unit^2/Hz)."""
    value = np.asarray(psd_value, dtype=float)
    if np.any(value < 0.0):
        raise ValueError("PSD must be non-negative")
    out = np.sqrt(value)
    return out if out.ndim else float(out)
