"""Uniform periodic time grids and real-valued signals sampled on them.

Time is in milliseconds everywhere. Sample ``k`` sits at ``t_k = k * dt_ms``
(left bin edge). Spectra use the unnormalized forward FFT and an inverse
that divides by ``n``, so Parseval reads

    inner_product(s, s) == sum(|c_k|**2) * T / n**2
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    IncompatibleSignalsError,
    InvalidGridError,
    InvalidWindowError,
    SpectrumSymmetryError,
)

__all__ = [
    "TimeGrid", "Signal", "Spectrum", "make_grid", "square_wave",
    "constant", "inner_product", "norm", "to_spectrum", "from_spectrum",
]


@dataclass(frozen=True)
class TimeGrid:
    n_samples: int
    duration_ms: float

    def __post_init__(self):
        n = self.n_samples
        if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
            raise InvalidGridError(f"n_samples must be an integer, got {n!r}")
        if n < 4 or n % 2:
            raise InvalidGridError(f"n_samples must be even and >= 4, got {n}")
        if not np.isfinite(self.duration_ms) or self.duration_ms <= 0:
            raise InvalidGridError(f"duration_ms must be > 0, got {self.duration_ms}")
        object.__setattr__(self, "n_samples", int(n))
        object.__setattr__(self, "duration_ms", float(self.duration_ms))

    @property
    def dt_ms(self) -> float:
        return self.duration_ms / self.n_samples

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt_ms

    @property
    def angular_frequencies(self) -> np.ndarray:
        """``omega_k`` in rad/ms for each FFT bin, negative above n/2."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_samples, d=self.dt_ms)


def make_grid(n_samples: int, duration_ms: float) -> TimeGrid:
    return TimeGrid(n_samples, duration_ms)


class Signal:
    """Immutable array of finite samples bound to a :class:`TimeGrid`."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: TimeGrid, values):
        arr = np.array(values, dtype=float)
        if arr.shape != (grid.n_samples,):
            raise IncompatibleSignalsError(
                f"expected {grid.n_samples} samples, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("signal values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError("Signal is immutable")

    def __len__(self):
        return self.grid.n_samples

    def __repr__(self):
        return f"Signal(n={self.grid.n_samples}, T={self.grid.duration_ms} ms)"

    def _coerce(self, other):
        if isinstance(other, Signal):
            _check_same_grid(self, other)
            return other.values
        return other

    def __add__(self, other):
        return Signal(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return Signal(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return Signal(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return Signal(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Signal(self.grid, -self.values)


def _check_same_grid(a: Signal, b: Signal) -> None:
    if a.grid != b.grid:
        raise IncompatibleSignalsError(f"grid mismatch: {a.grid} vs {b.grid}")


def constant(grid: TimeGrid, value: float) -> Signal:
    return Signal(grid, np.full(grid.n_samples, float(value)))


def square_wave(grid: TimeGrid, amplitude: float, t_on_ms: float,
                t_off_ms: float) -> Signal:
    """``amplitude`` on ``t_on_ms <= t < t_off_ms``, zero elsewhere."""
    if not 0.0 <= t_on_ms < t_off_ms <= grid.duration_ms:
        raise InvalidWindowError(
            f"need 0 <= t_on < t_off <= {grid.duration_ms}, "
            f"got [{t_on_ms}, {t_off_ms})")
    t = grid.times
    # guard against k*dt landing a hair below an exact window edge
    eps = 1e-9 * grid.dt_ms
    on = (t >= t_on_ms - eps) & (t < t_off_ms - eps)
    return Signal(grid, np.where(on, float(amplitude), 0.0))


def inner_product(u: Signal, y: Signal) -> float:
    """Rectangle-rule discretization of the L2 inner product."""
    _check_same_grid(u, y)
    return float(np.dot(u.values, y.values) * u.grid.dt_ms)


def norm(u: Signal) -> float:
    return float(np.sqrt(inner_product(u, u)))


class Spectrum:
    """FFT coefficients of a real signal (unnormalized forward transform)."""

    __slots__ = ("grid", "coefficients")

    def __init__(self, grid: TimeGrid, coefficients):
        c = np.array(coefficients, dtype=complex)
        if c.shape != (grid.n_samples,):
            raise IncompatibleSignalsError(
                f"expected {grid.n_samples} coefficients, got shape {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "coefficients", c)

    def __setattr__(self, name, value):
        raise AttributeError("Spectrum is immutable")

    def is_conjugate_symmetric(self, rtol=1e-9) -> bool:
        c = self.coefficients
        mirrored = np.conj(np.roll(c[::-1], 1))  # c[(n - k) % n]
        scale = max(np.max(np.abs(c)), 1e-300)
        return bool(np.max(np.abs(c - mirrored)) <= rtol * scale)


def to_spectrum(s: Signal) -> Spectrum:
    return Spectrum(s.grid, np.fft.fft(s.values))


def from_spectrum(sp: Spectrum) -> Signal:
    if not sp.is_conjugate_symmetric():
        raise SpectrumSymmetryError(
            "spectrum is not conjugate symmetric; inverse would be complex")
    return Signal(sp.grid, np.fft.ifft(sp.coefficients).real)
