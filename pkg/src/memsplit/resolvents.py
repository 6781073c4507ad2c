"""Differentiation operator, its resolvent, and first-order low-pass filters.

Two evaluation routes are provided:

* ``Spectral``: the signal is treated as T-periodic and every operator is
  diagonal in the Fourier basis, O(n log n). The resolvent output may be
  band-limited by zeroing bins ``|k| > bandwidth_fraction * n / 2``.
* ``TimeDomain``: ``D`` is the backward difference ``(x_k - x_{k-1}) / dt``
  anchored at ``x_{-1} = rest_value``. ``(I + gamma D)`` is then lower
  bidiagonal and is inverted by forward substitution in O(n).

``(I + gamma D)^{-1}`` and ``(tau D + I)^{-1}`` are the same operator with
``gamma = tau``, so the resolvent and the low-pass filter share one kernel.

All array-level helpers act along the last axis and accept a per-row
``gamma`` so a whole voltage ensemble is filtered in one call.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidStepError, InvalidTimescaleError, OracleSizeError
from .signals import Signal, TimeGrid

__all__ = [
    "BackendKind", "ResolventBackend", "SPECTRAL", "TIME_DOMAIN",
    "derivative", "backward_difference", "resolvent_D", "lowpass",
    "dense_resolvent_oracle", "apply_derivative", "apply_resolvent",
    "apply_lowpass",
]

ORACLE_MAX_SAMPLES = 4096


class BackendKind(str, enum.Enum):
    SPECTRAL = "spectral"
    TIME_DOMAIN = "time"


@dataclass(frozen=True)
class ResolventBackend:
    kind: BackendKind = BackendKind.SPECTRAL
    bandwidth_fraction: float = 1.0
    rest_value: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", BackendKind(self.kind))
        if not 0.0 < self.bandwidth_fraction <= 1.0:
            raise ValueError(
                f"bandwidth_fraction must lie in (0, 1], got {self.bandwidth_fraction}")

    @property
    def spectral(self) -> bool:
        return self.kind is BackendKind.SPECTRAL


SPECTRAL = ResolventBackend(BackendKind.SPECTRAL)
TIME_DOMAIN = ResolventBackend(BackendKind.TIME_DOMAIN)


def _rfft_omega(grid: TimeGrid) -> np.ndarray:
    # bins 0..n/2 of the one-sided transform; the last one is Nyquist
    return 2.0 * np.pi * np.fft.rfftfreq(grid.n_samples, d=grid.dt_ms)


def _first_order_transfer(grid: TimeGrid, gamma) -> np.ndarray:
    """``1 / (1 + i omega gamma)`` on the one-sided bins.

    The Nyquist bin gets unit gain. ``D`` is zero there (an ``i omega``
    factor has no real-signal counterpart at Nyquist), and ``1 / (1 + 0)``
    keeps the resolvent consistent with :func:`derivative`.
    """
    omega = _rfft_omega(grid)
    gamma = np.asarray(gamma, dtype=float)[..., None]
    h = 1.0 / (1.0 + 1j * omega * gamma)
    h[..., -1] = 1.0
    return h


def _spectral_filter(values: np.ndarray, grid: TimeGrid, gamma,
                     keep_fraction: float = 1.0) -> np.ndarray:
    coeffs = np.fft.rfft(values, axis=-1) * _first_order_transfer(grid, gamma)
    if keep_fraction < 1.0:
        cutoff = keep_fraction * grid.n_samples / 2
        coeffs[..., np.arange(coeffs.shape[-1]) > cutoff] = 0.0
    return np.fft.irfft(coeffs, n=grid.n_samples, axis=-1)


def _bidiagonal_solve(values: np.ndarray, grid: TimeGrid, gamma,
                      rest_value: float) -> np.ndarray:
    """Forward substitution for ``(I + gamma D_bd) x = s``.

    Row k reads ``(1 + r) x_k - r x_{k-1} = s_k`` with ``r = gamma / dt``,
    that is the first-order recursion fed to ``lfilter`` below.
    """
    values = np.asarray(values, dtype=float)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), values.shape[:-1])
    out = np.empty_like(values)
    for g in np.unique(gamma):
        rows = gamma == g
        if g == 0.0:
            out[rows] = values[rows]
            continue
        r = g / grid.dt_ms
        pole = r / (1.0 + r)
        seg = values[rows]
        zi = np.full(seg.shape[:-1] + (1,), pole * rest_value)
        out[rows], _ = lfilter([1.0 / (1.0 + r)], [1.0, -pole], seg, axis=-1, zi=zi)
    return out


def apply_derivative(values, grid: TimeGrid, backend: ResolventBackend = SPECTRAL):
    """``D`` on raw arrays, using the derivative consistent with ``backend``."""
    values = np.asarray(values, dtype=float)
    if backend.spectral:
        ik = 1j * _rfft_omega(grid)
        ik[-1] = 0.0
        return np.fft.irfft(np.fft.rfft(values, axis=-1) * ik,
                            n=grid.n_samples, axis=-1)
    prev = np.concatenate(
        [np.full(values.shape[:-1] + (1,), backend.rest_value), values[..., :-1]],
        axis=-1)
    return (values - prev) / grid.dt_ms


def apply_resolvent(values, grid: TimeGrid, gamma, backend: ResolventBackend = SPECTRAL):
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma <= 0) or not np.all(np.isfinite(gamma)):
        raise InvalidStepError(f"resolvent step must be > 0, got {gamma}")
    if backend.spectral:
        return _spectral_filter(values, grid, gamma, backend.bandwidth_fraction)
    return _bidiagonal_solve(values, grid, gamma, backend.rest_value)


def apply_lowpass(values, grid: TimeGrid, tau_ms, backend: ResolventBackend = SPECTRAL):
    tau = np.asarray(tau_ms, dtype=float)
    if np.any(tau < 0) or not np.all(np.isfinite(tau)):
        raise InvalidTimescaleError(f"filter timescale must be >= 0, got {tau_ms}")
    values = np.asarray(values, dtype=float)
    if not np.any(tau):
        return values.copy()
    if backend.spectral:
        return _spectral_filter(values, grid, tau)
    return _bidiagonal_solve(values, grid, tau, backend.rest_value)


def derivative(s: Signal) -> Signal:
    """Spectral derivative: bin k times ``i omega_k``, Nyquist bin zeroed."""
    return Signal(s.grid, apply_derivative(s.values, s.grid, SPECTRAL))


def backward_difference(s: Signal, rest_value: float = 0.0) -> Signal:
    backend = ResolventBackend(BackendKind.TIME_DOMAIN, rest_value=rest_value)
    return Signal(s.grid, apply_derivative(s.values, s.grid, backend))


def resolvent_D(s: Signal, gamma: float, backend: ResolventBackend = SPECTRAL) -> Signal:
    """``(I + gamma D)^{-1} s``."""
    return Signal(s.grid, apply_resolvent(s.values, s.grid, gamma, backend))


def lowpass(s: Signal, tau_ms: float, backend: ResolventBackend = SPECTRAL) -> Signal:
    """``(tau D + I)^{-1} s``; ``tau_ms == 0`` returns ``s`` unchanged."""
    if tau_ms == 0:
        apply_lowpass(s.values[:0], s.grid, tau_ms, backend)  # validates sign
        return s
    return Signal(s.grid, apply_lowpass(s.values, s.grid, tau_ms, backend))


def dense_resolvent_oracle(s: Signal, gamma: float, rest_value: float = 0.0) -> Signal:
    """Reference for the time-domain resolvent via a generic dense solve."""
    n = s.grid.n_samples
    if n > ORACLE_MAX_SAMPLES:
        raise OracleSizeError(f"dense oracle limited to {ORACLE_MAX_SAMPLES} samples, got {n}")
    if gamma <= 0:
        raise InvalidStepError(f"gamma must be > 0, got {gamma}")
    dt = s.grid.dt_ms
    d_bd = (np.eye(n) - np.eye(n, k=-1)) / dt
    a = np.eye(n) + gamma * d_bd
    rhs = np.array(s.values, dtype=float)
    rhs[0] += gamma * rest_value / dt
    return Signal(s.grid, np.linalg.solve(a, rhs))
