"""Doubly periodic scalar fields on the unit 2-torus.

Fields are sampled on a uniform n1 x n2 grid over [0,1)^2, row-major with
axis 1 as the slow index: ``values[i, j] = u(i/n1, j/n2)``.  Two derivative
backends share one interface: an FFT backend (exact for band-limited data up
to Nyquist) and centered second-order periodic finite differences.  Mixed
second derivatives are always formed by composing two first derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

import numpy as np

from .errors import GridMismatch

SPECTRAL = "spectral"
FD2 = "fd2"
BACKENDS = (SPECTRAL, FD2)


def _check_backend(backend: str) -> None:
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}, expected one of {BACKENDS}")


def _check_axis_order(axis: int, order: int) -> None:
    if axis not in (1, 2):
        raise ValueError(f"axis must be 1 or 2, got {axis}")
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")


@dataclass(frozen=True)
class TorusGrid:
    """Uniform periodic grid on [0,1)^2; both periods are fixed to 1."""

    n1: int
    n2: int

    def __post_init__(self):
        for n in (self.n1, self.n2):
            if not isinstance(n, (int, np.integer)) or n < 8 or n % 2 != 0:
                raise ValueError(f"grid sizes must be even integers >= 8, got {n!r}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2)

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """Sample coordinates i/n along the given axis, shaped for broadcasting."""
        _check_axis_order(axis, 1)
        n = self.n1 if axis == 1 else self.n2
        c = np.arange(n, dtype=np.float64) / n
        return c.reshape((n, 1) if axis == 1 else (1, n))

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Full coordinate meshes (x1, x2), each of shape (n1, n2)."""
        x1 = np.arange(self.n1, dtype=np.float64) / self.n1
        x2 = np.arange(self.n2, dtype=np.float64) / self.n2
        return np.meshgrid(x1, x2, indexing="ij")


@dataclass(frozen=True)
class TorusField:
    """Immutable real scalar field sampled on a TorusGrid."""

    grid: TorusGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64, copy=True)
        if v.shape != self.grid.shape:
            raise GridMismatch(
                f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    # tiny arithmetic conveniences; all return fresh fields on the same grid
    def __add__(self, other):
        return TorusField(self.grid, self.values + _values_on(self.grid, other))

    def __sub__(self, other):
        return TorusField(self.grid, self.values - _values_on(self.grid, other))

    def __mul__(self, other):
        return TorusField(self.grid, self.values * _values_on(self.grid, other))

    __rmul__ = __mul__

    def __neg__(self):
        return TorusField(self.grid, -self.values)

    def sup(self) -> float:
        return float(np.abs(self.values).max())


def _values_on(grid: TorusGrid, other) -> np.ndarray:
    if isinstance(other, TorusField):
        if other.grid != grid:
            raise GridMismatch("fields live on different grids")
        return other.values
    return np.float64(other)


@dataclass(frozen=True)
class NormReport:
    """Discrete sup-norms of a field and of its first/second derivatives."""

    c0: float
    c1: float
    c2: float

    def max(self) -> float:
        return max(self.c0, self.c1, self.c2)


def zeros(grid: TorusGrid) -> TorusField:
    return TorusField(grid, np.zeros(grid.shape))


def constant(grid: TorusGrid, c: float) -> TorusField:
    return TorusField(grid, np.full(grid.shape, float(c)))


def from_function(grid: TorusGrid, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> TorusField:
    x1, x2 = grid.coords()
    return TorusField(grid, fn(x1, x2))


def field_from_modes(grid: TorusGrid, modes: Iterable[Mapping]) -> TorusField:
    """Sum of cosine modes amp*cos(2*pi*(k1*x1 + k2*x2) + phase).

    Each mode is a mapping with integer ``k1``, ``k2``, float ``amp`` and an
    optional ``phase`` (radians, default 0); a phase of -pi/2 yields a sine.
    """
    x1, x2 = grid.coords()
    vals = np.zeros(grid.shape)
    for m in modes:
        k1, k2 = int(m["k1"]), int(m["k2"])
        amp = float(m["amp"])
        phase = float(m.get("phase", 0.0))
        vals += amp * np.cos(2.0 * np.pi * (k1 * x1 + k2 * x2) + phase)
    return TorusField(grid, vals)


def _angular_frequencies(n: int) -> np.ndarray:
    # 2*pi*k in FFT ordering for period-1 sampling
    return 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n)


def _reshape_for(axis0: int, mult: np.ndarray) -> np.ndarray:
    return mult.reshape((-1, 1) if axis0 == 0 else (1, -1))


def _spectral_derivative(values: np.ndarray, axis0: int, order: int) -> np.ndarray:
    n = values.shape[axis0]
    w = _angular_frequencies(n)
    if order == 1:
        mult = 1j * w
        mult[n // 2] = 0.0  # symmetric convention: Nyquist has no odd derivative
    else:
        mult = -(w * w).astype(complex)
    vhat = np.fft.fft(values, axis=axis0)
    return np.fft.ifft(vhat * _reshape_for(axis0, mult), axis=axis0).real


def _fd2_derivative(values: np.ndarray, axis0: int, order: int) -> np.ndarray:
    n = values.shape[axis0]
    up = np.roll(values, -1, axis=axis0)
    dn = np.roll(values, 1, axis=axis0)
    if order == 1:
        return (up - dn) * (n / 2.0)
    return (up - 2.0 * values + dn) * float(n) * float(n)


def derivative(f: TorusField, axis: int, order: int, backend: str = SPECTRAL) -> TorusField:
    """Periodic partial derivative of the given order along axis 1 or 2."""
    _check_axis_order(axis, order)
    _check_backend(backend)
    ax0 = axis - 1
    if backend == SPECTRAL:
        out = _spectral_derivative(f.values, ax0, order)
    else:
        out = _fd2_derivative(f.values, ax0, order)
    return TorusField(f.grid, out)


def mixed_second(f: TorusField, backend: str = SPECTRAL) -> TorusField:
    """Mixed second derivative, composed from two first derivatives."""
    return derivative(derivative(f, 1, 1, backend), 2, 1, backend)


def integral_mean(f: TorusField) -> float:
    """Integral over the unit torus = arithmetic grid mean (trapezoid rule)."""
    return float(f.values.mean())


def project_zero_mean(f: TorusField) -> TorusField:
    return TorusField(f.grid, f.values - f.values.mean())


def normalize_F(f_raw: TorusField) -> TorusField:
    """Shift so that mean(exp(F)) = 1, i.e. F = f_raw - log(mean(exp(f_raw)))."""
    shift = np.log(np.exp(f_raw.values).mean())
    return TorusField(f_raw.grid, f_raw.values - shift)


def cumulative_integral(f: TorusField, axis: int) -> TorusField:
    """Running integral from coordinate 0 along an axis.

    The per-line mean contributes an exact linear ramp mean*coordinate; the
    mean-free remainder is integrated spectrally and pinned to 0 on the
    0-coordinate line.  For mean-free lines the output is periodic.
    """
    _check_axis_order(axis, 1)
    ax0 = axis - 1
    n = f.grid.shape[ax0]
    line_mean = f.values.mean(axis=ax0, keepdims=True)
    fluct = f.values - line_mean

    w = _angular_frequencies(n)
    inv = np.zeros(n, dtype=complex)
    nonzero = w != 0.0
    inv[nonzero] = 1.0 / (1j * w[nonzero])
    inv[n // 2] = 0.0  # antiderivative convention matches the first derivative
    anti = np.fft.ifft(np.fft.fft(fluct, axis=ax0) * _reshape_for(ax0, inv), axis=ax0).real
    anti = anti - np.take(anti, [0], axis=ax0)  # zero on the 0-coordinate line

    coord = f.grid.axis_coordinates(axis)
    return TorusField(f.grid, anti + line_mean * coord)


def wraparound_increment(f: TorusField, axis: int) -> np.ndarray:
    """Net growth of the running integral of f over one full period, per line.

    This is exactly the per-line mean (period 1); the cumulative integral of a
    line is periodic iff its increment vanishes.
    """
    _check_axis_order(axis, 1)
    return f.values.mean(axis=axis - 1)


def sup_norms(f: TorusField, backend: str = SPECTRAL) -> NormReport:
    """Grid sup-norms of f, its first derivatives, and its second derivatives."""
    _check_backend(backend)
    d1 = derivative(f, 1, 1, backend)
    d2 = derivative(f, 2, 1, backend)
    c0 = f.sup()
    c1 = max(d1.sup(), d2.sup())
    c2 = max(
        derivative(f, 1, 2, backend).sup(),
        derivative(d1, 2, 1, backend).sup(),
        derivative(f, 2, 2, backend).sup(),
    )
    return NormReport(c0=c0, c1=c1, c2=c2)


def require_same_grid(*fields: TorusField) -> TorusGrid:
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatch(f"expected grid {g.shape}, got {f.grid.shape}")
    return g
