"""Periodic-box discretization and the discrete Fourier transform contract.

The whole space is approximated by the box ``[-L/2, L/2)^d`` sampled on ``n``
points per axis.  Frequency-side values are Fourier-series coefficients in
the signed lattice ``(1/L) * {-n/2, ..., n/2 - 1}^d``, normalized so that a
pure mode ``A * exp(2 pi i xi0 . x)`` lands in a single bin with amplitude
``A``.  With that normalization Parseval reads

    sum |v|^2 dx^d == L^d * sum |c|^2.

Internally every frequency multiplier is applied to raw ``scipy.fft`` output;
since multipliers are diagonal the coordinate origin only matters at the
public :func:`fft` / :func:`ifft` boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import scipy.fft as sfft

PHYSICAL = "physical"
FREQUENCY = "frequency"


class RepresentationError(ValueError):
    """A field was handed to an operation expecting the other representation."""


class GridMismatchError(ValueError):
    """Two operands live on different grids."""


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Space-time lattice shared by every field in a computation.

    Parameters
    ----------
    d : spatial dimension, 1 to 3.
    n : points per axis, a power of two.
    L : box side length.
    n_t : number of time samples on ``[0, T]`` (``t_j = j * dt``).
    T : time horizon.
    dealias : fraction of ``xi_max`` kept per axis after cubic products.
    """

    d: int
    n: int
    L: float
    n_t: int = 2
    T: float = 1.0
    dealias: float = 2.0 / 3.0

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"d must be 1, 2 or 3, got {self.d}")
        if not _is_pow2(self.n) or self.n < 2:
            raise ValueError(f"n must be a power of two >= 2, got {self.n}")
        if self.n_t < 2:
            raise ValueError(f"n_t must be >= 2, got {self.n_t}")
        if not self.L > 0 or not self.T > 0:
            raise ValueError("L and T must be positive")
        if not 0 < self.dealias <= 1:
            raise ValueError("dealias fraction must lie in (0, 1]")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def dt(self) -> float:
        return self.T / (self.n_t - 1)

    @property
    def xi_max(self) -> float:
        return self.n / (2.0 * self.L)

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d

    @property
    def axes(self) -> tuple[int, ...]:
        """Spatial axes of a stacked ``(n_t, n, ..., n)`` array."""
        return tuple(range(-self.d, 0))

    def with_time(self, n_t: int | None = None, T: float | None = None) -> "Grid":
        return replace(
            self,
            n_t=self.n_t if n_t is None else n_t,
            T=self.T if T is None else T,
        )

    @cached_property
    def times(self) -> np.ndarray:
        return np.arange(self.n_t) * self.dt

    @cached_property
    def freq_1d(self) -> np.ndarray:
        """Signed frequencies of one axis in FFT bin order."""
        return np.fft.fftfreq(self.n, d=self.dx)

    @cached_property
    def mode_1d(self) -> np.ndarray:
        """Signed integer mode numbers of one axis in FFT bin order."""
        return np.rint(self.freq_1d * self.L).astype(np.int64)

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Broadcastable per-axis frequency arrays."""
        out = []
        for j in range(self.d):
            sh = [1] * self.d
            sh[j] = self.n
            out.append(self.freq_1d.reshape(sh))
        return tuple(out)

    @cached_property
    def xi_mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.broadcast_to(c, self.shape) for c in self.xi)

    @cached_property
    def xi_norm2(self) -> np.ndarray:
        acc = np.zeros(self.shape)
        for c in self.xi:
            acc = acc + c**2
        return acc

    @cached_property
    def xi_norm(self) -> np.ndarray:
        return np.sqrt(self.xi_norm2)

    @cached_property
    def x_1d(self) -> np.ndarray:
        return -self.L / 2 + np.arange(self.n) * self.dx

    @cached_property
    def x(self) -> tuple[np.ndarray, ...]:
        """Broadcastable per-axis coordinate arrays."""
        out = []
        for j in range(self.d):
            sh = [1] * self.d
            sh[j] = self.n
            out.append(self.x_1d.reshape(sh))
        return tuple(out)

    @cached_property
    def origin_phase(self) -> np.ndarray:
        # exp(-2 pi i xi x_0) with x_0 = -L/2 is (-1)^m per axis
        acc = np.ones(self.shape)
        for j in range(self.d):
            sh = [1] * self.d
            sh[j] = self.n
            acc = acc * ((-1.0) ** self.mode_1d).reshape(sh)
        return acc

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        cut = self.dealias * self.xi_max
        keep = np.ones(self.shape, dtype=bool)
        for c in self.xi:
            keep = keep & (np.abs(c) < cut + 1e-12)
        return keep

    def check_resolves(self, xi_needed: float, what: str = "frequency") -> None:
        if xi_needed > self.xi_max + 1e-12:
            raise ValueError(
                f"{what} {xi_needed} exceeds grid resolution xi_max={self.xi_max}"
            )

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "L": self.L,
            "n_t": self.n_t,
            "T": self.T,
            "dealias": self.dealias,
        }


# -- raw transforms over the trailing d axes ---------------------------------


def spectral(values: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.fftn(values, axes=grid.axes)


def physical(values_hat: np.ndarray, grid: Grid) -> np.ndarray:
    return sfft.ifftn(values_hat, axes=grid.axes)


def apply_multiplier(values: np.ndarray, mult: np.ndarray, grid: Grid) -> np.ndarray:
    """Apply a Fourier multiplier to physical-space data (any leading axes)."""
    return physical(spectral(values, grid) * mult, grid)


def dealias(values: np.ndarray, grid: Grid) -> np.ndarray:
    return apply_multiplier(values, grid.dealias_mask, grid)


def cubic(a: np.ndarray, b: np.ndarray, c: np.ndarray, grid: Grid) -> np.ndarray:
    """Dealiased product ``a * conj(b) * c``."""
    return dealias(a * np.conj(b) * c, grid)


# -- fields ------------------------------------------------------------------


class Field:
    """One complex time slice on a grid, immutable after construction."""

    __slots__ = ("grid", "values", "rep")

    def __init__(self, grid: Grid, values, rep: str = PHYSICAL):
        if rep not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown representation {rep!r}")
        arr = np.array(values, dtype=np.complex128)
        if arr.shape != grid.shape:
            arr = np.broadcast_to(arr, grid.shape).copy()
        arr.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "rep", rep)

    def __setattr__(self, name, value):
        raise AttributeError("Field is immutable")

    def __reduce__(self):
        return (Field, (self.grid, self.values, self.rep))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "Field":
        return cls(grid, func(*np.meshgrid(*[grid.x_1d] * grid.d, indexing="ij")))

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    def _check(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise GridMismatchError("fields live on different grids")
        if other.rep != self.rep:
            raise RepresentationError("fields are in different representations")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values + other.values, self.rep)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.values - other.values, self.rep)

    def __mul__(self, alpha) -> "Field":
        return Field(self.grid, alpha * self.values, self.rep)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values, self.rep)

    def physical_values(self) -> np.ndarray:
        return self.values if self.rep == PHYSICAL else ifft(self).values

    def __repr__(self) -> str:
        return f"Field(d={self.grid.d}, n={self.grid.n}, rep={self.rep})"


def fft(field: Field) -> Field:
    """Physical values to Fourier-series coefficients."""
    if field.rep != PHYSICAL:
        raise RepresentationError("fft expects a physical-space field")
    g = field.grid
    coef = spectral(field.values, g) * (g.origin_phase / g.n**g.d)
    return Field(g, coef, FREQUENCY)


def ifft(field: Field) -> Field:
    """Fourier-series coefficients back to physical values."""
    if field.rep != FREQUENCY:
        raise RepresentationError("ifft expects a frequency-space field")
    g = field.grid
    vals = physical(field.values * (g.origin_phase * g.n**g.d), g)
    return Field(g, vals, PHYSICAL)


def lp_norm(values: np.ndarray, p: float, weight: float, axis=None) -> np.ndarray:
    """``(sum |v|^p * weight)^(1/p)`` over ``axis``, scaled against overflow."""
    a = np.abs(values)
    if np.isinf(p):
        return a.max(axis=axis)
    m = a.max(axis=axis, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    s = np.sum((a / safe) ** p, axis=axis, keepdims=True) * weight
    out = safe * s ** (1.0 / p)
    out = np.where(m > 0, out, 0.0)
    if axis is None:
        return out.reshape(())[()]
    return np.squeeze(out, axis=axis)


def quadrature_norm(field: Field, p: float) -> float:
    """Discrete L^p norm over the box (grid maximum when ``p = inf``)."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if field.rep != PHYSICAL:
        raise RepresentationError("quadrature_norm expects a physical-space field")
    return float(lp_norm(field.values, p, field.grid.cell_volume))


def parseval_norm(field: Field) -> float:
    """L^2 norm computed on the frequency side."""
    coef = field.values if field.rep == FREQUENCY else fft(field).values
    return float(np.sqrt(field.grid.L**field.grid.d * np.sum(np.abs(coef) ** 2)))


class SpaceTimeField:
    """Stack of time slices ``values[j] = u(times[j])`` in physical space."""

    __slots__ = ("grid", "values", "times")

    def __init__(self, grid: Grid, values, times=None):
        arr = np.array(values, dtype=np.complex128)
        if times is None:
            times = grid.times[: arr.shape[0]]
        times = np.asarray(times, dtype=float)
        if arr.shape != (len(times),) + grid.shape:
            raise ValueError(
                f"values shape {arr.shape} does not match {(len(times),) + grid.shape}"
            )
        if len(times) > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("time index must be strictly increasing")
        arr.flags.writeable = False
        times = times.copy()
        times.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "times", times)

    def __setattr__(self, name, value):
        raise AttributeError("SpaceTimeField is immutable")

    def __reduce__(self):
        return (SpaceTimeField, (self.grid, self.values, self.times))

    @classmethod
    def zeros(cls, grid: Grid, times=None) -> "SpaceTimeField":
        times = grid.times if times is None else np.asarray(times)
        return cls(grid, np.zeros((len(times),) + grid.shape), times)

    @classmethod
    def constant(cls, field: Field, times=None) -> "SpaceTimeField":
        g = field.grid
        times = g.times if times is None else np.asarray(times)
        vals = np.broadcast_to(field.physical_values(), (len(times),) + g.shape)
        return cls(g, vals, times)

    def __len__(self) -> int:
        return len(self.times)

    def __getitem__(self, j: int) -> Field:
        return Field(self.grid, self.values[j])

    def _check(self, other: "SpaceTimeField") -> None:
        if other.grid != self.grid:
            raise GridMismatchError("space-time fields live on different grids")
        if len(other.times) != len(self.times) or not np.allclose(other.times, self.times):
            raise GridMismatchError("space-time fields have different time lattices")

    def __add__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        self._check(other)
        return SpaceTimeField(self.grid, self.values + other.values, self.times)

    def __sub__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        self._check(other)
        return SpaceTimeField(self.grid, self.values - other.values, self.times)

    def __mul__(self, alpha) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, alpha * self.values, self.times)

    __rmul__ = __mul__

    def __neg__(self) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, -self.values, self.times)

    def window(self, j0: int, j1: int) -> "SpaceTimeField":
        """Slices ``j0..j1`` inclusive."""
        return SpaceTimeField(self.grid, self.values[j0 : j1 + 1], self.times[j0 : j1 + 1])

    def map_slices(self, func) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, func(np.asarray(self.values)), self.times)

    def __repr__(self) -> str:
        return (
            f"SpaceTimeField(d={self.grid.d}, n={self.grid.n}, "
            f"n_t={len(self.times)}, t=[{self.times[0]:g}, {self.times[-1]:g}])"
        )


def time_index(grid: Grid, t: float) -> int:
    """Index of lattice time ``t``; raises if ``t`` is off the lattice."""
    j = int(round(t / grid.dt))
    if j < 0 or j >= grid.n_t or abs(j * grid.dt - t) > 1e-9 * max(1.0, grid.T):
        raise ValueError(f"t={t} is not on the time lattice of this grid")
    return j
