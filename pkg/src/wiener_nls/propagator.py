"""Free Schrödinger group and the Duhamel integral operator.

Conventions: ``(i d_t + Delta) u = sign * |u|^2 u`` with ``sign = +1``
defocusing.  The Duhamel map is

    I_{v0}(h)(t) = e^{it Delta} v0 - i * sign * int_0^t e^{i(t-s) Delta} h(s) ds,

and ``e^{it Delta}`` is the Fourier multiplier ``exp(-4 pi^2 i |xi|^2 t)``.
"""
from __future__ import annotations

import numpy as np

from .grid import (
    FREQUENCY,
    Field,
    Grid,
    GridMismatchError,
    SpaceTimeField,
    physical,
    spectral,
)

FOUR_PI2 = 4.0 * np.pi**2


def check_sign(sign: int) -> int:
    if sign not in (1, -1):
        raise ValueError(f"sign must be +1 or -1, got {sign}")
    return int(sign)


def phase(grid: Grid, t: float) -> np.ndarray:
    """Multiplier of ``e^{it Delta}``; unimodular at every frequency."""
    return np.exp(-1j * FOUR_PI2 * grid.xi_norm2 * t)


class PropagatorTable:
    """Cached phase multipliers for one grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self._cache: dict[float, np.ndarray] = {}
        self.step = self.at(grid.dt)

    def at(self, t: float) -> np.ndarray:
        key = float(t)
        if key not in self._cache:
            m = phase(self.grid, key)
            m.flags.writeable = False
            self._cache[key] = m
        return self._cache[key]


def propagate(f, t: float):
    """``e^{it Delta} f`` for a Field (either rep) or a SpaceTimeField slice-wise."""
    if isinstance(f, SpaceTimeField):
        g = f.grid
        return SpaceTimeField(g, physical(spectral(f.values, g) * phase(g, t), g), f.times)
    mult = phase(f.grid, t)
    if f.rep == FREQUENCY:
        return Field(f.grid, f.values * mult, FREQUENCY)
    g = f.grid
    return Field(g, physical(spectral(f.values, g) * mult, g))


def free_evolution(f: Field, times=None) -> SpaceTimeField:
    """``t -> e^{it Delta} f`` sampled on ``times`` (default: the grid lattice)."""
    g = f.grid
    times = g.times if times is None else np.asarray(times, dtype=float)
    f_hat = spectral(f.physical_values(), g)
    out = np.empty((len(times),) + g.shape, dtype=np.complex128)
    for j, t in enumerate(times):
        out[j] = physical(f_hat * phase(g, t), g)
    return SpaceTimeField(g, out, times)


def interaction_picture(u: SpaceTimeField) -> np.ndarray:
    """Spectral ``e^{-i tau Delta} u(t)`` with ``tau`` measured from ``u.times[0]``."""
    g = u.grid
    tau = u.times - u.times[0]
    out = spectral(u.values, g)
    for j, s in enumerate(tau):
        out[j] *= phase(g, -s)
    return out


def duhamel(v0: Field | None, h: SpaceTimeField, sign: int = 1) -> SpaceTimeField:
    """Trapezoidal interaction-picture evaluation of ``I_{v0}(h)`` on ``h.times``.

    The integral starts at ``h.times[0]``, so passing a windowed ``h`` with
    ``v0 = w(t0)`` continues a solution from ``t0``.
    """
    sign = check_sign(sign)
    g = h.grid
    if v0 is not None and v0.grid.shape != g.shape:
        raise GridMismatchError("v0 and h live on different grids")
    if v0 is not None and (v0.grid.L != g.L or v0.grid.d != g.d):
        raise GridMismatchError("v0 and h live on different grids")
    coef = -1j * sign
    tau = h.times - h.times[0]
    acc = (
        np.zeros(g.shape, dtype=np.complex128)
        if v0 is None
        else spectral(v0.physical_values(), g).astype(np.complex128)
    )
    out = np.empty((len(tau),) + g.shape, dtype=np.complex128)
    out[0] = physical(acc, g)
    prev = spectral(h.values[0], g)
    for j in range(1, len(tau)):
        cur = spectral(h.values[j], g) * phase(g, -tau[j])
        acc += (0.5 * coef * (tau[j] - tau[j - 1])) * (prev + cur)
        out[j] = physical(acc * phase(g, tau[j]), g)
        prev = cur
    return SpaceTimeField(g, out, h.times)


def scattering_proxy(u: SpaceTimeField, t1: float, t2: float, sigma: float = 0.0) -> float:
    """``|| e^{-i t2 Delta} u(t2) - e^{-i t1 Delta} u(t1) ||_{H^sigma}``."""
    from .norms import sobolev_multiplier

    if not (u.times[0] - 1e-12 <= t1 < t2 <= u.times[-1] + 1e-12):
        raise ValueError("need times[0] <= t1 < t2 <= times[-1]")
    j1 = _lattice_index(u.times, t1)
    j2 = _lattice_index(u.times, t2)
    g = u.grid
    diff = spectral(u.values[j2], g) * phase(g, -u.times[j2]) - spectral(
        u.values[j1], g
    ) * phase(g, -u.times[j1])
    diff = diff * sobolev_multiplier(g, sigma)
    # unnormalized DFT: ||v||_2^2 = dx^d / n^d * sum |fft v|^2
    return float(np.sqrt(np.sum(np.abs(diff) ** 2) * g.cell_volume / g.n**g.d))


def _lattice_index(times: np.ndarray, t: float) -> int:
    j = int(np.argmin(np.abs(times - t)))
    if abs(times[j] - t) > 1e-9 * max(1.0, abs(times[-1])):
        raise ValueError(f"t={t} is not on the time lattice")
    return j
