"""Frequency multipliers: unit-scale bumps, Littlewood-Paley shells and cones.

All multipliers are real arrays in FFT bin order, cached per grid and
read-only.  The ``*_project`` functions accept a :class:`Field` in either
representation or a :class:`SpaceTimeField` (applied slice by slice) and
return the same kind of object.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import product

import numpy as np

from .grid import FREQUENCY, Field, Grid, SpaceTimeField, apply_multiplier

#: plateau radius of the radial Littlewood-Paley cutoff
LP_PLATEAU = 1.0 - 2.0**-8


def bump(s) -> np.ndarray:
    """``exp(-1/(1 - s^2))`` on ``(-1, 1)``, zero outside."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    return out


def unit_bump_1d(s) -> np.ndarray:
    """Normalized 1-d bump whose integer translates sum to one."""
    s = np.asarray(s, dtype=float)
    r = s - np.floor(s)
    return bump(s) / (bump(r) + bump(r - 1.0))


def smooth_step(s) -> np.ndarray:
    """C-infinity step: 1 for ``s <= 0``, 0 for ``s >= 1``."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    num = bump(s)
    return num / (num + bump(1.0 - s))


def lp_cutoff(r) -> np.ndarray:
    """Radial cutoff equal to 1 on the plateau ``r <= 1 - 2^-8``, 0 for ``r >= 1``."""
    return smooth_step((np.asarray(r, dtype=float) - LP_PLATEAU) / (1.0 - LP_PLATEAU))


def _check_dyadic(N) -> int:
    N = int(N)
    if N < 1 or (N & (N - 1)) != 0:
        raise ValueError(f"N must be a power of two >= 1, got {N}")
    return N


def dyadic_range(n_max: int) -> list[int]:
    n_max = _check_dyadic(n_max)
    return [2**j for j in range(n_max.bit_length())]


# -- unit-scale projections ----------------------------------------------------


def default_extent(grid: Grid) -> int:
    """Largest lattice extent ``K`` with ``K + 1 <= xi_max``."""
    return max(int(np.floor(grid.xi_max + 1e-12)) - 1, 0)


def _check_lattice_point(grid: Grid, k, K: int) -> tuple[int, ...]:
    k = tuple(int(c) for c in np.atleast_1d(k))
    if len(k) != grid.d:
        raise ValueError(f"lattice point {k} has wrong dimension for d={grid.d}")
    if K + 1 > grid.xi_max + 1e-12:
        raise ValueError(f"lattice extent K={K} not resolved: need K+1 <= {grid.xi_max}")
    if max(abs(c) for c in k) > K:
        raise ValueError(f"lattice point {k} outside the declared extent K={K}")
    return k


@lru_cache(maxsize=512)
def _unit_axis_weight(grid: Grid, kj: int) -> np.ndarray:
    return unit_bump_1d(grid.freq_1d - kj)


def unit_multiplier(grid: Grid, k, K: int | None = None) -> np.ndarray:
    """``psi(xi - k)`` on the grid, ``psi`` the tensorized normalized bump."""
    K = default_extent(grid) if K is None else K
    k = _check_lattice_point(grid, k, K)
    acc = np.ones(grid.shape)
    for j, kj in enumerate(k):
        sh = [1] * grid.d
        sh[j] = grid.n
        acc = acc * _unit_axis_weight(grid, kj).reshape(sh)
    return acc


def lattice(d: int, K: int) -> list[tuple[int, ...]]:
    """All ``k`` with ``|k|_inf <= K`` in lexicographic order."""
    return list(product(range(-K, K + 1), repeat=d))


class UnitBump:
    """Partition of unity ``{psi(. - k)}`` restricted to the lattice ``|k|_inf <= K``."""

    def __init__(self, grid: Grid, K: int | None = None):
        self.grid = grid
        self.K = default_extent(grid) if K is None else int(K)
        if self.K + 1 > grid.xi_max + 1e-12:
            raise ValueError(f"lattice extent K={self.K} not resolved on this grid")
        self.points = lattice(grid.d, self.K)

    def weight(self, k) -> np.ndarray:
        return unit_multiplier(self.grid, k, self.K)

    def partition_sum(self) -> np.ndarray:
        acc = np.zeros(self.grid.shape)
        for k in self.points:
            acc += self.weight(k)
        return acc

    def covered(self) -> np.ndarray:
        """Grid frequencies where the truncated partition is complete."""
        keep = np.ones(self.grid.shape, dtype=bool)
        for c in self.grid.xi:
            keep = keep & (np.abs(c) <= self.K + 1e-12)
        return keep


# -- Littlewood-Paley ----------------------------------------------------------


@lru_cache(maxsize=256)
def lp_multiplier(grid: Grid, N: int) -> np.ndarray:
    """``phi_N``: ``phi`` for ``N = 1``, else ``phi(xi/N) - phi(2 xi/N)``."""
    N = _check_dyadic(N)
    r = grid.xi_norm
    if N == 1:
        out = lp_cutoff(r)
    else:
        out = lp_cutoff(r / N) - lp_cutoff(2.0 * r / N)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=256)
def lp_mod_multiplier(grid: Grid, N: int) -> np.ndarray:
    """``chi_N``: sum of ``phi_N'`` over dyadic ``N'`` with ``1/8 < N'/N < 8``."""
    N = _check_dyadic(N)
    r = grid.xi_norm
    top = lp_cutoff(r / (4 * N))
    low = max(N // 4, 1)
    out = top - lp_cutoff(2.0 * r / low) if low > 1 else top
    out.flags.writeable = False
    return out


def _check_shell(grid: Grid, N: int) -> int:
    N = _check_dyadic(N)
    if N > grid.xi_max + 1e-12:
        raise ValueError(f"dyadic scale N={N} exceeds xi_max={grid.xi_max}")
    return N


# -- directional cones -----------------------------------------------------------


@lru_cache(maxsize=64)
def cone_multiplier(grid: Grid, l: int) -> np.ndarray:
    """Sharp indicator of the ``l``-th cone (1-based); zero frequency excluded."""
    if not 1 <= l <= grid.d:
        raise ValueError(f"direction l must lie in 1..{grid.d}, got {l}")
    r = grid.xi_norm
    thresh = 1.0 / (2.0 * np.sqrt(grid.d))
    nz = r > 0
    safe = np.where(nz, r, 1.0)

    def wide(j):
        return nz & (np.abs(grid.xi_mesh[j]) / safe > thresh)

    member = wide(l - 1)
    for prev in range(l - 1):
        member = member & ~wide(prev)
    out = member.astype(float)
    out.flags.writeable = False
    return out


# -- application ---------------------------------------------------------------------


def apply(obj, mult: np.ndarray):
    """Apply a multiplier to a Field (either rep) or a SpaceTimeField."""
    if isinstance(obj, SpaceTimeField):
        return SpaceTimeField(obj.grid, apply_multiplier(obj.values, mult, obj.grid), obj.times)
    if obj.rep == FREQUENCY:
        return Field(obj.grid, obj.values * mult, FREQUENCY)
    return Field(obj.grid, apply_multiplier(obj.values, mult, obj.grid))


def unit_project(f, k, K: int | None = None):
    """Unit-scale projection ``Q_k``."""
    return apply(f, unit_multiplier(f.grid, k, K))


def lp_project(f, N: int):
    """Littlewood-Paley projection ``P_N``."""
    return apply(f, lp_multiplier(f.grid, _check_shell(f.grid, N)))


def lp_project_mod(f, N: int):
    """Fattened projection onto the shells within a factor 8 of ``N``."""
    return apply(f, lp_mod_multiplier(f.grid, _check_shell(f.grid, N)))


def cone_project(f, l: int):
    """Sharp directional cone projection ``U_{e_l}``."""
    return apply(f, cone_multiplier(f.grid, l))
