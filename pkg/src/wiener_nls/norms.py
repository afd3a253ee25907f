"""Norm engines: Sobolev, Strichartz, directional and the composite X/Y families.

Space-time norms act on a :class:`SpaceTimeField` restricted to a window
``I = (ta, tb)`` of its time lattice.  Time integrals use trapezoid weights,
space integrals the Riemann sum with cell volume ``dx^d``; infinite exponents
are grid maxima.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .grid import FREQUENCY, Field, Grid, SpaceTimeField, fft, spectral
from .projections import cone_multiplier, dyadic_range, lp_multiplier, lp_project, apply


class InsufficientShellsError(ValueError):
    """Too few dyadic shells carry mass for a slope fit."""


# -- small helpers -------------------------------------------------------------


def trapezoid_weights(times: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    w = np.zeros(len(times))
    if len(times) < 2:
        return w
    dt = np.diff(times)
    w[:-1] += dt / 2
    w[1:] += dt / 2
    return w


def weighted_lp(a: np.ndarray, p: float, w, axis: int) -> np.ndarray:
    """``(sum_axis w * a^p)^(1/p)`` for ``a >= 0``; overflow-safe for large ``p``."""
    if np.isinf(p):
        return a.max(axis=axis)
    m = a.max(axis=axis, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    s = np.sum(w * (a / safe) ** p, axis=axis, keepdims=True)
    out = np.where(m > 0, safe * s ** (1.0 / p), 0.0)
    return np.squeeze(out, axis=axis)


def _window(u: SpaceTimeField, I) -> tuple[np.ndarray, np.ndarray]:
    if I is None:
        return np.asarray(u.values), u.times
    ta, tb = I
    tol = 1e-9 * max(1.0, abs(u.times[-1]))
    sel = (u.times >= ta - tol) & (u.times <= tb + tol)
    if not np.any(sel):
        raise ValueError(f"time window {I} contains no lattice times")
    return np.asarray(u.values)[sel], u.times[sel]


def _time_weights(times: np.ndarray) -> np.ndarray:
    return trapezoid_weights(times)


def is_admissible(p: float, q: float, d: int) -> bool:
    """Strichartz admissibility ``2/p + d/q = d/2``; endpoint allowed for ``d >= 3``."""
    if p < 2 or (p == 2 and d <= 2) or q < 2:
        return False
    return bool(np.isclose(2 / p + d / q, d / 2))


def admissible_q(p: float, d: int) -> float:
    """Spatial exponent paired with ``p`` by ``2/p + d/q = d/2``."""
    denom = d / 2 - 2 / p
    if denom < 0:
        raise ValueError(f"no admissible q for p={p} in d={d}")
    return np.inf if denom == 0 else d / denom


def critical_regularity(d: int) -> float:
    return (d - 2) / 2


# -- Sobolev -------------------------------------------------------------------------


def sobolev_multiplier(grid: Grid, sigma: float) -> np.ndarray:
    """``(1 + |2 pi xi|^4)^(sigma/4)``."""
    return (1.0 + (2 * np.pi) ** 4 * grid.xi_norm2**2) ** (sigma / 4.0)


def _l2_from_coef(coef: np.ndarray, grid: Grid) -> float:
    return float(np.sqrt(grid.L**grid.d * np.sum(np.abs(coef) ** 2)))


def _coef(f: Field) -> np.ndarray:
    return f.values if f.rep == FREQUENCY else fft(f).values


def sobolev_norm(f: Field, sigma: float) -> float:
    return _l2_from_coef(_coef(f) * sobolev_multiplier(f.grid, sigma), f.grid)


def sobolev_weight(f, sigma: float):
    """Apply ``<Delta>^{sigma/2}`` to a Field or SpaceTimeField."""
    return apply(f, sobolev_multiplier(f.grid, sigma))


def homogeneous_sobolev_norm(f: Field, s: float) -> float:
    """Discrete proxy with Fourier weight ``|2 pi xi|^s`` (zero mode dropped)."""
    r = 2 * np.pi * f.grid.xi_norm
    w = np.where(r > 0, r, 1.0) ** s
    w = np.where(r > 0, w, 0.0)
    return _l2_from_coef(_coef(f) * w, f.grid)


def sobolev_norms_in_time(u: SpaceTimeField, sigma: float) -> np.ndarray:
    """``||u(t_j)||_{H^sigma}`` for every slice."""
    g = u.grid
    mult = sobolev_multiplier(g, sigma)
    hat = spectral(u.values, g) * mult
    return np.sqrt(np.sum(np.abs(hat) ** 2, axis=g.axes) * g.cell_volume / g.n**g.d)


def c0_sobolev(u: SpaceTimeField, sigma: float) -> float:
    """``max_t ||u(t)||_{H^sigma}`` over the lattice."""
    return float(np.max(sobolev_norms_in_time(u, sigma)))


# -- Strichartz and directional ------------------------------------------------------------


def _space_norms(vals: np.ndarray, q: float, grid: Grid) -> np.ndarray:
    flat = np.abs(vals).reshape(vals.shape[0], -1)
    return weighted_lp(flat, q, grid.cell_volume, axis=1)


def strichartz_norm(u: SpaceTimeField, p: float, q: float, I=None) -> float:
    """``(int_I ||u(t)||_{L^q}^p dt)^(1/p)``."""
    if p < 1 or q < 1:
        raise ValueError("exponents must be >= 1")
    vals, times = _window(u, I)
    inner = _space_norms(vals, q, u.grid)
    return float(weighted_lp(inner, p, _time_weights(times), axis=0))


@dataclass(frozen=True)
class DirectionalSpec:
    """``L^{(a,b,c)}_{e_l}``: ``L^a`` in ``x_l``, ``L^b`` in ``t``, ``L^c`` in the rest."""

    l: int
    a: float
    b: float
    c: float

    def __post_init__(self):
        if min(self.a, self.b, self.c) < 1:
            raise ValueError("directional exponents must be >= 1")
        if self.l < 1:
            raise ValueError("direction index is 1-based")


def _directional(vals: np.ndarray, times: np.ndarray, spec: DirectionalSpec, grid: Grid) -> float:
    d = grid.d
    if spec.l > d:
        raise ValueError(f"direction {spec.l} exceeds d={d}")
    a = np.abs(vals)
    # bring x_l next to the time axis: shape (n_t, n_l, rest...)
    a = np.moveaxis(a, spec.l, 1)
    a = a.reshape(a.shape[0], a.shape[1], -1)
    if d > 1:
        inner = weighted_lp(a, spec.c, grid.dx ** (d - 1), axis=2)
    else:
        inner = a[:, :, 0]
    w = _time_weights(times)[:, None]
    middle = weighted_lp(inner, spec.b, w, axis=0)
    return float(weighted_lp(middle, spec.a, grid.dx, axis=0))


def directional_norm(u: SpaceTimeField, spec: DirectionalSpec, I=None) -> float:
    vals, times = _window(u, I)
    return _directional(vals, times, spec, u.grid)


# -- X / Y families ------------------------------------------------------------------------


@dataclass(frozen=True)
class XYConfig:
    """Exponent bookkeeping for the composite norms.

    ``eps0`` is the small exponent parameter; ``n_max`` the top dyadic
    scale (defaults to the largest one resolved on the grid).
    """

    eps0: float = 2.0**-4
    n_max: int | None = None

    def __post_init__(self):
        if not 0 < self.eps0 <= 2.0**-4 + 1e-15:
            # 2^-7 is the nominal ceiling; values up to 2^-4 are allowed so
            # quadrature of L^{2/eps0} stays meaningful on desk grids
            raise ValueError("eps0 must lie in (0, 2^-4]")

    def shells(self, grid: Grid) -> list[int]:
        top = self.n_max
        if top is None:
            top = 1
            while 2 * top <= grid.xi_max + 1e-12:
                top *= 2
        return dyadic_range(top)

    def components(self, d: int) -> list[tuple]:
        """``(name, l, spec_or_pq, cone, X-weight power, Y-weight power)`` rows."""
        if d < 3:
            raise ValueError("X/Y norms need d >= 3 (c0 and the endpoint exponent)")
        e = self.eps0
        big, near2 = 2 / e, 2 / (1 - e)
        c0 = c0_exponent(d)
        rows = [
            ("strichartz_max", None, (big, near2), False, 0.0, 0.0),
            ("strichartz_end", None, (near2, 2 * d / (d - 2) / (1 - e)), False, 0.0, 0.0),
        ]
        for l in range(1, d + 1):
            rows += [
                (f"dirmax_inf[{l}]", l, DirectionalSpec(l, near2, big, big), False, -(d - 1) / 2, -0.5),
                (f"dirmax_c0[{l}]", l, DirectionalSpec(l, near2, big, c0 / (1 - e)), False, -0.5, -0.5),
                (f"smooth_2[{l}]", l, DirectionalSpec(l, big, near2, near2), True, 0.5, 0.5),
                (f"smooth_inf[{l}]", l, DirectionalSpec(l, big, near2, big), True, -(d - 2) / 2, 0.5),
            ]
        return rows


def c0_exponent(d: int) -> float:
    if d < 3:
        raise ValueError("c0 needs d >= 3")
    return 2 * (d - 1) / (d - 2)


@dataclass
class NormBreakdown:
    """Scalar total with per-component and per-shell detail."""

    total: float
    sigma: float = 0.0
    components: dict[str, float] = field(default_factory=dict)
    shells: dict[int, float] = field(default_factory=dict)

    def recompute_total(self) -> float:
        if not self.shells:
            return float(sum(self.components.values()))
        acc = 0.0
        for N in self.shells:
            shell = sum(v for k, v in self.components.items() if k.startswith(f"N={N}:"))
            acc += N ** (2 * self.sigma) * shell**2
        return float(np.sqrt(acc))

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "sigma": self.sigma,
            "components": dict(self.components),
            "shells": {str(k): v for k, v in self.shells.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def xn_components(v: SpaceTimeField, N: int, family: str, cfg: XYConfig, I=None) -> dict[str, float]:
    """Weighted summands of ``||v||_{X_N}`` or ``||v||_{Y_N}``."""
    if family not in ("X", "Y"):
        raise ValueError("family must be 'X' or 'Y'")
    g = v.grid
    rows = cfg.components(g.d)
    vals, times = _window(v, I)
    cones = {}
    out = {}
    for name, l, spec, cone, px, py in rows:
        power = px if family == "X" else py
        if l is None:
            p, q = spec
            inner = _space_norms(vals, q, g)
            val = float(weighted_lp(inner, p, _time_weights(times), axis=0))
        else:
            src = vals
            if cone:
                if l not in cones:
                    hat = spectral(vals, g) * cone_multiplier(g, l)
                    cones[l] = np.fft.ifftn(hat, axes=g.axes)
                src = cones[l]
            val = _directional(src, times, spec, g)
        out[name] = float(N**power * val)
    return out


def xn_norm(v: SpaceTimeField, N: int, family: str = "X", cfg: XYConfig | None = None, I=None) -> float:
    cfg = cfg or XYConfig()
    return float(sum(xn_components(v, N, family, cfg, I).values()))


def xy_norm(u: SpaceTimeField, family: str, sigma: float, cfg: XYConfig | None = None, I=None) -> NormBreakdown:
    """``(sum_N N^{2 sigma} ||P_N u||_{X_N or Y_N}^2)^{1/2}`` with full breakdown."""
    cfg = cfg or XYConfig()
    g = u.grid
    if g.d < 3:
        raise ValueError("X/Y norms need d >= 3")
    comps: dict[str, float] = {}
    shells: dict[int, float] = {}
    for N in cfg.shells(g):
        pn = lp_project(u, N)
        c = xn_components(pn, N, family, cfg, I)
        for k, val in c.items():
            comps[f"N={N}:{k}"] = val
        shells[N] = float(sum(c.values()))
    total = float(np.sqrt(sum(N ** (2 * sigma) * s**2 for N, s in shells.items())))
    return NormBreakdown(total=total, sigma=sigma, components=comps, shells=shells)


# -- dual norm lower bound ---------------------------------------------------------------


def pairing(a: SpaceTimeField, b: SpaceTimeField, I=None) -> complex:
    """``int_I int conj(a) b dx dt`` (trapezoid in time)."""
    va, times = _window(a, I)
    vb, _ = _window(b, I)
    w = _time_weights(times)
    per_t = np.sum((np.conj(va) * vb).reshape(len(times), -1), axis=1) * a.grid.cell_volume
    return complex(np.sum(w * per_t))


def random_probe(grid: Grid, times: np.ndarray, N: int, rng: np.random.Generator) -> SpaceTimeField:
    """Smooth random field: banded Gaussian coefficients times a smooth time profile."""
    mask = lp_mod_support(grid, N)
    shape = (3,) + grid.shape
    coef = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * mask
    tau = (times - times[0]) / max(times[-1] - times[0], 1e-300)
    basis = np.stack([np.ones_like(tau), np.cos(np.pi * tau), np.sin(np.pi * tau)])
    hat = np.tensordot(basis.T, coef, axes=(1, 0))
    vals = np.fft.ifftn(hat, axes=grid.axes)
    return SpaceTimeField(grid, vals, times)


def lp_mod_support(grid: Grid, N: int) -> np.ndarray:
    return (lp_multiplier(grid, N) > 0).astype(float)


def dual_norm_estimate(
    h: SpaceTimeField,
    N: int,
    cfg: XYConfig | None = None,
    I=None,
    n_probes: int = 8,
    seed: int = 0,
    extra_probes=(),
    return_trace: bool = False,
):
    """Sampled lower bound of ``||h||_{X*_N}``.

    Probe ``j`` depends only on ``(seed, j)``, so the running maximum is
    nondecreasing in ``n_probes``.  Pairing is sesquilinear; the X_N unit
    ball is invariant under conjugation, so the supremum is unchanged.
    """
    if n_probes < 1:
        raise ValueError("n_probes must be >= 1")
    cfg = cfg or XYConfig()
    vals, times = _window(h, I)
    hw = SpaceTimeField(h.grid, vals, times)
    trace = []
    best = 0.0
    probes = [("extra", p) for p in extra_probes] + [("rand", j) for j in range(n_probes)]
    for kind, item in probes:
        if kind == "extra":
            pv, _ = _window(item, I)
            probe = SpaceTimeField(h.grid, pv, times)
        else:
            probe = random_probe(h.grid, times, N, np.random.default_rng([seed, item]))
        size = xn_norm(probe, N, "X", cfg)
        if size > 0:
            best = max(best, abs(pairing(probe, hw)) / size)
        trace.append(best)
    return (best, trace) if return_trace else best


# -- spectral slope -------------------------------------------------------------------------


def shell_masses(u: Field, N_set) -> dict[int, float]:
    coef = _coef(u)
    return {
        int(N): _l2_from_coef(coef * lp_multiplier(u.grid, int(N)), u.grid) for N in N_set
    }


def spectral_slope(u, N_set, rel_floor: float = 1e-12) -> float:
    """Least-squares slope of ``log ||P_N u||_2`` against ``log N``."""
    if isinstance(u, SpaceTimeField):
        u = u[len(u) - 1]
    masses = shell_masses(u, N_set)
    top = max(masses.values()) if masses else 0.0
    usable = [(N, m) for N, m in masses.items() if top > 0 and m > rel_floor * top]
    if len(usable) < 3:
        raise InsufficientShellsError(
            f"need >= 3 shells with mass, got {len(usable)} of {len(masses)}"
        )
    x = np.log([N for N, _ in usable])
    y = np.log([m for _, m in usable])
    return float(np.polyfit(x, y, 1)[0])
