"""Exact-identity suite: identities that hold to rounding on any grid."""
from __future__ import annotations

import numpy as np

from .grid import Field, Grid, fft, ifft, physical, quadrature_norm, spectral
from .multilinear import compute_z, enumerate_trees, fourier_support_width, tree_operator
from .projections import (
    LP_PLATEAU,
    UnitBump,
    cone_multiplier,
    dyadic_range,
    lp_multiplier,
    lp_project,
    lp_project_mod,
)
from .propagator import propagate

TOL_PROJ = 1e-10
TOL_PROP = 1e-12


def random_field(grid: Grid, rng: np.random.Generator, mask=None) -> Field:
    """Complex Gaussian Fourier coefficients, optionally restricted to ``mask``."""
    hat = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    if mask is not None:
        hat = hat * mask
    return Field(grid, physical(hat, grid))


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    scale = np.abs(b).max()
    return float(np.abs(a - b).max() / scale) if scale > 0 else float(np.abs(a).max())


def _result(errors, tol: float, **extra) -> dict:
    worst = float(max(errors)) if len(errors) else 0.0
    return {"ok": bool(worst <= tol), "max_error": worst, "tol": tol, "trials": len(errors), **extra}


def check_fft_unitarity(grid, rng, trials):
    errs = []
    for _ in range(trials):
        f = random_field(grid, rng)
        a, b = quadrature_norm(f, 2), quadrature_norm(ifft(fft(f)), 2)
        errs.append(abs(a - b) / a)
    return _result(errs, TOL_PROP)


def check_unit_partition(grid, rng, trials):
    ub = UnitBump(grid)
    total = ub.partition_sum()
    cov = ub.covered()
    errs = []
    for _ in range(trials):
        f = random_field(grid, rng, cov)
        hat = spectral(f.values, grid)
        errs.append(_rel(physical(hat * total, grid), f.values))
    return _result(errs, TOL_PROJ, K=ub.K)


def check_lp_partition(grid, rng, trials):
    n_top = 2 ** int(np.floor(np.log2(grid.xi_max + 1e-12)))
    shells = dyadic_range(n_top)
    total = sum(lp_multiplier(grid, N) for N in shells)
    band = grid.xi_norm <= n_top * LP_PLATEAU
    errs = []
    for _ in range(trials):
        f = random_field(grid, rng, band)
        acc = sum(lp_project(f, N).values for N in shells)
        errs.append(_rel(acc, f.values))
    errs.append(float(np.abs(total[band] - 1).max()))
    return _result(errs, TOL_PROJ, shells=shells)


def check_cone_partition(grid, rng, trials):
    total = sum(cone_multiplier(grid, l) for l in range(1, grid.d + 1))
    nz = grid.xi_norm > 0
    bad = int(np.count_nonzero(total[nz] != 1.0)) + int(np.count_nonzero(total[~nz] != 0.0))
    errs = []
    for _ in range(trials):
        f = random_field(grid, rng)
        hat = spectral(f.values, grid)
        hat[(0,) * grid.d] = 0.0
        acc = physical(spectral(f.values, grid) * total, grid)
        errs.append(_rel(acc, physical(hat, grid)))
    out = _result(errs, TOL_PROJ, bad_frequencies=bad)
    out["ok"] = out["ok"] and bad == 0
    return out


def check_lp_mod(grid, rng, trials):
    n_top = 2 ** int(np.floor(np.log2(grid.xi_max + 1e-12)))
    errs = []
    for _ in range(trials):
        f = random_field(grid, rng)
        for N in dyadic_range(n_top):
            p = lp_project(f, N)
            errs.append(_rel(lp_project_mod(p, N).values, p.values))
    return _result(errs, TOL_PROJ)


def check_propagator(grid, rng, trials):
    unit, group = [], []
    for _ in range(trials):
        f = random_field(grid, rng)
        s, t = rng.uniform(-2, 2, size=2)
        a = quadrature_norm(f, 2)
        unit.append(abs(quadrature_norm(propagate(f, t), 2) - a) / a)
        group.append(_rel(propagate(propagate(f, s), t).values, propagate(f, s + t).values))
    return _result(unit, TOL_PROP), _result(group, TOL_PROP)


def _band(grid: Grid, width: float) -> np.ndarray:
    keep = np.ones(grid.shape, dtype=bool)
    for c in grid.xi:
        keep = keep & (np.abs(c) <= width / 2 + 1e-12)
    return keep


def _small_grid(grid: Grid) -> Grid:
    # short, coarse time lattice: the identities below do not depend on dt
    return grid.with_time(n_t=4, T=min(grid.T, 0.05))


def check_parity(grid, rng, trials, M: int = 4):
    g = _small_grid(grid)
    worst = []
    for _ in range(trials):
        f = random_field(g, rng, _band(g, 1.0)) * 0.1
        data = compute_z(f, M, sign=int(rng.choice([-1, 1])))
        worst.append(max(float(np.abs(data.zk(k).values).max()) for k in range(2, M + 1, 2)))
    return _result(worst, 0.0)


def check_support_growth(grid, rng, trials, max_size: int = 5):
    """Per-axis Fourier support of ``R_tau`` against ``|tau|`` times the datum's."""
    g = _small_grid(grid)
    # room for 5x growth inside the dealiased band, so nothing is cut
    width = 2 * g.dealias * g.xi_max / max_size * 0.9
    mask = _band(g, width)
    trees = [t for k in range(1, max_size + 1, 2) for t in enumerate_trees(k)]
    excess = []
    for _ in range(trials):
        f = random_field(g, rng, mask)
        w0 = fourier_support_width(f.values, g)
        memo: dict = {}
        for tau in trees:
            r = tree_operator(tau, [f] * tau.size, 1, None, memo)
            w = fourier_support_width(r.values, g)
            excess.append(max(float((w - tau.size * w0).max()) - 1e-9, 0.0))
    return _result(excess, 0.0, trees=len(trees))


def exact_identity_suite(grid: Grid, trials: int = 100, seed: int = 0) -> dict:
    """Run every identity with ``trials`` random inputs; ``{name: {"ok", ...}}``."""
    rng = np.random.default_rng(seed)
    out = {
        "fft_unitarity": check_fft_unitarity(grid, rng, trials),
        "unit_partition": check_unit_partition(grid, rng, trials),
        "lp_partition": check_lp_partition(grid, rng, trials),
        "cone_partition": check_cone_partition(grid, rng, trials),
        "lp_mod_identity": check_lp_mod(grid, rng, trials),
    }
    out["propagator_unitarity"], out["group_law"] = check_propagator(grid, rng, trials)
    out["parity"] = check_parity(grid, rng, trials)
    out["support_growth"] = check_support_growth(grid, rng, trials)
    return out
