"""Monte Carlo campaigns: tail exponents, smoothing gains, estimate scaling fits.

Every experiment is a pure function of its arguments and seed.  Samples are
addressed by index through the counter-based coefficient stream, so the
worker count never changes a result.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from pathlib import Path

import numpy as np

from .grid import FREQUENCY, Field, Grid, SpaceTimeField, ifft, physical, spectral
from .multilinear import compute_z, mu, z3_final
from .norms import (
    DirectionalSpec,
    InsufficientShellsError,
    XYConfig,
    c0_exponent,
    critical_regularity,
    shell_masses,
    sobolev_multiplier,
    sobolev_norms_in_time,
    spectral_slope,
    weighted_lp,
    xn_norm,
    xy_norm,
)
from .projections import bump, cone_multiplier, lp_cutoff, lp_multiplier
from .propagator import phase, propagate
from .randomization import randomize, sample_sobolev_norms
from .stats import TailFit, fit_tail

__all__ = [
    "DatumSpec",
    "make_datum",
    "TailFit",
    "fit_tail",
    "run_tail_experiment",
    "run_smoothing_experiment",
    "run_estimate_scaling",
    "parallel_map",
]


# -- data --------------------------------------------------------------------------


@dataclass(frozen=True)
class DatumSpec:
    """Initial datum description.

    kinds
        ``power_law``: ``|xi|^{-S-d/2}`` on the smooth annulus between the
        unit shell and ``n_top``; shell masses scale like ``N^{-S}``.
        ``lattice_bump``: ``|ell|^{-S}`` times the indicator of the ball of
        ``radius`` around the lattice point ``ell``.
        ``lattice_comb``: smooth bumps of ``radius`` centred on every lattice
        point with ``|k|_inf <= extent``.
        ``custom``: physical values loaded from an ``.npy`` file.
    """

    kind: str
    S: float = 0.0
    ell: tuple = ()
    radius: float = 0.5
    extent: int = 1
    n_top: int = 4
    amplitude: float | None = None
    path: str | None = None

    def __post_init__(self):
        if self.kind not in ("power_law", "lattice_bump", "lattice_comb", "custom"):
            raise ValueError(f"unknown datum kind {self.kind!r}")
        if self.kind == "custom" and not self.path:
            raise ValueError("custom datum needs a path")
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @classmethod
    def parse(cls, text: str, d: int | None = None) -> "DatumSpec":
        """``power_law:0.3``, ``lattice_bump:0.2:1,0,0``, ``lattice_comb:0.0625:2`` or ``custom:path``."""
        kind, _, rest = text.partition(":")
        parts = rest.split(":") if rest else []
        if kind == "power_law":
            return cls(kind, S=float(parts[0]) if parts else 0.0)
        if kind == "lattice_bump":
            S = float(parts[0]) if parts else 0.0
            ell = tuple(int(c) for c in parts[1].split(",")) if len(parts) > 1 else (0,) * (d or 1)
            radius = float(parts[2]) if len(parts) > 2 else 0.5
            return cls(kind, S=S, ell=ell, radius=radius)
        if kind == "lattice_comb":
            radius = float(parts[0]) if parts else 1 / 16
            extent = int(parts[1]) if len(parts) > 1 else 1
            return cls(kind, radius=radius, extent=extent)
        if kind == "custom":
            return cls(kind, path=rest)
        raise ValueError(f"unknown datum kind {kind!r}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ell"] = list(self.ell)
        return out


def _coef_datum(grid: Grid, coef: np.ndarray) -> Field:
    return ifft(Field(grid, coef, FREQUENCY))


def make_datum(spec: DatumSpec, grid: Grid, check: bool = True) -> Field:
    r = grid.xi_norm
    if spec.kind == "power_law":
        if spec.n_top > grid.xi_max:
            raise ValueError(f"n_top={spec.n_top} exceeds xi_max={grid.xi_max}")
        safe = np.where(r > 0, r, 1.0)
        coef = np.where(r > 0, safe ** (-spec.S - grid.d / 2), 0.0)
        coef = coef * (lp_cutoff(r / spec.n_top) - lp_cutoff(2 * r))
        f = _coef_datum(grid, coef)
        if check:
            _check_power_law(f, spec)
    elif spec.kind == "lattice_bump":
        ell = np.asarray(spec.ell if spec.ell else (0,) * grid.d, dtype=float)
        if len(ell) != grid.d:
            raise ValueError("lattice point has the wrong dimension")
        dist2 = sum((c - e) ** 2 for c, e in zip(grid.xi, ell))
        height = np.linalg.norm(ell) ** (-spec.S) if np.any(ell) else 1.0
        coef = np.where(dist2 < spec.radius**2, height, 0.0)
        f = _coef_datum(grid, coef)
    elif spec.kind == "lattice_comb":
        coef = np.zeros(grid.shape)
        rng = range(-spec.extent, spec.extent + 1)
        for k in np.stack(np.meshgrid(*[rng] * grid.d, indexing="ij"), -1).reshape(-1, grid.d):
            dist = np.sqrt(sum((c - e) ** 2 for c, e in zip(grid.xi, k)))
            coef = coef + bump(dist / spec.radius)
        f = _coef_datum(grid, coef)
    else:
        vals = np.load(spec.path)
        f = Field(grid, vals)
    if spec.amplitude is not None:
        norm = np.sqrt(np.sum(np.abs(f.values) ** 2) * grid.cell_volume)
        f = f * (spec.amplitude / norm) if norm > 0 else f
    return f


def _check_power_law(f: Field, spec: DatumSpec, tol: float = 0.05) -> None:
    shells = [2**j for j in range(spec.n_top.bit_length())]
    masses = shell_masses(f, shells)
    scaled = np.array([masses[N] * N**spec.S for N in shells])
    dev = np.abs(scaled / scaled.mean() - 1).max()
    if dev > tol:
        raise ValueError(f"power-law shell masses deviate by {dev:.3f} from N^-S; refine the grid")


# -- parallel helper ------------------------------------------------------------------------


def parallel_map(func, items, workers: int = 1) -> list:
    """Ordered map; ``workers > 1`` uses a process pool."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    chunks = [items[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(partial(_run_chunk, func), chunks))
    out = [None] * len(items)
    for i, part in enumerate(parts):
        out[i::workers] = part
    return out


def _run_chunk(func, chunk):
    return [func(it) for it in chunk]


# -- tail experiment ---------------------------------------------------------------------------


@dataclass
class TailResult:
    k: int
    sigma: float
    norm: str
    method: str
    n_samples: int
    seed: int
    values: list
    fit: TailFit
    predicted: float
    y_values: list | None = None
    y_fit: TailFit | None = None

    def to_dict(self) -> dict:
        out = {
            "k": self.k,
            "sigma": self.sigma,
            "norm": self.norm,
            "method": self.method,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "predicted_theta": self.predicted,
            "fit": self.fit.to_dict(),
            "values": self.values,
        }
        if self.y_fit is not None:
            out["y_fit"] = self.y_fit.to_dict()
            out["y_values"] = self.y_values
        return out


def _tail_sample(sample: int, f: Field, seed: int, k: int, sigma: float, sign: int, with_y: bool):
    fr = randomize(f, seed, sample)
    data = compute_z(fr, k, sign)
    zk = data.zk(k)
    c0 = float(np.max(sobolev_norms_in_time(zk, sigma)))
    y = xy_norm(zk, "Y", sigma).total if with_y else None
    return c0, y


def run_tail_experiment(
    spec: DatumSpec,
    k: int,
    grid: Grid,
    n_samples: int,
    seed: int = 0,
    norm: str = "sobolev",
    sign: int = 1,
    workers: int = 1,
    sigma: float | None = None,
    allow_small: bool = False,
) -> TailResult:
    """Fit the tail exponent of ``sup_t ||z_k(t)||_{H^sigma}`` over random data.

    ``sigma`` defaults to ``mu(k, S)``.  ``norm='both'`` also evaluates the
    full Y engine on every sample and fits it separately.
    """
    if k < 1 or k % 2 == 0:
        raise ValueError("k must be odd and positive")
    if n_samples < 500 and not allow_small:
        raise ValueError("tail experiments need n_samples >= 500")
    if norm not in ("sobolev", "both"):
        raise ValueError("norm must be 'sobolev' or 'both'")
    if sigma is None:
        sigma = mu(k, spec.S) if spec.S > 0 else 0.0
    f = make_datum(spec, grid)
    with_y = norm == "both"
    if k == 1 and not with_y:
        # free evolution preserves H^sigma, so sup_t equals the t = 0 value
        values = sample_sobolev_norms(f, sigma, seed, range(n_samples))
        method = "gram"
        yv = None
    else:
        func = partial(_tail_sample, f=f, seed=seed, k=k, sigma=sigma, sign=sign, with_y=with_y)
        res = parallel_map(func, range(n_samples), workers)
        values = np.array([r[0] for r in res])
        yv = [r[1] for r in res] if with_y else None
        method = "evolve"
    return TailResult(
        k=k,
        sigma=sigma,
        norm="c0_sobolev",
        method=method,
        n_samples=n_samples,
        seed=seed,
        values=[float(v) for v in values],
        fit=fit_tail(values),
        predicted=2.0 / k,
        y_values=yv,
        y_fit=fit_tail(yv) if with_y else None,
    )


# -- smoothing experiment ----------------------------------------------------------------------


@dataclass
class SmoothingResult:
    S: float
    shells: list
    slopes_z1: list
    slopes_z3: list
    gain: float
    predicted: float
    seed: int
    T: float

    def to_dict(self) -> dict:
        return asdict(self)


def _smoothing_sample(sample: int, f: Field, seed: int, sign: int, shells) -> tuple:
    fr = randomize(f, seed, sample)
    T = fr.grid.T
    z1 = propagate(fr, T)
    z3 = z3_final(fr, sign)
    return spectral_slope(z1, shells), spectral_slope(z3, shells)


def run_smoothing_experiment(
    spec: DatumSpec,
    grid: Grid,
    n_samples: int,
    seed: int = 0,
    shells=(1, 2, 4),
    sign: int = 1,
    workers: int = 1,
) -> SmoothingResult:
    """Ensemble spectral-slope gain of ``z_3`` over ``z_1`` at the final time."""
    if not 3 * spec.S < 2 * spec.S + 0.5:
        raise ValueError("smoothing experiment needs S < 1/2 (the kS regime)")
    shells = list(shells)
    top = max(shells)
    if top > grid.dealias * grid.xi_max + 1e-12:
        raise ValueError(
            f"shell N={top} is cut by the dealiasing filter at {grid.dealias * grid.xi_max:.3g}"
        )
    f = make_datum(spec, grid)
    spectral_slope(f, shells)  # raises for data on a single shell
    func = partial(_smoothing_sample, f=f, seed=seed, sign=sign, shells=tuple(shells))
    res = parallel_map(func, range(n_samples), workers)
    s1 = [r[0] for r in res]
    s3 = [r[1] for r in res]
    return SmoothingResult(
        S=spec.S,
        shells=shells,
        slopes_z1=s1,
        slopes_z3=s3,
        gain=float(np.mean(s1) - np.mean(s3)),
        predicted=float(mu(3, spec.S) - spec.S) if spec.S > 0 else 0.0,
        seed=seed,
        T=grid.T,
    )


# -- estimate scaling ----------------------------------------------------------------------


def predicted_exponent(lemma: str, d: int, c: float) -> float:
    if lemma == "dir_maximal":
        return 0.5 + (d - 2) / 2 - (d - 1) / c
    if lemma == "dir_smoothing":
        return -0.5 + (d - 1) / 2 - (d - 1) / c
    if lemma == "bilinear":
        return 0.0
    raise ValueError(f"unknown lemma {lemma!r}")


def concentrated_datum(grid: Grid, N: int, rng: np.random.Generator, n_points: int = 2) -> Field:
    """``P_N`` of a few point masses at random positions with random complex weights."""
    coef = np.zeros(grid.shape, dtype=np.complex128)
    for _ in range(n_points):
        x0 = rng.uniform(-grid.L / 2, grid.L / 2, grid.d)
        w = rng.standard_normal() + 1j * rng.standard_normal()
        ph = np.exp(-2j * np.pi * sum(c * x for c, x in zip(grid.xi, x0)))
        coef = coef + w * ph
    return ifft(Field(grid, coef * lp_multiplier(grid, N), FREQUENCY))


def _streamed_directional(f: Field, l: int, spec: DirectionalSpec, cone: bool) -> float:
    """Directional norm of ``e^{it Delta} f`` on the grid lattice, one slice at a time."""
    g = f.grid
    hat = spectral(f.physical_values(), g)
    if cone:
        hat = hat * cone_multiplier(g, l)
    times = g.times
    w = np.zeros(len(times))
    w[:-1] += np.diff(times) / 2
    w[1:] += np.diff(times) / 2
    acc = None
    b = spec.b
    for j, t in enumerate(times):
        u = np.abs(physical(hat * phase(g, t), g))
        a = np.moveaxis(u, l - 1, 0).reshape(g.n, -1)
        inner = weighted_lp(a, spec.c, g.dx ** (g.d - 1), axis=1) if g.d > 1 else a[:, 0]
        if np.isinf(b):
            acc = inner if acc is None else np.maximum(acc, inner)
        else:
            term = w[j] * inner**b
            acc = term if acc is None else acc + term
    middle = acc if np.isinf(b) else acc ** (1.0 / b)
    return float(weighted_lp(middle, spec.a, g.dx, axis=0))


@dataclass
class ScalingResult:
    lemma: str
    d: int
    c: float | None
    shells: list
    ratios: dict
    mean_ratio: dict
    exponent: float | None
    predicted: float | None
    within: bool | None
    max_ratio: float | None = None
    constant: float | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ratios"] = {str(k): v for k, v in self.ratios.items()}
        out["mean_ratio"] = {str(k): v for k, v in self.mean_ratio.items()}
        return out


def _fit_exponent(shells, means) -> float:
    return float(np.polyfit(np.log(shells), np.log(means), 1)[0])


def _scaling_sample(sample: int, grid: Grid, lemma: str, shells, c: float, seed: int, l: int):
    rng = np.random.default_rng([seed, sample])
    out = {}
    for N in shells:
        f = concentrated_datum(grid, N, rng)
        l2 = float(np.sqrt(np.sum(np.abs(f.values) ** 2) * grid.cell_volume))
        if lemma == "dir_maximal":
            val = _streamed_directional(f, l, DirectionalSpec(l, 2, np.inf, c), cone=False)
        else:
            val = _streamed_directional(f, l, DirectionalSpec(l, np.inf, 2, c), cone=True)
        out[N] = val / l2
    return out


def _bilinear_sample(sample: int, grid: Grid, pairs, seed: int, cfg: XYConfig):
    from .propagator import free_evolution

    rng = np.random.default_rng([seed, sample])
    s_c = critical_regularity(grid.d)
    cache = {}
    for Np, Nm in pairs:
        for N in (Np, Nm):
            if N not in cache:
                noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
                coef = spectral(noise, grid) * lp_multiplier(grid, N)
                h = free_evolution(Field(grid, physical(coef, grid)))
                cache[N] = (h, xn_norm(h, N, "X", cfg))
    out = {}
    for Np, Nm in pairs:
        hp, xp = cache[Np]
        hm, xm = cache[Nm]
        prod = SpaceTimeField(grid, hp.values * hm.values, hp.times)
        w = np.zeros(len(grid.times))
        w[:-1] += grid.dt / 2
        w[1:] += grid.dt / 2
        l2 = float(np.sqrt(np.sum(w * np.sum(np.abs(prod.values) ** 2, axis=grid.axes)) * grid.cell_volume))
        denom = Nm**s_c * (Np / Nm) ** -0.5 * xp * xm
        out[f"{Np},{Nm}"] = l2 / denom
    return out


def run_estimate_scaling(
    lemma: str,
    grid: Grid,
    shells=(1, 2, 4),
    n_samples: int = 30,
    seed: int = 0,
    c: float | None = None,
    l: int = 1,
    tol: float = 0.35,
    constant: float = 20.0,
    workers: int = 1,
    cfg: XYConfig | None = None,
) -> ScalingResult:
    """Measured N-exponents of the directional estimates, or bilinear ratios."""
    d = grid.d
    shells = list(shells)
    if lemma in ("dir_maximal", "dir_smoothing"):
        if c is None:
            c = 2 * c0_exponent(d) if lemma == "dir_maximal" else 2.0
        func = partial(_scaling_sample, grid=grid, lemma=lemma, shells=tuple(shells), c=c, seed=seed, l=l)
        res = parallel_map(func, range(n_samples), workers)
        ratios = {N: [r[N] for r in res] for N in shells}
        means = {N: float(np.exp(np.mean(np.log(ratios[N])))) for N in shells}
        expo = _fit_exponent(shells, [means[N] for N in shells])
        pred = predicted_exponent(lemma, d, c)
        return ScalingResult(
            lemma=lemma,
            d=d,
            c=float(c),
            shells=shells,
            ratios=ratios,
            mean_ratio=means,
            exponent=expo,
            predicted=pred,
            within=bool(abs(expo - pred) <= tol),
        )
    if lemma == "bilinear":
        cfg = cfg or XYConfig()
        pairs = [(a, b) for a in shells for b in shells if a >= b]
        func = partial(_bilinear_sample, grid=grid, pairs=tuple(pairs), seed=seed, cfg=cfg)
        res = parallel_map(func, range(n_samples), workers)
        keys = [f"{a},{b}" for a, b in pairs]
        ratios = {k: [r[k] for r in res] for k in keys}
        means = {k: float(np.mean(v)) for k, v in ratios.items()}
        top = float(max(max(v) for v in ratios.values()))
        return ScalingResult(
            lemma=lemma,
            d=d,
            c=None,
            shells=shells,
            ratios=ratios,
            mean_ratio=means,
            exponent=None,
            predicted=None,
            within=bool(top <= constant),
            max_ratio=top,
            constant=constant,
        )
    raise ValueError(f"unknown lemma {lemma!r}")


# -- persistence helpers --------------------------------------------------------------------


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    return path
