"""Picard iteration for the remainder ``u# = u - z_{<=M}`` and a split-step oracle."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import Field, GridMismatchError, SpaceTimeField, cubic, physical, spectral
from .multilinear import MultilinearData, compute_z, z_tail
from .norms import sobolev_norms_in_time, xy_norm
from .propagator import _lattice_index, check_sign, duhamel, phase


class NonConvergenceError(RuntimeError):
    """Picard iterates grew instead of contracting; carries the report."""

    def __init__(self, message: str, report: "FixedPointReport"):
        super().__init__(message)
        self.report = report


@dataclass
class SolverConfig:
    """Knobs of the remainder fixed-point solve.

    ``sigma`` is the monitor regularity; it must exceed the critical
    ``(d-2)/2``.  ``delta0`` marks the small-data branch and is a free
    calibration constant.
    """

    M: int = 1
    sign: int = 1
    tol_fix: float = 1e-8
    max_iters: int = 60
    sigma: float = 0.6
    monitor: str = "c0_sobolev"
    delta0: float = 1e-2
    diverge_factor: float = 10.0
    diverge_window: int = 3

    def __post_init__(self):
        check_sign(self.sign)
        if not self.tol_fix > 0:
            raise ValueError("tol_fix must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.monitor not in ("c0_sobolev", "xsigma"):
            raise ValueError(f"unknown monitor {self.monitor!r}")

    def check_grid(self, grid) -> None:
        s_c = (grid.d - 2) / 2
        if not self.sigma > s_c:
            raise ValueError(f"monitor sigma={self.sigma} must exceed s_c={s_c}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class FixedPointReport:
    iterates: int = 0
    residual: float = float("inf")
    differences: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    converged: bool = False
    window: tuple = (0.0, 0.0)
    small_data: bool = False

    def to_dict(self) -> dict:
        out = asdict(self)
        out["window"] = list(self.window)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def monitor_norm(u: SpaceTimeField, cfg: SolverConfig) -> float:
    if cfg.monitor == "xsigma":
        return xy_norm(u, "X", cfg.sigma).total
    return float(np.max(sobolev_norms_in_time(u, cfg.sigma)))


# -- maps -------------------------------------------------------------------------


def phi(z: SpaceTimeField, v: SpaceTimeField, dealias: bool = True) -> SpaceTimeField:
    """``|z + v|^2 (z + v) - |z|^2 z``, pointwise."""
    if z.grid != v.grid or z.values.shape != v.values.shape:
        raise GridMismatchError("z and v live on different grids")
    g = z.grid
    w = z.values + v.values
    if dealias:
        out = cubic(w, w, w, g) - cubic(z.values, z.values, z.values, g)
    else:
        out = np.abs(w) ** 2 * w - np.abs(z.values) ** 2 * z.values
    return SpaceTimeField(g, out, z.times)


def _window_indices(data: MultilinearData, window) -> tuple[int, int]:
    times = data.times
    if window is None:
        return 0, len(times) - 1
    j0 = _lattice_index(times, window[0])
    j1 = _lattice_index(times, window[1])
    if not j0 < j1:
        raise ValueError(f"window {window} must contain at least two lattice times")
    return j0, j1


def iterate_map(
    v: SpaceTimeField,
    data: MultilinearData,
    cfg: SolverConfig,
    head: Field | None = None,
    _cache=None,
) -> SpaceTimeField:
    """``duhamel(head, phi(z_{<=M}, v) + [z,z,z]_{>M})`` on the times of ``v``."""
    if _cache is None:
        _cache = _window_terms(data, cfg, v.times)
    zsum, tail = _cache
    h = phi(zsum, v) + tail
    return duhamel(head, h, cfg.sign)


def _window_terms(data: MultilinearData, cfg: SolverConfig, times) -> tuple:
    if data.M < cfg.M:
        raise ValueError(f"data complete through M={data.M}, solver needs {cfg.M}")
    sub = MultilinearData(f=data.f, sign=data.sign, z=data.z[: cfg.M])
    j0 = int(np.argmin(np.abs(data.times - times[0])))
    j1 = j0 + len(times) - 1
    zsum = sub.partial_sum().window(j0, j1)
    tail = z_tail(sub).window(j0, j1)
    return zsum, tail


def picard_solve(
    data: MultilinearData,
    cfg: SolverConfig,
    window=None,
    restart: Field | None = None,
):
    """Fixed point of the remainder map on ``window = (t0, t1)``.

    ``restart`` is ``u#(t0)``; without it the iteration starts from zero
    at the first lattice time.  Returns ``(u_sharp, report)``.  The solve
    stops once successive iterates differ by at most ``tol_fix`` in the
    monitor norm and returns the latest one, whose own residual is smaller
    still whenever the map contracts.
    """
    cfg.check_grid(data.grid)
    j0, j1 = _window_indices(data, window)
    times = data.times[j0 : j1 + 1]
    report = FixedPointReport(window=(float(times[0]), float(times[-1])))
    report.small_data = bool(
        float(np.max(sobolev_norms_in_time(data.z[0].window(0, 0), cfg.sigma))) <= cfg.delta0
    )
    cache = _window_terms(data, cfg, times)
    v = SpaceTimeField.zeros(data.grid, times)
    for it in range(1, cfg.max_iters + 1):
        w = iterate_map(v, data, cfg, restart, cache)
        r = monitor_norm(w - v, cfg)
        report.iterates = it
        report.differences.append(r)
        if len(report.differences) > 1 and report.differences[-2] > 0:
            report.ratios.append(r / report.differences[-2])
        if not np.isfinite(r):
            report.residual = r
            raise NonConvergenceError("iterates became non-finite", report)
        if r <= cfg.tol_fix:
            report.residual = r
            report.converged = True
            return w, report
        k = cfg.diverge_window
        if len(report.differences) > k and r > cfg.diverge_factor * report.differences[-1 - k]:
            report.residual = r
            raise NonConvergenceError(
                f"monitor grew {r / report.differences[-1 - k]:.3g}x over {k} iterates", report
            )
        v = w
    report.residual = report.differences[-1]
    return w, report


def picard_solve_windows(data: MultilinearData, cfg: SolverConfig, n_windows: int = 2):
    """Solve on consecutive lattice windows, restarting from ``u#`` at each seam."""
    n = len(data.times) - 1
    if n_windows < 1 or n % n_windows:
        raise ValueError(f"{n} time steps do not split into {n_windows} windows")
    step = n // n_windows
    pieces, reports = [], []
    restart = None
    for w in range(n_windows):
        j0, j1 = w * step, (w + 1) * step
        v, rep = picard_solve(data, cfg, (data.times[j0], data.times[j1]), restart)
        restart = v[len(v) - 1]
        pieces.append(v.values if w == 0 else v.values[1:])
        reports.append(rep)
    return SpaceTimeField(data.grid, np.concatenate(pieces), data.times), reports


def full_solution(data: MultilinearData, u_sharp: SpaceTimeField, M: int | None = None) -> SpaceTimeField:
    """``u = z_{<=M} + u#`` on the times of ``u_sharp``."""
    M = data.M if M is None else M
    j0 = int(np.argmin(np.abs(data.times - u_sharp.times[0])))
    zsum = MultilinearData(data.f, data.sign, data.z[:M]).partial_sum()
    return zsum.window(j0, j0 + len(u_sharp) - 1) + u_sharp


def solve(f: Field, cfg: SolverConfig, times=None):
    """Convenience: expansion through ``cfg.M``, Picard remainder and full solution."""
    data = compute_z(f, cfg.M, cfg.sign, times)
    v, report = picard_solve(data, cfg)
    return full_solution(data, v), v, report, data


def duhamel_residual(u: SpaceTimeField, f: Field, cfg: SolverConfig) -> float:
    """``monitor(u - duhamel(f, |u|^2 u))`` evaluated from scratch."""
    g = u.grid
    h = SpaceTimeField(g, cubic(u.values, u.values, u.values, g), u.times)
    return monitor_norm(u - duhamel(f, h, cfg.sign), cfg)


# -- oracle --------------------------------------------------------------------------


def splitstep_reference(
    f: Field,
    sign: int = 1,
    grid=None,
    nonlinear: bool = True,
    substeps: int = 1,
) -> SpaceTimeField:
    """Strang splitting: half nonlinear phase, full linear step, half nonlinear phase."""
    sign = check_sign(sign)
    g = f.grid if grid is None else grid
    if g.shape != f.grid.shape:
        raise GridMismatchError("datum and grid disagree")
    times = g.times
    dt = g.dt / substeps
    lin = phase(g, dt)
    u = f.physical_values().copy()
    out = np.empty((len(times),) + g.shape, dtype=np.complex128)
    out[0] = u
    for j in range(1, len(times)):
        for _ in range(substeps):
            if nonlinear:
                u = u * np.exp(-1j * sign * np.abs(u) ** 2 * (dt / 2))
            u = physical(spectral(u, g) * lin, g)
            if nonlinear:
                u = u * np.exp(-1j * sign * np.abs(u) ** 2 * (dt / 2))
        out[j] = u
    return SpaceTimeField(g, out, times)


# -- existence window ------------------------------------------------------------------


@dataclass
class ExistenceReport:
    T: float
    horizon: float
    probes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def existence_time_heuristic(data: MultilinearData, cfg: SolverConfig) -> ExistenceReport:
    """Largest lattice time ``T'`` with a converging Picard solve on ``[0, T']``."""
    times = data.times
    n = len(times) - 1

    def converges(j: int) -> bool:
        try:
            _, rep = picard_solve(data, cfg, (times[0], times[j]))
        except NonConvergenceError as err:
            rep = err.report
        probes.append(
            {"T": float(times[j] - times[0]), "converged": rep.converged, "ratios": rep.ratios}
        )
        return rep.converged

    probes: list = []
    if converges(n):
        return ExistenceReport(T=float(times[n] - times[0]), horizon=float(times[n] - times[0]), probes=probes)
    lo, hi = 0, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if converges(mid):
            lo = mid
        else:
            hi = mid
    return ExistenceReport(T=float(times[lo] - times[0]), horizon=float(times[n] - times[0]), probes=probes)
