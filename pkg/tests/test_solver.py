import json

import numpy as np
import pytest

from wiener_nls.grid import Field, Grid, SpaceTimeField
from wiener_nls.multilinear import compute_z
from wiener_nls.norms import sobolev_norms_in_time
from wiener_nls.solver import (
    NonConvergenceError,
    SolverConfig,
    duhamel_residual,
    existence_time_heuristic,
    full_solution,
    phi,
    picard_solve,
    picard_solve_windows,
    solve,
    splitstep_reference,
)


def l2_in_time(u):
    return np.sqrt(np.sum(np.abs(u.values) ** 2, axis=u.grid.axes) * u.grid.cell_volume)


def datum(g, amp):
    return Field.from_function(g, lambda x: amp * np.exp(-(x**2)))


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(sign=2)
        with pytest.raises(ValueError):
            SolverConfig(tol_fix=0)
        with pytest.raises(ValueError):
            SolverConfig(monitor="nope")
        with pytest.raises(ValueError):
            SolverConfig(sigma=0.4).check_grid(Grid(3, 8, 1.0))
        SolverConfig(sigma=0.0).check_grid(Grid(1, 8, 1.0))


class TestPicard:
    def test_zero_datum(self):
        g = Grid(1, 64, 8.0, n_t=9, T=0.5)
        u, v, rep, _ = solve(Field.zeros(g), SolverConfig())
        assert rep.converged and rep.iterates == 1
        assert not np.any(u.values)

    def test_residual_and_oracle(self):
        g = Grid(1, 256, 32.0, n_t=65, T=1.0)
        f = datum(g, 0.1)
        cfg = SolverConfig()
        u, v, rep, data = solve(f, cfg)
        assert rep.converged and rep.residual <= cfg.tol_fix
        assert duhamel_residual(u, f, cfg) < 1e-8
        ref = splitstep_reference(f, 1, substeps=16)
        assert l2_in_time(u - ref).max() < 1e-4
        json.loads(rep.to_json())

    def test_focusing_matches_oracle(self):
        g = Grid(1, 256, 32.0, n_t=65, T=1.0)
        f = datum(g, 0.1)
        u, *_ = solve(f, SolverConfig(sign=-1))
        ref = splitstep_reference(f, -1, substeps=16)
        assert l2_in_time(u - ref).max() < 1e-4

    def test_decomposition_invariance(self):
        g = Grid(1, 256, 32.0, n_t=65, T=1.0)
        f = datum(g, 0.1)
        u1, *_ = solve(f, SolverConfig(M=1))
        u3, *_ = solve(f, SolverConfig(M=3))
        assert l2_in_time(u1 - u3).max() <= 1e-7

    def test_windows_agree_with_single_solve(self):
        g = Grid(1, 128, 16.0, n_t=33, T=0.5)
        f = datum(g, 0.3)
        cfg = SolverConfig(M=3, tol_fix=1e-12)
        data = compute_z(f, 3)
        v1, _ = picard_solve(data, cfg)
        v2, reps = picard_solve_windows(data, cfg, n_windows=2)
        assert len(reps) == 2 and all(r.converged for r in reps)
        assert np.abs(v1.values - v2.values).max() < 1e-10
        assert full_solution(data, v2).values.shape == v1.values.shape

    def test_divergence_detected(self):
        g = Grid(1, 128, 16.0, n_t=33, T=2.0)
        f = datum(g, 6.0)
        with pytest.raises(NonConvergenceError) as err:
            solve(f, SolverConfig())
        assert not err.value.report.converged

    def test_existence_heuristic(self):
        g = Grid(1, 128, 16.0, n_t=33, T=2.0)
        data = compute_z(datum(g, 2.0), 1)
        rep = existence_time_heuristic(data, SolverConfig())
        assert 0 <= rep.T <= rep.horizon and rep.probes
        small = existence_time_heuristic(compute_z(datum(g, 0.01), 1), SolverConfig())
        assert small.T == small.horizon


class TestOracle:
    def test_soliton(self):
        g = Grid(1, 1024, 32.0, n_t=1024, T=1.0)
        f = Field.from_function(g, lambda x: np.sqrt(2) / np.cosh(x))
        u = splitstep_reference(f, -1)
        exact = np.stack([np.sqrt(2) * np.exp(1j * t) / np.cosh(g.x_1d) for t in g.times])
        assert np.abs(u.values - exact).max() <= 1e-3

    def test_linear_mode(self):
        g = Grid(1, 64, 8.0, n_t=9, T=1.0)
        f = Field.from_function(g, lambda x: np.exp(-(x**2)))
        lin = splitstep_reference(f, 1, nonlinear=False)
        from wiener_nls.propagator import free_evolution

        assert np.abs(lin.values - free_evolution(f).values).max() < 1e-12

    def test_mass_conserved(self):
        g = Grid(1, 256, 32.0, n_t=33, T=1.0)
        u = splitstep_reference(datum(g, 1.0), 1)
        m = l2_in_time(u)
        assert np.ptp(m) / m[0] < 1e-12


def test_phi_is_dealiased_difference():
    g = Grid(1, 32, 4.0, n_t=3)
    r = np.random.default_rng(0)
    z = SpaceTimeField(g, r.standard_normal((3, 32)) + 1j * r.standard_normal((3, 32)))
    v = SpaceTimeField(g, r.standard_normal((3, 32)) + 0j)
    from wiener_nls.grid import cubic

    s, a = (z + v).values, z.values
    assert np.allclose(phi(z, v).values, cubic(s, s, s, g) - cubic(a, a, a, g))
    raw = np.abs(s) ** 2 * s - np.abs(a) ** 2 * a
    assert np.allclose(phi(z, v, dealias=False).values, raw)
