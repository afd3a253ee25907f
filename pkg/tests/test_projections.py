import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field
from wiener_nls.grid import FREQUENCY, Field, Grid, SpaceTimeField, fft, ifft, spectral
from wiener_nls.projections import (
    LP_PLATEAU,
    UnitBump,
    bump,
    cone_multiplier,
    cone_project,
    dyadic_range,
    lattice,
    lp_cutoff,
    lp_multiplier,
    lp_project,
    lp_project_mod,
    unit_bump_1d,
    unit_multiplier,
    unit_project,
)


def _rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


class TestBumps:
    def test_bump_support_and_value(self):
        s = np.array([-1.0, -0.5, 0.0, 0.5, 1.0, 2.0])
        b = bump(s)
        assert b[0] == b[4] == b[5] == 0.0
        assert b[2] == pytest.approx(np.exp(-1.0))
        assert b[1] == pytest.approx(np.exp(-1 / 0.75))

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-40, 40, allow_nan=False))
    def test_unit_bump_translates_sum_to_one(self, s):
        ks = np.arange(np.floor(s) - 2, np.floor(s) + 3)
        total = unit_bump_1d(s - ks).sum()
        assert total == pytest.approx(1.0, abs=1e-14)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-3, 3, allow_nan=False))
    def test_unit_bump_even_nonnegative(self, s):
        a, b = unit_bump_1d(np.array([s])), unit_bump_1d(np.array([-s]))
        assert a[0] >= 0 and a[0] == pytest.approx(b[0], abs=1e-15)
        if abs(s) >= 1:
            assert a[0] == 0

    def test_lp_cutoff_plateau(self):
        r = np.array([0.0, LP_PLATEAU, 1.0, 1.5])
        c = lp_cutoff(r)
        assert c[0] == c[1] == 1.0 and c[2] == c[3] == 0.0
        mid = lp_cutoff(np.linspace(LP_PLATEAU, 1, 50))
        assert np.all(np.diff(mid) <= 0)

    def test_dyadic_range(self):
        assert dyadic_range(8) == [1, 2, 4, 8]
        with pytest.raises(ValueError):
            dyadic_range(6)


class TestUnitProjection:
    def test_partition_on_covered(self):
        g = Grid(2, 32, 4.0)
        ub = UnitBump(g)
        assert ub.K == 3
        cov = ub.covered()
        assert np.abs(ub.partition_sum()[cov] - 1).max() < 1e-10

    def test_supported_in_unit_cube_and_even(self):
        g = Grid(2, 32, 4.0)
        psi = unit_multiplier(g, (0, 0))
        inf_norm = np.maximum(*[np.abs(c) for c in g.xi_mesh])
        assert np.all(psi[inf_norm >= 1] == 0)
        assert np.all(psi >= 0)
        flipped = np.roll(np.flip(psi, axis=(0, 1)), 1, axis=(0, 1))
        assert np.allclose(psi, flipped, atol=1e-15)

    def test_single_bump_identity(self):
        g = Grid(1, 64, 8.0)
        # psi(. - 1) is 1 exactly at xi = 1 only; use a single mode there
        f = Field.from_function(g, lambda x: np.exp(2j * np.pi * x))
        assert _rel(unit_project(f, 1).values, f.values) < 1e-12
        assert np.abs(unit_project(f, 2).values).max() < 1e-14
        assert np.abs(unit_project(f, 0).values).max() < 1e-14

    def test_sum_of_projections(self, rng):
        g = Grid(2, 32, 4.0)
        ub = UnitBump(g, K=2)
        c = fft(random_field(g, rng)).values * ub.covered()
        f = ifft(Field(g, c, FREQUENCY))
        acc = sum(unit_project(f, k, 2).values for k in lattice(2, 2))
        assert _rel(acc, f.values) < 1e-10

    def test_extent_checks(self):
        g = Grid(1, 16, 4.0)  # xi_max = 2
        with pytest.raises(ValueError):
            unit_multiplier(g, 2, K=2)
        with pytest.raises(ValueError):
            unit_multiplier(g, 3, K=1)
        with pytest.raises(ValueError):
            unit_multiplier(g, (0, 0), K=1)

    def test_frequency_rep_and_space_time(self, rng):
        g = Grid(1, 32, 4.0, n_t=3)
        f = random_field(g, rng)
        p = unit_project(f, 1).values
        q = unit_project(fft(f), 1)
        assert q.rep == FREQUENCY and np.allclose(ifft(q).values, p)
        u = SpaceTimeField(g, np.stack([f.values] * 3))
        assert np.allclose(unit_project(u, 1).values[2], p)


class TestLittlewoodPaley:
    def test_partition(self):
        g = Grid(3, 32, 4.0)
        total = sum(lp_multiplier(g, N) for N in dyadic_range(4))
        band = g.xi_norm < 4 * LP_PLATEAU
        assert np.abs(total[band] - 1).max() < 1e-10

    def test_support(self):
        g = Grid(2, 64, 4.0)
        for N in (2, 4, 8):
            m = lp_multiplier(g, N)
            live = m > 0
            r = g.xi_norm[live]
            assert r.max() <= N + 1e-12
            assert r.min() >= LP_PLATEAU * N / 2 - 1e-12

    def test_mod_identity(self, rng):
        g = Grid(2, 64, 4.0)
        f = random_field(g, rng)
        for N in dyadic_range(8):
            p = lp_project(f, N)
            assert _rel(lp_project_mod(p, N).values, p.values) < 1e-10

    def test_unresolved_scale(self, rng):
        g = Grid(1, 16, 4.0)
        with pytest.raises(ValueError):
            lp_project(random_field(g, rng), 4)

    def test_multipliers_read_only(self):
        g = Grid(1, 16, 1.0)
        with pytest.raises(ValueError):
            lp_multiplier(g, 2)[0] = 3.0


class TestCones:
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_partition_exact(self, d):
        g = Grid(d, 16, 2.0)
        ms = [cone_multiplier(g, l) for l in range(1, d + 1)]
        total = sum(ms)
        nz = g.xi_norm > 0
        assert np.all(total[nz] == 1.0) and np.all(total[~nz] == 0.0)
        for i in range(d):
            for j in range(i + 1, d):
                assert not np.any(ms[i] * ms[j])

    def test_cone_geometry(self):
        g = Grid(3, 16, 2.0)
        m = cone_multiplier(g, 1)
        xi1 = np.abs(g.xi_mesh[0])
        live = m > 0
        assert np.all(xi1[live] / g.xi_norm[live] > 1 / (2 * np.sqrt(3)))

    def test_sum_removes_mean(self, rng):
        g = Grid(2, 16, 2.0)
        f = random_field(g, rng)
        acc = sum(cone_project(f, l).values for l in (1, 2))
        hat = spectral(f.values, g).copy()
        hat[0, 0] = 0
        assert _rel(acc, np.fft.ifftn(hat)) < 1e-12

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            cone_multiplier(Grid(2, 8, 1.0), 3)
