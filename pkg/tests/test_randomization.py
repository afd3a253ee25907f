import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field
from wiener_nls.grid import FREQUENCY, Field, Grid, fft, ifft, spectral
from wiener_nls.projections import UnitBump, lattice, unit_project
from wiener_nls.randomization import (
    CoefficientStream,
    SupportError,
    gram_matrix,
    moment_check,
    randomize,
    sample_sobolev_norms,
)
from wiener_nls.norms import sobolev_norm


def banded(grid, rng, K):
    c = fft(random_field(grid, rng)).values
    keep = np.ones(grid.shape, bool)
    for x in grid.xi:
        keep &= np.abs(x) <= K
    return ifft(Field(grid, c * keep, FREQUENCY))


class TestStream:
    def test_reproducible_and_order_free(self):
        s = CoefficientStream(7)
        pts = [(0, 1), (2, -3), (-1, -1)]
        a = s.coefficients(4, pts)
        b = s.coefficients(4, pts[::-1])[::-1]
        assert np.array_equal(a, b)
        assert s.coefficient(4, (2, -3)) == a[1]
        assert s.coefficient(5, (2, -3)) != a[1]
        assert CoefficientStream(8).coefficient(4, (2, -3)) != a[1]

    def test_second_moment(self):
        s = CoefficientStream(0)
        g = s.coefficients(0, [(k,) for k in range(-5000, 5000)])
        m2 = np.mean(np.abs(g) ** 2)
        assert 0.95 <= m2 <= 1.05
        assert abs(np.mean(g.real**2) - np.mean(g.imag**2)) < 0.05
        assert abs(np.mean(g)) < 0.05


class TestRandomize:
    def test_unit_coefficients_give_identity(self, rng):
        g = Grid(2, 32, 4.0)
        f = banded(g, rng, 2)
        out = randomize(f, 0, 0, K=2, coefficients=1)
        assert np.abs(out.values - f.values).max() / np.abs(f.values).max() < 1e-10

    def test_definition(self, rng):
        g = Grid(1, 64, 8.0)
        K = 2
        f = banded(g, rng, K)
        out = randomize(f, 3, 1, K=K)
        s = CoefficientStream(3)
        acc = sum(s.coefficient(1, k) * unit_project(f, k, K).values for k in lattice(1, K))
        assert np.abs(out.values - acc).max() / np.abs(acc).max() < 1e-12

    def test_flat_region_single_coefficient(self):
        g = Grid(1, 64, 8.0)
        f = Field.from_function(g, lambda x: np.exp(-2j * np.pi * x))
        out = randomize(f, 11, 2, K=2)
        gk = CoefficientStream(11).coefficient(2, (-1,))
        assert np.allclose(out.values, gk * f.values, atol=1e-12)

    def test_reproducible_and_distinct(self, rng):
        g = Grid(2, 16, 2.0)
        f = banded(g, rng, 1)
        a, b = randomize(f, 1, 0), randomize(f, 1, 0)
        assert np.array_equal(a.values, b.values)
        assert not np.allclose(a.values, randomize(f, 1, 1).values)

    def test_support_not_enlarged(self, rng):
        g = Grid(1, 64, 4.0)
        c = np.zeros(64, complex)
        c[(np.abs(g.freq_1d - 0.5) < 0.3)] = 1.0
        f = ifft(Field(g, c, FREQUENCY))
        hat = spectral(randomize(f, 0, 0).values, g)
        live = g.freq_1d[np.abs(hat) > 1e-12 * np.abs(hat).max()]
        assert live.min() >= 0.2 - 1e-12 and live.max() <= 0.8 + 1e-12

    def test_rejects_out_of_extent(self, rng):
        g = Grid(1, 32, 2.0)
        with pytest.raises(SupportError):
            randomize(random_field(g, rng), 0, 0, K=2)

    def test_frequency_rep_preserved(self, rng):
        g = Grid(1, 32, 4.0)
        f = banded(g, rng, 1)
        out = randomize(fft(f), 0, 0, K=1)
        assert out.rep == FREQUENCY
        assert np.allclose(out.physical_values(), randomize(f, 0, 0, K=1).values)


class TestMoments:
    def test_gram_path_matches_direct(self, rng):
        g = Grid(1, 64, 8.0)
        f = banded(g, rng, 2)
        fast = sample_sobolev_norms(f, 0.5, 4, range(5), K=2)
        slow = [sobolev_norm(randomize(f, 4, s, K=2), 0.5) for s in range(5)]
        assert np.allclose(fast, slow, rtol=1e-10)

    def test_gram_trace_is_piece_energy(self, rng):
        g = Grid(1, 64, 8.0)
        f = banded(g, rng, 2)
        _, G = gram_matrix(f, 2, 0.0)
        pieces = sum(sobolev_norm(unit_project(f, k, 2), 0.0) ** 2 for k in lattice(1, 2))
        assert np.real(np.trace(G)) == pytest.approx(pieces, rel=1e-10)

    def test_mean_matches_expectation(self, rng):
        g = Grid(1, 64, 8.0)
        f = banded(g, rng, 2)
        rep = moment_check(f, 0.0, 2000, seed=1, K=2)
        assert abs(rep.mean - rep.expected) / rep.expected < 0.05
        assert rep.relative_deviation == pytest.approx(abs(rep.mean - rep.base) / rep.base)

    def test_needs_samples(self, rng):
        g = Grid(1, 32, 4.0)
        with pytest.raises(ValueError):
            moment_check(banded(g, rng, 1), 0.0, 10)
