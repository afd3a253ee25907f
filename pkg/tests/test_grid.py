import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field
from wiener_nls.grid import (
    FREQUENCY,
    Field,
    Grid,
    GridMismatchError,
    RepresentationError,
    SpaceTimeField,
    fft,
    ifft,
    parseval_norm,
    quadrature_norm,
)


def dft_oracle(values: np.ndarray, L: float) -> np.ndarray:
    """Fourier-series coefficients by explicit summation (1-d)."""
    n = len(values)
    x = -L / 2 + L * np.arange(n) / n
    m = np.fft.fftfreq(n, d=1.0 / n)
    xi = m / L
    return np.array([np.sum(values * np.exp(-2j * np.pi * k * x)) / n for k in xi])


class TestGrid:
    def test_lattice(self):
        g = Grid(1, 8, 4.0, n_t=5, T=2.0)
        assert g.dx == 0.5 and g.dt == 0.5 and g.xi_max == 1.0
        assert np.allclose(np.sort(g.freq_1d), np.arange(-4, 4) / 4.0)
        assert np.allclose(g.times, [0, 0.5, 1, 1.5, 2])

    @pytest.mark.parametrize(
        "kw",
        [dict(d=1, n=12, L=1.0), dict(d=0, n=8, L=1.0), dict(d=1, n=8, L=-1.0), dict(d=1, n=8, L=1.0, n_t=1), dict(d=1, n=8, L=1.0, T=0.0)],
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            Grid(**kw)

    def test_hashable_and_with_time(self):
        g = Grid(2, 16, 2.0)
        assert hash(g) == hash(Grid(2, 16, 2.0))
        h = g.with_time(n_t=9, T=0.5)
        assert h.dt == pytest.approx(0.5 / 8) and h.n == 16

    def test_dealias_mask(self):
        g = Grid(1, 32, 1.0)
        cut = 2 / 3 * g.xi_max
        assert np.all(np.abs(g.freq_1d[g.dealias_mask]) < cut + 1e-12)
        assert np.all(np.abs(g.freq_1d[~g.dealias_mask]) >= cut)


class TestFFT:
    def test_constant(self):
        g = Grid(2, 8, 3.0)
        c = fft(Field(g, np.full(g.shape, 2.5 - 1j)))
        expect = np.zeros(g.shape, complex)
        expect[0, 0] = 2.5 - 1j
        assert np.allclose(c.values, expect, atol=1e-14)

    def test_single_mode_unit_mass(self):
        g = Grid(3, 8, 2.0)
        f = Field.from_function(g, lambda x, y, z: np.exp(2j * np.pi * x / g.L))
        c = fft(f).values.copy()
        idx = np.unravel_index(np.argmax(np.abs(c)), g.shape)
        assert g.freq_1d[idx[0]] == pytest.approx(1 / g.L) and idx[1] == idx[2] == 0
        assert abs(c[idx]) == pytest.approx(1.0, abs=1e-13)
        c[idx] = 0
        assert np.abs(c).max() < 1e-13

    def test_matches_explicit_dft(self, rng):
        g = Grid(1, 16, 5.0)
        f = random_field(g, rng)
        assert np.allclose(fft(f).values, dft_oracle(f.values, g.L), atol=1e-13)

    def test_round_trip_and_tags(self, rng):
        g = Grid(2, 16, 1.0)
        f = random_field(g, rng)
        back = ifft(fft(f))
        assert np.abs(back.values - f.values).max() / np.abs(f.values).max() < 1e-12
        with pytest.raises(RepresentationError):
            ifft(f)
        with pytest.raises(RepresentationError):
            fft(fft(f))

    def test_parseval(self, rng):
        g = Grid(3, 8, 1.7)
        f = random_field(g, rng)
        a, b = quadrature_norm(f, 2), parseval_norm(f)
        assert abs(a - b) / a < 1e-12

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31), st.complex_numbers(max_magnitude=10, allow_nan=False), st.complex_numbers(max_magnitude=10, allow_nan=False))
    def test_linearity(self, seed, alpha, beta):
        g = Grid(1, 32, 2.0)
        r = np.random.default_rng(seed)
        f, h = random_field(g, r), random_field(g, r)
        lhs = fft(f * alpha + h * beta).values
        rhs = fft(f).values * alpha + fft(h).values * beta
        scale = max(np.abs(rhs).max(), 1e-300)
        assert np.abs(lhs - rhs).max() <= 1e-12 * scale + 1e-300

    def test_unitarity_100_fields(self):
        g = Grid(2, 16, 3.0)
        r = np.random.default_rng(0)
        for _ in range(100):
            f = random_field(g, r)
            a = quadrature_norm(f, 2)
            assert abs(quadrature_norm(ifft(fft(f)), 2) - a) / a < 1e-12
            assert abs(parseval_norm(f) - a) / a < 1e-12


class TestQuadrature:
    def test_half_box_indicator(self):
        g = Grid(2, 16, 2.0)
        f = Field.from_function(g, lambda x, y: (x < 0).astype(float))
        assert quadrature_norm(f, 1) == pytest.approx(g.L**2 / 2)

    def test_ones_inf(self):
        g = Grid(1, 8, 1.0)
        assert quadrature_norm(Field(g, np.ones(8)), np.inf) == 1.0

    def test_rejects_p_below_one(self):
        g = Grid(1, 8, 1.0)
        with pytest.raises(ValueError):
            quadrature_norm(Field(g, np.ones(8)), 0.5)

    def test_no_overflow(self):
        g = Grid(1, 8, 1.0)
        f = Field(g, np.full(8, 1e200))
        assert quadrature_norm(f, 4) == pytest.approx(1e200)


class TestFields:
    def test_immutable(self, rng):
        g = Grid(1, 8, 1.0)
        f = random_field(g, rng)
        with pytest.raises(AttributeError):
            f.values = None
        with pytest.raises(ValueError):
            f.values[0] = 1.0

    def test_grid_mismatch(self, rng):
        f = random_field(Grid(1, 8, 1.0), rng)
        h = random_field(Grid(1, 8, 2.0), rng)
        with pytest.raises(GridMismatchError):
            f + h

    def test_space_time_window(self, rng):
        g = Grid(1, 8, 1.0, n_t=6, T=1.0)
        u = SpaceTimeField(g, rng.standard_normal((6, 8)) + 0j)
        w = u.window(1, 3)
        assert len(w) == 3 and np.allclose(w.times, g.times[1:4])
        assert np.allclose(u[2].values, u.values[2])

    def test_space_time_rejects_bad_times(self):
        g = Grid(1, 8, 1.0, n_t=3)
        with pytest.raises(ValueError):
            SpaceTimeField(g, np.zeros((3, 8)), times=[0.0, 0.5, 0.5])

    def test_frequency_field_physical_values(self, rng):
        g = Grid(1, 16, 1.0)
        f = random_field(g, rng)
        c = fft(f)
        assert c.rep == FREQUENCY
        assert np.allclose(c.physical_values(), f.values)


def test_fields_survive_pickling(rng):
    import pickle

    g = Grid(2, 8, 2.0, n_t=3, T=0.1)
    f = Field(g, rng.standard_normal(g.shape))
    u = SpaceTimeField(g, np.stack([f.values] * 3))
    f2, u2 = pickle.loads(pickle.dumps(f)), pickle.loads(pickle.dumps(u))
    assert np.array_equal(f2.values, f.values) and f2.rep == f.rep
    assert np.array_equal(u2.values, u.values) and np.array_equal(u2.times, u.times)
    with pytest.raises(AttributeError):
        f2.rep = "x"
