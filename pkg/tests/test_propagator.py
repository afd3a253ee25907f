import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_field, smooth_field
from wiener_nls.grid import Field, Grid, SpaceTimeField, fft, quadrature_norm
from wiener_nls.propagator import (
    PropagatorTable,
    check_sign,
    duhamel,
    free_evolution,
    interaction_picture,
    phase,
    propagate,
    scattering_proxy,
)


def _rel(a, b):
    return np.abs(a - b).max() / np.abs(b).max()


def test_single_mode_phase():
    g = Grid(1, 32, 4.0)
    xi0 = 3 / g.L
    f = Field.from_function(g, lambda x: np.exp(2j * np.pi * xi0 * x))
    t = 0.37
    expect = np.exp(-4j * np.pi**2 * xi0**2 * t) * f.values
    assert np.allclose(propagate(f, t).values, expect, atol=1e-13)


def test_heat_free_gaussian_spreading():
    # e^{it Delta} exp(-pi x^2): |u(t,x)|^2 = exp(-2 pi x^2/(1+16 pi^2 t^2)) / sqrt(1+16 pi^2 t^2)
    g = Grid(1, 512, 32.0)
    f = Field.from_function(g, lambda x: np.exp(-np.pi * x**2))
    t = 0.05
    a2 = 1 + 16 * np.pi**2 * t**2
    x = g.x_1d
    expect = np.exp(-2 * np.pi * x**2 / a2) / np.sqrt(a2)
    assert np.allclose(np.abs(propagate(f, t).values) ** 2, expect, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(-3, 3), st.floats(-3, 3))
def test_unitarity_and_group_law(seed, s, t):
    g = Grid(2, 16, 3.0)
    f = random_field(g, np.random.default_rng(seed))
    a = quadrature_norm(f, 2)
    assert abs(quadrature_norm(propagate(f, t), 2) - a) / a < 1e-12
    assert _rel(propagate(propagate(f, s), t).values, propagate(f, s + t).values) < 1e-12


def test_phase_unimodular_and_table():
    g = Grid(3, 8, 1.0, n_t=5, T=0.1)
    assert np.allclose(np.abs(phase(g, 1.3)), 1.0)
    tab = PropagatorTable(g)
    assert np.allclose(tab.step, phase(g, g.dt))
    assert tab.at(0.2) is tab.at(0.2)


def test_frequency_rep_propagate(rng):
    g = Grid(1, 16, 2.0)
    f = random_field(g, rng)
    out = propagate(fft(f), 0.4)
    assert out.rep == "frequency"
    assert np.allclose(out.physical_values(), propagate(f, 0.4).values)


def test_free_evolution_and_interaction_picture(rng):
    g = Grid(1, 64, 8.0, n_t=9, T=0.4)
    f = random_field(g, rng)
    u = free_evolution(f)
    assert u.values.shape == (9, 64)
    for j, t in enumerate(g.times):
        assert np.allclose(u.values[j], propagate(f, t).values)
    ip = interaction_picture(u)
    assert np.abs(ip - ip[0]).max() < 1e-10 * np.abs(ip).max()


def test_duhamel_constant_source_exact():
    # h(s) = e^{is Delta} phi  =>  I_0(h)(t) = -i sign t e^{it Delta} phi, exact for the trapezoid rule
    g = Grid(1, 128, 16.0, n_t=17, T=0.5)
    rng = np.random.default_rng(3)
    phi = smooth_field(g, rng)
    h = free_evolution(phi)
    for sign in (1, -1):
        out = duhamel(None, h, sign)
        expect = np.stack([-1j * sign * t * propagate(phi, t).values for t in g.times])
        assert _rel(out.values, expect) < 1e-12


def test_duhamel_polynomial_source_second_order():
    # h(s) = s e^{is Delta} phi: exact integral t^2/2, trapezoid is exact for linear integrands
    g = Grid(1, 64, 8.0, n_t=11, T=1.0)
    phi = smooth_field(g, np.random.default_rng(1))
    h = SpaceTimeField(g, np.stack([t * propagate(phi, t).values for t in g.times]))
    out = duhamel(phi, h, 1)
    expect = np.stack([(1 - 0.5j * t**2) * propagate(phi, t).values for t in g.times])
    assert _rel(out.values, expect) < 1e-12


def test_duhamel_zero_source_is_free_flow(rng):
    g = Grid(2, 16, 2.0, n_t=4, T=0.1)
    f = random_field(g, rng)
    out = duhamel(f, SpaceTimeField.zeros(g), 1)
    assert _rel(out.values, free_evolution(f).values) < 1e-12


def test_scattering_proxy_free_is_zero(rng):
    g = Grid(1, 64, 4.0, n_t=5, T=1.0)
    u = free_evolution(random_field(g, rng))
    assert scattering_proxy(u, 0.0, 1.0, 0.5) < 1e-10
    with pytest.raises(ValueError):
        scattering_proxy(u, 0.1, 1.0)
    with pytest.raises(ValueError):
        scattering_proxy(u, 1.0, 0.5)


def test_sign_validation():
    assert check_sign(-1) == -1
    with pytest.raises(ValueError):
        check_sign(0)
