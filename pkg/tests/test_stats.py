import numpy as np
import pytest

from wiener_nls.stats import MIN_EXCEEDANCES, fit_tail


def test_gaussian_modulus():
    rng = np.random.default_rng(0)
    g = (rng.standard_normal(20000) + 1j * rng.standard_normal(20000)) / np.sqrt(2)
    fit = fit_tail(np.abs(g))
    # P(|g| > lam) = exp(-lam^2) exactly
    assert fit.reliable and abs(fit.theta - 2.0) < 0.15
    assert fit.band[0] < fit.theta < fit.band[1]


def test_cubic_chaos():
    rng = np.random.default_rng(1)
    g = (rng.standard_normal(20000) + 1j * rng.standard_normal(20000)) / np.sqrt(2)
    fit = fit_tail(np.abs(g) ** 3)
    assert fit.reliable and abs(fit.theta - 2 / 3) < 0.1


def test_exact_survival_levels():
    x = np.arange(1, 1001, dtype=float)
    fit = fit_tail(x, n_bins=5)
    for lam, s, c in zip(fit.lam, fit.survival, fit.exceedances):
        assert c == np.sum(x > lam) and s == pytest.approx(c / 1000)
    assert all(c >= MIN_EXCEEDANCES for c, u in zip(fit.exceedances, fit.used) if u)


def test_small_sample_unreliable():
    fit = fit_tail(np.random.default_rng(2).exponential(size=10))
    assert not fit.reliable and fit.theta is None and fit.reason


def test_degenerate_unreliable():
    assert not fit_tail(np.ones(500)).reliable
    assert not fit_tail(np.zeros(500)).reliable


def test_serialization():
    fit = fit_tail(np.random.default_rng(3).exponential(size=2000))
    d = fit.to_dict()
    assert d["reliable"] and len(fit.rows()) == len(d["lam"])
    assert abs(fit.theta - 1.0) < 0.2
