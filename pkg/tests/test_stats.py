import math

import numpy as np
import pytest
from scipy import integrate, optimize

from arreplay.designs import Trajectory
from arreplay.env import BanditInstance
from arreplay.stats import (betainc_regularized, centered_arm_sum, confidence_interval,
                            summarize, t_cdf, t_quantile, theta_hat, variance_report)


def t_pdf(x, df):
    c = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) / math.sqrt(df * math.pi)
    return c * (1 + x * x / df) ** (-(df + 1) / 2)


def oracle_quantile(p, df):
    """Quantile by quadrature of the density and root finding."""
    cdf = lambda x: 0.5 + integrate.quad(t_pdf, 0, x, args=(df,), epsabs=1e-13)[0]  # noqa: E731
    return optimize.brentq(lambda x: cdf(x) - p, 0, 10.0 / (1 - p) ** (1 / df), xtol=1e-12)


@pytest.mark.parametrize("df", [1, 2, 5, 9, 30, 9999])
@pytest.mark.parametrize("p", [0.975, 0.995, 0.9])
def test_t_quantile_against_quadrature(p, df):
    assert t_quantile(p, df) == pytest.approx(oracle_quantile(p, df), rel=1e-6)


def test_t_quantile_known_values():
    assert t_quantile(0.975, 1) == pytest.approx(12.7062047, rel=1e-7)
    assert t_quantile(0.995, 9) == pytest.approx(3.2498355, rel=1e-7)
    assert t_quantile(0.5, 4) == pytest.approx(0.0, abs=1e-12)
    assert t_quantile(0.025, 7) == pytest.approx(-t_quantile(0.975, 7))


def test_t_cdf_and_betainc():
    assert t_cdf(0.0, 3) == pytest.approx(0.5)
    assert betainc_regularized(2.0, 3.0, 0.4) == pytest.approx(0.5248, abs=1e-12)
    assert betainc_regularized(1.0, 1.0, 0.3) == pytest.approx(0.3)


def test_confidence_interval_two_samples():
    lo, hi = confidence_interval(summarize([0.0, 2.0]), alpha=0.05)
    assert lo == pytest.approx(-11.7062, abs=1e-4)
    assert hi == pytest.approx(13.7062, abs=1e-4)


def test_confidence_interval_needs_two_samples():
    s = summarize([3.0])
    assert s.mean == 3.0 and math.isnan(s.sample_var) and not s.has_variance
    with pytest.raises(ValueError):
        confidence_interval(s)


def test_ci_coverage():
    rng = np.random.default_rng(8)
    hits = 0
    for _ in range(2000):
        lo, hi = confidence_interval(summarize(rng.normal(1.0, 2.0, size=10)), alpha=0.05)
        hits += lo <= 1.0 <= hi
    assert abs(hits / 2000 - 0.95) <= 3 * math.sqrt(0.95 * 0.05 / 2000)


def test_summarize_values():
    s = summarize([1.0, 2.0, 3.0, 6.0], n_env=[4, 6, 5, 5])
    assert s.mean == 3.0
    assert s.sample_var == pytest.approx(14 / 3)
    assert s.M == 4 and s.mean_n_env == 5.0
    with pytest.raises(ValueError):
        summarize([])


def test_theta_hat_and_centered_sum():
    t0 = Trajectory([1, 2, 1], [1.0, 0.0, 1.0])
    t1 = Trajectory([2, 2, 1], [1.0, 1.0, 0.0])
    assert theta_hat(t1, t0) == 0.0
    inst = BanditInstance.bernoulli([0.9, 0.7])
    assert centered_arm_sum(t0, inst, 1) == pytest.approx(0.2)
    assert centered_arm_sum(t1, inst, 2) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        theta_hat(t1, Trajectory([1], [0.0]))


def test_variance_report():
    r0, r1 = [1.0, 2.0, 3.0], [2.0, 2.0, 5.0]
    rep = variance_report(r0, r1, [0.0, 1.0, 2.0], horizon=10)
    assert rep["var_b"] == pytest.approx(np.var([1.0, 0.0, 2.0], ddof=1))
    assert rep["var_b_sum"] == pytest.approx(1.0 + 3.0)
    assert rep["var_ar_over_T"] == pytest.approx(0.1)
