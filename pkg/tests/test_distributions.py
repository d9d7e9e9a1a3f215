import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from conftest import (GB2_SETS, HP_MGB, HPI_2019_GB2, HPI_2019_MGB, HPI_POOLED_GB2,
                      HPI_POOLED_GB2_SLOPE, HPI_POOLED_MGB, MGB_SETS)
from gbtails.distributions import (GB2Params, GBParams, gb2_ccdf, gb2_cdf, gb2_pdf,
                                   gb_ccdf_near_beta1, gb_pdf, mgb2_pdf, mgb_ccdf,
                                   mgb_ccdf_near_beta1, mgb_cdf, mgb_pdf, mgb_quantile, sample_gb2,
                                   sample_mgb)
from gbtails.empirical import CcdfCurve, ci_band, empirical_ccdf_at
from gbtails.errors import DomainError


def quad(f, a, b, n_pieces=40):
    """Adaptive quadrature over geometric sub-intervals of [a, b]."""
    lo = a if a > 0 else b * 1e-12
    edges = np.concatenate([[a], np.geomspace(lo, b, n_pieces + 1)[1:]]) if a == 0 else \
        np.geomspace(a, b, n_pieces + 1)
    total = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(lambda t: float(f(t)), left, right, limit=400,
                                epsabs=1e-14, epsrel=1e-12)
        total += val
    return total


def with_beta1(params: GBParams, beta1):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return GBParams(params.alpha, beta1, params.beta2, params.p, params.q)


def log_slope(f, x, h=1e-4):
    return (math.log(f(x * math.exp(h))) - math.log(f(x * math.exp(-h)))) / (2 * h)


# --- parameter objects -----------------------------------------------------------

def test_params_validation():
    with pytest.raises(DomainError):
        GBParams(1.0, 10.0, 1.0, -1.0, 1.0)
    with pytest.raises(DomainError):
        GB2Params(1.0, 0.0, 1.0, 1.0)
    with pytest.warns(UserWarning):
        GBParams(1.0, 1.0, 2.0, 1.0, 1.0)


def test_gb2_slopes_from_params():
    assert HPI_POOLED_GB2.ccdf_slope == pytest.approx(-2.1786 * 2.8667)
    assert HPI_POOLED_GB2.pdf_slope == pytest.approx(-2.1786 * 2.8667 - 1)


# --- GB density --------------------------------------------------------------------

def test_gb_pdf_zero_above_support():
    assert gb_pdf(HP_MGB.beta1 * 1.01, HP_MGB) == 0.0
    assert mgb_pdf(HP_MGB.beta1 * 1.01, HP_MGB) == 0.0


def test_pdf_rejects_negative_x():
    with pytest.raises(DomainError):
        gb_pdf(-1.0, HP_MGB)
    with pytest.raises(DomainError):
        mgb_pdf(-1.0, HP_MGB)
    with pytest.raises(DomainError):
        gb2_pdf(0.0, HPI_2019_GB2)
    with pytest.raises(DomainError):
        gb2_ccdf(-1.0, HPI_2019_GB2)


def test_gb_pdf_reduces_to_lomax():
    pr = GBParams(alpha=1.0, beta1=1e9, beta2=1.0, p=1.0, q=1.0)
    x = np.geomspace(1e-3, 1e3, 25)
    np.testing.assert_allclose(gb_pdf(x, pr), (1 + x) ** -2.0, rtol=1e-6)
    # and the Lomax form integrates to one over a long range
    assert quad(lambda t: gb_pdf(t, pr), 0.0, 1e9) == pytest.approx(1.0, abs=1e-6)


def test_gb_pdf_normalized_with_hp_params():
    assert quad(lambda t: gb_pdf(t, HP_MGB), 0.0, HP_MGB.beta1) == pytest.approx(1.0, abs=1e-6)


def test_singular_density_at_beta1_when_q_below_one():
    assert HP_MGB.q < 1
    assert mgb_pdf(HP_MGB.beta1, HP_MGB) == math.inf
    assert math.isfinite(mgb_pdf(HPI_2019_MGB.beta1, HPI_2019_MGB))


# --- mGB --------------------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(MGB_SETS))
def test_mgb_pdf_normalized(name):
    pr = MGB_SETS[name]
    assert quad(lambda t: mgb_pdf(t, pr), 0.0, pr.beta1) == pytest.approx(1.0, abs=1e-6)


def test_mgb_pdf_tends_to_mgb2():
    pr = with_beta1(HPI_POOLED_MGB, 1e8 * HPI_POOLED_MGB.beta2)
    g = GB2Params(pr.alpha, pr.beta2, pr.p, pr.q)
    x = np.geomspace(pr.beta2 / 10, 1e3 * pr.beta2, 50)
    np.testing.assert_allclose(mgb_pdf(x, pr), mgb2_pdf(x, g), rtol=1e-4)


def test_mgb_cdf_endpoints(mgb_params):
    assert mgb_cdf(0.0, mgb_params) == 0.0
    assert mgb_cdf(mgb_params.beta1, mgb_params) == pytest.approx(1.0, abs=1e-15)
    assert mgb_ccdf(0.0, mgb_params) == pytest.approx(1.0, abs=1e-15)
    assert mgb_ccdf(mgb_params.beta1, mgb_params) == 0.0


def test_mgb_cdf_outside_support_rejected(mgb_params):
    with pytest.raises(DomainError):
        mgb_cdf(mgb_params.beta1 * 1.001, mgb_params)
    with pytest.raises(DomainError):
        mgb_ccdf(-1.0, mgb_params)


def test_mgb_cdf_at_beta2_matches_quadrature():
    pr = HPI_2019_MGB
    ref = quad(lambda t: mgb_pdf(t, pr), 0.0, pr.beta2)
    assert mgb_cdf(pr.beta2, pr) == pytest.approx(ref, abs=1e-8)


def test_mgb_cdf_plus_ccdf(mgb_params):
    x = np.linspace(0.0, mgb_params.beta1, 1000)
    assert np.max(np.abs(mgb_cdf(x, mgb_params) + mgb_ccdf(x, mgb_params) - 1.0)) <= 1e-12


def test_mgb_ccdf_strictly_decreasing(mgb_params):
    x = np.geomspace(mgb_params.beta1 * 1e-3, mgb_params.beta1 * (1 - 1e-6), 400)
    s = mgb_ccdf(x, mgb_params)
    # large p saturates the CCDF at 1 in double precision far below beta2
    live = s[s < 1.0 - 1e-10]
    assert live.size > 100
    assert np.all(np.diff(s) <= 0) and np.all(np.diff(live) < 0)


def test_mgb_mid_range_slope():
    pr = with_beta1(HPI_POOLED_MGB, 1e6 * HPI_POOLED_MGB.beta2)
    x = math.sqrt(pr.beta1 * pr.beta2)
    slope = log_slope(lambda t: mgb_ccdf(t, pr), x)
    assert slope == pytest.approx(-pr.alpha * (pr.q + 1), rel=0.02)
    assert pr.ccdf_slope == pytest.approx(-pr.alpha * (pr.q + 1))


@pytest.mark.parametrize("name", sorted(MGB_SETS))
def test_mgb_cdf_derivative_is_pdf(name):
    pr = MGB_SETS[name]
    for x in np.geomspace(pr.beta2 / 5, pr.beta1 * 0.95, 9):
        h = x * 1e-5
        num = (mgb_cdf(x + h, pr) - mgb_cdf(x - h, pr)) / (2 * h)
        assert num == pytest.approx(mgb_pdf(x, pr), rel=1e-6)


def test_mgb_ccdf_large_beta1_matches_shifted_gb2():
    pr = with_beta1(HPI_POOLED_MGB, 1e8 * HPI_POOLED_MGB.beta2)
    shifted = GB2Params(pr.alpha, pr.beta2, pr.p, pr.q + 1)
    x = np.geomspace(pr.beta2 / 10, 1e3 * pr.beta2, 200)
    np.testing.assert_allclose(mgb_ccdf(x, pr), gb2_ccdf(x, shifted), rtol=1e-4)


# --- GB2 / mGB2 ---------------------------------------------------------------------

def test_gb2_pdf_simple_value():
    assert gb2_pdf(1.0, GB2Params(1, 1, 1, 1)) == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("name", sorted(GB2_SETS))
def test_gb2_pdf_normalized(name):
    pr = GB2_SETS[name]
    total = quad(lambda t: gb2_pdf(t, pr), 1e-8 * pr.beta2, 1e6 * pr.beta2, n_pieces=80)
    assert total == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("name", sorted(GB2_SETS))
def test_gb2_pdf_tail_slope(name):
    pr = GB2_SETS[name]
    assert log_slope(lambda t: gb2_pdf(t, pr), 1e5 * pr.beta2) == pytest.approx(pr.pdf_slope, rel=1e-3)


@given(st.floats(min_value=1e-3, max_value=1e4))
def test_mgb2_is_gb2_with_shifted_q(x):
    pr = GB2Params(2.1786, 42.1151, 3.6162, 1.0004)
    shifted = GB2Params(pr.alpha, pr.beta2, pr.p, pr.q + 1)
    assert mgb2_pdf(x, pr) == pytest.approx(gb2_pdf(x, shifted), rel=1e-12, abs=1e-300)


def test_mgb2_limit_at_origin():
    # alpha = p = q = 1: mgb2 = 2/(1+x)^3, finite limit 2 at x -> 0
    assert mgb2_pdf(1e-12, GB2Params(1, 1, 1, 1)) == pytest.approx(2.0, rel=1e-10)


def test_mgb2_normalized():
    pr = HPI_2019_GB2
    total = quad(lambda t: mgb2_pdf(t, pr), 1e-8 * pr.beta2, 1e6 * pr.beta2, n_pieces=80)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_gb2_ccdf_trivial_points():
    assert gb2_ccdf(0.0, HPI_2019_GB2) == 1.0
    assert gb2_ccdf(3.0, GB2Params(1.7, 3.0, 2.2, 2.2)) == pytest.approx(0.5, abs=1e-14)


def test_gb2_ccdf_slope_far_tail():
    pr = HPI_POOLED_GB2
    slope = log_slope(lambda t: gb2_ccdf(t, pr), 1e4 * pr.beta2)
    assert slope == pytest.approx(HPI_POOLED_GB2_SLOPE, rel=0.005)


@pytest.mark.parametrize("name", sorted(GB2_SETS))
def test_gb2_cdf_ccdf_consistent(name):
    pr = GB2_SETS[name]
    x = np.geomspace(pr.beta2 / 100, pr.beta2 * 100, 300)
    np.testing.assert_allclose(gb2_cdf(x, pr) + gb2_ccdf(x, pr), 1.0, atol=1e-13)
    s = gb2_ccdf(x, pr)
    assert np.all(np.diff(s) <= 0) and np.all(np.diff(s[s < 1.0]) < 0)
    for xi in x[::30]:
        h = xi * 1e-5
        num = (gb2_cdf(xi + h, pr) - gb2_cdf(xi - h, pr)) / (2 * h)
        assert num == pytest.approx(gb2_pdf(xi, pr), rel=1e-6)


# --- near-beta1 asymptotes ------------------------------------------------------------

def _scaled_hp():
    # beta2 << beta1 as the asymptotic forms require
    return with_beta1(HP_MGB, HP_MGB.beta1)


def test_gb_near_beta1_ratio_to_exact():
    pr = _scaled_hp()
    ratios = []
    for eps in (1e-2, 1e-3, 1e-4):
        x = pr.beta1 * (1 - eps)
        exact = quad(lambda t: gb_pdf(t, pr), x, pr.beta1, n_pieces=4)
        ratios.append(gb_ccdf_near_beta1(x, pr) / exact)
    errs = [abs(r - 1) for r in ratios]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def _mgb_near_ratio(pr, eps):
    x = pr.beta1 * (1 - eps)
    return float(mgb_ccdf_near_beta1(x, pr) / mgb_ccdf(x, pr))


def test_mgb_near_beta1_ratio_to_exact(mgb_params):
    # Integrating the density near beta1 gives b^q (p+q) r / (q B (q + r (p+q))),
    # so the asymptote, which keeps only the leading order in r, tends to
    # 1 + r (p+q)/q times the exact CCDF.
    pr = mgb_params
    r = (pr.beta2 / pr.beta1) ** pr.alpha
    limit = 1 + r * (pr.p + pr.q) / pr.q
    errs = [abs(_mgb_near_ratio(pr, e) / limit - 1) for e in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)]
    assert errs[-1] < 1e-5
    assert errs == sorted(errs, reverse=True)


def test_mgb_near_beta1_ratio_tends_to_one_for_wide_support():
    # beta1/beta2 = 100 makes r ~ 2e-7; much wider supports lose digits in the
    # exact CCDF to cancellation between its two terms
    pr = with_beta1(HPI_POOLED_MGB, 100 * HPI_POOLED_MGB.beta2)
    assert _mgb_near_ratio(pr, 1e-6) == pytest.approx(1.0, abs=1e-5)


def test_near_beta1_forms_ratio_identity(mgb_params):
    pr = mgb_params
    x = np.linspace(0.9, 0.999, 20) * pr.beta1
    ratio = mgb_ccdf_near_beta1(x, pr) / gb_ccdf_near_beta1(x, pr)
    np.testing.assert_allclose(ratio, (1 + pr.p / pr.q) * (pr.beta2 / pr.beta1) ** pr.alpha,
                               rtol=1e-13)


def test_near_beta1_forms_vanish_and_decrease(mgb_params):
    pr = mgb_params
    assert gb_ccdf_near_beta1(pr.beta1, pr) == 0.0
    assert mgb_ccdf_near_beta1(pr.beta1, pr) == 0.0
    x = np.linspace(0.9, 1.0, 50) * pr.beta1
    assert np.all(np.diff(gb_ccdf_near_beta1(x, pr)) < 0)


# --- samplers --------------------------------------------------------------------------

def test_sample_gb2_deterministic():
    a = sample_gb2(HPI_2019_GB2, 1, 7).values
    b = sample_gb2(HPI_2019_GB2, 1, 7).values
    assert a.shape == (1,) and a[0] == b[0]


def test_sample_gb2_ccdf_at_beta2():
    pr = HPI_2019_GB2
    n = 200_000
    sample = sample_gb2(pr, n, 42)
    s_true = float(gb2_ccdf(pr.beta2, pr))
    se = math.sqrt(s_true * (1 - s_true) / n)
    assert abs(float(empirical_ccdf_at(sample, pr.beta2)) - s_true) < 3 * se
    d = stats.kstest(sample.values, lambda x: gb2_cdf(x, pr)).statistic
    assert d < 1.63 / math.sqrt(n)


def test_sample_gb2_ks_repeated():
    n, fails = 2000, 0
    for seed in range(20):
        s = sample_gb2(HPI_POOLED_GB2, n, seed)
        if stats.kstest(s.values, lambda x: gb2_cdf(x, HPI_POOLED_GB2)).statistic >= 1.63 / math.sqrt(n):
            fails += 1
    assert fails <= 2  # 1% level, 20 runs


def test_mgb_quantile_round_trip(mgb_params):
    u = np.random.default_rng(3).random(2000)
    x = mgb_quantile(u, mgb_params)
    assert np.all(x <= mgb_params.beta1)
    np.testing.assert_allclose(mgb_cdf(x, mgb_params), u, atol=1e-8)


def test_sample_mgb_support_and_band():
    pr = HPI_POOLED_MGB
    n = 200_000
    sample = sample_mgb(pr, n, 42)
    assert sample.values[-1] < pr.beta1
    probes = np.quantile(sample.values, np.linspace(0.05, 0.995, 12))
    emp = empirical_ccdf_at(sample, probes)
    band = ci_band(CcdfCurve(probes, emp), n, 0.999, lambda t: mgb_ccdf(t, pr))
    assert np.all((band.lower <= emp) & (emp <= band.upper))


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**31))
def test_sample_mgb_within_support(seed):
    s = sample_mgb(HP_MGB, 50, seed)
    assert np.all(s.values <= HP_MGB.beta1) and np.all(s.values >= 0)
