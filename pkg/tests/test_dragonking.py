import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from conftest import HPI_POOLED_GB2
from gbtails.distributions import gb2_ccdf, gb2_cdf, sample_gb2
from gbtails.dragonking import Flag, classify, default_tail_end_window, u_test, u_test_pvalues
from gbtails.empirical import SortedSample
from gbtails.errors import DomainError, FitError


def uniform_cdf(x):
    return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


def test_single_observation_pvalue():
    p = u_test_pvalues(SortedSample([0.3]), uniform_cdf)
    assert p[0] == pytest.approx(0.7, abs=1e-15)


def test_top_rank_closed_form():
    m = 100
    x = np.linspace(0.001, 0.98, m)
    x[-1] = 0.99
    p = u_test_pvalues(SortedSample(x), uniform_cdf)
    # order-statistic law of the maximum: u**m, checked against quadrature of its density
    dens_int, _ = integrate.quad(lambda t: m * t ** (m - 1), 0.0, 0.99, epsabs=1e-14)
    assert p[-1] == pytest.approx(1 - 0.99 ** 100, abs=1e-12)
    assert p[-1] == pytest.approx(1 - dens_int, abs=1e-12)
    assert p[-1] == pytest.approx(0.63397, abs=1e-5)


def test_ccdf_path_matches_cdf_path():
    s = sample_gb2(HPI_POOLED_GB2, 500, 4)
    a = u_test_pvalues(s, lambda x: gb2_cdf(x, HPI_POOLED_GB2))
    b = u_test_pvalues(s, lambda x: gb2_cdf(x, HPI_POOLED_GB2),
                       lambda x: gb2_ccdf(x, HPI_POOLED_GB2))
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_pvalues_null_calibration_small():
    rng = np.random.default_rng(0)
    m, reps = 40, 3000
    ranks = [m - 1, m - 2, m // 2]
    pv = np.empty((reps, len(ranks)))
    for i in range(reps):
        pv[i] = u_test_pvalues(SortedSample(rng.random(m)), uniform_cdf)[ranks]
    for j in range(len(ranks)):
        assert stats.kstest(pv[:, j], "uniform").pvalue > 0.01


@settings(max_examples=100)
@given(st.floats(min_value=0.01, max_value=1.0), st.floats(min_value=0.01, max_value=1.0),
       st.integers(min_value=1, max_value=200))
def test_pvalue_nonincreasing_in_f(h1, h2, m):
    # scaling the CDF by h raises every F(x_k) together
    x = SortedSample(np.linspace(0.01, 1.0, m))
    lo, hi = sorted((h1, h2))
    p_lo = u_test_pvalues(x, lambda t: lo * t)
    p_hi = u_test_pvalues(x, lambda t: hi * t)
    assert np.all(p_hi <= p_lo + 1e-12)


def test_monotone_transform_invariance():
    s = sample_gb2(HPI_POOLED_GB2, 300, 8)
    cdf = lambda x: gb2_cdf(x, HPI_POOLED_GB2)  # noqa: E731
    p1 = u_test_pvalues(s, cdf)
    p2 = u_test_pvalues(SortedSample(np.log(s.values)), lambda y: cdf(np.exp(y)))
    np.testing.assert_allclose(p1, p2, atol=1e-13)


def test_cdf_outside_unit_interval_rejected():
    with pytest.raises(DomainError):
        u_test_pvalues(SortedSample([1.0, 2.0]), lambda x: np.asarray(x) * 0.9)


# --- classification ---------------------------------------------------------------------

def test_all_moderate_pvalues_unflagged():
    rep = classify(np.full(50, 0.5))
    assert set(rep.classifications) == {Flag.NONE}
    assert rep.counts()["none"] == 50


def test_large_top_pvalue_is_ndk():
    p = np.full(100, 0.5)
    p[-1] = 0.99
    rep = classify(p, tail_end_window=1)
    assert rep.classifications[-1] is Flag.NDK
    assert list(rep.ranks_with(Flag.NDK)) == [100]


def test_small_mid_tail_pvalue_is_pdk():
    p = np.full(100, 0.5)
    p[80] = 0.01
    rep = classify(p, tail_region=(60, 100), tail_end_window=5)
    assert rep.classifications[80] is Flag.PDK
    p[98] = 0.01
    assert classify(p, (60, 100), 5).classifications[98] is Flag.DK


def test_outside_region_never_flagged():
    p = np.full(100, 0.001)
    rep = classify(p, tail_region=(90, 100), tail_end_window=5)
    assert all(c is Flag.NONE for c in rep.classifications[:89])


@settings(max_examples=200)
@given(st.lists(st.floats(min_value=0, max_value=1), min_size=1, max_size=80), st.data())
def test_classification_invariants(pvals, data):
    m = len(pvals)
    first = data.draw(st.integers(min_value=1, max_value=m))
    last = data.draw(st.integers(min_value=first, max_value=m))
    window = data.draw(st.integers(min_value=1, max_value=m))
    rep = classify(pvals, (first, last), window)
    for k, (p, c) in enumerate(zip(pvals, rep.classifications), start=1):
        in_region = first <= k <= last
        in_window = in_region and k > last - window
        if c is Flag.DK:
            assert in_window and p <= 0.05
        elif c is Flag.NDK:
            assert in_window and p >= 0.95
        elif c is Flag.PDK:
            assert in_region and not in_window and (p <= 0.05 or p >= 0.95)
        else:
            assert not in_region or 0.05 < p < 0.95
    again = classify(pvals, (first, last), window)
    assert again.classifications == rep.classifications


def test_classify_errors():
    with pytest.raises(FitError):
        classify([0.5, 0.5], tail_region=(3, 2))
    with pytest.raises(DomainError):
        classify([0.5], thresholds=(0.9, 0.1))
    with pytest.raises(DomainError):
        classify([0.5], tail_end_window=0)


def test_default_window():
    assert default_tail_end_window(100) == 5
    assert default_tail_end_window(100_000) == 500
    assert default_tail_end_window(1001) == 6


def test_u_test_wrapper():
    s = sample_gb2(HPI_POOLED_GB2, 200, 1)
    rep = u_test(s, lambda x: gb2_cdf(x, HPI_POOLED_GB2), tail_region=(181, 200))
    assert rep.pvalues.shape == (200,)
    assert rep.tail_region == (181, 200) and rep.tail_end_window == 5
