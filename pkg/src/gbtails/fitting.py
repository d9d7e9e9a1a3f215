"""Maximum-likelihood fits of mGB and GB2, log-log tail line fits and the
Kolmogorov-Smirnov distance.

Fits run a Nelder-Mead simplex over log-transformed parameters from a grid
of starting points.  By default the two shape exponents ``p, q`` are
profiled out: for fixed ``(alpha, beta2[, beta1])`` the log-likelihood
depends on the data only through two or three sample means, so the inner
maximization costs no data passes.  ``FitConfig(profile=False)`` runs the
simplex over all parameters instead.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Union

import numpy as np
from scipy import optimize, stats
from scipy.special import digamma, polygamma

from .distributions import (GB2Params, GBParams, gb2_cdf, gb2_ccdf, gb2_pdf, mgb_ccdf,
                            mgb_cdf, mgb_pdf)
from .empirical import CcdfCurve, SortedSample
from .errors import DomainError, FitError
from .specfun import log_beta, log_beta_scalar

log = logging.getLogger(__name__)

FAMILIES = ("mGB", "GB2")
# softplus(theta) >= 1e-9: keeps beta1 strictly above the sample maximum.  With
# q < 1 the mGB likelihood grows without bound as beta1 -> max(sample).
THETA_MIN = -20.723265836446412
# cap on p and q.  Near-lognormal data push the GB2 likelihood toward p, q -> inf,
# where the incomplete beta is no longer computable; fits at the cap are flagged.
SHAPE_MAX = 1e8


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings for :func:`fit_mle`."""

    alpha_starts: tuple = (0.5, 1.0, 2.0, 4.0)
    beta2_start_factors: tuple = (0.25, 1.0)  # multiples of the sample median
    p_start: float = 1.0
    q_start: float = 1.0
    beta1_start_factor: float = 1.5  # multiple of the sample maximum
    max_iter: int = 5000
    fatol: float = 1e-9  # on the mean log-likelihood
    xatol: float = 1e-7  # on log-parameters
    profile: bool = True
    polish: bool = True
    # optional log-uniform priors: name -> (low, high); zero density outside
    prior_bounds: Optional[Mapping[str, tuple]] = None


@dataclass(frozen=True)
class FitResult:
    family: str
    params: Union[GBParams, GB2Params]
    log_likelihood: float
    ks_stat: float
    converged: bool
    iterations: int
    start_log_likelihoods: tuple = ()
    message: str = ""

    def cdf(self, x):
        return mgb_cdf(x, self.params) if self.family == "mGB" else gb2_cdf(x, self.params)

    def ccdf(self, x):
        return mgb_ccdf(x, self.params) if self.family == "mGB" else gb2_ccdf(x, self.params)

    def pdf(self, x):
        return mgb_pdf(x, self.params) if self.family == "mGB" else gb2_pdf(x, self.params)

    @property
    def ccdf_slope(self) -> float:
        return self.params.ccdf_slope


@dataclass(frozen=True)
class ManualExclude:
    """Drop the ``n_points`` largest tail points (visually flagged outliers)."""

    n_points: int = 0

    def describe(self):
        return {"policy": "ManualExclude", "n_points": int(self.n_points)}


@dataclass(frozen=True)
class FractionOfMax:
    """Drop every point with ``x > fraction * max(x)``."""

    fraction: float = 0.9

    def describe(self):
        return {"policy": "FractionOfMax", "fraction": float(self.fraction)}


@dataclass(frozen=True)
class TailFit:
    slope: float
    intercept: float
    policy: Union[ManualExclude, FractionOfMax]
    tail_start_rank: int
    excluded: frozenset
    slope_stderr: float
    n_points: int
    x_start: float = field(default=float("nan"))

    def slope_ci(self, level: float = 0.95) -> tuple:
        t = stats.t.ppf(0.5 + level / 2, max(self.n_points - 2, 1))
        return (self.slope - t * self.slope_stderr, self.slope + t * self.slope_stderr)

    def line(self, x):
        """Fitted CCDF line ``exp(intercept) * x**slope``."""
        return np.exp(self.intercept + self.slope * np.log(np.asarray(x, dtype=float)))

    def conditional_ccdf(self, x):
        """The line renormalized to 1 at the tail start: ``(x / x_start)**slope``, x >= x_start."""
        x = np.asarray(x, dtype=float)
        return np.minimum(1.0, (x / self.x_start) ** self.slope)

    def conditional_cdf(self, x):
        return 1.0 - self.conditional_ccdf(x)


# ---------------------------------------------------------------------------
# log-likelihoods


def _softplus(t):
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


def gb2_loglik(values, params: GB2Params) -> float:
    lx = np.log(values)
    a, b2, p, q = params.alpha, params.beta2, params.p, params.q
    u = a * (lx - math.log(b2))
    n = lx.size
    return float(n * (math.log(a) - math.log(b2) - log_beta(p, q))
                 + (a * p - 1.0) * (lx.sum() - n * math.log(b2)) - (p + q) * _softplus(u).sum())


def mgb_loglik(values, params: GBParams) -> float:
    x = np.asarray(values, dtype=float)
    if x.max() > params.beta1:
        return -math.inf
    return float(np.sum(np.log(mgb_pdf(x, params))))


class _Stats:
    """Cached per-sample quantities reused across likelihood evaluations."""

    def __init__(self, values):
        self.lx = np.log(values)
        self.n = self.lx.size
        self.mean_lx = float(self.lx.mean())
        self.log_max = float(self.lx.max())


def _beta_mle(c1, c2):
    """Maximize ``-ln B(p,q) + p c1 + q c2`` (a Beta MLE from mean log-statistics).

    Damped Newton on (ln p, ln q).  The objective is strictly concave in
    (p, q) and has a unique maximizer when ``exp(c1) + exp(c2) < 1``.
    """
    if not (math.exp(c1) + math.exp(c2) < 1.0):
        return None
    # start from the moments of w = z/(1+z) implied by its log-means
    mw = math.exp(c1)
    vw = max(mw * (1.0 - mw) * 0.5, 1e-12)
    common = max(mw * (1.0 - mw) / vw - 1.0, 1e-3)
    lp, lq = math.log(mw * common), math.log((1.0 - mw) * common)

    def obj(lp_, lq_):
        p_, q_ = math.exp(lp_), math.exp(lq_)
        return -log_beta_scalar(p_, q_) + p_ * c1 + q_ * c2

    f = obj(lp, lq)
    for _ in range(100):
        p, q = math.exp(lp), math.exp(lq)
        dpq = float(digamma(p + q))
        gp = c1 - float(digamma(p)) + dpq
        gq = c2 - float(digamma(q)) + dpq
        t = float(polygamma(1, p + q))
        tp = float(polygamma(1, p))
        tq = float(polygamma(1, q))
        # Newton step in (p, q), where the Hessian is negative definite
        hpp, hqq, hpq = t - tp, t - tq, t
        det = hpp * hqq - hpq * hpq
        dp = -(hqq * gp - hpq * gq) / det
        dq = -(hpp * gq - hpq * gp) / det
        # move in log coordinates, limiting the relative change per step
        sp = math.log1p(max(dp / p, -0.9))
        sq = math.log1p(max(dq / q, -0.9))
        scale = min(1.0, 2.0 / max(abs(sp), abs(sq), 1e-300))
        sp, sq = sp * scale, sq * scale
        for _ in range(40):
            nf = obj(lp + sp, lq + sq)
            if nf >= f - 1e-13 * max(1.0, abs(f)):
                break
            sp, sq = sp / 2, sq / 2
        lp, lq, f = lp + sp, lq + sq, max(nf, f)
        if max(abs(sp), abs(sq)) < 1e-11:
            break
    return math.exp(lp), math.exp(lq), obj(lp, lq)


def _gb2_profile(st: _Stats, la, lb2):
    """Profile mean log-likelihood of GB2 at (ln alpha, ln beta2)."""
    a = math.exp(la)
    u = a * (st.lx - lb2)
    sp = _softplus(u)
    m_sp = float(sp.mean())
    m_u = a * (st.mean_lx - lb2)
    c1 = m_u - m_sp       # mean ln(z/(1+z))
    c2 = -m_sp            # mean ln(1/(1+z))
    sol = _beta_mle(c1, c2)
    if sol is None:
        return -math.inf, None
    p, q, g = sol
    if max(p, q) > SHAPE_MAX:
        return -math.inf, None
    ll = la - lb2 - (st.mean_lx - lb2) + g
    return ll, (p, q)


def _mgb_inner_stats(st: _Stats, la, lb2, lb1):
    a = math.exp(la)
    u = a * (st.lx - lb2)
    m_sp = float(_softplus(u).mean())
    z1 = np.exp(a * (st.lx - lb1))
    with np.errstate(divide="ignore"):
        m3 = float(np.log1p(-z1).mean())
    r = math.exp(a * (lb2 - lb1))
    return a, m_sp, a * (st.mean_lx - lb2), m3, r


def _mgb_pq_objective(lpq, a, m_sp, m_u, m3, r, mean_lx2):
    p, q = math.exp(lpq[0]), math.exp(lpq[1])
    denom = q + r * (p + q)
    f = (math.log(p + q) + (p + 1.0) * math.log1p(r) + (a * p - 1.0) * mean_lx2
         - (p + q + 1.0) * m_sp + (q - 1.0) * m3 - log_beta_scalar(p, q) - math.log(denom))
    dpq = digamma(p + q)
    gp = 1.0 / (p + q) + math.log1p(r) + m_u - m_sp - digamma(p) + dpq - r / denom
    gq = 1.0 / (p + q) - m_sp + m3 - digamma(q) + dpq - (1.0 + r) / denom
    return -f, -np.array([gp * p, gq * q])


def _mgb_profile(st: _Stats, la, lb2, theta):
    lb1 = st.log_max + math.log1p(_softplus_scalar(theta))
    a, m_sp, m_u, m3, r = _mgb_inner_stats(st, la, lb2, lb1)
    if not math.isfinite(m3):
        return -math.inf, None
    mean_lx2 = st.mean_lx - lb2
    res = optimize.minimize(_mgb_pq_objective, x0=np.zeros(2), jac=True, method="L-BFGS-B",
                            args=(a, m_sp, m_u, m3, r, mean_lx2),
                            bounds=[(-20.0, math.log(SHAPE_MAX))] * 2,
                            options={"ftol": 1e-15, "gtol": 1e-11, "maxiter": 500})
    f = -float(res.fun)
    ll = la - lb2 + f
    return ll, (math.exp(res.x[0]), math.exp(res.x[1]))


def _softplus_scalar(t):
    return max(t, 0.0) + math.log1p(math.exp(-abs(t)))


def _inv_softplus(y):
    return y + math.log(-math.expm1(-y))


# ---------------------------------------------------------------------------
# parameter packing


def _unpack(family, theta, st: _Stats):
    if family == "GB2":
        la, lb2, lp, lq = theta
        return GB2Params(math.exp(la), math.exp(lb2), math.exp(lp), math.exp(lq))
    la, lb2, lp, lq, t = theta
    b1 = math.exp(st.log_max) * (1.0 + _softplus_scalar(t))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return GBParams(math.exp(la), b1, math.exp(lb2), math.exp(lp), math.exp(lq))


def _in_prior(params, bounds):
    if not bounds:
        return True
    for name, (lo, hi) in bounds.items():
        v = getattr(params, name, None)
        if v is not None and not (lo <= v <= hi):
            return False
    return True


def _full_mean_ll(family, theta, st: _Stats, values, bounds):
    if (np.any(np.abs(theta[:4]) > 50) or max(theta[2], theta[3]) > math.log(SHAPE_MAX) or (family == "mGB" and not THETA_MIN <= theta[4] <= 50)):
        return -math.inf
    try:
        pr = _unpack(family, theta, st)
    except DomainError:
        return -math.inf
    if not _in_prior(pr, bounds):
        return -math.inf
    if family == "GB2":
        a, p, q = pr.alpha, pr.p, pr.q
        lb2 = math.log(pr.beta2)
        u = a * (st.lx - lb2)
        ll = (math.log(a) - lb2 - float(log_beta(p, q)) + (a * p - 1.0) * (st.mean_lx - lb2)
              - (p + q) * float(_softplus(u).mean()))
    else:
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            ll = float(np.mean(np.log(mgb_pdf(values, pr))))
    return ll if math.isfinite(ll) else -math.inf


def _nelder_mead(fun, x0, step, cfg: FitConfig):
    n = len(x0)
    simplex = np.vstack([x0] + [x0 + step * np.eye(n)[i] for i in range(n)])
    return optimize.minimize(fun, x0, method="Nelder-Mead",
                             options={"initial_simplex": simplex, "maxiter": cfg.max_iter,
                                      "maxfev": 2 * cfg.max_iter, "xatol": cfg.xatol,
                                      "fatol": cfg.fatol})


def _safe(f):
    def g(theta):
        v = f(theta)
        return 1e300 if not math.isfinite(v) else -v
    return g


def fit_mle(sample: SortedSample, family: str, config: FitConfig = FitConfig()) -> FitResult:
    """Maximum-likelihood fit of ``family`` ("mGB" or "GB2") to ``sample``.

    For mGB the upper limit is parameterized as
    ``max(sample) * (1 + softplus(theta))`` so it always covers the data.
    Non-convergence is reported through ``converged=False``.
    """
    if family not in FAMILIES:
        raise DomainError(f"unknown family {family!r}; expected one of {FAMILIES}")
    values = np.asarray(sample.values, dtype=float)
    if values[0] <= 0:
        raise DomainError("fits need strictly positive values")
    if values.size < 50:
        log.warning("fitting only %d points", values.size)
    st = _Stats(values)
    median = float(np.median(values))
    t0 = _inv_softplus(config.beta1_start_factor - 1.0)
    starts = [(a, f * median) for a in config.alpha_starts for f in config.beta2_start_factors]

    def start_theta(a, b2):
        th = [math.log(a), math.log(b2), math.log(config.p_start), math.log(config.q_start)]
        if family == "mGB":
            th.append(t0)
        return np.array(th)

    start_lls = tuple(st.n * _full_mean_ll(family, start_theta(a, b2), st, values, None)
                      for a, b2 in starts)

    if values[-1] == values[0]:
        th = start_theta(*starts[0])
        return FitResult(family, _unpack(family, th, st), float(start_lls[0]),
                         1.0, False, 0, start_lls, "degenerate sample: all values identical")

    use_profile = config.profile and not config.prior_bounds
    prof = _gb2_profile if family == "GB2" else _mgb_profile
    if use_profile:
        def objective(th):
            if np.any(np.abs(th) > 50) or (family == "mGB" and th[2] < THETA_MIN):
                return -math.inf
            return prof(st, *th)[0]
    else:
        def objective(th):
            return _full_mean_ll(family, th, st, values, config.prior_bounds)
    neg = _safe(objective)

    best = None
    total_iter = 0
    for a, b2 in starts:
        th0 = start_theta(a, b2)
        if use_profile:
            th0 = np.concatenate([th0[:2], th0[4:]])
        res = _nelder_mead(neg, th0, 0.5, config)
        total_iter += int(res.nit)
        if best is None or res.fun < best.fun:
            best = res
    success = bool(best.success)
    if config.polish:
        # restart from the best vertex with a small simplex to escape premature collapse
        again = _nelder_mead(neg, best.x, 0.05, config)
        total_iter += int(again.nit)
        if again.fun <= best.fun:
            best = again
            success = bool(again.success)

    if use_profile:
        _, pq = prof(st, *best.x)
        if pq is None:
            theta = start_theta(*starts[0])
        elif family == "GB2":
            theta = np.array([best.x[0], best.x[1], math.log(pq[0]), math.log(pq[1])])
        else:
            theta = np.array([best.x[0], best.x[1], math.log(pq[0]), math.log(pq[1]), best.x[2]])
    else:
        theta = best.x
    params = _unpack(family, theta, st)
    ll = st.n * _full_mean_ll(family, theta, st, values, None)
    converged = success and math.isfinite(ll)
    cdf = (lambda x: mgb_cdf(x, params)) if family == "mGB" else (lambda x: gb2_cdf(x, params))
    ks = ks_statistic(sample, cdf)
    message = str(best.message)
    if family == "mGB" and theta[4] < THETA_MIN + 1e-3:
        message += " (beta1 pinned at the sample maximum)"
    if max(params.p, params.q) > 0.5 * SHAPE_MAX:
        converged = False
        message += " (shape parameters at their cap: no interior maximum)"
    if not converged:
        log.warning("%s fit did not converge: %s", family, message)
    return FitResult(family, params, float(ll), float(ks), converged, total_iter, start_lls,
                     message)


# ---------------------------------------------------------------------------


def ks_statistic(sample: SortedSample, cdf: Callable) -> float:
    """Sup distance between the right-continuous empirical CDF and ``cdf``,
    checked on both sides of every step."""
    v = sample.values
    m = v.size
    f = np.clip(np.asarray(cdf(v), dtype=float), 0.0, 1.0)
    i = np.arange(1, m + 1)
    return float(max(np.max(i / m - f), np.max(f - (i - 1) / m), 0.0))


def default_tail_start_rank(curve: CcdfCurve, top_fraction: float = 0.1) -> int:
    """1-based rank of the first curve point inside the top ``top_fraction`` of values."""
    idx = int(np.argmax(curve.s <= top_fraction))
    if curve.s[idx] > top_fraction:
        idx = len(curve) - 1
    return idx + 1


def tail_linear_fit(curve: CcdfCurve, tail_start_rank: Optional[int] = None,
                    policy: Union[ManualExclude, FractionOfMax] = ManualExclude(0)) -> TailFit:
    """Unweighted least squares of ``ln s`` on ``ln x`` over the tail of a CCDF.

    Ranks are 1-based positions on ``curve`` in ascending ``x``; the tail is
    ``tail_start_rank .. len(curve)`` minus the points ``policy`` excludes.
    """
    npts = len(curve)
    if tail_start_rank is None:
        tail_start_rank = default_tail_start_rank(curve)
    if not 1 <= tail_start_rank <= npts:
        raise FitError(f"tail_start_rank {tail_start_rank} outside 1..{npts}")
    ranks = np.arange(tail_start_rank, npts + 1)
    x = curve.x[ranks - 1]
    if isinstance(policy, ManualExclude):
        n = int(policy.n_points)
        drop = ranks[len(ranks) - n:] if n > 0 else ranks[:0]
    elif isinstance(policy, FractionOfMax):
        drop = ranks[x > policy.fraction * curve.x[-1]]
    else:
        raise FitError(f"unknown exclusion policy {policy!r}")
    keep = ~np.isin(ranks, drop)
    if keep.sum() < 5:
        raise FitError(f"only {int(keep.sum())} points left for the tail fit; need >= 5")
    lx = np.log(x[keep])
    ls = np.log(curve.s[ranks[keep] - 1])
    n = lx.size
    xm, ym = lx.mean(), ls.mean()
    sxx = np.sum((lx - xm) ** 2)
    if sxx == 0:
        raise FitError("tail points share a single x value")
    slope = float(np.sum((lx - xm) * (ls - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = ls - (intercept + slope * lx)
    dof = max(n - 2, 1)
    stderr = float(math.sqrt(np.sum(resid ** 2) / dof / sxx))
    return TailFit(slope=slope, intercept=intercept, policy=policy,
                   tail_start_rank=int(tail_start_rank),
                   excluded=frozenset(int(r) for r in drop), slope_stderr=stderr, n_points=n,
                   x_start=float(curve.x[tail_start_rank - 1]))
