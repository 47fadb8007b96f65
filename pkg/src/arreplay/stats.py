"""Estimators, replication summaries and Student-t confidence intervals."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


def theta_hat(traj1, traj0) -> float:
    """Cumulative reward of ``traj1`` minus that of ``traj0``."""
    r1 = np.asarray(traj1.rewards, dtype=float)
    r0 = np.asarray(traj0.rewards, dtype=float)
    if r1.shape != r0.shape:
        raise ValueError(f"trajectory lengths differ: {r1.shape[0]} vs {r0.shape[0]}")
    return float(r1.sum() - r0.sum())


@dataclass
class ReplicationSummary:
    """Monte Carlo aggregate of M estimator samples.

    ``sample_var`` uses divisor ``M - 1`` and is ``nan`` when ``M == 1``.
    """

    theta_samples: np.ndarray
    mean: float
    sample_var: float
    n_env_samples: np.ndarray | None = None
    n_replay_samples: np.ndarray | None = None
    pulls0: np.ndarray | None = None
    pulls1: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return int(self.theta_samples.shape[0])

    @property
    def has_variance(self) -> bool:
        return self.M >= 2

    @property
    def std_error(self) -> float:
        return math.sqrt(self.sample_var / self.M) if self.has_variance else math.nan

    @property
    def mean_n_env(self) -> float:
        return float(np.mean(self.n_env_samples)) if self.n_env_samples is not None else math.nan

    @property
    def mean_n_replay(self) -> float:
        if self.n_replay_samples is None:
            return math.nan
        return float(np.mean(self.n_replay_samples))

    def pull_variance(self, policy: int) -> np.ndarray:
        pulls = self.pulls0 if policy == 0 else self.pulls1
        return np.var(pulls, axis=0, ddof=1)


def summarize(samples, n_env=None, n_replay=None, pulls0=None, pulls1=None) -> ReplicationSummary:
    """Summarize estimator samples (a sequence of floats or a ``RunBatch``)."""
    if hasattr(samples, "theta") and hasattr(samples, "n_env"):
        batch = samples
        return summarize(batch.theta, batch.n_env, batch.n_replay, batch.pulls0, batch.pulls1)
    theta = np.asarray(samples, dtype=float).ravel()
    if theta.size == 0:
        raise ValueError("cannot summarize zero samples")
    mean = float(theta.mean())
    var = float(np.var(theta, ddof=1)) if theta.size >= 2 else math.nan
    as_arr = lambda x: None if x is None else np.asarray(x)  # noqa: E731
    return ReplicationSummary(theta, mean, var, as_arr(n_env), as_arr(n_replay),
                              as_arr(pulls0), as_arr(pulls1))


# --------------------------------------------------------------------------
# Student t distribution


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, 10_000):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(x: float, df: float) -> float:
    if x == 0.0:
        return 0.5
    tail = 0.5 * betainc_regularized(0.5 * df, 0.5, df / (df + x * x))
    return 1.0 - tail if x > 0 else tail


def t_quantile(p: float, df: float) -> float:
    """Quantile of Student's t with ``df`` degrees of freedom, by bisection on the CDF."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if not df > 0:
        raise ValueError(f"df must be positive, got {df}")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df)
    lo, hi = 0.0, 1.0
    while t_cdf(hi, df) < p:
        lo, hi = hi, 2.0 * hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    return 0.5 * (lo + hi)


def confidence_interval(summary: ReplicationSummary, alpha: float = 0.05) -> tuple[float, float]:
    """Two-sided ``1 - alpha`` Student-t interval for the mean."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if summary.M < 2:
        raise ValueError("a confidence interval needs at least two samples")
    half = t_quantile(1.0 - alpha / 2.0, summary.M - 1) * math.sqrt(summary.sample_var / summary.M)
    return summary.mean - half, summary.mean + half


# --------------------------------------------------------------------------
# diagnostics


def centered_arm_sum(traj, instance, arm: int) -> float:
    """Sum of ``reward - mean`` over the steps of ``traj`` that pulled ``arm``."""
    a = instance.check_arm(arm)
    mask = np.asarray(traj.arms) == arm
    rewards = np.asarray(traj.rewards, dtype=float)[mask]
    return float((rewards - instance.means[a]).sum())


def variance_report(naive_reward0: Sequence[float], naive_reward1: Sequence[float],
                    ar_theta: Sequence[float], horizon: int | None = None) -> dict:
    """Empirical variances of the naive and artificial-replay estimators.

    The naive variance is reported both directly from the per-run
    differences (``var_b``) and as the sum of the two marginal
    cumulative-reward variances (``var_b_sum``).
    """
    r0 = np.asarray(naive_reward0, dtype=float)
    r1 = np.asarray(naive_reward1, dtype=float)
    ar = np.asarray(ar_theta, dtype=float)
    if r0.shape != r1.shape:
        raise ValueError("naive cumulative-reward samples must be aligned")
    out = {
        "var_b": float(np.var(r1 - r0, ddof=1)),
        "var_b_sum": float(np.var(r0, ddof=1) + np.var(r1, ddof=1)),
        "var_ar": float(np.var(ar, ddof=1)),
    }
    if horizon is not None:
        out["var_b_over_T"] = out["var_b"] / horizon
        out["var_ar_over_T"] = out["var_ar"] / horizon
    return out
