"""Distributional checks of the artificial-replay design.

Two kinds of oracle live here:

* two-sample tests (chi-square on binned counts, Kolmogorov-Smirnov) applied
  to a battery of summary statistics from many simulated runs;
* an exact enumerator that lists every outcome of a tiny Bernoulli
  experiment with its probability.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import chi2

from .designs import RunBatch, simulate
from .env import BanditInstance, Bernoulli
from .policies import Policy, TSBernoulli, TSGaussian, UCBDelta


@dataclass
class TestReport:
    name: str
    statistic: float
    p_value: float
    passed: bool
    level: float
    sizes: tuple[int, int]

    __test__ = False  # not a pytest class

    def as_row(self) -> dict:
        return {"test": self.name, "statistic": self.statistic, "p_value": self.p_value,
                "pass": self.passed}


# --------------------------------------------------------------------------
# two-sample tests


def _merge_sparse_bins(a: np.ndarray, b: np.ndarray, min_expected: float = 5.0):
    """Merge adjacent bins until every pooled expected count is at least ``min_expected``."""
    na, nb = a.sum(), b.sum()
    frac_small = min(na, nb) / (na + nb)
    merged_a, merged_b = [], []
    acc_a = acc_b = 0
    for x, y in zip(a, b):
        acc_a += x
        acc_b += y
        if (acc_a + acc_b) * frac_small >= min_expected:
            merged_a.append(acc_a)
            merged_b.append(acc_b)
            acc_a = acc_b = 0
    if acc_a + acc_b > 0:
        if merged_a:
            merged_a[-1] += acc_a
            merged_b[-1] += acc_b
        else:
            merged_a.append(acc_a)
            merged_b.append(acc_b)
    return np.array(merged_a, dtype=float), np.array(merged_b, dtype=float)


def chi_square_two_sample(hist_a: Sequence[float], hist_b: Sequence[float], *,
                          name: str = "chi_square", level: float = 0.01) -> TestReport:
    """Two-sample chi-square homogeneity test on two histograms over the same ordered bins."""
    a = np.asarray(hist_a, dtype=float)
    b = np.asarray(hist_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("histograms must be 1-d over the same bins")
    if a.sum() <= 0 or b.sum() <= 0:
        raise ValueError("histograms must be nonempty")
    a, b = _merge_sparse_bins(a, b)
    na, nb = a.sum(), b.sum()
    if a.size < 2:
        stat, p = 0.0, 1.0
    else:
        pooled = a + b
        ea = pooled * na / (na + nb)
        eb = pooled * nb / (na + nb)
        stat = float(((a - ea) ** 2 / ea).sum() + ((b - eb) ** 2 / eb).sum())
        p = float(chi2.sf(stat, a.size - 1))
    return TestReport(name, stat, p, p > level, level, (int(na), int(nb)))


def chi_square_samples(samples_a, samples_b, **kwargs) -> TestReport:
    """Chi-square test on two samples of a discrete variable, binned by value."""
    sa = np.asarray(samples_a)
    sb = np.asarray(samples_b)
    values = np.union1d(sa, sb)
    hist_a = np.searchsorted(values, sa)
    hist_b = np.searchsorted(values, sb)
    return chi_square_two_sample(np.bincount(hist_a, minlength=values.size),
                                 np.bincount(hist_b, minlength=values.size), **kwargs)


def kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.0:
        # small-argument series converges fast here
        s = sum(math.exp(-((2 * k - 1) ** 2) * math.pi ** 2 / (8 * lam * lam)) for k in range(1, 20))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2 * math.pi) / lam * s))
    s = sum((-1) ** (k - 1) * math.exp(-2 * k * k * lam * lam) for k in range(1, 101))
    return min(1.0, max(0.0, 2.0 * s))


def ks_two_sample(samples_a, samples_b, *, name: str = "ks", level: float = 0.01) -> TestReport:
    """Two-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    a = np.sort(np.asarray(samples_a, dtype=float))
    b = np.sort(np.asarray(samples_b, dtype=float))
    if a.size < 20 or b.size < 20:
        raise ValueError("ks_two_sample needs at least 20 samples per group")
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, grid, side="right") / a.size
    cdf_b = np.searchsorted(b, grid, side="right") / b.size
    d = float(np.abs(cdf_a - cdf_b).max())
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    p = kolmogorov_sf(en * d)
    return TestReport(name, d, p, p > level, level, (a.size, b.size))


def _compare(name, xa, xb, discrete, level):
    if discrete:
        return chi_square_samples(xa, xb, name=name, level=level)
    return ks_two_sample(xa, xb, name=name, level=level)


def _integer_rewards(instance: BanditInstance) -> bool:
    return all(isinstance(arm, Bernoulli) for arm in instance.arms)


# --------------------------------------------------------------------------
# statistical battery


def equivalence_battery(ar: RunBatch, stack: RunBatch, naive: RunBatch, instance: BanditInstance,
                        family_level: float = 0.01) -> list[TestReport]:
    """Compare AR with shared-stack runs and shared-stack marginals with naive runs.

    Every test runs at the Bonferroni level ``family_level / n_tests``.
    """
    K = instance.K
    discrete = _integer_rewards(instance)
    specs = []
    T = ar.horizon
    for i, (pa, ps) in enumerate(((ar.pulls0, stack.pulls0), (ar.pulls1, stack.pulls1))):
        for a in range(K):
            specs.append((f"T={T} ar_vs_stack pulls pi{i} arm{a + 1}", pa[:, a], ps[:, a], True))
    specs.append((f"T={T} ar_vs_stack theta", ar.theta, stack.theta, discrete))
    specs.append((f"T={T} ar_vs_stack n_env", ar.n_env, stack.n_env, True))
    for i, (ps, pn, rs, rn) in enumerate(((stack.pulls0, naive.pulls0, stack.reward0, naive.reward0),
                                          (stack.pulls1, naive.pulls1, stack.reward1, naive.reward1))):
        for a in range(K):
            specs.append((f"T={T} stack_vs_naive pulls pi{i} arm{a + 1}", ps[:, a], pn[:, a], True))
        specs.append((f"T={T} stack_vs_naive reward pi{i}", rs, rn, discrete))
    level = family_level / len(specs)
    return [_compare(name, xa, xb, disc, level) for name, xa, xb, disc in specs]


def _config_parts(config):
    return config.instance, config.policy0, config.policy1, config.horizons, config.master_seed


def check_equivalence(config, M: int | None = None, *, horizons=None, family_level: float = 0.01,
                      n_jobs: int = 1, _mutation: str | None = None) -> list[TestReport]:
    """Run M replications of each design per horizon and apply :func:`equivalence_battery`.

    The Bonferroni correction spans every test across all horizons.
    ``_mutation`` injects a known defect into the AR or shared-stack runner.
    """
    instance, pi0, pi1, cfg_horizons, seed = _config_parts(config)
    M = M or getattr(config, "M_var", 10_000)
    horizons = list(horizons or cfg_horizons)
    ar_mut = _mutation if _mutation in ("lifo_replay", "replay_without_marking") else None
    stack_mut = _mutation if _mutation == "stack_shared_across_arms" else None
    batteries = []
    for T in horizons:
        ar = simulate("ar", pi0, pi1, instance, T, M, seed, n_jobs=n_jobs, _mutation=ar_mut)
        stack = simulate("shared_stack", pi0, pi1, instance, T, M, seed, n_jobs=n_jobs,
                         _mutation=stack_mut)
        naive = simulate("naive", pi0, pi1, instance, T, M, seed, n_jobs=n_jobs)
        batteries.append(equivalence_battery(ar, stack, naive, instance, family_level))
    n_tests = sum(len(b) for b in batteries)
    level = family_level / n_tests
    reports = []
    for battery in batteries:
        for r in battery:
            reports.append(TestReport(r.name, r.statistic, r.p_value, r.p_value > level, level,
                                      r.sizes))
    return reports


def symmetry_test(original: RunBatch, swapped: RunBatch, instance: BanditInstance,
                  level: float = 0.01, *, _forget_sign: bool = False) -> TestReport:
    """Two-sample test of theta from the original against the role-swapped AR runs."""
    theta_swapped = swapped.theta
    if _forget_sign:
        # what a role-swapped runner reports if it keeps its own orientation
        theta_swapped = -theta_swapped
    return _compare(f"T={original.horizon} symmetry theta", original.theta, theta_swapped,
                    _integer_rewards(instance), level)


def check_symmetry(config, M: int | None = None, *, horizon: int | None = None,
                   level: float = 0.01, n_jobs: int = 1,
                   _forget_sign: bool = False) -> TestReport:
    """Compare theta from AR(pi0 first) with sign-adjusted theta from AR(pi1 first)."""
    instance, pi0, pi1, cfg_horizons, seed = _config_parts(config)
    M = M or getattr(config, "M_var", 10_000)
    T = horizon or cfg_horizons[-1]
    original = simulate("ar", pi0, pi1, instance, T, M, seed, n_jobs=n_jobs)
    swapped = simulate("ar", pi0, pi1, instance, T, M, seed, n_jobs=n_jobs, swapped=True)
    return symmetry_test(original, swapped, instance, level, _forget_sign=_forget_sign)


# --------------------------------------------------------------------------
# exact oracle

Outcome = tuple[tuple[tuple[int, float], ...], tuple[tuple[int, float], ...]]


def _check_enumerable(instance: BanditInstance, policies: Sequence[Policy], T: int):
    if not _integer_rewards(instance):
        raise ValueError("exact enumeration needs Bernoulli arms")
    if instance.K > 2 or T > 4:
        raise ValueError("exact enumeration is limited to K <= 2 and T <= 4")
    for p in policies:
        if isinstance(p, (TSBernoulli, TSGaussian)):
            raise ValueError(f"{p.kind} has no closed-form action distribution")


def _paths(policy: Policy, K: int, T: int, reward_options):
    """Yield ``(trajectory, probability)`` for every path of ``policy``.

    ``reward_options(arm, n, prefix)`` lists ``(reward, prob)`` for the n-th
    (0-based) pull of ``arm`` after the trajectory ``prefix``.
    """
    def rec(state, prefix, prob):
        t = len(prefix) + 1
        if t > T:
            yield tuple(prefix), prob
            return
        dist = policy.action_distribution(state, t)
        for a0 in np.flatnonzero(dist > 0):
            arm = int(a0) + 1
            for reward, q in reward_options(arm, int(state.counts[a0]), prefix):
                if q == 0.0:
                    continue
                nxt = state.copy()
                policy.update(nxt, arm, reward)
                yield from rec(nxt, prefix + [(arm, reward)], prob * dist[a0] * q)

    yield from rec(policy.initial_state(K), [], 1.0)


def brute_force_distribution(instance: BanditInstance, pi0: Policy, pi1: Policy, T: int,
                             design: str = "ar") -> dict[Outcome, float]:
    """Exact law of ``(traj0, traj1)`` as a map from outcome to probability.

    Trajectories are tuples of ``(arm, reward)`` pairs with 1-based arms.
    """
    if isinstance(pi0, UCBDelta):
        pi0 = pi0.for_horizon(T) if pi0.delta is None else pi0
    if isinstance(pi1, UCBDelta):
        pi1 = pi1.for_horizon(T) if pi1.delta is None else pi1
    _check_enumerable(instance, (pi0, pi1), T)
    K = instance.K
    p = instance.means

    def fresh(arm, n, prefix):
        return ((1.0, p[arm - 1]), (0.0, 1.0 - p[arm - 1]))

    out: dict[Outcome, float] = defaultdict(float)
    if design == "naive":
        paths1 = list(_paths(pi1, K, T, fresh))
        for tr0, q0 in _paths(pi0, K, T, fresh):
            for tr1, q1 in paths1:
                out[(tr0, tr1)] += q0 * q1
    elif design == "ar":
        for tr0, q0 in _paths(pi0, K, T, fresh):
            logged = [[r for a, r in tr0 if a == arm] for arm in range(1, K + 1)]

            def replay(arm, n, prefix, logged=logged):
                if n < len(logged[arm - 1]):
                    return ((logged[arm - 1][n], 1.0),)
                return fresh(arm, n, prefix)

            for tr1, q1 in _paths(pi1, K, T, replay):
                out[(tr0, tr1)] += q0 * q1
    elif design == "shared_stack":
        for bits in itertools.product((0.0, 1.0), repeat=K * T):
            X = np.array(bits).reshape(K, T)
            q = float(np.prod(np.where(X == 1.0, p[:, None], 1.0 - p[:, None])))
            if q == 0.0:
                continue
            read = lambda arm, n, prefix, X=X: ((X[arm - 1, n], 1.0),)  # noqa: E731
            paths1 = list(_paths(pi1, K, T, read))
            for tr0, q0 in _paths(pi0, K, T, read):
                for tr1, q1 in paths1:
                    out[(tr0, tr1)] += q * q0 * q1
    else:
        raise ValueError(f"unknown design {design!r}")
    return dict(out)


def marginal(dist: dict[Outcome, float], policy: int) -> dict:
    """Law of one policy's trajectory under a joint outcome distribution."""
    out: dict = defaultdict(float)
    for outcome, prob in dist.items():
        out[outcome[policy]] += prob
    return dict(out)


def max_atom_difference(d1: dict, d2: dict) -> float:
    keys = set(d1) | set(d2)
    return max(abs(d1.get(k, 0.0) - d2.get(k, 0.0)) for k in keys)
