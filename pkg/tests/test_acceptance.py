"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``CRITERION n: PASS|FAIL`` line with the measured values
and then asserts.  Simulation batches (M = 10^4 per design and horizon) are
cached for the session so criteria that share a preset reuse the runs.
"""
import functools
import math

import numpy as np
import pytest
from scipy import integrate, optimize

from arreplay.config import DEFAULT_HORIZONS, preset
from arreplay.designs import simulate
from arreplay.env import BanditInstance
from arreplay.equivtest import (brute_force_distribution, check_equivalence, check_symmetry,
                                chi_square_samples, ks_two_sample, max_atom_difference)
from arreplay.policies import UCB1, EpsGreedy, UCBDelta
from arreplay.stats import t_quantile

M = 10_000
pytestmark = pytest.mark.slow


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} -- {detail}")
    assert ok, detail


@functools.lru_cache(maxsize=None)
def batch(example, design, T):
    cfg = preset(example)
    return simulate(design, cfg.policy0, cfg.policy1, cfg.instance, T, M, cfg.master_seed)


def mean_interactions(example):
    return [float(batch(example, "ar", T).n_env.mean()) for T in DEFAULT_HORIZONS]


def within(values, targets, rel):
    return all(abs(v - t) <= rel * t for v, t in zip(values, targets))


def test_criterion_01_table1(capsys):
    got = mean_interactions("example1")
    target = [10.46, 102.44, 1027.08, 10092.58]
    report(capsys, 1, within(got, target, 0.02), f"AR interactions {got} vs {target} (+-2%)")


def test_criterion_02_table2(capsys):
    got = mean_interactions("example2")
    target = [11.05, 109.52, 1038.62, 10076.03]
    report(capsys, 2, within(got, target, 0.02), f"AR interactions {got} vs {target} (+-2%)")


def test_criterion_03_interaction_bound(capsys):
    worst = math.inf
    sums_ok = True
    for example in ("example1", "example2", "example3"):
        inst = preset(example).instance
        best, _ = inst.optimal_arm()
        sub = np.ones(inst.K, dtype=bool)
        sub[best - 1] = False
        for T in DEFAULT_HORIZONS:
            b = batch(example, "ar", T)
            bound = np.minimum(T + b.pulls0[:, sub].sum(1) + b.pulls1[:, sub].sum(1),
                               2 * T - b.n_replay)
            worst = min(worst, int((bound - b.n_env).min()))
            sums_ok &= bool((b.n_env + b.n_replay == 2 * T).all())
    ok = worst >= 0 and sums_ok
    report(capsys, 3, ok, f"min slack of bound over all runs = {worst}; n_env+n_replay=2T: {sums_ok}")


def test_criterion_04_unbiased(capsys):
    ar, naive = batch("example1", "ar", 1000), batch("example1", "naive", 1000)
    diff = ar.theta.mean() - naive.theta.mean()
    se = math.sqrt(np.var(ar.theta, ddof=1) / M + np.var(naive.theta, ddof=1) / M)
    report(capsys, 4, abs(diff) <= 4 * se,
           f"mean AR {ar.theta.mean():.3f}, naive {naive.theta.mean():.3f}, |diff| = {abs(diff):.3f} "
           f"<= 4 SE = {4 * se:.3f}")


def test_criterion_05_variance(capsys):
    vb = {T: np.var(batch("example2", "naive", T).theta, ddof=1) / T for T in (1000, 10_000)}
    va = {T: np.var(batch("example2", "ar", T).theta, ddof=1) / T for T in (1000, 10_000)}
    flat = abs(vb[10_000] / vb[1000] - 1) <= 0.15
    ok = (abs(vb[10_000] - 0.42) <= 0.15 * 0.42 and va[10_000] <= 0.1 * vb[10_000]
          and flat and va[10_000] < va[1000])
    report(capsys, 5, ok, f"Var_b/T {vb[1000]:.4f} -> {vb[10_000]:.4f} (target 0.42 +-15%, flat "
           f"within 15%); Var_AR/T {va[1000]:.4f} -> {va[10_000]:.4f} (<= 0.1 Var_b/T, decreasing)")


def test_criterion_06_equivalence(capsys):
    inst = BanditInstance.bernoulli([0.7, 0.4])
    pairs = [(UCB1(2.0), EpsGreedy(0.3)), (EpsGreedy(0.2), UCB1(3.0)), (UCBDelta(), UCB1(2.0))]
    exact = max(max_atom_difference(brute_force_distribution(inst, p0, p1, T, "ar"),
                                    brute_force_distribution(inst, p0, p1, T, "shared_stack"))
                for p0, p1 in pairs for T in (1, 2, 3, 4))
    cfg = preset("example1")
    clean = check_equivalence(cfg, M, horizons=[1000])
    clean_ok = all(r.passed for r in clean)
    detected = {}
    for mutation in ("lifo_replay", "replay_without_marking", "stack_shared_across_arms"):
        reps = check_equivalence(cfg, M, horizons=[100], _mutation=mutation)
        detected[mutation] = not all(r.passed for r in reps)
    ok = exact <= 1e-12 and clean_ok and all(detected.values())
    report(capsys, 6, ok, f"exact max atom diff {exact:.2e}; battery {sum(r.passed for r in clean)}/"
           f"{len(clean)} pass (min p {min(r.p_value for r in clean):.2e}); mutations detected "
           f"{detected}")


def test_criterion_07_symmetry(capsys):
    rep = check_symmetry(preset("example2"), M, horizon=1000)
    report(capsys, 7, rep.passed, f"{rep.name}: statistic {rep.statistic:.4f}, p = {rep.p_value:.4f}")


def _var_se(x):
    """Standard error of the unbiased sample variance, from the fourth central moment."""
    n = x.size
    d = x - x.mean()
    m2, m4 = np.mean(d ** 2), np.mean(d ** 4)
    return math.sqrt(max(m4 - m2 ** 2 * (n - 3) / (n - 1), 0.0) / n)


def test_criterion_08_moment_transfer(capsys):
    T = 1000
    designs = {d: batch("example1", d, T) for d in ("naive", "ar", "shared_stack")}
    inst = preset("example1").instance
    worst_mean = worst_var = worst_id = 0.0
    for pulls in ("pulls0", "pulls1"):
        ref = getattr(designs["naive"], pulls)
        for other in ("ar", "shared_stack"):
            x = getattr(designs[other], pulls)
            for a in range(inst.K):
                u, v = ref[:, a].astype(float), x[:, a].astype(float)
                se_m = math.sqrt(u.var(ddof=1) / M + v.var(ddof=1) / M)
                if se_m > 0:
                    worst_mean = max(worst_mean, abs(u.mean() - v.mean()) / se_m)
                se_v = math.hypot(_var_se(u), _var_se(v))
                if se_v > 0:
                    worst_var = max(worst_var, abs(u.var(ddof=1) - v.var(ddof=1)) / se_v)
    stack = designs["shared_stack"]
    for centered, pulls in ((stack.centered0, stack.pulls0), (stack.centered1, stack.pulls1)):
        for a in range(inst.K):
            s = centered[:, a]
            target = inst.variances[a] * pulls[:, a].mean()
            se = math.hypot(_var_se(s), inst.variances[a] * pulls[:, a].std(ddof=1) / math.sqrt(M))
            worst_id = max(worst_id, abs(s.var(ddof=1) - target) / se)
    ok = worst_mean <= 3 and worst_var <= 3 and worst_id <= 3
    report(capsys, 8, ok, f"max |z| pull means {worst_mean:.2f}, pull variances {worst_var:.2f}, "
           f"centered-sum identity {worst_id:.2f} (all <= 3)")


def test_criterion_09_pull_count_variance(capsys):
    # policy0 of the Example 1 preset is UCB1 with alpha = 2.5
    assert preset("example1").policy0 == UCB1(2.5)
    lo, hi = batch("example1", "naive", 100), batch("example1", "naive", 10_000)
    lines, ok = [], True
    for a in range(1, 5):
        v_lo = lo.pulls0[:, a].var(ddof=1)
        v_hi = hi.pulls0[:, a].var(ddof=1)
        r_lo, r_hi = v_lo / math.log(100) ** 2, v_hi / math.log(10_000) ** 2
        arm_ok = r_hi <= 3 * r_lo and v_hi / 10_000 < 0.05
        ok &= arm_ok
        lines.append(f"arm{a + 1}: Var/(logT)^2 {r_lo:.3f}->{r_hi:.3f}, Var/T(1e4) "
                     f"{v_hi / 10_000:.4f} {'ok' if arm_ok else 'X'}")
    report(capsys, 9, ok, "; ".join(lines))


def test_criterion_10_example3(capsys):
    ratio = batch("example3", "ar", 10_000).n_env.mean() / 10_000
    var_ok = {T: np.var(batch("example3", "ar", T).theta, ddof=1)
              < np.var(batch("example3", "naive", T).theta, ddof=1) for T in (1000, 10_000)}
    ts = batch("example3", "naive", 10_000).pulls0[:, 1].var(ddof=1) / 10_000
    ok = 1.0 <= ratio <= 1.2 and all(var_ok.values()) and ts > 1
    report(capsys, 10, ok, f"AR interactions/T {ratio:.4f} in [1, 1.2]; Var_AR < Var_b {var_ok}; "
           f"TS Var(N_2)/T {ts:.3f} > 1")


def test_criterion_11_calibration(capsys):
    rng = np.random.default_rng(2024)
    trials = 1000
    chi = sum(not chi_square_samples(rng.binomial(8, 0.4, 400), rng.binomial(8, 0.4, 400),
                                     level=0.05).passed for _ in range(trials)) / trials
    ks = sum(not ks_two_sample(rng.normal(size=400), rng.normal(size=400),
                               level=0.05).passed for _ in range(trials)) / trials
    ok = abs(chi - 0.05) <= 0.02 and abs(ks - 0.05) <= 0.02
    report(capsys, 11, ok, f"rejection rates chi2 {chi:.3f}, KS {ks:.3f} (0.05 +- 0.02)")


def _oracle_quantile(p, df):
    c = math.exp(math.lgamma((df + 1) / 2) - math.lgamma(df / 2)) / math.sqrt(df * math.pi)
    pdf = lambda x: c * (1 + x * x / df) ** (-(df + 1) / 2)  # noqa: E731
    cdf = lambda x: 0.5 + integrate.quad(pdf, 0, x, epsabs=1e-13)[0]  # noqa: E731
    return optimize.brentq(lambda x: cdf(x) - p, 0, 10 / (1 - p) ** (1 / df), xtol=1e-12)


def test_criterion_12_t_quantile(capsys):
    grid = [(p, df) for p in (0.9, 0.95, 0.975, 0.995) for df in (1, 2, 3, 9, 29, 99, 9999)]
    err = max(abs(t_quantile(p, df) - _oracle_quantile(p, df)) for p, df in grid)
    q = t_quantile(0.995, 9)
    ok = err <= 1e-4 and abs(q - 3.2498) <= 1e-4
    report(capsys, 12, ok, f"max abs error {err:.2e} over {len(grid)} points; t(0.995, 9) = {q:.6f}")
