"""Compiled single-run simulation kernels.

These mirror the pure-Python policies and designs step for step and consume
the generators in the same order, so both paths give bit-identical runs.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

from .policies import (EPS_GREEDY_CODE, FIXED, TS_BERNOULLI_CODE, TS_GAUSSIAN_CODE,
                       UCB1_CODE, UCB_DELTA_CODE)

NAIVE, AR, STACK = 0, 1, 2
ENV, REPLAY = 0, 1

# seeded defects used to check that the equivalence tests have power
NO_MUTATION, LIFO_REPLAY, REPLAY_WITHOUT_MARKING, STACK_SHARED_ACROSS_ARMS = 0, 1, 2, 3


@njit(cache=True)
def _draw(kind, mean, sd, g):
    if kind == 0:
        return 1.0 if g.random() < mean else 0.0
    return mean + sd * g.standard_normal()


@njit(cache=True)
def _select(code, params, counts, sums, t, g):
    K = counts.shape[0]
    if code == FIXED:
        return int(params[t - 1]) - 1
    for a in range(K):
        if counts[a] == 0:
            return a
    best = 0
    if code == UCB1_CODE or code == UCB_DELTA_CODE:
        if code == UCB1_CODE:
            num = params[0] * math.log(t - params[1])
        else:
            num = params[0]
        best_v = sums[0] / counts[0] + math.sqrt(num / counts[0])
        for a in range(1, K):
            v = sums[a] / counts[a] + math.sqrt(num / counts[a])
            if v > best_v:
                best, best_v = a, v
    elif code == TS_BERNOULLI_CODE:
        best_v = g.beta(params[0] + sums[0], (params[1] + counts[0]) - sums[0])
        for a in range(1, K):
            v = g.beta(params[0] + sums[a], (params[1] + counts[a]) - sums[a])
            if v > best_v:
                best, best_v = a, v
    elif code == TS_GAUSSIAN_CODE:
        pm, pv, ov = params[0], params[1], params[2]
        best_v = -np.inf
        for a in range(K):
            prec = 1.0 / pv + counts[a] / ov
            mean = (pm / pv + sums[a] / ov) / prec
            v = mean + math.sqrt(1.0 / prec) * g.standard_normal()
            if a == 0 or v > best_v:
                best, best_v = a, v
    elif code == EPS_GREEDY_CODE:
        if g.random() < params[0]:
            return min(int(g.random() * K), K - 1)
        best_v = sums[0] / counts[0]
        for a in range(1, K):
            v = sums[a] / counts[a]
            if v > best_v:
                best, best_v = a, v
    return best


@njit(cache=True)
def run_pair(design, mutation, T, kinds, means, sds, code0, params0, code1, params1,
             g_env, g0, g1, arms0, rew0, arms1, rew1, src1, stack):
    """Simulate one two-policy run, writing 0-based arms and rewards into the outputs.

    ``stack`` must be a (K, T) buffer for the shared-stack design and is
    filled with the pre-drawn rewards; other designs ignore it.
    """
    K = kinds.shape[0]
    c0 = np.zeros(K, dtype=np.int64)
    s0 = np.zeros(K)
    c1 = np.zeros(K, dtype=np.int64)
    s1 = np.zeros(K)

    if design == STACK:
        if mutation == STACK_SHARED_ACROSS_ARMS:
            for k in range(T):
                u = g_env.random()
                z = g_env.standard_normal()
                for a in range(K):
                    if kinds[a] == 0:
                        stack[a, k] = 1.0 if u < means[a] else 0.0
                    else:
                        stack[a, k] = means[a] + sds[a] * z
        else:
            for a in range(K):
                for k in range(T):
                    stack[a, k] = _draw(kinds[a], means[a], sds[a], g_env)

    queue = np.empty((K, T if design == AR else 1))
    for t in range(1, T + 1):
        a = _select(code0, params0, c0, s0, t, g0)
        if design == STACK:
            r = stack[a, c0[a]]
        else:
            r = _draw(kinds[a], means[a], sds[a], g_env)
        if design == AR:
            queue[a, c0[a]] = r
        arms0[t - 1] = a
        rew0[t - 1] = r
        c0[a] += 1
        s0[a] += r

    head = np.zeros(K, dtype=np.int64)
    for t in range(1, T + 1):
        a = _select(code1, params1, c1, s1, t, g1)
        src = ENV
        if design == STACK:
            r = stack[a, c1[a]]
        elif design == AR and mutation == REPLAY_WITHOUT_MARKING and c0[a] > 0:
            r = queue[a, 0]
            src = REPLAY
        elif design == AR and mutation != REPLAY_WITHOUT_MARKING and head[a] < c0[a]:
            if mutation == LIFO_REPLAY:
                r = queue[a, c0[a] - 1 - head[a]]
            else:
                r = queue[a, head[a]]
            head[a] += 1
            src = REPLAY
        else:
            r = _draw(kinds[a], means[a], sds[a], g_env)
        arms1[t - 1] = a
        rew1[t - 1] = r
        src1[t - 1] = src
        c1[a] += 1
        s1[a] += r
