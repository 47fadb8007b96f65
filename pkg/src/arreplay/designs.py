"""Experiment mechanics: naive independent runs, artificial replay, shared reward stacks.

Each design comes in two engines that consume the run's generators in the
same order and therefore agree bit for bit:

* ``"numba"`` (default) runs the compiled kernel in :mod:`arreplay._kernels`;
* ``"python"`` steps the public :mod:`arreplay.policies` objects directly and
  serves as a readable reference.

Arms are 1-based in every returned object.
"""
from __future__ import annotations

import csv
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .env import BanditInstance, sample_reward
from .policies import Policy, UCBDelta
from .streams import RunStreams, as_run_streams

ENVIRONMENT, REPLAY = "environment", "replay"
DESIGNS = ("naive", "ar", "shared_stack")
_DESIGN_CODES = {"naive": _kernels.NAIVE, "ar": _kernels.AR, "shared_stack": _kernels.STACK}
MUTATIONS = {
    None: _kernels.NO_MUTATION,
    "lifo_replay": _kernels.LIFO_REPLAY,
    "replay_without_marking": _kernels.REPLAY_WITHOUT_MARKING,
    "stack_shared_across_arms": _kernels.STACK_SHARED_ACROSS_ARMS,
}


@dataclass
class Trajectory:
    """Ordered action-reward sequence of one policy; ``arms`` are 1-based."""

    arms: np.ndarray
    rewards: np.ndarray
    replayed: np.ndarray = None

    def __post_init__(self):
        self.arms = np.asarray(self.arms, dtype=np.int64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        if self.replayed is None:
            self.replayed = np.zeros(self.arms.shape[0], dtype=bool)
        self.replayed = np.asarray(self.replayed, dtype=bool)
        if not (self.arms.shape == self.rewards.shape == self.replayed.shape):
            raise ValueError("arms, rewards and source flags must have equal length")

    def __len__(self):
        return self.arms.shape[0]

    def __iter__(self):
        return iter(zip(self.arms.tolist(), self.rewards.tolist()))

    @property
    def sources(self) -> list[str]:
        return [REPLAY if r else ENVIRONMENT for r in self.replayed]

    def total_reward(self) -> float:
        return float(self.rewards.sum())

    def pull_counts(self, K: int, t: int | None = None) -> np.ndarray:
        arms = self.arms if t is None else self.arms[:t]
        return np.bincount(arms - 1, minlength=K)[:K]

    def steps(self) -> list[tuple[int, float, str]]:
        return list(zip(self.arms.tolist(), self.rewards.tolist(), self.sources))


@dataclass
class ARRunRecord:
    """One artificial-replay run: both trajectories and the interaction counters."""

    traj0: Trajectory
    traj1: Trajectory
    n_env: int
    n_replay: int
    pulls0: np.ndarray
    pulls1: np.ndarray

    @property
    def theta_hat(self) -> float:
        return self.traj1.total_reward() - self.traj0.total_reward()


@dataclass
class RewardStacks:
    """Pre-drawn rewards ``X[a, k]`` (0-based) and how deep each policy read."""

    X: np.ndarray
    depth0: np.ndarray
    depth1: np.ndarray

    def cells_read_by_both(self) -> int:
        return int(np.minimum(self.depth0, self.depth1).sum())

    def cells_read_by_any(self) -> int:
        return int(np.maximum(self.depth0, self.depth1).sum())


def count_pulls(traj: Trajectory, arm: int, t: int | None = None) -> int:
    """Number of the first ``t`` steps of ``traj`` that pulled ``arm``."""
    T = len(traj)
    t = T if t is None else t
    if not 0 <= t <= T:
        raise ValueError(f"period {t} outside 0..{T}")
    return int(np.count_nonzero(traj.arms[:t] == arm))


def interaction_counts(pulls0: Sequence[int], pulls1: Sequence[int]) -> tuple[int, int]:
    """``(n_env, n_replay)`` = (sum of per-arm max, sum of per-arm min)."""
    p0 = np.asarray(pulls0, dtype=np.int64)
    p1 = np.asarray(pulls1, dtype=np.int64)
    if p0.shape != p1.shape or p0.ndim != 1:
        raise ValueError("pull-count vectors must be 1-d with equal length")
    if p0.sum() != p1.sum():
        raise ValueError(f"pull counts sum to {p0.sum()} and {p1.sum()}; horizons differ")
    if (p0 < 0).any() or (p1 < 0).any():
        raise ValueError("pull counts must be nonnegative")
    return int(np.maximum(p0, p1).sum()), int(np.minimum(p0, p1).sum())


def _check_horizon(T) -> int:
    if isinstance(T, bool) or not isinstance(T, (int, np.integer)) or T < 1:
        raise ValueError(f"horizon must be a positive integer, got {T!r}")
    return int(T)


def _bind(policy: Policy, T: int) -> Policy:
    if isinstance(policy, UCBDelta) and policy.delta is None and policy.horizon is None:
        return policy.for_horizon(T)
    return policy


# --------------------------------------------------------------------------
# compiled engine


def _kernel_run(design, pi0, pi1, instance, T, streams, mutation=None):
    K = instance.K
    kinds, means, sds = instance._kernel_arrays()
    arms0 = np.empty(T, dtype=np.int64)
    arms1 = np.empty(T, dtype=np.int64)
    rew0 = np.empty(T)
    rew1 = np.empty(T)
    src1 = np.empty(T, dtype=np.int64)
    stack = np.empty((K, T) if design == "shared_stack" else (1, 1))
    _kernels.run_pair(
        _DESIGN_CODES[design], MUTATIONS[mutation], T, kinds, means, sds,
        pi0.code, pi0.kernel_params(T), pi1.code, pi1.kernel_params(T),
        streams.rewards, streams.policy0, streams.policy1,
        arms0, rew0, arms1, rew1, src1, stack,
    )
    return arms0 + 1, rew0, arms1 + 1, rew1, src1.astype(bool), stack


# --------------------------------------------------------------------------
# reference engine


def _play(policy: Policy, K: int, T: int, rng, reward_for: Callable[[int, int], tuple]):
    """Step ``policy`` for T periods; ``reward_for(arm, n)`` returns (reward, replayed)."""
    state = policy.initial_state(K)
    arms, rewards, flags = [], [], []
    for t in range(1, T + 1):
        a = policy.select(state, t, rng)
        r, replayed = reward_for(a, int(state.counts[a - 1]))
        policy.update(state, a, r)
        arms.append(a)
        rewards.append(r)
        flags.append(replayed)
    return Trajectory(arms, rewards, flags)


def artificial_replay(pi0: Policy, pi1: Policy, K: int, T: int,
                      draw0: Callable[[int], float], draw1: Callable[[int], float],
                      rng0=None, rng1=None) -> tuple[Trajectory, Trajectory]:
    """Two-phase artificial replay against arbitrary environment draw functions.

    Phase 1 plays ``pi0`` with rewards from ``draw0``.  In phase 2, each arm
    pulled by ``pi1`` takes the earliest not-yet-replayed reward that ``pi0``
    observed on that arm, or a fresh ``draw1`` when none is left.
    """
    traj0 = _play(pi0, K, T, rng0, lambda a, n: (draw0(a), False))
    logs = [deque() for _ in range(K)]
    for a, r in traj0:
        logs[a - 1].append(r)

    def replay_or_draw(a, n):
        if logs[a - 1]:
            return logs[a - 1].popleft(), True
        return draw1(a), False

    traj1 = _play(pi1, K, T, rng1, replay_or_draw)
    return traj0, traj1


def _python_run(design, pi0, pi1, instance, T, streams):
    K = instance.K
    draw = lambda a: sample_reward(instance, a, streams.rewards)  # noqa: E731
    if design == "naive":
        t0 = _play(pi0, K, T, streams.policy0, lambda a, n: (draw(a), False))
        t1 = _play(pi1, K, T, streams.policy1, lambda a, n: (draw(a), False))
        return t0, t1, None
    if design == "ar":
        t0, t1 = artificial_replay(pi0, pi1, K, T, draw, draw, streams.policy0, streams.policy1)
        return t0, t1, None
    X = np.array([[sample_reward(instance, a + 1, streams.rewards) for _ in range(T)]
                  for a in range(K)])
    t0 = _play(pi0, K, T, streams.policy0, lambda a, n: (X[a - 1, n], False))
    t1 = _play(pi1, K, T, streams.policy1, lambda a, n: (X[a - 1, n], False))
    return t0, t1, X


def _run(design, pi0, pi1, instance, T, rng, engine, mutation=None):
    T = _check_horizon(T)
    pi0, pi1 = _bind(pi0, T), _bind(pi1, T)
    streams = as_run_streams(rng)
    if engine == "numba":
        a0, r0, a1, r1, src1, X = _kernel_run(design, pi0, pi1, instance, T, streams, mutation)
        return Trajectory(a0, r0), Trajectory(a1, r1, src1), X
    if engine == "python":
        if mutation is not None:
            raise ValueError("mutations are only available in the compiled engine")
        return _python_run(design, pi0, pi1, instance, T, streams)
    raise ValueError(f"unknown engine {engine!r}")


def run_naive(pi0: Policy, pi1: Policy, instance: BanditInstance, T: int, rng=None,
              engine: str = "numba") -> tuple[Trajectory, Trajectory]:
    """Deploy both policies independently, each against its own environment draws."""
    t0, t1, _ = _run("naive", pi0, pi1, instance, T, rng, engine)
    return t0, t1


def run_ar(pi0: Policy, pi1: Policy, instance: BanditInstance, T: int, rng=None,
           engine: str = "numba", _mutation: str | None = None) -> ARRunRecord:
    """Run the artificial-replay experiment.

    ``_mutation`` injects a known defect ("lifo_replay" or
    "replay_without_marking"); it exists so the equivalence tests can be
    shown to detect such defects.
    """
    t0, t1, _ = _run("ar", pi0, pi1, instance, T, rng, engine, _mutation)
    K = instance.K
    pulls0, pulls1 = t0.pull_counts(K), t1.pull_counts(K)
    n_replay = int(t1.replayed.sum())
    return ARRunRecord(t0, t1, 2 * len(t0) - n_replay, n_replay, pulls0, pulls1)


def run_shared_stack(pi0: Policy, pi1: Policy, instance: BanditInstance, T: int, rng=None,
                     engine: str = "numba", _mutation: str | None = None
                     ) -> tuple[Trajectory, Trajectory, RewardStacks]:
    """Both policies read their n-th pull of arm a from the same pre-drawn ``X[a, n]``."""
    t0, t1, X = _run("shared_stack", pi0, pi1, instance, T, rng, engine, _mutation)
    K = instance.K
    return t0, t1, RewardStacks(X, t0.pull_counts(K), t1.pull_counts(K))


def run_design(design: str, pi0, pi1, instance, T, rng=None, engine="numba"):
    """Dispatch by design name; always returns ``(traj0, traj1)``."""
    if design == "naive":
        return run_naive(pi0, pi1, instance, T, rng, engine)
    if design == "ar":
        rec = run_ar(pi0, pi1, instance, T, rng, engine)
        return rec.traj0, rec.traj1
    if design == "shared_stack":
        t0, t1, _ = run_shared_stack(pi0, pi1, instance, T, rng, engine)
        return t0, t1
    raise ValueError(f"unknown design {design!r}")


# --------------------------------------------------------------------------
# batches of independent runs


@dataclass
class RunBatch:
    """Per-run summaries of M replications of one design at one horizon.

    Row ``m`` of every array belongs to run index ``run_indices[m]``.
    """

    design: str
    horizon: int
    run_indices: np.ndarray
    reward0: np.ndarray
    reward1: np.ndarray
    pulls0: np.ndarray
    pulls1: np.ndarray
    n_env: np.ndarray
    n_replay: np.ndarray
    centered0: np.ndarray
    centered1: np.ndarray
    swapped: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def M(self) -> int:
        return self.run_indices.shape[0]

    @property
    def theta(self) -> np.ndarray:
        """Cumulative reward of policy 1 minus that of policy 0, per run."""
        return self.reward1 - self.reward0

    def head(self, m: int) -> "RunBatch":
        """The first ``m`` runs."""
        take = lambda x: x[:m]  # noqa: E731
        return RunBatch(self.design, self.horizon, take(self.run_indices), take(self.reward0),
                        take(self.reward1), take(self.pulls0), take(self.pulls1),
                        take(self.n_env), take(self.n_replay), take(self.centered0),
                        take(self.centered1), self.swapped, dict(self.meta))

    @staticmethod
    def concat(batches: Sequence["RunBatch"]) -> "RunBatch":
        b0 = batches[0]
        cat = lambda name: np.concatenate([getattr(b, name) for b in batches])  # noqa: E731
        return RunBatch(b0.design, b0.horizon, cat("run_indices"), cat("reward0"),
                        cat("reward1"), cat("pulls0"), cat("pulls1"), cat("n_env"),
                        cat("n_replay"), cat("centered0"), cat("centered1"), b0.swapped,
                        dict(b0.meta))


def _simulate_chunk(args):
    design, pi0, pi1, instance, T, seed, run_indices, swapped, mutation = args
    K = instance.K
    M = len(run_indices)
    means = instance.means
    out = {name: np.empty(M) for name in ("reward0", "reward1")}
    for name in ("pulls0", "pulls1"):
        out[name] = np.empty((M, K), dtype=np.int64)
    for name in ("centered0", "centered1"):
        out[name] = np.empty((M, K))
    n_env = np.empty(M, dtype=np.int64)
    n_replay = np.empty(M, dtype=np.int64)
    stream_design = "ar_swapped" if swapped else design
    first, second = (pi1, pi0) if swapped else (pi0, pi1)
    for m, run in enumerate(run_indices):
        streams = RunStreams.for_run(seed, int(run), T, stream_design)
        if swapped:
            streams = streams.swapped()
        a0, r0, a1, r1, src1, _ = _kernel_run(design, first, second, instance, T, streams,
                                              mutation)
        if swapped:
            a0, r0, a1, r1 = a1, r1, a0, r0
        for tag, arms, rew in (("0", a0, r0), ("1", a1, r1)):
            counts = np.bincount(arms - 1, minlength=K)
            sums = np.bincount(arms - 1, weights=rew, minlength=K)
            out["pulls" + tag][m] = counts
            out["reward" + tag][m] = rew.sum()
            out["centered" + tag][m] = sums - counts * means
        if design == "ar":
            n_replay[m] = int(src1.sum())
        elif design == "shared_stack":
            n_replay[m] = int(np.minimum(out["pulls0"][m], out["pulls1"][m]).sum())
        else:
            n_replay[m] = 0
        n_env[m] = 2 * T - n_replay[m]
    return RunBatch(design, T, np.asarray(run_indices, dtype=np.int64), out["reward0"],
                    out["reward1"], out["pulls0"], out["pulls1"], n_env, n_replay,
                    out["centered0"], out["centered1"], swapped)


def simulate(design: str, pi0: Policy, pi1: Policy, instance: BanditInstance, T: int,
             n_runs: int, seed: int = 0, *, start: int = 0, n_jobs: int = 1,
             swapped: bool = False, _mutation: str | None = None) -> RunBatch:
    """Run ``n_runs`` independent replications with run indices ``start, start+1, ...``.

    Each run's streams depend only on ``(seed, run index, T, design)``, so the
    result is the same for any ``n_jobs``.  With ``swapped=True`` the
    artificial-replay roles are exchanged (``pi1`` deployed first, ``pi0``
    replaying) while the returned columns still refer to ``pi0``/``pi1``.
    """
    if design not in DESIGNS:
        raise ValueError(f"unknown design {design!r}")
    if swapped and design != "ar":
        raise ValueError("role swapping applies to the artificial-replay design only")
    T = _check_horizon(T)
    if n_runs < 1:
        raise ValueError("n_runs must be positive")
    pi0, pi1 = _bind(pi0, T), _bind(pi1, T)
    runs = np.arange(start, start + n_runs)
    n_jobs = max(1, min(int(n_jobs), n_runs))
    chunks = np.array_split(runs, n_jobs)
    tasks = [(design, pi0, pi1, instance, T, seed, c, swapped, _mutation) for c in chunks]
    if n_jobs == 1:
        parts = [_simulate_chunk(tasks[0])]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(_simulate_chunk, tasks))
    return RunBatch.concat(parts)


# --------------------------------------------------------------------------
# trajectory dump


def dump_trajectories(records: Iterable[tuple[int, Trajectory, Trajectory]], path) -> None:
    """Write ``(run, traj0, traj1)`` triples as CSV: run,phase,t,arm,reward,source."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "phase", "t", "arm", "reward", "source"])
        for run, t0, t1 in records:
            for phase, traj in ((1, t0), (2, t1)):
                for t, (arm, reward, source) in enumerate(traj.steps(), start=1):
                    writer.writerow([run, phase, t, arm, repr(float(reward)), source])
