"""Bandit policies as history-dependent stochastic kernels.

Each policy is an immutable spec object.  Its mutable memory lives in a
:class:`PolicyState` holding per-arm pull counts and reward sums, which are
sufficient statistics for every policy here.  Randomized policies draw only
from the generator handed to :func:`select`, never from reward streams.

Every policy first pulls each unpulled arm once, in index order, before its
own rule applies.  Ties in any argmax go to the lowest arm index.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

# integer codes shared with the compiled kernels
FIXED, UCB1_CODE, UCB_DELTA_CODE, TS_BERNOULLI_CODE, TS_GAUSSIAN_CODE, EPS_GREEDY_CODE = range(6)


class UnsupportedKernelError(ValueError):
    """Raised when a policy's action probabilities have no closed form."""


@dataclass
class PolicyState:
    counts: np.ndarray
    sums: np.ndarray
    t: int = 0

    @classmethod
    def empty(cls, K: int) -> "PolicyState":
        return cls(np.zeros(K, dtype=np.int64), np.zeros(K, dtype=np.float64), 0)

    @property
    def K(self) -> int:
        return self.counts.shape[0]

    def empirical_means(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.counts > 0, self.sums / np.maximum(self.counts, 1), 0.0)

    def copy(self) -> "PolicyState":
        return PolicyState(self.counts.copy(), self.sums.copy(), self.t)


def _first_unpulled(state: PolicyState) -> int | None:
    zero = np.flatnonzero(state.counts == 0)
    return int(zero[0]) if zero.size else None


def _argmax_low(values) -> int:
    # first maximal index, scanned explicitly so ties are unambiguous
    best, best_v = 0, values[0]
    for a in range(1, len(values)):
        if values[a] > best_v:
            best, best_v = a, values[a]
    return best


class Policy:
    """Base class; subclasses implement ``_choose`` for the post-warm-up rule."""

    kind: str = ""
    code: int = -1
    deterministic: bool = False
    warm_up: bool = True

    def initial_state(self, K: int) -> PolicyState:
        return PolicyState.empty(K)

    def select(self, state: PolicyState, t: int, rng: np.random.Generator | None = None) -> int:
        """Arm (1-based) chosen in period ``t`` given ``state`` after ``t - 1`` updates."""
        if state.t != t - 1:
            raise ValueError(f"state has {state.t} updates but period is {t}")
        if self.warm_up:
            a = _first_unpulled(state)
            if a is not None:
                return a + 1
        return self._choose(state, t, rng) + 1

    def update(self, state: PolicyState, arm: int, reward: float) -> PolicyState:
        a = int(arm) - 1
        if not 0 <= a < state.K:
            raise IndexError(f"arm {arm} out of range 1..{state.K}")
        state.counts[a] += 1
        state.sums[a] += reward
        state.t += 1
        return state

    def action_distribution(self, state: PolicyState, t: int) -> np.ndarray:
        if state.t != t - 1:
            raise ValueError(f"state has {state.t} updates but period is {t}")
        probs = np.zeros(state.K)
        if self.warm_up:
            a = _first_unpulled(state)
            if a is not None:
                probs[a] = 1.0
                return probs
        return self._distribution(state, t)

    def _choose(self, state, t, rng) -> int:
        raise NotImplementedError

    def _distribution(self, state, t) -> np.ndarray:
        raise UnsupportedKernelError(f"{self.kind} has no closed-form action distribution")

    def kernel_params(self, horizon: int) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class _IndexPolicy(Policy):
    deterministic = True

    def indices(self, state: PolicyState, t: int) -> np.ndarray:
        """Index of every arm; ``inf`` for unpulled arms."""
        bonus = self._bonus_numerator(t)
        out = np.full(state.K, np.inf)
        for a in range(state.K):
            n = state.counts[a]
            if n > 0:
                out[a] = state.sums[a] / n + math.sqrt(bonus / n)
        return out

    def _choose(self, state, t, rng):
        return _argmax_low(self.indices(state, t))

    def _distribution(self, state, t):
        probs = np.zeros(state.K)
        probs[self._choose(state, t, None)] = 1.0
        return probs


@dataclass(frozen=True)
class UCB1(_IndexPolicy):
    """UCB1 with index ``mean + sqrt(alpha * log(s) / n)``.

    ``log_periods`` picks ``s``: ``"completed"`` (default) uses the number of
    completed periods ``t - 1``, i.e. total pulls so far as in Auer et al.
    (2002); ``"current"`` uses the current period ``t``.
    """

    alpha: float = 2.0
    log_periods: str = "completed"
    kind = "ucb1"
    code = UCB1_CODE

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"ucb1.alpha must be positive, got {self.alpha}")
        if self.log_periods not in ("completed", "current"):
            raise ValueError(f"ucb1.log_periods must be 'completed' or 'current', "
                             f"got {self.log_periods!r}")

    @property
    def _log_offset(self) -> int:
        return 1 if self.log_periods == "completed" else 0

    def _bonus_numerator(self, t):
        return self.alpha * math.log(t - self._log_offset)

    def kernel_params(self, horizon):
        return np.array([self.alpha, self._log_offset], dtype=np.float64)

    def to_dict(self):
        return {"kind": "ucb1", "alpha": self.alpha, "log_periods": self.log_periods}


@dataclass(frozen=True)
class UCBDelta(_IndexPolicy):
    """UCB with index ``mean + sqrt(2 log(1/delta) / n)``.

    Give either an explicit ``delta`` in (0, 1), or ``d`` with
    ``delta = horizon ** -d``; the latter needs ``horizon`` bound via
    :meth:`for_horizon` before use.
    """

    d: float | None = 2.0
    delta: float | None = None
    horizon: int | None = None
    kind = "ucb_delta"
    code = UCB_DELTA_CODE

    def __post_init__(self):
        if self.delta is not None:
            if not 0.0 < self.delta < 1.0:
                raise ValueError(f"ucb_delta.delta must lie in (0, 1), got {self.delta}")
        elif self.d is None or not self.d >= 2:
            raise ValueError(f"ucb_delta.d must be >= 2, got {self.d}")

    def for_horizon(self, horizon: int) -> "UCBDelta":
        return UCBDelta(self.d, self.delta, int(horizon))

    def log_inv_delta(self, horizon=None) -> float:
        if self.delta is not None:
            return -math.log(self.delta)
        horizon = self.horizon if horizon is None else horizon
        if horizon is None:
            raise ValueError("ucb_delta with d needs the horizon at construction")
        return self.d * math.log(horizon)

    def _bonus_numerator(self, t):
        return 2.0 * self.log_inv_delta()

    def kernel_params(self, horizon):
        return np.array([2.0 * self.log_inv_delta(horizon)], dtype=np.float64)

    def to_dict(self):
        if self.delta is not None:
            return {"kind": "ucb_delta", "delta": self.delta}
        return {"kind": "ucb_delta", "d": self.d}


@dataclass(frozen=True)
class TSBernoulli(Policy):
    """Thompson sampling with independent Beta priors."""

    alpha0: float = 1.0
    beta0: float = 1.0
    kind = "ts_bernoulli"
    code = TS_BERNOULLI_CODE

    def __post_init__(self):
        if not (self.alpha0 > 0 and self.beta0 > 0):
            raise ValueError("ts_bernoulli prior parameters must be positive")

    def posterior(self, state: PolicyState) -> tuple[np.ndarray, np.ndarray]:
        return self.alpha0 + state.sums, self.beta0 + state.counts - state.sums

    def update(self, state, arm, reward):
        if not 0.0 <= reward <= 1.0:
            raise ValueError(f"ts_bernoulli needs rewards in [0, 1], got {reward}")
        return super().update(state, arm, reward)

    def _choose(self, state, t, rng):
        a_post, b_post = self.posterior(state)
        draws = [rng.beta(a_post[a], b_post[a]) for a in range(state.K)]
        return _argmax_low(draws)

    def kernel_params(self, horizon):
        return np.array([self.alpha0, self.beta0], dtype=np.float64)

    def to_dict(self):
        return {"kind": "ts_bernoulli", "alpha0": self.alpha0, "beta0": self.beta0}


@dataclass(frozen=True)
class TSGaussian(Policy):
    """Thompson sampling with independent Gaussian priors and known noise variance."""

    prior_mean: float = 0.0
    prior_var: float = 1.0
    obs_var: float = 1.0
    kind = "ts_gaussian"
    code = TS_GAUSSIAN_CODE

    def __post_init__(self):
        if not (self.prior_var > 0 and self.obs_var > 0):
            raise ValueError("ts_gaussian variances must be positive")

    def posterior(self, state: PolicyState) -> tuple[np.ndarray, np.ndarray]:
        precision = 1.0 / self.prior_var + state.counts / self.obs_var
        mean = (self.prior_mean / self.prior_var + state.sums / self.obs_var) / precision
        return mean, 1.0 / precision

    def _choose(self, state, t, rng):
        mean, var = self.posterior(state)
        draws = [mean[a] + math.sqrt(var[a]) * rng.standard_normal() for a in range(state.K)]
        return _argmax_low(draws)

    def kernel_params(self, horizon):
        return np.array([self.prior_mean, self.prior_var, self.obs_var], dtype=np.float64)

    def to_dict(self):
        return {"kind": "ts_gaussian", "prior_mean": self.prior_mean,
                "prior_var": self.prior_var, "obs_var": self.obs_var}


@dataclass(frozen=True)
class EpsGreedy(Policy):
    """Explore uniformly over all arms with probability ``eps``, else play the greedy arm."""

    eps: float = 0.1
    kind = "eps_greedy"
    code = EPS_GREEDY_CODE

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps_greedy.eps must lie in [0, 1], got {self.eps}")

    def greedy_arm(self, state: PolicyState) -> int:
        return _argmax_low(state.empirical_means())

    def _choose(self, state, t, rng):
        if rng.random() < self.eps:
            return min(int(rng.random() * state.K), state.K - 1)
        return self.greedy_arm(state)

    def _distribution(self, state, t):
        probs = np.full(state.K, self.eps / state.K)
        probs[self.greedy_arm(state)] += 1.0 - self.eps
        return probs

    def kernel_params(self, horizon):
        return np.array([self.eps], dtype=np.float64)

    def to_dict(self):
        return {"kind": "eps_greedy", "eps": self.eps}


@dataclass(frozen=True)
class FixedSequence(Policy):
    """Plays a scripted arm sequence (1-based); mainly a test fixture."""

    arms: tuple[int, ...] = field(default=())
    kind = "fixed"
    code = FIXED
    deterministic = True
    warm_up = False

    def __post_init__(self):
        object.__setattr__(self, "arms", tuple(int(a) for a in self.arms))
        if not self.arms or min(self.arms) < 1:
            raise ValueError("fixed.arms must be a nonempty list of 1-based arms")

    def _choose(self, state, t, rng):
        if t > len(self.arms):
            raise ValueError(f"fixed sequence has only {len(self.arms)} periods")
        a = self.arms[t - 1] - 1
        if a >= state.K:
            raise IndexError(f"arm {a + 1} out of range 1..{state.K}")
        return a

    def _distribution(self, state, t):
        probs = np.zeros(state.K)
        probs[self._choose(state, t, None)] = 1.0
        return probs

    def kernel_params(self, horizon):
        if horizon > len(self.arms):
            raise ValueError(f"fixed sequence has only {len(self.arms)} periods")
        return np.array(self.arms, dtype=np.float64)

    def to_dict(self):
        return {"kind": "fixed", "arms": list(self.arms)}


_KINDS = {
    "ucb1": (UCB1, {"alpha", "log_periods"}),
    "ucb_delta": (UCBDelta, {"d", "delta"}),
    "ts_bernoulli": (TSBernoulli, {"alpha0", "beta0"}),
    "ts_gaussian": (TSGaussian, {"prior_mean", "prior_var", "obs_var"}),
    "eps_greedy": (EpsGreedy, {"eps"}),
    "fixed": (FixedSequence, {"arms"}),
}


def policy_from_config(desc: dict, name: str = "policy") -> Policy:
    """Build a policy from a config object such as ``{"kind": "ucb1", "alpha": 2.5}``."""
    if not isinstance(desc, dict):
        raise ValueError(f"{name}: expected an object")
    kind = desc.get("kind")
    if kind not in _KINDS:
        raise ValueError(f"{name}.kind: unknown policy kind {kind!r}")
    cls, allowed = _KINDS[kind]
    params = {k: v for k, v in desc.items() if k != "kind"}
    unknown = set(params) - allowed
    if unknown:
        raise ValueError(f"{name}.{sorted(unknown)[0]}: unknown field for {kind}")
    if kind == "ucb_delta" and "delta" in params and "d" not in params:
        params["d"] = None
    try:
        return cls(**params)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"{name}: {exc}") from exc


# functional aliases

def select(spec: Policy, state: PolicyState, t: int, rng=None) -> int:
    return spec.select(state, t, rng)


def update(spec: Policy, state: PolicyState, arm: int, reward: float) -> PolicyState:
    return spec.update(state, arm, reward)


def action_distribution(spec: Policy, state: PolicyState, t: int) -> np.ndarray:
    return spec.action_distribution(state, t)


def permute_state(state: PolicyState, perm: Sequence[int]) -> PolicyState:
    """State relabelled so that new arm ``i`` is old arm ``perm[i]`` (0-based)."""
    perm = np.asarray(perm)
    return PolicyState(state.counts[perm].copy(), state.sums[perm].copy(), state.t)
