"""Bandit environments: arm reward distributions and instance-level quantities."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

BERNOULLI, GAUSSIAN = 0, 1


@dataclass(frozen=True)
class Bernoulli:
    p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"Bernoulli p must lie in [0, 1], got {self.p}")

    def mean(self) -> float:
        return self.p

    def variance(self) -> float:
        return self.p * (1.0 - self.p)

    def sample(self, rng: np.random.Generator) -> float:
        return 1.0 if rng.random() < self.p else 0.0


@dataclass(frozen=True)
class Gaussian:
    mu: float
    var: float = 1.0

    def __post_init__(self):
        if not self.var > 0.0:
            raise ValueError(f"Gaussian variance must be positive, got {self.var}")

    def mean(self) -> float:
        return self.mu

    def variance(self) -> float:
        return self.var

    def sample(self, rng: np.random.Generator) -> float:
        return self.mu + math.sqrt(self.var) * rng.standard_normal()


ArmDistribution = Bernoulli | Gaussian


class BanditInstance:
    """A fixed K-armed stochastic bandit.

    Arms are numbered 1..K in every public method.

    Parameters
    ----------
    arms : sequence of Bernoulli or Gaussian
        Reward distribution of each arm, in arm order.
    """

    def __init__(self, arms: Sequence[ArmDistribution]):
        arms = tuple(arms)
        if len(arms) < 1:
            raise ValueError("a bandit instance needs at least one arm")
        for arm in arms:
            if not isinstance(arm, (Bernoulli, Gaussian)):
                raise TypeError(f"unsupported arm distribution {arm!r}")
        self.arms = arms

    @classmethod
    def bernoulli(cls, means: Sequence[float]) -> "BanditInstance":
        return cls([Bernoulli(float(p)) for p in means])

    @classmethod
    def gaussian(cls, means: Sequence[float], variance=1.0) -> "BanditInstance":
        variances = np.broadcast_to(np.asarray(variance, dtype=float), (len(means),))
        return cls([Gaussian(float(m), float(v)) for m, v in zip(means, variances)])

    @property
    def K(self) -> int:
        return len(self.arms)

    @property
    def means(self) -> np.ndarray:
        return np.array([arm.mean() for arm in self.arms])

    @property
    def variances(self) -> np.ndarray:
        return np.array([arm.variance() for arm in self.arms])

    @property
    def mu_star(self) -> float:
        return float(self.means.max())

    def optimal_arm(self) -> tuple[int, bool]:
        """Return ``(arm, unique)``; ties resolve to the lowest index."""
        means = self.means
        best = int(np.argmax(means))
        unique = int(np.count_nonzero(means == means[best])) == 1
        return best + 1, unique

    def gaps(self) -> np.ndarray:
        return self.mu_star - self.means

    def check_arm(self, arm: int) -> int:
        """Validate a 1-based arm index and return it as 0-based."""
        if isinstance(arm, bool) or not isinstance(arm, (int, np.integer)):
            raise TypeError(f"arm index must be an integer, got {arm!r}")
        if not 1 <= arm <= self.K:
            raise IndexError(f"arm {arm} out of range 1..{self.K}")
        return int(arm) - 1

    # arrays consumed by the compiled simulation kernels
    def _kernel_arrays(self):
        kinds = np.array([BERNOULLI if isinstance(a, Bernoulli) else GAUSSIAN for a in self.arms],
                         dtype=np.int64)
        means = self.means.astype(np.float64)
        sds = np.sqrt(np.array([0.0 if isinstance(a, Bernoulli) else a.var for a in self.arms]))
        return kinds, means, sds

    def to_dict(self) -> dict:
        if all(isinstance(a, Bernoulli) for a in self.arms):
            return {"kind": "bernoulli", "means": [a.p for a in self.arms]}
        if all(isinstance(a, Gaussian) for a in self.arms):
            return {"kind": "gaussian", "means": [a.mu for a in self.arms],
                    "variances": [a.var for a in self.arms]}
        raise ValueError("mixed-family instances have no config representation")

    def __eq__(self, other):
        return isinstance(other, BanditInstance) and self.arms == other.arms

    def __hash__(self):
        return hash(self.arms)

    def __repr__(self):
        return f"BanditInstance({list(self.arms)!r})"


def instance_from_config(desc: dict) -> BanditInstance:
    """Build an instance from ``{"kind": "bernoulli"|"gaussian", "means": [...], ...}``."""
    if not isinstance(desc, dict):
        raise ValueError("instance: expected an object")
    kind = desc.get("kind")
    means = desc.get("means")
    if not isinstance(means, list) or not means:
        raise ValueError("instance.means: expected a nonempty list")
    try:
        if kind == "bernoulli":
            return BanditInstance.bernoulli(means)
        if kind == "gaussian":
            if "variances" in desc:
                variances = desc["variances"]
                if len(variances) != len(means):
                    raise ValueError("instance.variances: length must match means")
            else:
                variances = desc.get("variance", 1.0)
            return BanditInstance.gaussian(means, variances)
    except ValueError as exc:
        raise ValueError(f"instance: {exc}") from exc
    raise ValueError(f"instance.kind: unknown kind {kind!r}")


def sample_reward(instance: BanditInstance, arm: int, rng: np.random.Generator) -> float:
    """Draw one reward of ``arm`` (1-based) from ``rng``."""
    return instance.arms[instance.check_arm(arm)].sample(rng)


def optimal_arm(instance: BanditInstance) -> tuple[int, bool]:
    return instance.optimal_arm()


def gaps(instance: BanditInstance) -> np.ndarray:
    return instance.gaps()


def regret(instance: BanditInstance, trajectory) -> float:
    """Realized regret ``T * mu_star - sum(rewards)`` of one trajectory."""
    rewards = np.asarray(trajectory.rewards if hasattr(trajectory, "rewards") else
                         [r for _, r in trajectory], dtype=float)
    if rewards.size < 1:
        raise ValueError("trajectory must have at least one step")
    return rewards.size * instance.mu_star - float(rewards.sum())
