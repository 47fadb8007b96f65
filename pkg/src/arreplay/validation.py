"""Input validation helpers shared by the config loader and the estimators."""
from __future__ import annotations

import numbers

from .env import BanditInstance, instance_from_config
from .policies import Policy, policy_from_config


def check_instance(instance, name: str = "instance") -> BanditInstance:
    if isinstance(instance, BanditInstance):
        return instance
    if isinstance(instance, dict):
        return instance_from_config(instance)
    raise TypeError(f"{name}: expected a BanditInstance or config dict, "
                    f"got {type(instance).__name__}")


def check_policy(policy, name: str = "policy") -> Policy:
    if isinstance(policy, Policy):
        return policy
    if isinstance(policy, dict):
        return policy_from_config(policy, name)
    raise TypeError(f"{name}: expected a Policy or config dict, got {type(policy).__name__}")


def check_positive_int(value, name: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ValueError(f"{name}: expected an integer, got {value!r}")
    if value < minimum:
        raise ValueError(f"{name}: must be >= {minimum}, got {value}")
    return int(value)


def check_horizons(horizons, name: str = "horizons") -> list[int]:
    if isinstance(horizons, numbers.Integral):
        horizons = [horizons]
    if not isinstance(horizons, (list, tuple)) or not horizons:
        raise ValueError(f"{name}: expected a nonempty list of positive integers")
    out = [check_positive_int(h, name) for h in horizons]
    if any(b <= a for a, b in zip(out, out[1:])):
        raise ValueError(f"{name}: must be strictly increasing, got {out}")
    return out


def check_alpha(alpha, name: str = "ci_alpha") -> float:
    if isinstance(alpha, bool) or not isinstance(alpha, numbers.Real) or not 0 < alpha < 1:
        raise ValueError(f"{name}: must lie in (0, 1), got {alpha!r}")
    return float(alpha)
