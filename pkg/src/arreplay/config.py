"""Experiment configuration: JSON loading, validation and the built-in presets."""
from __future__ import annotations

import copy
import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .designs import DESIGNS
from .env import BanditInstance
from .policies import Policy
from .validation import (check_alpha, check_horizons, check_instance, check_policy,
                         check_positive_int)

SEED_ENV = "ARREPLAY_SEED"
WORKERS_ENV = "ARREPLAY_WORKERS"

DEFAULT_HORIZONS = [10, 100, 1_000, 10_000]

PRESETS = {
    "example1": {
        "instance": {"kind": "bernoulli", "means": [0.9, 0.7, 0.5, 0.3, 0.1]},
        "policy0": {"kind": "ucb1", "alpha": 2.5},
        "policy1": {"kind": "ucb1", "alpha": 3.0},
    },
    "example2": {
        "instance": {"kind": "bernoulli", "means": [0.7, 0.3]},
        "policy0": {"kind": "ucb1", "alpha": 2.0},
        "policy1": {"kind": "ts_bernoulli", "alpha0": 1.0, "beta0": 1.0},
    },
    "example3": {
        "instance": {"kind": "gaussian", "means": [1.0, 0.8, -2.0, -3.0, -4.0], "variance": 1.0},
        "policy0": {"kind": "ts_gaussian", "prior_mean": 0.0, "prior_var": 1.0, "obs_var": 1.0},
        "policy1": {"kind": "eps_greedy", "eps": 0.1},
    },
}
for _preset in PRESETS.values():
    _preset.update({"horizons": DEFAULT_HORIZONS, "M_ci": 10, "M_var": 10_000, "ci_alpha": 0.01,
                    "master_seed": 0, "designs": ["naive", "ar"]})

_FIELDS = {"name", "instance", "policy0", "policy1", "horizons", "M_ci", "M_var", "ci_alpha",
           "master_seed", "designs", "bayes", "n_jobs"}


@dataclass
class BayesConfig:
    prior: dict
    instances_M: int = 1000


@dataclass
class ExperimentConfig:
    instance: BanditInstance
    policy0: Policy
    policy1: Policy
    horizons: list[int] = field(default_factory=lambda: list(DEFAULT_HORIZONS))
    M_ci: int = 10
    M_var: int = 10_000
    ci_alpha: float = 0.01
    master_seed: int = 0
    designs: tuple[str, ...] = ("naive", "ar")
    bayes: BayesConfig | None = None
    n_jobs: int = 1
    name: str = "experiment"

    @classmethod
    def from_dict(cls, raw: dict, name: str | None = None) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ValueError("config: expected a JSON object")
        unknown = set(raw) - _FIELDS
        if unknown:
            raise ValueError(f"{sorted(unknown)[0]}: unknown config field")
        for required in ("instance", "policy0", "policy1"):
            if required not in raw:
                raise ValueError(f"{required}: missing required field")
        try:
            instance = check_instance(raw["instance"])
            pi0 = check_policy(raw["policy0"], "policy0")
            pi1 = check_policy(raw["policy1"], "policy1")
        except TypeError as exc:
            raise ValueError(str(exc)) from exc
        designs = raw.get("designs", ["naive", "ar"])
        if not isinstance(designs, list) or not designs or any(d not in DESIGNS for d in designs):
            raise ValueError(f"designs: expected a nonempty subset of {list(DESIGNS)}, got {designs!r}")
        master_seed = raw.get("master_seed", 0)
        if isinstance(master_seed, bool) or not isinstance(master_seed, int) or master_seed < 0:
            raise ValueError(f"master_seed: expected a nonnegative integer, got {master_seed!r}")
        bayes = raw.get("bayes")
        if bayes is not None:
            if not isinstance(bayes, dict) or "prior" not in bayes:
                raise ValueError("bayes.prior: missing prior description")
            bayes = BayesConfig(bayes["prior"], check_positive_int(
                bayes.get("instances_M", 1000), "bayes.instances_M", 2))
        return cls(
            instance=instance, policy0=pi0, policy1=pi1,
            horizons=check_horizons(raw.get("horizons", DEFAULT_HORIZONS)),
            M_ci=check_positive_int(raw.get("M_ci", 10), "M_ci", 2),
            M_var=check_positive_int(raw.get("M_var", 10_000), "M_var", 2),
            ci_alpha=check_alpha(raw.get("ci_alpha", 0.01)),
            master_seed=master_seed,
            designs=tuple(d for d in DESIGNS if d in designs),
            bayes=bayes,
            n_jobs=check_positive_int(raw.get("n_jobs", 1), "n_jobs"),
            name=str(raw.get("name", name or "experiment")),
        )

    def to_dict(self) -> dict:
        out = {
            "name": self.name, "instance": self.instance.to_dict(),
            "policy0": self.policy0.to_dict(), "policy1": self.policy1.to_dict(),
            "horizons": list(self.horizons), "M_ci": self.M_ci, "M_var": self.M_var,
            "ci_alpha": self.ci_alpha, "master_seed": self.master_seed,
            "designs": list(self.designs), "n_jobs": self.n_jobs,
        }
        if self.bayes is not None:
            out["bayes"] = {"prior": self.bayes.prior, "instances_M": self.bayes.instances_M}
        return out

    def with_overrides(self, **changes) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def apply_environment(self, environ=None) -> "ExperimentConfig":
        """Apply the seed and worker-count environment variable overrides."""
        environ = os.environ if environ is None else environ
        changes = {}
        if environ.get(SEED_ENV):
            changes["master_seed"] = _env_int(environ, SEED_ENV, 0)
        if environ.get(WORKERS_ENV):
            changes["n_jobs"] = _env_int(environ, WORKERS_ENV, 1)
        return self.with_overrides(**changes)


def _env_int(environ, key, minimum):
    try:
        value = int(environ[key])
    except ValueError:
        raise ValueError(f"{key}: expected an integer, got {environ[key]!r}") from None
    if value < minimum:
        raise ValueError(f"{key}: must be >= {minimum}")
    return value


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(raw, name=path.stem)


def preset(name: str, overrides: dict | None = None) -> ExperimentConfig:
    """Built-in example configuration, optionally with top-level fields replaced."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    raw = copy.deepcopy(PRESETS[name])
    raw.update(overrides or {})
    return ExperimentConfig.from_dict(raw, name=name)
