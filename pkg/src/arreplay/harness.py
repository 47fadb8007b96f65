"""Replication orchestration and CSV reporting."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .designs import RunBatch, run_ar, simulate
from .env import BanditInstance, instance_from_config
from .stats import confidence_interval, summarize
from .streams import AUX, RunStreams, make_generator, stream_key

BASE_COLUMNS = [
    "horizon", "baseline_mean", "baseline_lb", "baseline_ub", "AR_mean", "AR_lb", "AR_ub",
    "baseline_var", "AR_var", "baseline_num_interactions", "AR_num_interactions",
]
STACK_COLUMNS = ["stack_mean", "stack_var", "stack_num_interactions"]
BAYES_COLUMNS = ["horizon", "bayes_mean", "bayes_lb", "bayes_ub", "bayes_var", "instances_M"]
_PREFIX = {"naive": "baseline", "ar": "AR", "shared_stack": "stack"}


@dataclass
class ExperimentResult:
    """One row per horizon plus the per-run batches behind them."""

    columns: list[str]
    rows: list[dict]
    batches: dict[tuple[str, int], RunBatch] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows], dtype=float)

    def row(self, horizon: int) -> dict:
        for r in self.rows:
            if r["horizon"] == horizon:
                return r
        raise KeyError(horizon)


def _design_stats(batch: RunBatch, M_ci: int, M_var: int, alpha: float) -> dict:
    ci_summary = summarize(batch.head(M_ci))
    lo, hi = confidence_interval(ci_summary, alpha)
    var_summary = summarize(batch.head(M_var))
    return {"mean": ci_summary.mean, "lb": lo, "ub": hi, "var": var_summary.sample_var,
            "num_interactions": var_summary.mean_n_env}


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Simulate every requested design at every horizon.

    Means and confidence bounds come from the first ``M_ci`` runs; variances,
    interaction counts and pull-count variances from the first ``M_var``.
    """
    K = config.instance.K
    n_runs = max(config.M_ci, config.M_var)
    rows, batches = [], {}
    for T in config.horizons:
        row = {"horizon": T}
        for design in config.designs:
            batch = simulate(design, config.policy0, config.policy1, config.instance, T, n_runs,
                             config.master_seed, n_jobs=config.n_jobs)
            batches[(design, T)] = batch
            stats = _design_stats(batch, config.M_ci, config.M_var, config.ci_alpha)
            prefix = _PREFIX[design]
            keys = ("mean", "lb", "ub", "var", "num_interactions")
            if design == "shared_stack":
                keys = ("mean", "var", "num_interactions")
            for key in keys:
                row[f"{prefix}_{key}"] = stats[key]
        # pull-count variances from the first design run, in naive/ar/stack order
        source = batches[(config.designs[0], T)].head(config.M_var)
        for i, pulls in enumerate((source.pulls0, source.pulls1)):
            var = np.var(pulls, axis=0, ddof=1)
            for a in range(K):
                row[f"varT_pi{i}_{a + 1}"] = float(var[a]) / T
        rows.append(row)
    columns = list(BASE_COLUMNS)
    if "shared_stack" in config.designs:
        columns += STACK_COLUMNS
    columns += [f"varT_pi{i}_{a + 1}" for i in (0, 1) for a in range(K)]
    for row in rows:
        for col in columns:
            row.setdefault(col, math.nan)
    return ExperimentResult(columns, rows, batches)


# --------------------------------------------------------------------------
# Bayesian extension


def sample_instance(prior: dict, rng: np.random.Generator) -> BanditInstance:
    """Draw one bandit instance from a prior description."""
    kind = prior.get("kind")
    if kind == "bernoulli_uniform":
        K = int(prior.get("K", 2))
        low, high = float(prior.get("low", 0.0)), float(prior.get("high", 1.0))
        return BanditInstance.bernoulli(rng.uniform(low, high, size=K))
    if kind == "bernoulli_beta":
        a = np.asarray(prior["a"], dtype=float)
        b = np.asarray(prior["b"], dtype=float)
        return BanditInstance.bernoulli(rng.beta(a, b))
    if kind == "gaussian_means":
        means = np.asarray(prior["means"], dtype=float)
        sd = float(prior.get("sd", 1.0))
        return BanditInstance.gaussian(means + sd * rng.standard_normal(means.size),
                                       float(prior.get("variance", 1.0)))
    if kind == "point_masses":
        instances = prior["instances"]
        weights = np.asarray(prior.get("weights", [1.0] * len(instances)), dtype=float)
        i = rng.choice(len(instances), p=weights / weights.sum())
        return instance_from_config(instances[i])
    raise ValueError(f"bayes.prior.kind: unsupported prior kind {kind!r}")


def check_prior(prior: dict) -> None:
    try:
        sample_instance(prior, np.random.default_rng(0))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bayes.prior: malformed prior ({exc})") from exc


def bayes_thetas(config: ExperimentConfig, T: int) -> np.ndarray:
    """One AR estimate per instance drawn from the prior, at horizon ``T``."""
    prior = config.bayes.prior
    out = np.empty(config.bayes.instances_M)
    for i in range(config.bayes.instances_M):
        instance = sample_instance(
            prior, make_generator(config.master_seed, stream_key(i, T, "bayes", AUX)))
        streams = RunStreams.for_run(config.master_seed, i, T, "bayes")
        out[i] = run_ar(config.policy0, config.policy1, instance, T, streams).theta_hat
    return out


def run_bayes(config: ExperimentConfig) -> ExperimentResult:
    """Average AR estimates over instances drawn i.i.d. from the configured prior."""
    if config.bayes is None:
        raise ValueError("bayes: config has no bayes block")
    check_prior(config.bayes.prior)
    rows = []
    for T in config.horizons:
        summary = summarize(bayes_thetas(config, T))
        lo, hi = confidence_interval(summary, config.ci_alpha)
        rows.append({"horizon": T, "bayes_mean": summary.mean, "bayes_lb": lo, "bayes_ub": hi,
                     "bayes_var": summary.sample_var, "instances_M": summary.M})
    return ExperimentResult(list(BAYES_COLUMNS), rows)


# --------------------------------------------------------------------------
# CSV


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return repr(float(value))


def write_csv(result: ExperimentResult, fh) -> None:
    if not result.rows:
        raise ValueError("no result rows to write")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_fmt(row[c]) for c in result.columns])


def emit_csv(result: ExperimentResult, path) -> None:
    """Write one row per horizon; floats use their shortest round-trip repr."""
    if not result.rows:
        raise ValueError("no result rows to write")
    with open(path, "w", newline="") as fh:
        write_csv(result, fh)


def to_csv_string(result: ExperimentResult) -> str:
    buf = io.StringIO()
    write_csv(result, buf)
    return buf.getvalue()


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [{k: (int(v) if k in ("horizon", "instances_M") else float(v))
                 for k, v in row.items()} for row in reader]
