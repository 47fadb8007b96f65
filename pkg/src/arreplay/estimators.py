"""scikit-learn style front end.

:class:`PolicyComparison` treats a bandit instance as its input: ``fit``
runs the replications and stores the estimate of the difference in expected
cumulative reward between ``policy1`` and ``policy0``.  Parameters follow
the ``get_params``/``set_params`` protocol, so the estimator can be cloned
and grid-searched over policy hyperparameters.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .designs import DESIGNS, simulate
from .stats import confidence_interval, summarize
from .validation import (check_alpha, check_instance, check_policy, check_positive_int)


class PolicyComparison(BaseEstimator):
    """Estimate ``E[reward(policy1)] - E[reward(policy0)]`` over ``horizon`` periods.

    Parameters
    ----------
    policy0, policy1 : Policy or dict
        Control and treatment policies (objects or config dicts).
    horizon : int
        Periods per run.
    design : {"ar", "naive", "shared_stack"}
        Experiment design used for each replication.
    n_runs : int
        Number of independent replications.
    alpha : float
        Level of the reported ``1 - alpha`` confidence interval.
    random_state : int
        Master seed; run ``m`` uses streams derived from ``(random_state, m)``.
    n_jobs : int
        Worker processes; results do not depend on it.

    Attributes
    ----------
    theta_samples_ : ndarray of shape (n_runs,)
    theta_ : float
        Mean of the per-run estimates.
    variance_ : float
        Unbiased sample variance of the per-run estimates.
    ci_ : tuple of float
    n_env_mean_ : float
        Mean number of real-environment interactions per run.
    pull_counts_ : tuple of ndarray of shape (n_runs, K)
    summary_ : ReplicationSummary
    """

    def __init__(self, policy0=None, policy1=None, horizon=1000, design="ar", n_runs=1000,
                 alpha=0.01, random_state=0, n_jobs=1):
        self.policy0 = policy0
        self.policy1 = policy1
        self.horizon = horizon
        self.design = design
        self.n_runs = n_runs
        self.alpha = alpha
        self.random_state = random_state
        self.n_jobs = n_jobs

    def _validate(self):
        if self.design not in DESIGNS:
            raise ValueError(f"design: expected one of {DESIGNS}, got {self.design!r}")
        if self.policy0 is None or self.policy1 is None:
            raise ValueError("policy0 and policy1 must both be set")
        return (check_policy(self.policy0, "policy0"), check_policy(self.policy1, "policy1"),
                check_positive_int(self.horizon, "horizon"),
                check_positive_int(self.n_runs, "n_runs", 2), check_alpha(self.alpha, "alpha"))

    def fit(self, X, y=None):
        """Run the replications on bandit instance ``X`` (object or config dict)."""
        instance = check_instance(X, "X")
        pi0, pi1, T, n_runs, alpha = self._validate()
        seed = 0 if self.random_state is None else int(self.random_state)
        batch = simulate(self.design, pi0, pi1, instance, T, n_runs, seed, n_jobs=self.n_jobs)
        self.instance_ = instance
        self.batch_ = batch
        self.summary_ = summarize(batch)
        self.theta_samples_ = batch.theta
        self.theta_ = self.summary_.mean
        self.variance_ = self.summary_.sample_var
        self.ci_ = confidence_interval(self.summary_, alpha)
        self.n_env_mean_ = float(np.mean(batch.n_env))
        self.pull_counts_ = (batch.pulls0, batch.pulls1)
        return self

    def confidence_interval(self, alpha=None):
        check_is_fitted(self, "summary_")
        return confidence_interval(self.summary_, self.alpha if alpha is None else alpha)

    def predict(self, X=None):
        """Sign of the estimate: 1 if policy1 looks better, -1 if worse, 0 if the CI covers 0."""
        check_is_fitted(self, "ci_")
        lo, hi = self.ci_
        return 1 if lo > 0 else (-1 if hi < 0 else 0)
