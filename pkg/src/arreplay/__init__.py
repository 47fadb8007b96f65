"""Artificial replay experiments for comparing two multi-armed bandit policies."""
from .config import ExperimentConfig, load_config, preset
from .designs import (ARRunRecord, RewardStacks, RunBatch, Trajectory, count_pulls,
                      interaction_counts, run_ar, run_naive, run_shared_stack, simulate)
from .env import BanditInstance, Bernoulli, Gaussian, gaps, optimal_arm, regret, sample_reward
from .estimators import PolicyComparison
from .policies import (UCB1, EpsGreedy, FixedSequence, PolicyState, TSBernoulli, TSGaussian,
                       UCBDelta, action_distribution, select, update)
from .stats import (ReplicationSummary, centered_arm_sum, confidence_interval, summarize,
                    t_quantile, theta_hat, variance_report)

__version__ = "0.1.0"
