"""Seeded random streams for simulation runs.

Every run owns four independent generators, keyed by
``(master_seed, run_index, horizon, design, tag)``.  The key is hashed by
:class:`numpy.random.SeedSequence`, so distinct run indices never share a
stream and results do not depend on the order in which runs execute.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: stream tags, in the order they appear in the spawn key
REWARDS, POLICY0, POLICY1, AUX = 0, 1, 2, 3
STREAM_TAGS = {"rewards": REWARDS, "policy0": POLICY0, "policy1": POLICY1, "aux": AUX}

#: design codes folded into the key so that designs run on independent streams
DESIGN_CODES = {"naive": 0, "ar": 1, "shared_stack": 2, "ar_swapped": 3, "bayes": 4}


def stream_key(run_index: int, horizon: int, design: str, tag: int) -> tuple[int, ...]:
    if run_index < 0:
        raise ValueError("run_index must be nonnegative")
    return (int(run_index), int(horizon), DESIGN_CODES[design], int(tag))


def make_generator(master_seed: int, key: tuple[int, ...]) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class RunStreams:
    """The four generators owned by one run."""

    rewards: np.random.Generator
    policy0: np.random.Generator
    policy1: np.random.Generator
    aux: np.random.Generator

    @classmethod
    def for_run(cls, master_seed: int, run_index: int, horizon: int = 0,
                design: str = "ar") -> "RunStreams":
        gens = [make_generator(master_seed, stream_key(run_index, horizon, design, tag))
                for tag in (REWARDS, POLICY0, POLICY1, AUX)]
        return cls(*gens)

    def swapped(self) -> "RunStreams":
        """Same streams with the two policy generators exchanged."""
        return RunStreams(self.rewards, self.policy1, self.policy0, self.aux)


def as_run_streams(rng) -> RunStreams:
    """Coerce ``rng`` (None, int seed, Generator or RunStreams) into RunStreams."""
    if isinstance(rng, RunStreams):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        seed = np.random.SeedSequence().entropy if rng is None else int(rng)
        return RunStreams.for_run(seed, 0)
    if isinstance(rng, np.random.Generator):
        return RunStreams(*rng.spawn(4))
    raise TypeError(f"cannot build run streams from {type(rng).__name__}")
