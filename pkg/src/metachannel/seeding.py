"""Hierarchical random-stream derivation.

Every random stream in a run derives from the single run seed through a
fixed path of the form (run_seed, purpose, *indices), so any
sub-experiment (a single validation evaluation, one training iteration)
can be regenerated in isolation and runs are bit-reproducible.
"""
from __future__ import annotations

import numpy as np

# Stable integer ids; changing one changes every stream derived under it.
_PURPOSES = {
    "init": 1,
    "pool": 2,
    "validation": 3,
    "meta": 4,
    "joint": 5,
    "pretrain": 6,
    "adapt": 7,
    "eval": 8,
    "oracle": 9,
    "pattern": 10,
}


def stream(run_seed: int, purpose: str, *indices: int) -> np.random.Generator:
    """Return the generator at path (run_seed, purpose, *indices)."""
    if purpose not in _PURPOSES:
        raise ValueError(f"unknown stream purpose: {purpose!r}")
    entropy = [int(run_seed), _PURPOSES[purpose], *(int(i) for i in indices)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def spawn(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """Derive n independent child streams from rng, in index order."""
    return rng.spawn(n)
