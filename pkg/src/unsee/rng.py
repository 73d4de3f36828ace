"""Deterministic named random streams.

All randomness in a run derives from one 64-bit seed. Independent streams
(corpus generation, epoch shuffling, the two dropout views, parameter init,
pair subsampling) are carved out by hashing the stream name together with
the seed, so adding a consumer never perturbs the others.
"""

import hashlib

import numpy as np

STREAMS = (
    "corpus",
    "shuffle",
    "dropout-view-1",
    "dropout-view-2",
    "init",
    "subsample",
)


def _name_entropy(name: str) -> list[int]:
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 8], "little") for i in range(0, 32, 8)]


def stream(seed: int, name: str, *counters: int) -> np.random.Generator:
    """Generator for `name` under `seed`.

    Extra integer counters (step index, epoch, ...) key sub-streams so a
    consumer can re-derive the exact generator used at any point without
    replaying the run.
    """
    entropy = [seed & 0xFFFFFFFFFFFFFFFF, *_name_entropy(name), *counters]
    return np.random.default_rng(np.random.SeedSequence(entropy))
