"""Unpaired batch feed for training.

Each epoch independently reshuffles both domains and pairs images by
position, so the (hn, ln) pairs are deliberately NOT registered pairs.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

from ..errors import DataError
from .bscan import BScan


def epoch_pairs(
    hn_set: list[BScan], ln_set: list[BScan], seed: int, epoch: int
) -> list[tuple[BScan, BScan]]:
    """Deterministic pairing for one epoch.

    Epoch length is max(len(hn), len(ln)); the shorter set repeats
    cyclically through its shuffled order. With equal sizes, every image
    appears exactly once.
    """
    if not hn_set or not ln_set:
        raise DataError("both domains must be non-empty")
    rng = np.random.default_rng([seed, epoch])
    hn_order = rng.permutation(len(hn_set))
    ln_order = rng.permutation(len(ln_set))
    n = max(len(hn_set), len(ln_set))
    return [
        (hn_set[hn_order[i % len(hn_set)]], ln_set[ln_order[i % len(ln_set)]])
        for i in range(n)
    ]


def unpaired_iterator(
    hn_set: list[BScan], ln_set: list[BScan], seed: int
) -> Iterator[tuple[BScan, BScan]]:
    """Endless stream of unpaired (hn, ln) pairs, reshuffled each epoch."""
    if not hn_set or not ln_set:
        raise DataError("both domains must be non-empty")
    epoch = 0
    while True:
        yield from epoch_pairs(hn_set, ln_set, seed, epoch)
        epoch += 1
