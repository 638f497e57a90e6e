"""Volume-level train/test splitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError


@dataclass(frozen=True)
class DatasetSplit:
    train_volumes: tuple[str, ...]
    test_volumes: tuple[str, ...]
    fraction_train: float


def split_by_volume(volumes: list[str], fraction_train: float, seed: int) -> DatasetSplit:
    """Disjoint volume-level split; |train| = round(fraction * total).

    Splitting is always by volume so that slices of one acquisition never
    straddle train and test.
    """
    if not (0.0 < fraction_train < 1.0):
        raise ConfigError(f"fraction_train must lie in (0, 1), got {fraction_train}")
    if len(volumes) < 2:
        raise DataError(f"need at least 2 volumes to split, got {len(volumes)}")
    if len(set(volumes)) != len(volumes):
        raise DataError("volume ids must be unique")
    rng = np.random.default_rng(seed)
    order = [volumes[i] for i in rng.permutation(len(volumes))]
    n_train = round(fraction_train * len(volumes))
    return DatasetSplit(
        train_volumes=tuple(sorted(order[:n_train])),
        test_volumes=tuple(sorted(order[n_train:])),
        fraction_train=fraction_train,
    )
