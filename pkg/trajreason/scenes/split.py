"""
Deterministic train/validation/test splitting.
"""

import math
from typing import Sequence, Tuple

import numpy as np

from trajreason.errors import ConfigError, DataError
from trajreason.scenes.types import DatasetSplit


def _split_sizes(n: int, fractions: Sequence[float]) -> Tuple[int, ...]:
    raw = [n * f for f in fractions]
    sizes = [int(math.floor(r)) for r in raw]
    # hand leftovers to the largest fractional parts, earlier splits first on ties
    order = sorted(range(len(raw)), key=lambda i: (-(raw[i] - sizes[i]), i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    # a split with a positive fraction never ends up empty
    for i, f in enumerate(fractions):
        if f > 0 and sizes[i] == 0:
            donor = max(range(len(sizes)), key=lambda j: sizes[j])
            sizes[donor] -= 1
            sizes[i] += 1
    return tuple(sizes)


def split_dataset(
    scene_ids: Sequence[str],
    split_seed: int = 0,
    fractions: Sequence[float] = (0.8, 0.1, 0.1),
) -> DatasetSplit:
    """
    Split scene ids into disjoint train/validation/test lists.

    The split is a pure function of the id set and ``split_seed``: ids are
    sorted, then permuted with a seeded generator.
    """
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ConfigError(f"expected 3 split fractions, got {len(fractions)}")
    if any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must be non-negative and sum to 1, got {fractions}")

    ids = sorted(scene_ids)
    if len(set(ids)) != len(ids):
        raise DataError("scene ids must be unique")
    n_splits = sum(1 for f in fractions if f > 0)
    if len(ids) < n_splits:
        raise DataError(f"cannot split {len(ids)} scenes into {n_splits} non-empty parts")

    rng = np.random.default_rng(np.random.SeedSequence([abs(int(split_seed)), int(split_seed < 0)]))
    permuted = [ids[i] for i in rng.permutation(len(ids))]
    n_train, n_val, _ = _split_sizes(len(ids), fractions)
    return DatasetSplit(
        train=tuple(permuted[:n_train]),
        validation=tuple(permuted[n_train:n_train + n_val]),
        test=tuple(permuted[n_train + n_val:]),
        split_seed=int(split_seed),
    )
