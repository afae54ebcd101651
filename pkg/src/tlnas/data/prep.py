"""Split handling, per-class reduction, and batch sampling.

Pixels are scaled to [0,1] and then standardised per channel with the
source split's own global mean/std, so untrained forward passes see
input statistics comparable to trained-benchmark preprocessing.  Pass
raw=True to sample_batch to stay at [0,1] scaling.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import DataError
from ..rng import RandomStream, derive_seed
from .types import DatasetBatch, ImageDataset


def split_in_half(
    ds: ImageDataset, seed: int, first_split: str, second_split: str
) -> tuple[ImageDataset, ImageDataset]:
    """Deterministic random halving; odd element goes to the first half."""
    order = RandomStream(seed).permutation(len(ds))
    cut = (len(ds) + 1) // 2
    halves = []
    for split, idx in ((first_split, order[:cut]), (second_split, order[cut:])):
        halves.append(
            ImageDataset(
                name=ds.name,
                split=split,
                images=ds.images[idx],
                labels=ds.labels[idx],
                classes=ds.classes,
            )
        )
    return halves[0], halves[1]


def reduce_train_per_class(ds: ImageDataset, per_class: int, seed: int) -> ImageDataset:
    if per_class < 1:
        raise ValueError("per_class must be positive")
    picks = []
    for cls in range(ds.classes):
        members = np.flatnonzero(ds.labels == cls)
        if len(members) < per_class:
            raise DataError(
                f"class {cls} has {len(members)} examples, need {per_class}"
            )
        chosen = RandomStream(derive_seed(seed, cls)).sample_without_replacement(
            len(members), per_class
        )
        picks.append(members[chosen])
    idx = np.concatenate(picks)
    return ImageDataset(
        name=ds.name,
        split=ds.split,
        images=ds.images[idx],
        labels=ds.labels[idx],
        classes=ds.classes,
    )


def channel_stats(ds: ImageDataset) -> tuple[np.ndarray, np.ndarray]:
    """Global per-channel mean/std of the [0,1]-scaled images, float64."""
    if not len(ds):
        raise DataError("cannot compute channel statistics of an empty dataset")
    scaled = ds.images.astype(np.float64) / 255.0
    mean = scaled.mean(axis=(0, 1, 2))
    std = scaled.std(axis=(0, 1, 2))
    return mean, np.where(std == 0.0, 1.0, std)


def standardisation_stats(
    ds: ImageDataset, cache_path=None
) -> tuple[np.ndarray, np.ndarray]:
    """channel_stats with an optional JSON sidecar cache."""
    if cache_path is not None:
        cache_path = Path(cache_path)
        if cache_path.exists():
            obj = json.loads(cache_path.read_text())
            return np.asarray(obj["mean"]), np.asarray(obj["std"])
    mean, std = channel_stats(ds)
    if cache_path is not None:
        cache_path.write_text(
            json.dumps({"mean": mean.tolist(), "std": std.tolist()}, sort_keys=True)
        )
    return mean, std


def standardise_images(
    images: np.ndarray, stats: tuple[np.ndarray, np.ndarray]
) -> np.ndarray:
    mean, std = stats
    scaled = images.astype(np.float64) / 255.0
    return ((scaled - mean) / std).astype(np.float32)


def sample_batch(
    ds: ImageDataset,
    n_bs: int,
    batch_seed: int,
    stats: tuple[np.ndarray, np.ndarray] | None = None,
    raw: bool = False,
) -> DatasetBatch:
    """n_bs images uniform without replacement, deterministic in batch_seed."""
    if not 1 <= n_bs <= len(ds):
        raise DataError(f"batch size {n_bs} not in [1, {len(ds)}]")
    idx = RandomStream(batch_seed).sample_without_replacement(len(ds), n_bs)
    images = ds.images[idx]
    if raw:
        pixels = (images.astype(np.float64) / 255.0).astype(np.float32)
    else:
        pixels = standardise_images(images, stats if stats is not None else channel_stats(ds))
    return DatasetBatch(
        pixels=pixels,
        labels=ds.labels[idx].copy(),
        batch_seed=batch_seed,
        classes=ds.classes,
    )
