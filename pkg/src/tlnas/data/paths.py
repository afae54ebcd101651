"""Standard data-directory layout and benchmark split assembly.

Root resolution order: explicit argument, TLNAS_DATA_DIR, ./data.
Layout under the root:

    mnist/train-images-idx3-ubyte[.gz]  train-labels-idx1-ubyte[.gz]
          t10k-images-idx3-ubyte[.gz]   t10k-labels-idx1-ubyte[.gz]
    cifar10/data_batch_1.bin .. data_batch_5.bin  test_batch.bin
    cifar100/train.bin  test.bin
    imagenet16/train.tlnas  val.tlnas  test.tlnas

Validation splits follow the benchmark conventions: CIFAR-10 halves its
50K train set into 25K train / 25K val, CIFAR-100 and MNIST halve their
10K test sets into 5K val / 5K test.  The halving permutations are
seeded by the fixed names below so every invocation agrees.
"""

from __future__ import annotations

import os
from pathlib import Path

from ..errors import DataError
from ..rng import str_seed
from .io import load_cifar_binary, load_flat_binary, load_mnist_idx
from .prep import split_in_half
from .types import ImageDataset

SPLIT_SEEDS = {
    "mnist": str_seed("mnist-test-halves-v1"),
    "cifar10": str_seed("cifar10-train-halves-v1"),
    "cifar100": str_seed("cifar100-test-halves-v1"),
}

DATASET_NAMES = ("mnist", "cifar10", "cifar100", "imagenet16-120")


def data_root(root=None) -> Path:
    if root is not None:
        return Path(root)
    return Path(os.environ.get("TLNAS_DATA_DIR", "data"))


def _find(base: Path, stem: str) -> Path:
    for candidate in (base / stem, base / f"{stem}.gz"):
        if candidate.exists():
            return candidate
    raise DataError(f"missing data file {base / stem}[.gz]")


Splits = dict[str, ImageDataset]


def mnist_splits(root=None) -> Splits:
    base = data_root(root) / "mnist"
    train = load_mnist_idx(
        _find(base, "train-images-idx3-ubyte"), _find(base, "train-labels-idx1-ubyte"), "train"
    )
    test_full = load_mnist_idx(
        _find(base, "t10k-images-idx3-ubyte"), _find(base, "t10k-labels-idx1-ubyte"), "test"
    )
    val, test = split_in_half(test_full, SPLIT_SEEDS["mnist"], "val", "test")
    return {"train": train, "val": val, "test": test}


def cifar10_splits(root=None) -> Splits:
    base = data_root(root) / "cifar10"
    full = load_cifar_binary(
        "cifar10", [_find(base, f"data_batch_{i}.bin") for i in range(1, 6)], "train"
    )
    train, val = split_in_half(full, SPLIT_SEEDS["cifar10"], "train", "val")
    test = load_cifar_binary("cifar10", [_find(base, "test_batch.bin")], "test")
    return {"train": train, "val": val, "test": test}


def cifar100_splits(root=None) -> Splits:
    base = data_root(root) / "cifar100"
    train = load_cifar_binary("cifar100", [_find(base, "train.bin")], "train")
    test_full = load_cifar_binary("cifar100", [_find(base, "test.bin")], "test")
    val, test = split_in_half(test_full, SPLIT_SEEDS["cifar100"], "val", "test")
    return {"train": train, "val": val, "test": test}


def imagenet16_splits(root=None) -> Splits:
    base = data_root(root) / "imagenet16"
    return {
        split: load_flat_binary(_find(base, f"{split}.tlnas"), "imagenet16-120", split)
        for split in ("train", "val", "test")
    }


_LOADERS = {
    "mnist": mnist_splits,
    "cifar10": cifar10_splits,
    "cifar100": cifar100_splits,
    "imagenet16-120": imagenet16_splits,
}


def load_splits(dataset: str, root=None) -> Splits:
    if dataset not in _LOADERS:
        raise DataError(f"unknown dataset {dataset!r}, expected one of {DATASET_NAMES}")
    return _LOADERS[dataset](root)
