from .fixture import fixture_arch_strings, load_benchmark_fixture
from .io import (
    FLAT_MAGIC,
    load_cifar_binary,
    load_flat_binary,
    load_mnist_idx,
    write_flat_binary,
)
from .paths import (
    DATASET_NAMES,
    SPLIT_SEEDS,
    cifar10_splits,
    cifar100_splits,
    data_root,
    imagenet16_splits,
    load_splits,
    mnist_splits,
)
from .prep import (
    channel_stats,
    reduce_train_per_class,
    sample_batch,
    split_in_half,
    standardisation_stats,
    standardise_images,
)
from .types import BenchmarkEntry, DatasetBatch, ImageDataset

__all__ = [
    "BenchmarkEntry",
    "DatasetBatch",
    "DATASET_NAMES",
    "FLAT_MAGIC",
    "ImageDataset",
    "SPLIT_SEEDS",
    "channel_stats",
    "cifar10_splits",
    "cifar100_splits",
    "data_root",
    "fixture_arch_strings",
    "imagenet16_splits",
    "load_benchmark_fixture",
    "load_cifar_binary",
    "load_flat_binary",
    "load_mnist_idx",
    "load_splits",
    "mnist_splits",
    "reduce_train_per_class",
    "sample_batch",
    "split_in_half",
    "standardisation_stats",
    "standardise_images",
    "write_flat_binary",
]
