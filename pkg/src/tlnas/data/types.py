"""In-memory dataset containers shared by every loader."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class ImageDataset:
    """Raw images as bytes; preprocessing happens at batch time."""

    name: str
    split: str
    images: np.ndarray  # N,H,W,C uint8
    labels: np.ndarray  # N int64
    classes: int

    def __post_init__(self):
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.images.ndim != 4 or self.images.dtype != np.uint8:
            raise ValueError("images must be an N,H,W,C uint8 array")
        if self.labels.shape != (len(self.images),):
            raise ValueError(
                f"{len(self.labels)} labels for {len(self.images)} images"
            )
        if self.classes < 1:
            raise ValueError("classes must be positive")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.classes):
            raise ValueError(f"labels outside [0, {self.classes})")

    def __len__(self) -> int:
        return len(self.images)

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(self.images.shape[1:])


@dataclass(frozen=True)
class DatasetBatch:
    """A fixed batch: pixels already scaled and standardised."""

    pixels: np.ndarray  # n,H,W,C float32
    labels: np.ndarray
    batch_seed: int
    classes: int

    def __post_init__(self):
        if self.pixels.ndim != 4 or self.pixels.dtype != np.float32:
            raise ValueError("batch pixels must be an n,H,W,C float32 array")
        if self.labels.shape != (len(self.pixels),):
            raise ValueError("batch labels do not match pixels")

    def __len__(self) -> int:
        return len(self.pixels)

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(self.pixels.shape[1:])


@dataclass(frozen=True)
class BenchmarkEntry:
    """Trained accuracies for one (architecture, dataset) pair."""

    arch_string: str
    dataset: str
    val_accuracy: float
    test_accuracy: float

    def __post_init__(self):
        for acc in (self.val_accuracy, self.test_accuracy):
            if not 0.0 <= acc <= 100.0:
                raise ValueError(f"accuracy {acc} outside [0, 100]")
