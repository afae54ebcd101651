"""Repack the 16x16 downsampled image pickles into flat binaries.

Input: the published batch files (train_data_batch_1..N plus val_data),
each a pickled dict with channel-planar uint8 rows and 1-based labels.
Only classes 1..120 are kept, remapped to 0..119.  The validation file
is split into equal val/test halves by alternating within each class,
so both halves stay balanced and the split depends only on file order.
"""

from __future__ import annotations

import pickle
import struct
from pathlib import Path

import numpy as np

from .errors import ConversionError

FLAT_MAGIC = b"TLNAS1"
CLASSES = 120
SIDE = 16


def _load_batch(path) -> tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, "rb") as fh:
            batch = pickle.load(fh, encoding="latin1")
    except (pickle.UnpicklingError, EOFError) as exc:
        raise ConversionError(f"{path}: not a pickle ({exc})") from exc
    try:
        data = np.asarray(batch["data"], dtype=np.uint8)
        labels = np.asarray(batch["labels"], dtype=np.int64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConversionError(f"{path}: not an image batch ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != 3 * SIDE * SIDE:
        raise ConversionError(
            f"{path}: shape mismatch {data.shape}, expected (*, {3 * SIDE * SIDE})"
        )
    if data.shape[0] != labels.shape[0]:
        raise ConversionError(
            f"{path}: {data.shape[0]} rows but {labels.shape[0]} labels"
        )
    keep = (labels >= 1) & (labels <= CLASSES)
    images = data[keep].reshape(-1, 3, SIDE, SIDE).transpose(0, 2, 3, 1)
    return np.ascontiguousarray(images), labels[keep] - 1


def _write_flat(path, images: np.ndarray, labels: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(FLAT_MAGIC)
        fh.write(struct.pack("<5I", len(labels), SIDE, SIDE, 3, CLASSES))
        fh.write(labels.astype("<u2").tobytes())
        fh.write(images.tobytes())


def _first_half_mask(labels: np.ndarray) -> np.ndarray:
    seen = np.zeros(CLASSES, dtype=np.int64)
    mask = np.zeros(len(labels), dtype=bool)
    for i, label in enumerate(labels):
        mask[i] = seen[label] % 2 == 0
        seen[label] += 1
    return mask


def convert_imagenet16(pickle_dir, out_dir) -> dict[str, int]:
    """Write train/val/test .tlnas files; returns per-split image counts."""
    src = Path(pickle_dir)
    batches = sorted(
        src.glob("train_data_batch_*"), key=lambda p: int(p.name.rsplit("_", 1)[1])
    )
    if not batches:
        raise ConversionError(f"{src}: no train_data_batch_* files")
    loaded = [_load_batch(p) for p in batches]
    train_images = np.concatenate([images for images, _ in loaded])
    train_labels = np.concatenate([labels for _, labels in loaded])

    val_path = src / "val_data"
    if not val_path.exists():
        raise ConversionError(f"{val_path}: missing")
    val_images, val_labels = _load_batch(val_path)
    first = _first_half_mask(val_labels)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_flat(out / "train.tlnas", train_images, train_labels)
    _write_flat(out / "val.tlnas", val_images[first], val_labels[first])
    _write_flat(out / "test.tlnas", val_images[~first], val_labels[~first])
    return {
        "train": len(train_labels),
        "val": int(first.sum()),
        "test": int((~first).sum()),
    }
