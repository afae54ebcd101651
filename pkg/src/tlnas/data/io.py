"""Byte-level readers for the three on-disk image formats.

IDX and the CIFAR record layouts are the upstream archives' own formats;
TLNAS1 is this artifact's flat container (magic ``TLNAS1``, five
little-endian u32 fields N,H,W,C,classes, N u16 labels, N*H*W*C pixel
bytes).  All readers are pure functions of the file bytes.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

from ..errors import FormatError
from .types import ImageDataset

_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801

FLAT_MAGIC = b"TLNAS1"


def _read_bytes(path) -> bytes:
    data = Path(path).read_bytes()
    if data[:2] == b"\x1f\x8b":  # gzip member
        data = gzip.decompress(data)
    return data


def _parse_idx(data: bytes, path, expected_magic: int, ndim: int) -> np.ndarray:
    header = 4 + 4 * ndim
    if len(data) < header:
        raise FormatError(f"{path}: truncated IDX header")
    magic = struct.unpack(">I", data[:4])[0]
    if magic != expected_magic:
        raise FormatError(f"{path}: bad IDX magic 0x{magic:08x}")
    dims = struct.unpack(f">{ndim}I", data[4:header])
    count = int(np.prod(dims))
    if len(data) != header + count:
        raise FormatError(
            f"{path}: expected {header + count} bytes for shape {dims}, got {len(data)}"
        )
    return np.frombuffer(data, dtype=np.uint8, offset=header).reshape(dims)


def load_mnist_idx(image_path, label_path, split: str = "train") -> ImageDataset:
    """Read an IDX image/label file pair; transparently gunzips."""
    images = _parse_idx(_read_bytes(image_path), image_path, _IDX_IMAGES_MAGIC, 3)
    labels = _parse_idx(_read_bytes(label_path), label_path, _IDX_LABELS_MAGIC, 1)
    if len(images) != len(labels):
        raise FormatError(
            f"{image_path}: {len(images)} images but {len(labels)} labels"
        )
    if len(labels) and labels.max() > 9:
        raise FormatError(f"{label_path}: label {labels.max()} outside [0, 10)")
    return ImageDataset(
        name="mnist",
        split=split,
        images=images.reshape(-1, images.shape[1], images.shape[2], 1),
        labels=labels.astype(np.int64),
        classes=10,
    )


_CIFAR_RECORDS = {
    # version -> (record length, label offset, classes)
    "cifar10": (3073, 0, 10),
    "cifar100": (3074, 1, 100),  # byte 0 is the coarse label, unused
}


def load_cifar_binary(version: str, paths: Iterable, split: str = "train") -> ImageDataset:
    """Concatenate CIFAR batch files into one raw dataset.

    Records are 1 (or 2) label bytes followed by 3,072 channel-planar
    pixel bytes; splitting into the benchmark's halves is a separate
    step (see prep.split_in_half).
    """
    if version not in _CIFAR_RECORDS:
        raise ValueError(f"unknown CIFAR version {version!r}")
    record_len, label_offset, classes = _CIFAR_RECORDS[version]
    all_images, all_labels = [], []
    for path in paths:
        data = _read_bytes(path)
        if not data or len(data) % record_len:
            raise FormatError(
                f"{path}: size {len(data)} is not a multiple of {record_len}"
            )
        records = np.frombuffer(data, dtype=np.uint8).reshape(-1, record_len)
        pixels = records[:, record_len - 3072 :].reshape(-1, 3, 32, 32)
        all_images.append(pixels.transpose(0, 2, 3, 1))  # planar -> HWC
        all_labels.append(records[:, label_offset].astype(np.int64))
    images = np.ascontiguousarray(np.concatenate(all_images))
    labels = np.concatenate(all_labels)
    if labels.size and labels.max() >= classes:
        raise FormatError(f"label {labels.max()} outside [0, {classes})")
    return ImageDataset(name=version, split=split, images=images, labels=labels, classes=classes)


def load_flat_binary(path, name: str = "imagenet16-120", split: str = "train") -> ImageDataset:
    data = _read_bytes(path)
    header = len(FLAT_MAGIC) + 20
    if len(data) < header or data[: len(FLAT_MAGIC)] != FLAT_MAGIC:
        raise FormatError(f"{path}: not a TLNAS1 file")
    n, h, w, c, classes = struct.unpack("<5I", data[len(FLAT_MAGIC) : header])
    labels_end = header + 2 * n
    expected = labels_end + n * h * w * c
    if len(data) != expected:
        raise FormatError(f"{path}: expected {expected} bytes, got {len(data)}")
    labels = np.frombuffer(data, dtype="<u2", offset=header, count=n).astype(np.int64)
    images = np.frombuffer(data, dtype=np.uint8, offset=labels_end).reshape(n, h, w, c)
    return ImageDataset(name=name, split=split, images=images, labels=labels, classes=classes)


def write_flat_binary(ds: ImageDataset, path) -> None:
    """Inverse of load_flat_binary; labels must fit in u16."""
    if len(ds) and ds.labels.max() > 0xFFFF:
        raise FormatError("labels do not fit the u16 field")
    n = len(ds)
    h, w, c = ds.image_shape
    with open(path, "wb") as fh:
        fh.write(FLAT_MAGIC)
        fh.write(struct.pack("<5I", n, h, w, c, ds.classes))
        fh.write(ds.labels.astype("<u2").tobytes())
        fh.write(np.ascontiguousarray(ds.images).tobytes())
