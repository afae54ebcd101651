"""Trained-accuracy lookup table, keyed by (arch string, dataset)."""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import FixtureError
from ..space import parse_arch_string
from .types import BenchmarkEntry

_REQUIRED_KEYS = ("arch", "dataset", "val_acc", "test_acc")


def load_benchmark_fixture(path) -> dict[tuple[str, str], BenchmarkEntry]:
    entries: dict[tuple[str, str], BenchmarkEntry] = {}
    with open(Path(path), "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FixtureError(f"{path}:{lineno}: not valid JSON ({exc.msg})") from exc
            for key in _REQUIRED_KEYS:
                if key not in obj:
                    raise FixtureError(f"{path}:{lineno}: missing key {key!r}")
            try:
                parse_arch_string(obj["arch"])
            except Exception as exc:
                raise FixtureError(
                    f"{path}:{lineno}: unparsable arch {obj['arch']!r}: {exc}"
                ) from exc
            key = (obj["arch"], obj["dataset"])
            if key in entries:
                raise FixtureError(
                    f"{path}:{lineno}: duplicate entry for {obj['dataset']}/{obj['arch']}"
                )
            try:
                entries[key] = BenchmarkEntry(
                    arch_string=obj["arch"],
                    dataset=obj["dataset"],
                    val_accuracy=float(obj["val_acc"]),
                    test_accuracy=float(obj["test_acc"]),
                )
            except (TypeError, ValueError) as exc:
                raise FixtureError(f"{path}:{lineno}: {exc}") from exc
    return entries


def fixture_arch_strings(
    fixture: dict[tuple[str, str], BenchmarkEntry], dataset: str
) -> list[str]:
    """Sorted arch strings the fixture covers for one dataset."""
    archs = sorted(arch for arch, ds in fixture if ds == dataset)
    if not archs:
        raise FixtureError(f"fixture has no entries for dataset {dataset!r}")
    return archs
