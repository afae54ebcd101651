"""Persist and render experiment outputs.

Every emitted file is byte-deterministic for fixed inputs: JSON is
written with sorted keys and fixed separators, CSV numbers use 6
significant digits, and the SVG contains no timestamps.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError
from .harness.selection import RunRecord, summarize_records
from .harness.study import StudyRecord
from .space import MLPSpec
from .stats import welch_t_test

SCHEMA = "tlnas-run-v1"


def _record_to_obj(record) -> dict:
    if isinstance(record, RunRecord):
        return {
            "kind": "run",
            "method": record.method,
            "dataset": record.dataset,
            "run_id": record.run_id,
            "batch_seed": record.batch_seed,
            "candidates": [[arch, score] for arch, score in record.candidates],
            "selected": record.selected,
            "trained_val": record.trained_val,
            "trained_test": record.trained_test,
        }
    if isinstance(record, StudyRecord):
        return {
            "kind": "study",
            "mlp": [record.mlp.units_layer1, record.mlp.units_layer2],
            "lr_selected": record.lr_selected,
            "mu_t": record.mu_t,
            "sigma_t": record.sigma_t,
            "mu_u": record.mu_u,
            "sigma_u": record.sigma_u,
            "cv_u": record.cv_u,
            "n_params": record.n_params,
            "n_seeds": record.n_seeds,
        }
    raise TypeError(f"cannot serialise {type(record).__name__}")


def _obj_to_record(obj: dict):
    kind = obj.get("kind")
    if kind == "run":
        return RunRecord(
            method=obj["method"],
            dataset=obj["dataset"],
            run_id=obj["run_id"],
            batch_seed=obj["batch_seed"],
            candidates=tuple((arch, score) for arch, score in obj["candidates"]),
            selected=obj["selected"],
            trained_val=obj["trained_val"],
            trained_test=obj["trained_test"],
        )
    if kind == "study":
        return StudyRecord(
            mlp=MLPSpec(*obj["mlp"]),
            lr_selected=obj["lr_selected"],
            mu_t=obj["mu_t"],
            sigma_t=obj["sigma_t"],
            mu_u=obj["mu_u"],
            sigma_u=obj["sigma_u"],
            cv_u=obj["cv_u"],
            n_params=obj["n_params"],
            n_seeds=obj["n_seeds"],
        )
    raise FormatError(f"unknown record kind {kind!r}")


def write_jsonl(records, path) -> None:
    lines = [json.dumps({"schema": SCHEMA}, sort_keys=True, separators=(",", ":"))]
    for record in records:
        lines.append(
            json.dumps(_record_to_obj(record), sort_keys=True, separators=(",", ":"))
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_jsonl(path) -> list:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].strip():
        raise FormatError(f"{path}: missing schema header")
    records = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{lineno}: not valid JSON ({exc.msg})") from exc
        if lineno == 1:
            if obj.get("schema") != SCHEMA:
                raise FormatError(
                    f"{path}:1: expected schema {SCHEMA!r}, got {obj.get('schema')!r}"
                )
            continue
        try:
            records.append(_obj_to_record(obj))
        except (KeyError, TypeError, ValueError, FormatError) as exc:
            raise FormatError(f"{path}:{lineno}: bad record ({exc})") from exc
    return records


def _fmt(value: float) -> str:
    return f"{value:.6g}"


SUMMARY_COLUMNS = (
    "method",
    "dataset",
    "split",
    "mean",
    "std",
    "n_runs",
    "n_skipped",
    "p_vs_random",
)


def summarize(records) -> str:
    """Table-style CSV over the run records (study records are ignored).

    Means and stds come from the same reduction the harness reports;
    the p-value column compares each method against the random baseline
    for the same dataset when that baseline is present.
    """
    runs = [r for r in records if isinstance(r, RunRecord)]
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for rec in runs:
        groups.setdefault((rec.method, rec.dataset), []).append(rec)

    def split_accs(recs: list[RunRecord], split: str) -> list[float]:
        field = "trained_val" if split == "val" else "trained_test"
        return [getattr(r, field) for r in recs if not r.skipped]

    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SUMMARY_COLUMNS)
    for method, dataset in sorted(groups):
        recs = groups[(method, dataset)]
        summary = summarize_records(recs)
        random_recs = groups.get(("random", dataset))
        for split, mean, std in (
            ("val", summary.val_mean, summary.val_std),
            ("test", summary.test_mean, summary.test_std),
        ):
            p_text = ""
            if method != "random" and random_recs:
                ours = split_accs(recs, split)
                base = split_accs(random_recs, split)
                if len(ours) >= 2 and len(base) >= 2:
                    p_text = _fmt(welch_t_test(ours, base).p_value)
            writer.writerow(
                [
                    method,
                    dataset,
                    split,
                    _fmt(mean),
                    _fmt(std),
                    summary.n_runs,
                    summary.n_skipped,
                    p_text,
                ]
            )
    return out.getvalue()


@dataclass(frozen=True)
class ScatterConfig:
    x_label: str = "cv_u"
    y_label: str = "mean trained accuracy"
    colour_label: str = "log10 parameters"
    x_log: bool = True
    width: int = 640
    height: int = 480
    title: str = ""


_VIRIDIS_ANCHORS = (
    (0x44, 0x01, 0x54),
    (0x46, 0x32, 0x7E),
    (0x36, 0x5C, 0x8D),
    (0x27, 0x7F, 0x8E),
    (0x1F, 0xA1, 0x87),
    (0x4A, 0xC1, 0x6D),
    (0xA0, 0xDA, 0x39),
    (0xDF, 0xE3, 0x18),
    (0xFD, 0xE7, 0x25),
)


def _viridis(t: float) -> str:
    t = min(max(t, 0.0), 1.0)
    pos = t * (len(_VIRIDIS_ANCHORS) - 1)
    low = min(int(pos), len(_VIRIDIS_ANCHORS) - 2)
    frac = pos - low
    rgb = tuple(
        round(a + (b - a) * frac)
        for a, b in zip(_VIRIDIS_ANCHORS[low], _VIRIDIS_ANCHORS[low + 1])
    )
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def _nice_range(lo: float, hi: float) -> tuple[float, float]:
    if lo == hi:
        pad = 0.5 if lo == 0 else abs(lo) * 0.1
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    step = (hi - lo) / (count - 1)
    return [lo + i * step for i in range(count)]


def emit_scatter_svg(points, config: ScatterConfig, path) -> None:
    """Standalone SVG scatter; non-finite points are dropped and counted.

    With x_log enabled, points at x <= 0 cannot be placed and count as
    skipped too.
    """
    margin = 56
    plot_w = config.width - 2 * margin
    plot_h = config.height - 2 * margin

    kept, skipped = [], 0
    for x, y, c in points:
        if not all(math.isfinite(v) for v in (x, y, c)) or (config.x_log and x <= 0):
            skipped += 1
            continue
        kept.append((math.log10(x) if config.x_log else x, y, c))

    if kept:
        xs, ys, cs = zip(*kept)
        x_lo, x_hi = _nice_range(min(xs), max(xs))
        y_lo, y_hi = _nice_range(min(ys), max(ys))
        c_lo, c_hi = min(cs), max(cs)
    else:
        x_lo, x_hi, y_lo, y_hi, c_lo, c_hi = 0.0, 1.0, 0.0, 1.0, 0.0, 1.0

    def px(x):
        return margin + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y):
        return config.height - margin - (y - y_lo) / (y_hi - y_lo) * plot_h

    def colour(c):
        return _viridis(0.5 if c_hi == c_lo else (c - c_lo) / (c_hi - c_lo))

    def x_tick_label(value: float) -> str:
        return _fmt(10.0**value) if config.x_log else _fmt(value)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{config.width}" '
        f'height="{config.height}" viewBox="0 0 {config.width} {config.height}">',
        f"<!-- skipped {skipped} non-finite points -->",
        f'<rect width="{config.width}" height="{config.height}" fill="#ffffff"/>',
    ]
    if config.title:
        parts.append(
            f'<text x="{config.width / 2:.2f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{config.title}</text>'
        )
    axis = (
        f'<path d="M {margin} {margin} L {margin} {config.height - margin} '
        f'L {config.width - margin} {config.height - margin}" stroke="#222222" fill="none"/>'
    )
    parts.append(axis)
    for tick in _ticks(x_lo, x_hi):
        x = px(tick)
        parts.append(
            f'<line x1="{x:.2f}" y1="{config.height - margin}" x2="{x:.2f}" '
            f'y2="{config.height - margin + 5}" stroke="#222222"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{config.height - margin + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="10">{x_tick_label(tick)}</text>'
        )
    for tick in _ticks(y_lo, y_hi):
        y = py(tick)
        parts.append(
            f'<line x1="{margin - 5}" y1="{y:.2f}" x2="{margin}" y2="{y:.2f}" stroke="#222222"/>'
        )
        parts.append(
            f'<text x="{margin - 8}" y="{y + 3:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10">{_fmt(tick)}</text>'
        )
    parts.append(
        f'<text x="{config.width / 2:.2f}" y="{config.height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{config.x_label}'
        f"{' (log scale)' if config.x_log else ''}</text>"
    )
    parts.append(
        f'<text x="16" y="{config.height / 2:.2f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {config.height / 2:.2f})">{config.y_label}</text>'
    )
    for x, y, c in kept:
        parts.append(
            f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" '
            f'fill="{colour(c)}" fill-opacity="0.8"/>'
        )
    # colour ramp legend on the right edge
    bar_x = config.width - margin + 18
    bar_h = plot_h // 2
    bar_y = margin
    steps = 16
    for i in range(steps):
        t = 1.0 - i / (steps - 1)
        seg_y = bar_y + i * bar_h / steps
        parts.append(
            f'<rect x="{bar_x}" y="{seg_y:.2f}" width="10" height="{bar_h / steps + 0.5:.2f}" '
            f'fill="{_viridis(t)}"/>'
        )
    parts.append(
        f'<text x="{bar_x + 14}" y="{bar_y + 4}" font-family="sans-serif" '
        f'font-size="9">{_fmt(c_hi)}</text>'
    )
    parts.append(
        f'<text x="{bar_x + 14}" y="{bar_y + bar_h}" font-family="sans-serif" '
        f'font-size="9">{_fmt(c_lo)}</text>'
    )
    parts.append(
        f'<text x="{bar_x}" y="{bar_y + bar_h + 16}" font-family="sans-serif" '
        f'font-size="9">{config.colour_label}</text>'
    )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")
