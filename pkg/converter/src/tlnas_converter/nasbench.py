"""Flatten the published cell-benchmark checkpoint into fixture rows.

The checkpoint is a pickled dict with 'meta_archs' (canonical cell
strings) and 'arch2infos' (per-index training results keyed by
(dataset, seed)).  Output is JSON-lines, one row per (architecture,
dataset), in architecture-index order; running the extraction twice
over the same file produces identical bytes.
"""

from __future__ import annotations

import json

from .errors import ConversionError

# checkpoint entry -> (fixture dataset name, validation metric, test metric).
# The CIFAR-10 numbers come from the -valid entry, whose training used the
# proper train split; its held-out halves are 'x-valid' and 'ori-test'.
SOURCES = (
    ("cifar10-valid", "cifar10", "x-valid", "ori-test"),
    ("cifar100", "cifar100", "x-valid", "x-test"),
    ("ImageNet16-120", "imagenet16-120", "x-valid", "x-test"),
)


def _final_epoch_accuracy(result: dict, eval_name: str) -> float:
    last = result["epochs"] - 1
    return float(result["eval_acc1es"][f"{eval_name}@{last}"])


def _rows_for_arch(arch: str, bundle: dict) -> list[dict]:
    all_results = bundle["all_results"]
    rows = []
    for source, dataset, val_key, test_key in SOURCES:
        seeds = sorted(seed for name, seed in all_results if name == source)
        if not seeds:
            raise KeyError(f"no {source} results")
        vals = [_final_epoch_accuracy(all_results[(source, s)], val_key) for s in seeds]
        tests = [_final_epoch_accuracy(all_results[(source, s)], test_key) for s in seeds]
        rows.append(
            {
                "arch": arch,
                "dataset": dataset,
                "val_acc": sum(vals) / len(vals),
                "test_acc": sum(tests) / len(tests),
            }
        )
    return rows


def extract_nasbench(db_path, out_jsonl) -> int:
    """One fixture row per (architecture, dataset); returns the row count.

    Accuracies are read at the final trained epoch and averaged over
    the seeds present in the file.  The 200-epoch results ('full') are
    preferred; files holding only the short-schedule runs still convert.
    """
    import torch

    payload = torch.load(db_path, map_location="cpu", weights_only=False)
    try:
        meta_archs = payload["meta_archs"]
        arch2infos = payload["arch2infos"]
    except (KeyError, TypeError) as exc:
        raise ConversionError(f"{db_path}: not an architecture database ({exc})") from exc

    count = 0
    with open(out_jsonl, "w", encoding="utf-8") as fh:
        for index, arch in enumerate(meta_archs):
            try:
                info = arch2infos[index]
                bundle = info["full"] if "full" in info else info["less"]
                rows = _rows_for_arch(bundle.get("arch_str", arch), bundle)
            except (KeyError, TypeError, IndexError) as exc:
                raise ConversionError(f"entry {index}: {exc}") from exc
            for row in rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
                count += 1
    return count
