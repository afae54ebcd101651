"""Command-line front end.

Settings resolve in increasing precedence: built-in defaults, then the
section named after the subcommand in the --config file (INI key=value),
then flags given on the command line.  Every command prints its fully
resolved settings, master seed included, as one JSON line before doing
any work, so a run can be repeated exactly from its own log.  Timing
goes to stderr; stdout stays byte-deterministic.

Exit codes: 0 ok, 2 usage, 3 data, 4 numeric.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
import time
from pathlib import Path

from .data import (
    channel_stats,
    load_benchmark_fixture,
    load_flat_binary,
    load_splits,
    sample_batch,
)
from .data.paths import data_root
from .errors import DataError, NoValidCandidateError, NumericError, ParseError
from .harness import (
    LR_GRID,
    ExperimentConfig,
    desk_study_archs,
    mnist_study_splits,
    optimal_baseline,
    random_baseline,
    run_mnist_study,
    run_selection_experiment,
)
from .report import ScatterConfig, emit_scatter_svg, summarize, write_jsonl
from .rng import derive_seed, str_seed
from .scoring import untrained_stats
from .space import MLPSpec, enumerate_mlp_space, parse_arch_string

_COMMON = {
    "seed": ("int", 0),
    "threads": ("int", None),
    "data_dir": ("str", None),
}

# name -> (coercion, default); None defaults mean "resolve or require later"
_SETTINGS: dict[str, dict] = {
    "score": {
        **_COMMON,
        "arch": ("str", None),
        "mlp": ("str", None),
        "data": ("str", None),
        "dataset": ("str", "cifar10"),
        "n_init": ("int", 10),
        "batch_size": ("int", 64),
    },
    "search": {
        **_COMMON,
        "dataset": ("str", "cifar10"),
        "fixture": ("str", None),
        "data": ("str", None),
        "n_runs": ("int", 10),
        "n_a": ("int", 10),
        "n_init": ("int", 10),
        "batch_size": ("int", 64),
        "score": ("str", "cv"),
        "out": ("str", None),
    },
    "study": {
        **_COMMON,
        "mnist": ("str", None),
        "archs": ("str", "desk"),
        "seeds": ("int", 10),
        "lrs": ("floats", LR_GRID),
        "epochs": ("int", 200),
        "per_class": ("int", 20),
        "out": ("str", None),
    },
    "baseline": {
        **_COMMON,
        "kind": ("str", "random"),
        "dataset": ("str", "cifar10"),
        "fixture": ("str", None),
        "n_runs": ("int", 10),
        "n_a": ("int", 10),
        "out": ("str", None),
    },
}

_HELP = {
    "score": "score one architecture over fresh initialisations",
    "search": "run the selection experiment against a benchmark fixture",
    "study": "train the MLP grid on reduced MNIST and relate cv to accuracy",
    "baseline": "random or oracle selection over the same candidate draws",
}


def _coerce(kind: str, value):
    if kind == "int":
        return int(str(value), 0)
    if kind == "floats":
        return tuple(float(tok) for tok in str(value).split(","))
    return str(value)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tlnas", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for command, spec in _SETTINGS.items():
        p = sub.add_parser(command, help=_HELP[command])
        p.add_argument("--config", default=argparse.SUPPRESS, help="INI settings file")
        for key in spec:
            p.add_argument(
                f"--{key.replace('_', '-')}",
                dest=key,
                default=argparse.SUPPRESS,
            )
    return parser


def _read_config_file(path: str, command: str, spec: dict) -> dict:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ValueError(f"config file not found: {path}")
    if command not in parser:
        return {}
    out = {}
    for key, value in parser[command].items():
        key = key.replace("-", "_")
        if key not in spec:
            raise ValueError(f"unknown setting {key!r} in [{command}] of {path}")
        out[key] = value
    return out


def _parse_mlp(text: str) -> MLPSpec:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"--mlp expects W1,W2, got {text!r}")
    try:
        return MLPSpec(int(parts[0]), int(parts[1]))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"--mlp {text!r}: {exc}") from exc


def _parse_archs(text: str) -> list[MLPSpec]:
    if text == "full":
        return enumerate_mlp_space()
    if text == "desk":
        return desk_study_archs()
    archs = []
    for part in text.split(";"):
        archs.append(_parse_mlp(part))
    return archs


def _require(settings: dict, *keys: str) -> None:
    for key in keys:
        if settings[key] is None:
            raise ValueError(f"--{key.replace('_', '-')} is required")


def _resolve(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, and flags, then validate."""
    command = args.command
    spec = _SETTINGS[command]
    settings = {key: default for key, (_, default) in spec.items()}

    config_path = getattr(args, "config", None)
    raw = {}
    if config_path is not None:
        raw.update(_read_config_file(config_path, command, spec))
    for key in spec:
        if hasattr(args, key):
            raw[key] = getattr(args, key)
    for key, value in raw.items():
        settings[key] = _coerce(spec[key][0], value)

    if settings["threads"] is None:
        settings["threads"] = os.cpu_count() or 1
    if settings["threads"] < 1:
        raise ValueError("--threads must be at least 1")
    settings["data_dir"] = str(data_root(settings["data_dir"]))

    for key in ("n_init", "n_runs", "n_a", "batch_size", "seeds", "epochs", "per_class"):
        if key in settings and settings[key] < 1:
            raise ValueError(f"--{key.replace('_', '-')} must be at least 1")

    if command == "score":
        given = [k for k in ("arch", "mlp") if settings[k] is not None]
        if len(given) != 1:
            raise ValueError("give exactly one of --arch or --mlp")
        if settings["arch"] is not None:
            try:
                parse_arch_string(settings["arch"])
            except ParseError as exc:
                raise ValueError(f"--arch: {exc}") from exc
        else:
            _parse_mlp(settings["mlp"])
    elif command == "search":
        _require(settings, "fixture", "out")
        if settings["score"] not in ("cv", "mellor"):
            raise ValueError(f"--score must be cv or mellor, got {settings['score']!r}")
    elif command == "study":
        _require(settings, "out")
        archs = _parse_archs(settings["archs"])
        settings["archs"] = ";".join(f"{a.units_layer1},{a.units_layer2}" for a in archs)
        for lr in settings["lrs"]:
            if lr not in LR_GRID:
                raise ValueError(f"--lrs: {lr} not in the study grid {LR_GRID}")
    elif command == "baseline":
        _require(settings, "fixture")
        if settings["kind"] not in ("random", "optimal"):
            raise ValueError(f"--kind must be random or optimal, got {settings['kind']!r}")

    return settings


def _derived_seeds(command: str, s: dict) -> dict:
    seed = s["seed"]
    if command == "score":
        init_base = derive_seed(seed, 0, 0)
        return {
            "batch_seed": derive_seed(seed, 0),
            "init_seeds": [derive_seed(init_base, i) for i in range(s["n_init"])],
        }
    if command == "search":
        return {
            "batch_seeds": [derive_seed(seed, r) for r in range(s["n_runs"])],
            "candidate_seeds": [derive_seed(seed, r, 1) for r in range(s["n_runs"])],
        }
    if command == "study":
        return {"reduce_seed": derive_seed(seed, str_seed("reduce-train"))}
    return {"candidate_seeds": [derive_seed(seed, r, 1) for r in range(s["n_runs"])]}


def _print_config(command: str, settings: dict) -> None:
    obj = {
        "command": command,
        "settings": {
            k: list(v) if isinstance(v, tuple) else v for k, v in settings.items()
        },
        "derived_seeds": _derived_seeds(command, settings),
    }
    print(json.dumps(obj, sort_keys=True, separators=(",", ":")))


def _load_images(s: dict):
    if s.get("data") is not None:
        path = Path(s["data"])
        if path.is_file():
            return load_flat_binary(path, name=s["dataset"])
        return load_splits(s["dataset"], path)["train"]
    return load_splits(s["dataset"], s["data_dir"])["train"]


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def cmd_score(s: dict) -> int:
    if s["arch"] is not None:
        spec = parse_arch_string(s["arch"])
    else:
        spec = _parse_mlp(s["mlp"])
    images = _load_images(s)
    stats = channel_stats(images)
    # same derivation as run 0, candidate 0 of the selection experiment
    batch = sample_batch(images, s["batch_size"], derive_seed(s["seed"], 0), stats=stats)
    started = time.perf_counter()
    result = untrained_stats(spec, batch, s["n_init"], derive_seed(s["seed"], 0, 0))
    elapsed = time.perf_counter() - started
    print(
        json.dumps(
            {
                "accuracies": list(result.accuracies),
                "cv_u": result.cv_u,
                "degenerate": result.degenerate,
                "mu_u": result.mu_u,
                "sigma_u": result.sigma_u,
            },
            sort_keys=True,
            separators=(",", ":"),
        )
    )
    print(
        f"{s['n_init']} inits in {elapsed:.3f} s ({elapsed / s['n_init']:.3f} s/init)",
        file=sys.stderr,
    )
    return 0


def cmd_search(s: dict) -> int:
    fixture = load_benchmark_fixture(s["fixture"])
    images = _load_images(s)
    cfg = ExperimentConfig(
        dataset=s["dataset"],
        n_runs=s["n_runs"],
        n_a=s["n_a"],
        n_init=s["n_init"],
        n_bs=s["batch_size"],
        score="cv_u" if s["score"] == "cv" else "mellor",
        master_seed=s["seed"],
    )
    started = time.perf_counter()
    records, _ = run_selection_experiment(cfg, images, fixture, threads=s["threads"])
    elapsed = time.perf_counter() - started
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(records, out / "run_records.jsonl")
    table = summarize(records)
    (out / "summary.csv").write_text(table, encoding="utf-8")
    print(table, end="")
    print(f"{s['n_runs']} runs in {elapsed:.3f} s", file=sys.stderr)
    return 0


def cmd_study(s: dict) -> int:
    archs = _parse_archs(s["archs"])
    splits = load_splits("mnist", s["mnist"] if s["mnist"] is not None else s["data_dir"])
    splits = mnist_study_splits(splits, s["seed"], per_class=s["per_class"])
    started = time.perf_counter()
    records = run_mnist_study(
        archs,
        n_seeds=s["seeds"],
        lr_grid=s["lrs"],
        splits=splits,
        master_seed=s["seed"],
        epochs=s["epochs"],
        threads=s["threads"],
    )
    elapsed = time.perf_counter() - started
    out = Path(s["out"])
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(records, out / "study_records.jsonl")
    points = [(r.cv_u, r.mu_t, math.log10(r.n_params)) for r in records]
    emit_scatter_svg(points, ScatterConfig(), out / "study_scatter.svg")
    print("units1,units2,lr,mu_t,sigma_t,mu_u,sigma_u,cv_u,n_params,n_seeds")
    for r in records:
        print(
            ",".join(
                [
                    str(r.mlp.units_layer1),
                    str(r.mlp.units_layer2),
                    _fmt(r.lr_selected),
                    _fmt(r.mu_t),
                    _fmt(r.sigma_t),
                    _fmt(r.mu_u),
                    _fmt(r.sigma_u),
                    _fmt(r.cv_u),
                    str(r.n_params),
                    str(r.n_seeds),
                ]
            )
        )
    print(f"{len(records)} architectures in {elapsed:.3f} s", file=sys.stderr)
    return 0


def cmd_baseline(s: dict) -> int:
    fixture = load_benchmark_fixture(s["fixture"])
    cfg = ExperimentConfig(
        dataset=s["dataset"],
        n_runs=s["n_runs"],
        n_a=s["n_a"],
        n_init=1,
        n_bs=1,
        master_seed=s["seed"],
    )
    runner = random_baseline if s["kind"] == "random" else optimal_baseline
    records, _ = runner(cfg, fixture)
    table = summarize(records)
    if s["out"] is not None:
        out = Path(s["out"])
        out.mkdir(parents=True, exist_ok=True)
        write_jsonl(records, out / "run_records.jsonl")
        (out / "summary.csv").write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


_COMMANDS = {
    "score": cmd_score,
    "search": cmd_search,
    "study": cmd_study,
    "baseline": cmd_baseline,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        settings = _resolve(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _print_config(args.command, settings)
    try:
        return _COMMANDS[args.command](settings)
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except (DataError, ParseError, NoValidCandidateError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
