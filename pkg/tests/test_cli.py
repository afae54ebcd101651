import gzip
import json
import struct

import numpy as np
import pytest

from helpers import synthetic_image_dataset, write_fixture_jsonl
from tlnas.cli import _parse_archs, main
from tlnas.data import write_flat_binary
from tlnas.errors import NumericError
from tlnas.report import read_jsonl
from tlnas.space import MLPSpec, cell_from_index, format_arch_string

HEALTHY = (3906, 7812, 11718, 13000, 9451, 151, 2222, 4444, 8888, 14000)
ALL_SKIP = format_arch_string(cell_from_index(3906))
ALL_NONE = format_arch_string(cell_from_index(0))


@pytest.fixture(scope="module")
def flat_data(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "cifar10.tlnas"
    write_flat_binary(synthetic_image_dataset("cifar10"), path)
    return str(path)


@pytest.fixture(scope="module")
def fixture_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("fx") / "fixture.jsonl"
    write_fixture_jsonl(path, HEALTHY)
    return str(path)


def idx_images(images):
    n, h, w, _ = images.shape
    return struct.pack(">IIII", 0x803, n, h, w) + images.tobytes()


def idx_labels(labels):
    return struct.pack(">II", 0x801, len(labels)) + labels.astype(np.uint8).tobytes()


@pytest.fixture(scope="module")
def mnist_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("mnist-root")
    base = root / "mnist"
    base.mkdir()
    rng = np.random.default_rng(42)
    train = rng.integers(0, 256, size=(120, 6, 6, 1), dtype=np.uint8)
    test = rng.integers(0, 256, size=(40, 6, 6, 1), dtype=np.uint8)
    (base / "train-images-idx3-ubyte").write_bytes(idx_images(train))
    (base / "train-labels-idx1-ubyte").write_bytes(
        idx_labels(np.repeat(np.arange(10), 12))
    )
    (base / "t10k-images-idx3-ubyte.gz").write_bytes(gzip.compress(idx_images(test)))
    (base / "t10k-labels-idx1-ubyte.gz").write_bytes(
        idx_labels(np.tile(np.arange(10), 4))
    )
    return str(root)


def run_cli(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def score_argv(flat_data, arch, extra=()):
    return [
        "score", "--arch", arch, "--data", flat_data,
        "--n-init", "3", "--batch-size", "8", "--seed", "5", *extra,
    ]


class TestScore:
    def test_arch_scoring_prints_stats_json(self, flat_data, capsys):
        code, out, err = run_cli(capsys, score_argv(flat_data, ALL_SKIP))
        assert code == 0
        config_line, stats_line = out.splitlines()
        config = json.loads(config_line)
        assert config["command"] == "score"
        assert config["settings"]["seed"] == 5
        assert "init_seeds" in config["derived_seeds"]
        stats = json.loads(stats_line)
        assert set(stats) == {"accuracies", "cv_u", "degenerate", "mu_u", "sigma_u"}
        assert len(stats["accuracies"]) == 3
        assert stats["degenerate"] is False
        assert "s/init" in err

    def test_all_none_arch_is_degenerate(self, flat_data, capsys):
        code, out, _ = run_cli(capsys, score_argv(flat_data, ALL_NONE))
        stats = json.loads(out.splitlines()[1])
        assert code == 0
        assert stats["degenerate"] is True
        assert stats["sigma_u"] == 0.0
        assert stats["cv_u"] == 0.0

    def test_repeat_invocation_identical_stdout(self, flat_data, capsys):
        _, first, _ = run_cli(capsys, score_argv(flat_data, ALL_SKIP))
        _, second, _ = run_cli(capsys, score_argv(flat_data, ALL_SKIP))
        assert first == second

    def test_mlp_scoring(self, flat_data, capsys):
        code, out, _ = run_cli(
            capsys,
            ["score", "--mlp", "8,16", "--data", flat_data, "--n-init", "2",
             "--batch-size", "8"],
        )
        assert code == 0
        assert len(json.loads(out.splitlines()[1])["accuracies"]) == 2

    def test_requires_exactly_one_architecture(self, flat_data, capsys):
        code, _, err = run_cli(
            capsys, score_argv(flat_data, ALL_SKIP, extra=("--mlp", "8,8"))
        )
        assert code == 2 and "exactly one" in err
        code, _, _ = run_cli(capsys, ["score", "--data", flat_data])
        assert code == 2

    def test_unparsable_arch_is_usage_error(self, flat_data, capsys):
        code, out, err = run_cli(capsys, score_argv(flat_data, "|garbage|"))
        assert code == 2
        assert "--arch" in err
        assert out == ""  # validation precedes the config print

    def test_missing_data_is_data_error(self, capsys, tmp_path):
        code, _, err = run_cli(
            capsys,
            ["score", "--arch", ALL_SKIP, "--data-dir", str(tmp_path / "absent")],
        )
        assert code == 3 and "data error" in err

    def test_unknown_flag_exits_2(self, flat_data):
        with pytest.raises(SystemExit) as excinfo:
            main(score_argv(flat_data, ALL_SKIP, extra=("--bogus", "1")))
        assert excinfo.value.code == 2


def search_argv(fixture_path, flat_data, out, extra=()):
    return [
        "search", "--fixture", fixture_path, "--data", flat_data,
        "--n-runs", "5", "--n-a", "2", "--n-init", "2", "--batch-size", "8",
        "--seed", "7", "--out", str(out), *extra,
    ]


class TestSearch:
    def test_writes_records_and_summary(self, fixture_path, flat_data, tmp_path, capsys):
        out_dir = tmp_path / "run"
        code, out, _ = run_cli(capsys, search_argv(fixture_path, flat_data, out_dir))
        assert code == 0
        records = read_jsonl(out_dir / "run_records.jsonl")
        assert len(records) == 5
        assert all(r.method == "cv_u" for r in records)
        table = (out_dir / "summary.csv").read_text()
        assert out.split("\n", 1)[1] == table
        assert table.startswith("method,dataset,split,")

    def test_same_seed_same_bytes(self, fixture_path, flat_data, tmp_path, capsys):
        a, b = tmp_path / "a", tmp_path / "b"
        run_cli(capsys, search_argv(fixture_path, flat_data, a))
        run_cli(capsys, search_argv(fixture_path, flat_data, b))
        for name in ("run_records.jsonl", "summary.csv"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_thread_count_does_not_change_records(
        self, fixture_path, flat_data, tmp_path, capsys
    ):
        a, b = tmp_path / "t1", tmp_path / "t4"
        run_cli(capsys, search_argv(fixture_path, flat_data, a, ("--threads", "1")))
        run_cli(capsys, search_argv(fixture_path, flat_data, b, ("--threads", "4")))
        assert (a / "run_records.jsonl").read_bytes() == (b / "run_records.jsonl").read_bytes()

    def test_rerun_from_printed_config(self, fixture_path, flat_data, tmp_path, capsys):
        out_dir = tmp_path / "run"
        code, out, _ = run_cli(capsys, search_argv(fixture_path, flat_data, out_dir))
        assert code == 0
        snapshot = {
            name: (out_dir / name).read_bytes()
            for name in ("run_records.jsonl", "summary.csv")
        }
        config = json.loads(out.splitlines()[0])
        argv = [config["command"]]
        for key, value in config["settings"].items():
            if value is None:
                continue
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            argv += [f"--{key.replace('_', '-')}", str(value)]
        code, out2, _ = run_cli(capsys, argv)
        assert code == 0
        assert out2 == out
        for name, blob in snapshot.items():
            assert (out_dir / name).read_bytes() == blob

    def test_mellor_selects_largest_score(self, fixture_path, flat_data, tmp_path, capsys):
        out_dir = tmp_path / "mellor"
        code, _, _ = run_cli(
            capsys,
            search_argv(fixture_path, flat_data, out_dir, ("--score", "mellor")),
        )
        assert code == 0
        for record in read_jsonl(out_dir / "run_records.jsonl"):
            assert record.method == "mellor"
            scores = {arch: s for arch, s in record.candidates if s is not None}
            assert record.selected in scores
            assert scores[record.selected] == max(scores.values())

    def test_missing_fixture_exits_3(self, flat_data, tmp_path, capsys):
        code, _, err = run_cli(
            capsys, search_argv(str(tmp_path / "none.jsonl"), flat_data, tmp_path / "o")
        )
        assert code == 3 and "data error" in err

    def test_unknown_score_kind_exits_2(self, fixture_path, flat_data, tmp_path, capsys):
        code, _, err = run_cli(
            capsys,
            search_argv(fixture_path, flat_data, tmp_path / "o", ("--score", "best")),
        )
        assert code == 2 and "--score" in err

    def test_numeric_failure_exits_4(
        self, fixture_path, flat_data, tmp_path, capsys, monkeypatch
    ):
        import tlnas.cli as cli_module

        def explode(*args, **kwargs):
            raise NumericError("overflow in forward pass")

        monkeypatch.setattr(cli_module, "run_selection_experiment", explode)
        code, _, err = run_cli(
            capsys, search_argv(fixture_path, flat_data, tmp_path / "o")
        )
        assert code == 4 and "numeric error" in err

    def test_config_file_supplies_defaults_cli_wins(
        self, fixture_path, flat_data, tmp_path, capsys
    ):
        ini = tmp_path / "settings.ini"
        ini.write_text(
            "[search]\nseed = 9\nn-runs = 4\n"
            f"fixture = {fixture_path}\ndata = {flat_data}\n"
            f"out = {tmp_path / 'from-file'}\nn-a = 2\nn-init = 2\nbatch-size = 8\n"
        )
        code, out, _ = run_cli(capsys, ["search", "--config", str(ini), "--n-runs", "2"])
        assert code == 0
        settings = json.loads(out.splitlines()[0])["settings"]
        assert settings["seed"] == 9       # from the file
        assert settings["n_runs"] == 2     # flag beats file
        assert len(read_jsonl(tmp_path / "from-file" / "run_records.jsonl")) == 2

    def test_unknown_config_key_exits_2(self, tmp_path, capsys):
        ini = tmp_path / "bad.ini"
        ini.write_text("[search]\nbogus = 1\n")
        code, _, err = run_cli(capsys, ["search", "--config", str(ini)])
        assert code == 2 and "bogus" in err


class TestStudy:
    def test_single_arch_single_seed_one_record(self, mnist_root, tmp_path, capsys):
        out_dir = tmp_path / "study"
        code, out, _ = run_cli(
            capsys,
            ["study", "--mnist", mnist_root, "--archs", "8,8", "--seeds", "1",
             "--lrs", "0.001", "--epochs", "2", "--per-class", "5",
             "--out", str(out_dir), "--seed", "3"],
        )
        assert code == 0
        records = read_jsonl(out_dir / "study_records.jsonl")
        assert len(records) == 1
        assert records[0].mlp == MLPSpec(8, 8)
        assert records[0].n_seeds == 1
        header, row = out.splitlines()[1:3]
        assert header.startswith("units1,units2,lr,")
        assert row.startswith("8,8,0.001,")

    def test_preset_arch_lists(self):
        desk = _parse_archs("desk")
        assert len(desk) == 16
        assert MLPSpec(8, 8) in desk and MLPSpec(2048, 2048) in desk
        assert len(_parse_archs("full")) == 144
        assert _parse_archs("16,32;8,8") == [MLPSpec(16, 32), MLPSpec(8, 8)]

    def test_scatter_has_one_point_per_record(self, mnist_root, tmp_path, capsys):
        out_dir = tmp_path / "study"
        code, _, _ = run_cli(
            capsys,
            ["study", "--mnist", mnist_root, "--archs", "8,8;8,16", "--seeds", "4",
             "--lrs", "0.001", "--epochs", "2", "--per-class", "6",
             "--out", str(out_dir), "--seed", "1"],
        )
        assert code == 0
        records = read_jsonl(out_dir / "study_records.jsonl")
        svg = (out_dir / "study_scatter.svg").read_text()
        assert svg.count("<circle") == len(records) == 2

    def test_lr_outside_training_grid_exits_2(self, mnist_root, tmp_path, capsys):
        code, _, err = run_cli(
            capsys,
            ["study", "--mnist", mnist_root, "--archs", "8,8", "--lrs", "0.5",
             "--out", str(tmp_path / "s")],
        )
        assert code == 2 and "--lrs" in err


class TestBaseline:
    def test_random_on_single_arch_fixture_has_zero_std(self, tmp_path, capsys):
        fx = tmp_path / "one.jsonl"
        write_fixture_jsonl(fx, [3906])
        code, out, _ = run_cli(
            capsys,
            ["baseline", "--kind", "random", "--fixture", str(fx),
             "--n-runs", "3", "--n-a", "1"],
        )
        assert code == 0
        val_row = next(
            line for line in out.splitlines() if line.startswith("random,cifar10,val")
        )
        assert val_row.split(",")[4] == "0"

    def test_optimal_writes_records_when_out_given(
        self, fixture_path, tmp_path, capsys
    ):
        out_dir = tmp_path / "opt"
        code, out, _ = run_cli(
            capsys,
            ["baseline", "--kind", "optimal", "--fixture", fixture_path,
             "--n-runs", "4", "--n-a", "3", "--seed", "2", "--out", str(out_dir)],
        )
        assert code == 0
        records = read_jsonl(out_dir / "run_records.jsonl")
        assert len(records) == 4 and all(r.method == "optimal" for r in records)
        assert "optimal,cifar10,val" in out

    def test_unknown_kind_exits_2(self, fixture_path, capsys):
        code, _, err = run_cli(
            capsys, ["baseline", "--kind", "worst", "--fixture", fixture_path]
        )
        assert code == 2 and "--kind" in err
