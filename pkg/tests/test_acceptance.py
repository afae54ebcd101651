"""End-to-end acceptance gate.

Each test pins one guarantee the package ships with: numeric oracles
for the score and the t-test, exact degeneracy filtering, gradient
correctness, byte-level determinism of the search command, and the
benchmark/study replications.  Replication tests need the converted
benchmark fixture and the real datasets under the data root (or
TLNAS_DATA_DIR); without them they skip and say so.
"""

import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from helpers import synthetic_image_dataset, write_fixture_jsonl
from test_nn_backward import LAYER_KIND_CASES
from tlnas.cli import main
from tlnas.data import (
    channel_stats,
    load_benchmark_fixture,
    load_splits,
    sample_batch,
    write_flat_binary,
)
from tlnas.data.paths import data_root
from tlnas.errors import NoValidCandidateError
from tlnas.harness import (
    ExperimentConfig,
    desk_study_archs,
    mnist_study_splits,
    random_baseline,
    run_mnist_study,
    run_selection_experiment,
    select_architecture,
    summarize_records,
)
from tlnas.nn import initialise_weights
from tlnas.rng import RandomStream
from tlnas.scoring import UntrainedStats, cv_score, untrained_stats
from tlnas.space import cell_from_index, format_arch_string, parse_arch_string
from tlnas.stats import spearman_test, welch_t_test

DATA_ROOT = data_root()
FIXTURE_PATH = DATA_ROOT / "nasbench201-fixture.jsonl"


def _present(relative: str) -> bool:
    p = DATA_ROOT / relative
    return p.exists() or p.with_name(p.name + ".gz").exists()


HAVE_FIXTURE = FIXTURE_PATH.exists()
HAVE_CIFAR10 = all(
    _present(f"cifar10/data_batch_{i}.bin") for i in range(1, 6)
) and _present("cifar10/test_batch.bin")
HAVE_MNIST = all(
    _present(f"mnist/{stem}")
    for stem in (
        "train-images-idx3-ubyte",
        "train-labels-idx1-ubyte",
        "t10k-images-idx3-ubyte",
        "t10k-labels-idx1-ubyte",
    )
)

needs_fixture = pytest.mark.skipif(
    not HAVE_FIXTURE,
    reason=f"converted benchmark fixture not present at {FIXTURE_PATH}",
)
needs_cifar10 = pytest.mark.skipif(
    not HAVE_CIFAR10, reason=f"CIFAR-10 binaries not present under {DATA_ROOT}/cifar10"
)
needs_mnist = pytest.mark.skipif(
    not HAVE_MNIST, reason=f"MNIST idx files not present under {DATA_ROOT}/mnist"
)

ALL_NONE = format_arch_string(cell_from_index(0))


def two_pass_cv(values) -> float:
    """Textbook two-pass population CV with compensated summation."""
    n = len(values)
    mean = math.fsum(values) / n
    if mean <= 0.0:
        return 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / n
    return math.sqrt(var) / mean


class TestScoreOracle:
    def test_cv_matches_two_pass_oracle_on_1000_vectors(self):
        rng = np.random.default_rng(2024)
        started = time.perf_counter()
        for _ in range(1000):
            n = int(rng.integers(2, 201))
            values = rng.uniform(0.0, 1.0, size=n).tolist()
            got = cv_score(UntrainedStats.from_accuracies(values))
            want = two_pass_cv(values)
            assert abs(got - want) <= 1e-12 * abs(want)
        assert time.perf_counter() - started < 1.0

    def test_scale_invariance_500_vectors(self):
        rng = np.random.default_rng(77)
        for _ in range(500):
            n = int(rng.integers(2, 201))
            values = rng.uniform(0.0, 1.0, size=n)
            c = 10.0 * (1.0 - rng.random())  # (0, 10]
            base = cv_score(UntrainedStats.from_accuracies(values.tolist()))
            scaled = cv_score(UntrainedStats.from_accuracies((c * values).tolist()))
            assert abs(scaled - base) <= 1e-12 * abs(base)


class TestDegenerateFilter:
    def test_all_none_cell_has_exactly_zero_spread_and_is_excluded(self):
        started = time.perf_counter()
        ds = synthetic_image_dataset("cifar10", n=64, side=32, seed=3)
        batch = sample_batch(ds, 16, batch_seed=9, stats=channel_stats(ds))
        result = untrained_stats(parse_arch_string(ALL_NONE), batch, 10, base_seed=4)
        assert result.sigma_u == 0.0
        assert result.cv_u == 0.0
        assert result.degenerate
        with pytest.raises(NoValidCandidateError):
            select_architecture([(ALL_NONE, result.cv_u)])
        healthy = format_arch_string(cell_from_index(3906))
        assert select_architecture([(ALL_NONE, 0.0), (healthy, 0.3)]) == healthy
        assert time.perf_counter() - started < 10.0


class TestGradientCorrectness:
    def test_fifty_random_cases_cover_every_layer_kind(self):
        from helpers import fd_gradient_errors

        kinds = sorted(LAYER_KIND_CASES)
        started = time.perf_counter()
        for case in range(50):
            build, shape = LAYER_KIND_CASES[kinds[case % len(kinds)]]
            net = initialise_weights(build().graph, 100 + case)
            x = np.random.default_rng(case).normal(size=(3, *shape)).astype(np.float32)
            errors = list(fd_gradient_errors(net, x, probes_per_tensor=2, seed=case))
            assert max(errors) < 1e-3
        assert time.perf_counter() - started < 30.0


@pytest.fixture(scope="module")
def determinism_inputs(tmp_path_factory):
    base = tmp_path_factory.mktemp("det")
    flat = base / "cifar10.tlnas"
    write_flat_binary(synthetic_image_dataset("cifar10", n=60, side=8, seed=1), flat)
    fixture = base / "fixture.jsonl"
    indices = np.random.default_rng(12).choice(15625, size=100, replace=False)
    write_fixture_jsonl(fixture, indices)
    return base, str(flat), str(fixture)


class TestSearchDeterminism:
    def test_one_and_eight_threads_write_identical_record_files(
        self, determinism_inputs, capsys
    ):
        base, flat, fixture = determinism_inputs
        outputs = []
        for threads in (1, 8):
            out = base / f"threads-{threads}"
            code = main(
                [
                    "search", "--fixture", fixture, "--data", flat,
                    "--n-runs", "10", "--n-a", "5", "--n-init", "5",
                    "--batch-size", "16", "--seed", "11",
                    "--threads", str(threads), "--out", str(out),
                ]
            )
            capsys.readouterr()
            assert code == 0
            outputs.append((out / "run_records.jsonl").read_bytes())
        assert outputs[0] == outputs[1]


class TestWelchOracle:
    def test_twenty_pairs_match_reference_within_1e6(self):
        scipy_stats = pytest.importorskip("scipy.stats")
        rng = np.random.default_rng(5)
        for _ in range(20):
            a = rng.uniform(30, 95, size=int(rng.integers(5, 60)))
            b = rng.uniform(30, 95, size=int(rng.integers(5, 60)))
            ours = welch_t_test(a.tolist(), b.tolist())
            ref = scipy_stats.ttest_ind(a, b, equal_var=False)
            assert abs(ours.p_value - ref.pvalue) <= 1e-6
            assert abs(ours.t_statistic - ref.statistic) <= 1e-9 * abs(ref.statistic)

    def test_identical_samples_give_t0_p1(self):
        values = [71.2, 84.5, 60.0, 91.25, 77.7]
        result = welch_t_test(values, list(values))
        assert result.t_statistic == 0.0
        assert result.p_value == 1.0


@needs_fixture
class TestRandomBaselineReplication:
    def test_500_draws_land_on_published_mean_and_std(self):
        started = time.perf_counter()
        fixture = load_benchmark_fixture(FIXTURE_PATH)
        cfg = ExperimentConfig(
            dataset="cifar10", n_runs=500, n_a=1, n_init=1, n_bs=1, master_seed=0
        )
        _, summary = random_baseline(cfg, fixture)
        assert abs(summary.test_mean - 86.61) <= 2.0
        assert abs(summary.test_std - 13.46) <= 2.5
        assert time.perf_counter() - started < 10.0


@needs_fixture
@needs_cifar10
class TestBenchmarkReplication:
    def test_desk_scale_selection_beats_random_and_lands_on_published_cell(self):
        fixture = load_benchmark_fixture(FIXTURE_PATH)
        train = load_splits("cifar10", DATA_ROOT)["train"]
        cfg = ExperimentConfig(
            dataset="cifar10", n_runs=50, n_a=10, n_init=10, n_bs=64, master_seed=0
        )
        records, summary = run_selection_experiment(
            cfg, train, fixture, threads=os.cpu_count() or 1
        )
        rand_records, _ = random_baseline(cfg, fixture)
        selected = [r.trained_test for r in records if not r.skipped]
        random_accs = [r.trained_test for r in rand_records]
        result = welch_t_test(selected, random_accs, alternative="greater")
        assert result.p_value < 0.05
        # published cell 87.31 +- 7.86, widened by 3 standard errors
        width = 7.86 + 3.0 * 7.86 / math.sqrt(50)
        assert abs(summary.test_mean - 87.31) <= width

    @pytest.mark.skipif(
        os.environ.get("TLNAS_FULL_SCALE") != "1",
        reason="full-scale replication only with TLNAS_FULL_SCALE=1 (hours of compute)",
    )
    def test_full_scale_summary_lands_on_published_value(self):
        fixture = load_benchmark_fixture(FIXTURE_PATH)
        train = load_splits("cifar10", DATA_ROOT)["train"]
        cfg = ExperimentConfig(
            dataset="cifar10", n_runs=500, n_a=100, n_init=100, n_bs=256, master_seed=0
        )
        records, summary = run_selection_experiment(
            cfg, train, fixture, threads=os.cpu_count() or 1
        )
        width = 2.27 + 3.0 * 2.27 / math.sqrt(500)
        assert abs(summary.test_mean - 91.90) <= width


@needs_mnist
class TestMnistStudyReplication:
    def test_low_cv_architectures_train_better(self):
        splits = mnist_study_splits(load_splits("mnist", DATA_ROOT), master_seed=0)
        assert len(splits["train"]) == 200
        records = run_mnist_study(
            desk_study_archs(),
            n_seeds=10,
            lr_grid=(0.001, 0.01),
            splits=splits,
            master_seed=0,
            epochs=200,
            threads=os.cpu_count() or 1,
        )
        assert len(records) == 16
        cvs = [r.cv_u for r in records]
        accs = [r.mu_t for r in records]
        rho, result = spearman_test(cvs, accs, alternative="less")
        assert rho < 0.0
        assert result.p_value < 0.05
        quartile = sorted(records, key=lambda r: r.cv_u)[:4]
        quartile_mean = sum(r.mu_t for r in quartile) / 4
        overall_mean = sum(accs) / len(accs)
        assert quartile_mean >= overall_mean
