"""Selection experiments over the cell space, plus the two baselines.

One run: draw a fixed batch, sample candidate architectures, score each
on that same batch, pick the best scorer, and look its trained accuracy
up in the benchmark fixture.  Repeated n_runs times with derived seeds;
summaries are population mean and std over the non-skipped runs.

Candidates are drawn from the fixture's architecture list for the
configured dataset (sorted, so the sampling domain is reproducible from
the fixture file alone).  On a full 15,625-entry fixture that is the
whole cell space.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from ..data.fixture import fixture_arch_strings
from ..data.prep import channel_stats, sample_batch
from ..data.types import BenchmarkEntry, ImageDataset
from ..errors import FixtureError, NoValidCandidateError
from ..rng import RandomStream, derive_seed
from ..scoring import mellor_score, untrained_stats
from ..space import SkeletonConfig, parse_arch_string
from ..stats import RunningMoments

SCORE_KINDS = ("cv_u", "mellor")

Fixture = dict[tuple[str, str], BenchmarkEntry]


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    n_runs: int
    n_a: int
    n_init: int
    n_bs: int
    score: str = "cv_u"
    master_seed: int = 0
    skeleton: SkeletonConfig | None = None

    def __post_init__(self):
        for field_name in ("n_runs", "n_a", "n_init", "n_bs"):
            if getattr(self, field_name) < 1:
                raise ValueError(f"{field_name} must be at least 1")
        if self.score not in SCORE_KINDS:
            raise ValueError(f"score must be one of {SCORE_KINDS}, got {self.score!r}")


@dataclass(frozen=True)
class RunRecord:
    method: str
    dataset: str
    run_id: int
    batch_seed: int | None
    candidates: tuple[tuple[str, float | None], ...]
    selected: str | None
    trained_val: float | None
    trained_test: float | None

    @property
    def skipped(self) -> bool:
        return self.selected is None


@dataclass(frozen=True)
class ExperimentSummary:
    method: str
    dataset: str
    n_runs: int
    n_skipped: int
    val_mean: float
    val_std: float
    test_mean: float
    test_std: float


def select_architecture(scored: list[tuple[str, float]]) -> str:
    """Minimum positive score wins; ties go to the earlier candidate."""
    if not scored:
        raise ValueError("no candidates to select from")
    valid = [(arch, s) for arch, s in scored if s is not None and s > 0.0]
    if not valid:
        raise NoValidCandidateError("every candidate scored zero (degenerate)")
    return min(valid, key=lambda pair: pair[1])[0]


def _select_max(scored: list[tuple[str, float | None]]) -> str:
    """Maximum finite score wins; None marks a degenerate candidate."""
    valid = [(arch, s) for arch, s in scored if s is not None]
    if not valid:
        raise NoValidCandidateError("every candidate was degenerate")
    return max(valid, key=lambda pair: pair[1])[0]


def _lookup(fixture: Fixture, arch: str, dataset: str) -> BenchmarkEntry:
    entry = fixture.get((arch, dataset))
    if entry is None:
        raise FixtureError(f"fixture has no entry for {arch!r} on {dataset!r}")
    return entry


def summarize_records(records: list[RunRecord]) -> ExperimentSummary:
    """Recompute the summary from records alone (no hidden state)."""
    if not records:
        raise ValueError("no records to summarise")
    val, test = RunningMoments(), RunningMoments()
    skipped = 0
    for rec in records:
        if rec.skipped:
            skipped += 1
            continue
        val.add(rec.trained_val)
        test.add(rec.trained_test)
    if val.count == 0:
        raise NoValidCandidateError("all runs were skipped")
    return ExperimentSummary(
        method=records[0].method,
        dataset=records[0].dataset,
        n_runs=len(records),
        n_skipped=skipped,
        val_mean=val.mean,
        val_std=val.population_std,
        test_mean=test.mean,
        test_std=test.population_std,
    )


def _candidate_pool(cfg: ExperimentConfig, fixture: Fixture) -> list[str]:
    pool = fixture_arch_strings(fixture, cfg.dataset)
    if cfg.n_a > len(pool):
        raise ValueError(f"n_a={cfg.n_a} exceeds the {len(pool)}-architecture pool")
    return pool


def _sample_candidates(cfg: ExperimentConfig, pool: list[str], run_id: int) -> list[str]:
    stream = RandomStream(derive_seed(cfg.master_seed, run_id, 1))
    picks = stream.sample_without_replacement(len(pool), cfg.n_a)
    return [pool[int(i)] for i in picks]


def run_selection_experiment(
    cfg: ExperimentConfig,
    dataset: ImageDataset,
    fixture: Fixture,
    threads: int = 1,
) -> tuple[list[RunRecord], ExperimentSummary]:
    pool = _candidate_pool(cfg, fixture)
    stats = channel_stats(dataset)
    method = cfg.score

    def run_one(run_id: int) -> RunRecord:
        batch_seed = derive_seed(cfg.master_seed, run_id)
        batch = sample_batch(dataset, cfg.n_bs, batch_seed, stats=stats)
        candidates: list[tuple[str, float | None]] = []
        for arch_index, arch in enumerate(_sample_candidates(cfg, pool, run_id)):
            spec = parse_arch_string(arch)
            init_base = derive_seed(cfg.master_seed, run_id, arch_index)
            if cfg.score == "cv_u":
                # init seeds unfold to derive(master, run, arch, i)
                st = untrained_stats(spec, batch, cfg.n_init, init_base, cfg.skeleton)
                candidates.append((arch, st.cv_u))
            else:
                score = mellor_score(spec, batch, derive_seed(init_base, 0), cfg.skeleton)
                candidates.append((arch, None if score.degenerate else score.s))
        try:
            if cfg.score == "cv_u":
                selected = select_architecture(candidates)
            else:
                selected = _select_max(candidates)
        except NoValidCandidateError:
            return RunRecord(
                method, cfg.dataset, run_id, batch_seed, tuple(candidates), None, None, None
            )
        entry = _lookup(fixture, selected, cfg.dataset)
        return RunRecord(
            method,
            cfg.dataset,
            run_id,
            batch_seed,
            tuple(candidates),
            selected,
            entry.val_accuracy,
            entry.test_accuracy,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool_exec:
            records = list(pool_exec.map(run_one, range(cfg.n_runs)))
    else:
        records = [run_one(r) for r in range(cfg.n_runs)]
    return records, summarize_records(records)


def random_baseline(
    cfg: ExperimentConfig, fixture: Fixture
) -> tuple[list[RunRecord], ExperimentSummary]:
    """One uniform draw per run; shares the candidate stream with the
    selection experiment, so run r picks that experiment's first candidate."""
    pool = _candidate_pool(cfg, fixture)
    records = []
    for run_id in range(cfg.n_runs):
        stream = RandomStream(derive_seed(cfg.master_seed, run_id, 1))
        arch = pool[int(stream.sample_without_replacement(len(pool), 1)[0])]
        entry = _lookup(fixture, arch, cfg.dataset)
        records.append(
            RunRecord(
                "random",
                cfg.dataset,
                run_id,
                None,
                ((arch, None),),
                arch,
                entry.val_accuracy,
                entry.test_accuracy,
            )
        )
    return records, summarize_records(records)


def optimal_baseline(
    cfg: ExperimentConfig, fixture: Fixture
) -> tuple[list[RunRecord], ExperimentSummary]:
    """Per run, the candidate with the best fixture validation accuracy."""
    pool = _candidate_pool(cfg, fixture)
    records = []
    for run_id in range(cfg.n_runs):
        sampled = _sample_candidates(cfg, pool, run_id)
        candidates = tuple(
            (arch, _lookup(fixture, arch, cfg.dataset).val_accuracy) for arch in sampled
        )
        selected = max(candidates, key=lambda pair: pair[1])[0]
        entry = _lookup(fixture, selected, cfg.dataset)
        records.append(
            RunRecord(
                "optimal",
                cfg.dataset,
                run_id,
                None,
                candidates,
                selected,
                entry.val_accuracy,
                entry.test_accuracy,
            )
        )
    return records, summarize_records(records)
