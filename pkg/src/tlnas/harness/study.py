"""The MLP grid study: train small nets on reduced MNIST, relate their
trained accuracy to the untrained CV score.

Per architecture and seed the network is initialised once; every
learning rate trains from that same initialisation (so the untrained
accuracy U is a per-seed quantity, independent of the rate).  The
reported moments use the seed set of the selected learning rate.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from ..data.prep import reduce_train_per_class, standardisation_stats, standardise_images
from ..data.types import ImageDataset
from ..errors import NumericError
from ..nn import (
    AdamState,
    accuracy,
    adam_step,
    backward,
    forward,
    forward_with_cache,
    initialise_weights,
    softmax_cross_entropy,
)
from ..rng import RandomStream, derive_seed, str_seed
from ..space import MLPSpec, count_parameters, instantiate_network
from ..stats import RunningMoments

LR_GRID = (0.0001, 0.0003, 0.001, 0.003, 0.01, 0.03)

DESK_WIDTHS = (8, 32, 128, 2048)


def desk_study_archs() -> list[MLPSpec]:
    """16 grid corners and interior points, a fast stand-in for all 144."""
    return [MLPSpec(u1, u2) for u1, u2 in product(DESK_WIDTHS, DESK_WIDTHS)]


@dataclass(frozen=True)
class StudyRecord:
    mlp: MLPSpec
    lr_selected: float
    mu_t: float
    sigma_t: float
    mu_u: float
    sigma_u: float
    cv_u: float
    n_params: int
    n_seeds: int


def best_epoch(val_accuracies, burn_in: int) -> int:
    """Index of the best validation accuracy at or after burn_in.

    Ties resolve to the earliest epoch.  The curve is indexed from
    epoch 0, so burn_in=50 makes epoch 50 the first eligible one.
    """
    if burn_in >= len(val_accuracies):
        raise ValueError(f"burn-in {burn_in} leaves no eligible epoch")
    eligible = val_accuracies[burn_in:]
    return burn_in + int(np.argmax(eligible))


def _snapshot(weights):
    return {node: {p: a.copy() for p, a in params.items()} for node, params in weights.items()}


def train_mlp(
    spec: MLPSpec,
    splits: dict[str, ImageDataset],
    lr: float,
    seed: int,
    epochs: int = 200,
    batch_size: int = 50,
    burn_in: int = 50,
    untrained_eval_split: str = "train",
) -> tuple[float, float]:
    """Train one MLP; returns (trained test accuracy, untrained accuracy).

    The untrained accuracy is measured before any update on the split
    named by untrained_eval_split (the reduced train set by default).
    Final weights come from the best-validation epoch at or after the
    burn-in; with lr=0 the weights never move.
    """
    train, val, test = splits["train"], splits["val"], splits["test"]
    stats = standardisation_stats(train)
    x = {name: standardise_images(ds.images, stats) for name, ds in splits.items()}
    y = {name: ds.labels for name, ds in splits.items()}

    graph = instantiate_network(spec, train.classes, train.image_shape)
    net = initialise_weights(graph, seed)
    u = accuracy(forward(net, x[untrained_eval_split]), y[untrained_eval_split])

    state = AdamState.for_weights(net.weights)
    n_train = len(train)
    best_acc, best_weights = -1.0, None
    for epoch in range(epochs):
        order = RandomStream(derive_seed(seed, str_seed("epoch-order"), epoch)).permutation(
            n_train
        )
        for start in range(0, n_train, batch_size):
            idx = order[start : start + batch_size]
            logits, cache = forward_with_cache(net, x["train"][idx])
            loss, grad = softmax_cross_entropy(logits, y["train"][idx])
            if not np.isfinite(loss):
                raise NumericError(f"training diverged at epoch {epoch} (loss {loss})")
            param_grads, _ = backward(net, cache, grad)
            adam_step(net.weights, param_grads, state, lr)
        if epoch >= burn_in:
            val_acc = accuracy(forward(net, x["val"]), y["val"])
            if val_acc > best_acc:  # strict: first best epoch wins
                best_acc = val_acc
                best_weights = _snapshot(net.weights)

    if best_weights is not None:
        net.weights.clear()
        net.weights.update(best_weights)
    t = accuracy(forward(net, x["test"]), y["test"])
    return t, u


def mnist_study_splits(
    splits: dict[str, ImageDataset], master_seed: int, per_class: int = 20
) -> dict[str, ImageDataset]:
    """Shrink the train split to per_class examples per digit."""
    reduced = reduce_train_per_class(
        splits["train"], per_class, derive_seed(master_seed, str_seed("reduce-train"))
    )
    return {"train": reduced, "val": splits["val"], "test": splits["test"]}


def run_mnist_study(
    archs: list[MLPSpec],
    n_seeds: int,
    lr_grid,
    splits: dict[str, ImageDataset],
    master_seed: int,
    epochs: int = 200,
    threads: int = 1,
    untrained_eval_split: str = "train",
) -> list[StudyRecord]:
    lr_grid = tuple(lr_grid)
    for lr in lr_grid:
        if lr not in LR_GRID:
            raise ValueError(f"learning rate {lr} not in the study grid {LR_GRID}")
    if n_seeds < 1 or not archs:
        raise ValueError("need at least one architecture and one seed")

    jobs = list(product(range(len(archs)), range(len(lr_grid)), range(n_seeds)))

    def run_job(job):
        arch_index, lr_index, seed_index = job
        # the seed ignores lr on purpose: every rate starts from the
        # same initialisation, making U a per-seed quantity
        seed = derive_seed(master_seed, arch_index, seed_index)
        try:
            return train_mlp(
                archs[arch_index],
                splits,
                lr_grid[lr_index],
                seed,
                epochs=epochs,
                untrained_eval_split=untrained_eval_split,
            )
        except NumericError as exc:
            warnings.warn(
                f"{archs[arch_index]} lr={lr_grid[lr_index]} seed {seed_index}: {exc}"
            )
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(run_job, jobs))
    else:
        outcomes = [run_job(job) for job in jobs]
    results = dict(zip(jobs, outcomes))

    train = splits["train"]
    records = []
    for arch_index, spec in enumerate(archs):
        per_lr: list[tuple[float, list[tuple[float, float]]]] = []
        for lr_index, lr in enumerate(lr_grid):
            outcome = [
                results[(arch_index, lr_index, s)]
                for s in range(n_seeds)
                if results[(arch_index, lr_index, s)] is not None
            ]
            if outcome:
                mu_t = sum(t for t, _ in outcome) / len(outcome)
                per_lr.append((mu_t, outcome))
            else:
                per_lr.append((float("-inf"), []))
        best_index = max(range(len(per_lr)), key=lambda i: per_lr[i][0])
        mu_best, outcome = per_lr[best_index]
        if not outcome:
            raise NumericError(f"every training of {spec} diverged")
        t_m, u_m = RunningMoments(), RunningMoments()
        for t, u in outcome:
            t_m.add(t)
            u_m.add(u)
        records.append(
            StudyRecord(
                mlp=spec,
                lr_selected=lr_grid[best_index],
                mu_t=t_m.mean,
                sigma_t=t_m.population_std,
                mu_u=u_m.mean,
                sigma_u=u_m.population_std,
                cv_u=u_m.population_std / u_m.mean if u_m.mean > 0 else 0.0,
                n_params=count_parameters(spec, train.classes, train.image_shape),
                n_seeds=len(outcome),
            )
        )
    return records
