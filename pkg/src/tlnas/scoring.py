"""Architecture scores computed from untrained networks.

The primary score is the coefficient of variation of untrained accuracy
over fresh initialisations, CV_U = sigma_U / mu_U with population
moments; lower is better and exactly zero marks a degenerate network
(constant accuracy, typically the all-zeroize cell).  A Jacobian
eigenvalue score is provided for comparison; for that one higher is
better.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.types import DatasetBatch
from .nn import accuracy, forward, initialise_weights, input_jacobian
from .rng import derive_seed
from .space import ArchitectureSpec, SkeletonConfig, instantiate_network
from .stats import RunningMoments

MELLOR_K = 1e-5


@dataclass(frozen=True)
class UntrainedStats:
    """Per-initialisation accuracies with their population moments."""

    accuracies: tuple[float, ...]
    mu_u: float
    sigma_u: float
    cv_u: float

    @classmethod
    def from_accuracies(cls, accuracies) -> "UntrainedStats":
        moments = RunningMoments()
        for acc in accuracies:
            moments.add(acc)
        mu = moments.mean
        sigma = moments.population_std
        return cls(
            accuracies=tuple(float(a) for a in accuracies),
            mu_u=mu,
            sigma_u=sigma,
            cv_u=sigma / mu if mu > 0 else 0.0,
        )

    @property
    def degenerate(self) -> bool:
        return self.cv_u == 0.0


@dataclass(frozen=True)
class JacobianScore:
    eigenvalues: tuple[float, ...]
    s: float
    k: float
    degenerate: bool


def untrained_accuracy(
    spec: ArchitectureSpec,
    batch: DatasetBatch,
    init_seed: int,
    skeleton: SkeletonConfig | None = None,
) -> float:
    """Accuracy of a freshly He-initialised network on the fixed batch."""
    graph = instantiate_network(spec, batch.classes, batch.image_shape, skeleton)
    net = initialise_weights(graph, init_seed)
    return accuracy(forward(net, batch.pixels), batch.labels)


def untrained_stats(
    spec: ArchitectureSpec,
    batch: DatasetBatch,
    n_init: int,
    base_seed: int,
    skeleton: SkeletonConfig | None = None,
) -> UntrainedStats:
    if n_init < 1:
        raise ValueError("n_init must be at least 1")
    accuracies = [
        untrained_accuracy(spec, batch, derive_seed(base_seed, i), skeleton)
        for i in range(n_init)
    ]
    return UntrainedStats.from_accuracies(accuracies)


def cv_score(stats: UntrainedStats) -> float:
    return stats.cv_u


def mellor_score(
    spec: ArchitectureSpec,
    batch: DatasetBatch,
    init_seed: int,
    skeleton: SkeletonConfig | None = None,
) -> JacobianScore:
    """S from the eigenvalues of the per-image Jacobian correlation matrix.

    A zero-variance Jacobian row (the network's output ignores that
    image's pixels) makes the correlation undefined; such networks are
    flagged degenerate with s = -inf so maximisation excludes them.
    """
    if len(batch) < 2:
        raise ValueError("Jacobian score needs a batch of at least 2 images")
    graph = instantiate_network(spec, batch.classes, batch.image_shape, skeleton)
    net = initialise_weights(graph, init_seed)
    rows = input_jacobian(net, batch.pixels).astype(np.float64)
    if np.any(rows.var(axis=1) == 0.0):
        return JacobianScore(eigenvalues=(), s=float("-inf"), k=MELLOR_K, degenerate=True)
    corr = np.corrcoef(rows)
    eig = np.linalg.eigvalsh(corr)
    eig = np.maximum(eig, 0.0)  # clamp eigsh roundoff below zero
    shifted = eig + MELLOR_K
    s = float(-(np.log(shifted) + 1.0 / shifted).sum())
    return JacobianScore(
        eigenvalues=tuple(float(v) for v in eig), s=s, k=MELLOR_K, degenerate=False
    )
