"""Adam optimiser over a network's parameter tree."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, NumericError


@dataclass
class AdamState:
    """Per-parameter moment accumulators, laid out like the weights."""

    first_moment: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    second_moment: dict[str, dict[str, np.ndarray]] = field(default_factory=dict)
    step_count: int = 0

    @classmethod
    def for_weights(cls, weights: dict[str, dict[str, np.ndarray]]) -> "AdamState":
        m = {n: {p: np.zeros_like(a, dtype=np.float64) for p, a in ps.items()} for n, ps in weights.items()}
        v = {n: {p: np.zeros_like(a, dtype=np.float64) for p, a in ps.items()} for n, ps in weights.items()}
        return cls(first_moment=m, second_moment=v, step_count=0)


def adam_step(
    weights: dict[str, dict[str, np.ndarray]],
    grads: dict[str, dict[str, np.ndarray]],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.99,
    eps: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, in place.

    Moment math runs in float64; weights stay in their float32 storage.
    Parameters without a gradient entry (e.g. untouched branches) are
    left alone, which also makes a zero-length step a no-op apart from
    the step counter.
    """
    if lr < 0:
        raise ValueError("learning rate must be non-negative")
    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - beta1**t
    bc2 = 1.0 - beta2**t
    for node, pgrads in grads.items():
        if node not in weights:
            raise DimensionError(f"gradient for unknown node {node!r}")
        for pname, g in pgrads.items():
            w = weights[node][pname]
            if g.shape != w.shape:
                raise DimensionError(
                    f"gradient shape {g.shape} != weight shape {w.shape} at {node}.{pname}"
                )
            if not np.all(np.isfinite(g)):
                raise NumericError("non-finite gradient", node=f"{node}.{pname}")
            g64 = g.astype(np.float64, copy=False)
            m = state.first_moment[node][pname]
            v = state.second_moment[node][pname]
            m *= beta1
            m += (1.0 - beta1) * g64
            v *= beta2
            v += (1.0 - beta2) * g64 * g64
            update = lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
            weights[node][pname] = (w.astype(np.float64) - update).astype(w.dtype)
