"""Weight initialisation."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidLayerError
from ..rng import RandomStream, derive_seed, str_seed
from .graph import Graph, NetworkInstance


def he_uniform_init(fan_in: int, shape: tuple[int, ...] | list[int], seed: int) -> np.ndarray:
    """Weights drawn uniformly from [-b, b] with b = sqrt(6 / fan_in).

    Draws are float64 and rounded once to the float32 storage format, so
    the result is bit-identical for a given (fan_in, shape, seed)
    everywhere.
    """
    if fan_in < 1:
        raise InvalidLayerError(f"he_uniform_init needs fan_in >= 1, got {fan_in}")
    if not shape:
        raise InvalidLayerError("he_uniform_init needs a non-empty shape")
    bound = np.sqrt(6.0 / fan_in)
    u = RandomStream(seed).uniform(tuple(int(d) for d in shape))
    return ((2.0 * u - 1.0) * bound).astype(np.float32)


def initialise_weights(graph: Graph, init_seed: int) -> NetworkInstance:
    """He-uniform weights, zero biases, identity batch-norm.

    Each random tensor gets its own stream seeded by
    derive_seed(init_seed, str_seed(node_name)), so weights do not
    depend on how many other nodes the graph contains.
    """
    weights: dict[str, dict[str, np.ndarray]] = {}
    for node in graph.nodes:
        shapes = node.spec.parameter_shapes()
        if not shapes:
            continue
        params: dict[str, np.ndarray] = {}
        kind = node.spec.kind
        if kind in ("dense", "classifier"):
            params["w"] = he_uniform_init(
                node.spec.fan_in, shapes["w"], derive_seed(init_seed, str_seed(node.name))
            )
            params["b"] = np.zeros(shapes["b"], dtype=np.float32)
        elif kind == "conv2d":
            params["w"] = he_uniform_init(
                node.spec.fan_in, shapes["w"], derive_seed(init_seed, str_seed(node.name))
            )
        elif kind == "batch_norm":
            params["gamma"] = np.ones(shapes["gamma"], dtype=np.float32)
            params["beta"] = np.zeros(shapes["beta"], dtype=np.float32)
        weights[node.name] = params
    return NetworkInstance(graph=graph, weights=weights, init_seed=init_seed)
