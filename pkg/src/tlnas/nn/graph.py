"""Layer graph structures.

A network is an ordered DAG: a list of named nodes in topological order,
where every node's inputs refer to nodes earlier in the list.  Ordering
by construction keeps acyclicity and the evaluation order trivial, and a
fixed evaluation order is part of the determinism contract.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidLayerError

# layer kinds with trainable parameters
PARAMETERISED = ("dense", "classifier", "conv2d", "batch_norm")

KINDS = PARAMETERISED + (
    "input",
    "relu",
    "zeroize",
    "identity",
    "add",
    "flatten",
    "avg_pool",
    "global_avg_pool",
)


@dataclass(frozen=True)
class LayerSpec:
    """One layer's kind plus the hyperparameters that fix its shapes.

    Only the fields relevant to ``kind`` are set; the rest stay None.
    ``classifier`` computes exactly like ``dense`` but is kept as its
    own kind so graphs read the way the skeleton is described.
    """

    kind: str
    in_features: int | None = None   # dense / classifier
    out_units: int | None = None     # dense / classifier
    in_channels: int | None = None   # conv2d / batch_norm
    out_channels: int | None = None  # conv2d
    kernel: int | None = None        # conv2d / avg_pool
    stride: int = 1
    padding: int = 0
    count_include_pad: bool = False  # avg_pool divisor convention

    @property
    def fan_in(self) -> int | None:
        """Connections feeding one output unit (the He-init divisor)."""
        if self.kind in ("dense", "classifier"):
            return self.in_features
        if self.kind == "conv2d":
            return self.kernel * self.kernel * self.in_channels
        if self.kind == "batch_norm":
            return self.in_channels
        return None

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise InvalidLayerError(f"unknown layer kind: {self.kind!r}")
        if self.kind in ("dense", "classifier"):
            if not self.in_features or self.in_features < 1:
                raise InvalidLayerError(f"{self.kind} needs in_features >= 1")
            if not self.out_units or self.out_units < 1:
                raise InvalidLayerError(f"{self.kind} needs out_units >= 1")
        elif self.kind == "conv2d":
            for name in ("in_channels", "out_channels", "kernel"):
                v = getattr(self, name)
                if not v or v < 1:
                    raise InvalidLayerError(f"conv2d needs {name} >= 1")
            if self.stride < 1 or self.padding < 0:
                raise InvalidLayerError("conv2d stride/padding out of range")
        elif self.kind == "batch_norm":
            if not self.in_channels or self.in_channels < 1:
                raise InvalidLayerError("batch_norm needs in_channels >= 1")
        elif self.kind == "avg_pool":
            if not self.kernel or self.kernel < 1:
                raise InvalidLayerError("avg_pool needs kernel >= 1")
            if self.stride < 1 or self.padding < 0:
                raise InvalidLayerError("avg_pool stride/padding out of range")

    def parameter_shapes(self) -> dict[str, tuple[int, ...]]:
        if self.kind in ("dense", "classifier"):
            return {"w": (self.in_features, self.out_units), "b": (self.out_units,)}
        if self.kind == "conv2d":
            # HWIO layout, bias-free: a batch-norm always follows convs
            # in the skeletons this engine builds
            return {
                "w": (self.kernel, self.kernel, self.in_channels, self.out_channels)
            }
        if self.kind == "batch_norm":
            return {"gamma": (self.in_channels,), "beta": (self.in_channels,)}
        return {}


@dataclass(frozen=True)
class Node:
    name: str
    spec: LayerSpec
    inputs: tuple[str, ...] = ()


class Graph:
    """Ordered DAG of layers; node 0 is the input placeholder."""

    def __init__(self, nodes: list[Node], input_shape: tuple[int, int, int], num_classes: int):
        if not nodes:
            raise InvalidLayerError("graph has no nodes")
        if nodes[0].spec.kind != "input" or nodes[0].inputs:
            raise InvalidLayerError("first node must be the input placeholder")
        seen: set[str] = set()
        for node in nodes:
            if node.name in seen:
                raise InvalidLayerError(f"duplicate node name: {node.name!r}")
            node.spec.validate()
            if node.spec.kind == "input":
                if node is not nodes[0]:
                    raise InvalidLayerError("only one input node allowed")
            elif node.spec.kind == "add":
                if len(node.inputs) < 2:
                    raise InvalidLayerError(f"add node {node.name!r} needs >= 2 inputs")
            elif len(node.inputs) != 1:
                raise InvalidLayerError(f"node {node.name!r} needs exactly 1 input")
            for ref in node.inputs:
                if ref not in seen:
                    raise InvalidLayerError(
                        f"node {node.name!r} references {ref!r} before definition"
                    )
            seen.add(node.name)
        self.nodes = list(nodes)
        self.input_shape = tuple(input_shape)
        self.num_classes = num_classes
        self._by_name = {n.name: n for n in self.nodes}

    @property
    def output_name(self) -> str:
        return self.nodes[-1].name

    def node(self, name: str) -> Node:
        return self._by_name[name]

    def parameter_shapes(self) -> dict[str, dict[str, tuple[int, ...]]]:
        out = {}
        for node in self.nodes:
            shapes = node.spec.parameter_shapes()
            if shapes:
                out[node.name] = shapes
        return out

    def count_parameters(self) -> int:
        total = 0
        for shapes in self.parameter_shapes().values():
            for shape in shapes.values():
                n = 1
                for d in shape:
                    n *= d
                total += n
        return total


@dataclass
class NetworkInstance:
    """A graph plus concrete float32 weights for one initialisation.

    Immutable by convention once built (training code replaces arrays
    wholesale); safe to share across threads for forward passes.
    """

    graph: Graph
    weights: dict[str, dict[str, np.ndarray]]
    init_seed: int

    def parameter_count(self) -> int:
        return self.graph.count_parameters()
