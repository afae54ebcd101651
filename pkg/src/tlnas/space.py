"""The two search spaces: the 144-point MLP grid and the 15,625-cell space.

A cell is a densely connected 4-node DAG; each of its 6 edges carries
one of 5 operations.  The canonical text encoding (the join key for the
trained-accuracy fixture) lists edges grouped by target node:

    |op~0|+|op~0|op~1|+|op~0|op~1|op~2|

where ``op~i`` means "this edge comes from node i".  The ``none`` token
zeroises its edge (emits zeros) rather than deleting it, so an all-none
cell is a well-defined degenerate network.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

from .errors import ParseError
from .nn.graph import Graph, LayerSpec, Node
from .rng import RandomStream

WIDTH_GRID = (8, 16, 24, 32, 56, 64, 96, 128, 256, 512, 1024, 2048)

# internal op names, index order fixed; tokens are the encoding's spelling
CELL_OPS = ("zeroize", "skip_connect", "conv1x1", "conv3x3", "avg_pool3x3")
_OP_TO_TOKEN = {
    "zeroize": "none",
    "skip_connect": "skip_connect",
    "conv1x1": "nor_conv_1x1",
    "conv3x3": "nor_conv_3x3",
    "avg_pool3x3": "avg_pool_3x3",
}
_TOKEN_TO_OP = {tok: op for op, tok in _OP_TO_TOKEN.items()}

# edge order: grouped by target node, sources ascending
CELL_EDGES = ((0, 1), (0, 2), (1, 2), (0, 3), (1, 3), (2, 3))

CELL_SPACE_SIZE = len(CELL_OPS) ** len(CELL_EDGES)  # 5**6


@dataclass(frozen=True)
class MLPSpec:
    """Two hidden-layer widths, each from the 12-value grid."""

    units_layer1: int
    units_layer2: int

    def __post_init__(self):
        for units in (self.units_layer1, self.units_layer2):
            if units not in WIDTH_GRID:
                raise ValueError(f"width {units} not in the grid {WIDTH_GRID}")


@dataclass(frozen=True)
class CellSpec:
    """Operations on the 6 cell edges, in canonical edge order."""

    edge_ops: tuple[str, str, str, str, str, str]

    def __post_init__(self):
        if len(self.edge_ops) != len(CELL_EDGES):
            raise ValueError(f"a cell has {len(CELL_EDGES)} edges, got {len(self.edge_ops)}")
        for op in self.edge_ops:
            if op not in CELL_OPS:
                raise ValueError(f"unknown cell op {op!r}")


@dataclass(frozen=True)
class SkeletonConfig:
    """Macro-structure around the repeated cell."""

    num_classes: int
    input_shape: tuple[int, int, int]
    stem_channels: int = 16
    cells_per_stack: int = 5

    def __post_init__(self):
        if self.num_classes < 1 or self.stem_channels < 1 or self.cells_per_stack < 1:
            raise ValueError("skeleton fields must be positive")
        if len(self.input_shape) != 3 or any(d < 1 for d in self.input_shape):
            raise ValueError(f"bad input shape {self.input_shape}")


# a desk-scale skeleton for fast tests; never valid for fixture joins,
# whose accuracies assume the canonical (16, 5) skeleton
def desk_skeleton(num_classes: int, input_shape: tuple[int, int, int]) -> SkeletonConfig:
    return SkeletonConfig(
        num_classes=num_classes, input_shape=input_shape, stem_channels=8, cells_per_stack=2
    )


ArchitectureSpec = Union[MLPSpec, CellSpec]


def enumerate_mlp_space() -> list[MLPSpec]:
    """All 144 grid points, lexicographic in (layer1, layer2)."""
    return [MLPSpec(u1, u2) for u1 in WIDTH_GRID for u2 in WIDTH_GRID]


def cell_from_index(index: int) -> CellSpec:
    """Decode a base-5 index (edge 0 = least significant digit)."""
    if not 0 <= index < CELL_SPACE_SIZE:
        raise ValueError(f"cell index {index} out of range")
    ops = []
    for _ in CELL_EDGES:
        ops.append(CELL_OPS[index % len(CELL_OPS)])
        index //= len(CELL_OPS)
    return CellSpec(tuple(ops))


def cell_index(cell: CellSpec) -> int:
    index = 0
    for op in reversed(cell.edge_ops):
        index = index * len(CELL_OPS) + CELL_OPS.index(op)
    return index


def enumerate_cell_space() -> Iterator[CellSpec]:
    for index in range(CELL_SPACE_SIZE):
        yield cell_from_index(index)


def format_arch_string(cell: CellSpec) -> str:
    groups = []
    edge = 0
    for target in (1, 2, 3):
        tokens = []
        for source in range(target):
            tokens.append(f"{_OP_TO_TOKEN[cell.edge_ops[edge]]}~{source}")
            edge += 1
        groups.append("|" + "|".join(tokens) + "|")
    return "+".join(groups)


def parse_arch_string(s: str) -> CellSpec:
    """Inverse of format_arch_string, strict about every token."""
    groups = s.split("+")
    if len(groups) != 3:
        raise ParseError(f"expected 3 node groups separated by '+', got {len(groups)}")
    ops: list[str] = []
    for target, group in enumerate(groups, start=1):
        if len(group) < 2 or not group.startswith("|") or not group.endswith("|"):
            raise ParseError(f"node group {group!r} is not delimited by '|'")
        tokens = group[1:-1].split("|")
        if len(tokens) != target:
            raise ParseError(
                f"node {target} should have {target} incoming edges, got {len(tokens)}"
            )
        for source, token in enumerate(tokens):
            op_token, sep, idx = token.rpartition("~")
            if not sep or not op_token:
                raise ParseError(f"malformed edge token {token!r}")
            if op_token not in _TOKEN_TO_OP:
                raise ParseError(f"unknown operation in token {token!r}")
            if idx != str(source):
                raise ParseError(
                    f"edge token {token!r} should name predecessor {source}"
                )
            ops.append(_TOKEN_TO_OP[op_token])
    return CellSpec(tuple(ops))


def sample_architectures(n: int, seed: int) -> list[CellSpec]:
    """n distinct cells, uniform without replacement, deterministic in seed.

    Sampling is a partial shuffle of the index space, so for a fixed
    seed the n=10 sample is a prefix of the n=100 one.
    """
    if not 1 <= n <= CELL_SPACE_SIZE:
        raise ValueError(f"n must be in [1, {CELL_SPACE_SIZE}], got {n}")
    picks = RandomStream(seed).sample_without_replacement(CELL_SPACE_SIZE, n)
    return [cell_from_index(int(i)) for i in picks]


def _build_mlp_graph(
    spec: MLPSpec, num_classes: int, input_shape: tuple[int, int, int]
) -> Graph:
    h, w, c = input_shape
    features = h * w * c
    nodes = [
        Node("input", LayerSpec("input")),
        Node("flatten", LayerSpec("flatten"), ("input",)),
        Node(
            "dense1",
            LayerSpec("dense", in_features=features, out_units=spec.units_layer1),
            ("flatten",),
        ),
        Node("relu1", LayerSpec("relu"), ("dense1",)),
        Node(
            "dense2",
            LayerSpec("dense", in_features=spec.units_layer1, out_units=spec.units_layer2),
            ("relu1",),
        ),
        Node("relu2", LayerSpec("relu"), ("dense2",)),
        Node(
            "classifier",
            LayerSpec("classifier", in_features=spec.units_layer2, out_units=num_classes),
            ("relu2",),
        ),
    ]
    return Graph(nodes, input_shape, num_classes)


def _relu_conv_bn(
    nodes: list[Node], prefix: str, source: str, cin: int, cout: int, kernel: int, stride: int
) -> str:
    padding = (kernel - 1) // 2
    nodes.append(Node(f"{prefix}_relu", LayerSpec("relu"), (source,)))
    nodes.append(
        Node(
            f"{prefix}_conv",
            LayerSpec(
                "conv2d",
                in_channels=cin,
                out_channels=cout,
                kernel=kernel,
                stride=stride,
                padding=padding,
            ),
            (f"{prefix}_relu",),
        )
    )
    nodes.append(
        Node(f"{prefix}_bn", LayerSpec("batch_norm", in_channels=cout), (f"{prefix}_conv",))
    )
    return f"{prefix}_bn"


def _append_cell(nodes: list[Node], prefix: str, source: str, channels: int, cell: CellSpec) -> str:
    """Wire one cell; returns the name of its output (node 3)."""
    node_names = [source]
    edge = 0
    for target in (1, 2, 3):
        contributions = []
        for src in range(target):
            op = cell.edge_ops[edge]
            tag = f"{prefix}_e{src}{target}"
            if op == "zeroize":
                nodes.append(Node(f"{tag}_zero", LayerSpec("zeroize"), (node_names[src],)))
                contributions.append(f"{tag}_zero")
            elif op == "skip_connect":
                nodes.append(Node(f"{tag}_skip", LayerSpec("identity"), (node_names[src],)))
                contributions.append(f"{tag}_skip")
            elif op == "avg_pool3x3":
                nodes.append(
                    Node(
                        f"{tag}_pool",
                        LayerSpec("avg_pool", kernel=3, stride=1, padding=1),
                        (node_names[src],),
                    )
                )
                contributions.append(f"{tag}_pool")
            else:
                kernel = 1 if op == "conv1x1" else 3
                contributions.append(
                    _relu_conv_bn(nodes, tag, node_names[src], channels, channels, kernel, 1)
                )
            edge += 1
        if len(contributions) == 1:
            node_names.append(contributions[0])
        else:
            nodes.append(Node(f"{prefix}_n{target}", LayerSpec("add"), tuple(contributions)))
            node_names.append(f"{prefix}_n{target}")
    return node_names[3]


def _append_residual_block(nodes: list[Node], prefix: str, source: str, cin: int) -> tuple[str, int]:
    """Stride-2 residual downsample between stacks; doubles channels."""
    cout = cin * 2
    a = _relu_conv_bn(nodes, f"{prefix}_a", source, cin, cout, 3, 2)
    b = _relu_conv_bn(nodes, f"{prefix}_b", a, cout, cout, 3, 1)
    nodes.append(
        Node(
            f"{prefix}_down_pool",
            LayerSpec("avg_pool", kernel=2, stride=2, padding=0),
            (source,),
        )
    )
    nodes.append(
        Node(
            f"{prefix}_down_conv",
            LayerSpec("conv2d", in_channels=cin, out_channels=cout, kernel=1, stride=1, padding=0),
            (f"{prefix}_down_pool",),
        )
    )
    nodes.append(Node(f"{prefix}_add", LayerSpec("add"), (b, f"{prefix}_down_conv")))
    return f"{prefix}_add", cout


def _build_cell_graph(cell: CellSpec, skeleton: SkeletonConfig) -> Graph:
    h, w, c_in = skeleton.input_shape
    nodes: list[Node] = [Node("input", LayerSpec("input"))]
    nodes.append(
        Node(
            "stem_conv",
            LayerSpec(
                "conv2d",
                in_channels=c_in,
                out_channels=skeleton.stem_channels,
                kernel=3,
                stride=1,
                padding=1,
            ),
            ("input",),
        )
    )
    nodes.append(
        Node("stem_bn", LayerSpec("batch_norm", in_channels=skeleton.stem_channels), ("stem_conv",))
    )
    current = "stem_bn"
    channels = skeleton.stem_channels
    for stack in range(3):
        if stack > 0:
            current, channels = _append_residual_block(nodes, f"rb{stack}", current, channels)
        for idx in range(skeleton.cells_per_stack):
            current = _append_cell(nodes, f"s{stack}c{idx}", current, channels, cell)
    nodes.append(Node("final_bn", LayerSpec("batch_norm", in_channels=channels), (current,)))
    nodes.append(Node("final_relu", LayerSpec("relu"), ("final_bn",)))
    nodes.append(Node("gap", LayerSpec("global_avg_pool"), ("final_relu",)))
    nodes.append(
        Node(
            "classifier",
            LayerSpec("classifier", in_features=channels, out_units=skeleton.num_classes),
            ("gap",),
        )
    )
    return Graph(nodes, skeleton.input_shape, skeleton.num_classes)


def instantiate_network(
    spec: ArchitectureSpec,
    num_classes: int,
    input_shape: tuple[int, int, int],
    skeleton: SkeletonConfig | None = None,
) -> Graph:
    """Unweighted layer graph for an architecture.

    Cells default to the canonical skeleton (stem 16, 5 cells per
    stack); pass a SkeletonConfig to override, in which case its class
    count and input shape must agree with the arguments.
    """
    if isinstance(spec, MLPSpec):
        return _build_mlp_graph(spec, num_classes, input_shape)
    if isinstance(spec, CellSpec):
        if skeleton is None:
            skeleton = SkeletonConfig(num_classes=num_classes, input_shape=tuple(input_shape))
        elif skeleton.num_classes != num_classes or tuple(skeleton.input_shape) != tuple(input_shape):
            raise ValueError("skeleton disagrees with num_classes/input_shape arguments")
        return _build_cell_graph(spec, skeleton)
    raise TypeError(f"not an architecture spec: {type(spec).__name__}")


def count_parameters(
    spec: ArchitectureSpec,
    num_classes: int,
    input_shape: tuple[int, int, int],
    skeleton: SkeletonConfig | None = None,
) -> int:
    return instantiate_network(spec, num_classes, input_shape, skeleton).count_parameters()
