"""Forward inference and reverse-mode gradients.

Conventions, fixed as part of the determinism contract:
  - activations are NHWC (or N x features after flatten / pooling);
  - storage dtype is float32 by default, every reduction (matmul,
    means, sums) accumulates in float64 and is rounded once;
  - nodes evaluate in graph order, gradients in exact reverse order,
    so results never depend on scheduling;
  - a float64 storage mode exists (``dtype=np.float64``) running the
    identical algorithm, used by finite-difference validation.

Batch norm always normalises with current-batch statistics: these
networks are scored (and trained from scratch) without any running
averages, so γ=1, β=0 batch statistics are the only defined choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, NumericError, ProtocolError
from .graph import Graph, NetworkInstance, Node

BN_EPS = 1e-5


@dataclass
class ForwardCache:
    """Activations (and per-node extras) retained for one backward pass."""

    acts: dict[str, np.ndarray]
    aux: dict[str, tuple]
    dtype: np.dtype


def _f64(x: np.ndarray) -> np.ndarray:
    return x.astype(np.float64, copy=False)


def _check_finite(arr: np.ndarray, node: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericError("non-finite values produced", node=node)


def _conv_slices(size_out: int, offset: int, stride: int) -> slice:
    return slice(offset, offset + (size_out - 1) * stride + 1, stride)


def _pad_hw(x64: np.ndarray, padding: int) -> np.ndarray:
    if padding == 0:
        return x64
    n, h, w, c = x64.shape
    xp = np.zeros((n, h + 2 * padding, w + 2 * padding, c), dtype=np.float64)
    xp[:, padding : padding + h, padding : padding + w, :] = x64
    return xp


def _out_hw(h: int, w: int, kernel: int, stride: int, padding: int, node: str) -> tuple[int, int]:
    ho = (h + 2 * padding - kernel) // stride + 1
    wo = (w + 2 * padding - kernel) // stride + 1
    if ho < 1 or wo < 1:
        raise DimensionError(f"node {node!r}: kernel {kernel} exceeds padded input {h}x{w}")
    return ho, wo


def _pool_counts(h: int, w: int, spec, ho: int, wo: int) -> np.ndarray:
    """Divisor map for avg_pool: valid (non-padding) cells per window."""
    if spec.count_include_pad:
        return np.full((ho, wo), float(spec.kernel * spec.kernel))
    ones = np.zeros((1, h + 2 * spec.padding, w + 2 * spec.padding, 1), dtype=np.float64)
    ones[0, spec.padding : spec.padding + h, spec.padding : spec.padding + w, 0] = 1.0
    counts = np.zeros((ho, wo), dtype=np.float64)
    for dy in range(spec.kernel):
        for dx in range(spec.kernel):
            counts += ones[0, _conv_slices(ho, dy, spec.stride), _conv_slices(wo, dx, spec.stride), 0]
    return counts


def _node_forward(node: Node, xs: list[np.ndarray], params: dict, dtype) -> tuple[np.ndarray, tuple]:
    spec = node.spec
    kind = spec.kind
    x = xs[0]

    if kind in ("dense", "classifier"):
        if x.ndim != 2 or x.shape[1] != spec.in_features:
            raise DimensionError(
                f"node {node.name!r}: expected (N, {spec.in_features}), got {x.shape}"
            )
        y = _f64(x) @ _f64(params["w"]) + _f64(params["b"])
        return y.astype(dtype), ()

    if kind == "conv2d":
        if x.ndim != 4 or x.shape[3] != spec.in_channels:
            raise DimensionError(
                f"node {node.name!r}: expected NHWC with C={spec.in_channels}, got {x.shape}"
            )
        n, h, w, _ = x.shape
        ho, wo = _out_hw(h, w, spec.kernel, spec.stride, spec.padding, node.name)
        xp = _pad_hw(_f64(x), spec.padding)
        w64 = _f64(params["w"])
        acc = np.zeros((n, ho, wo, spec.out_channels), dtype=np.float64)
        for dy in range(spec.kernel):
            for dx in range(spec.kernel):
                patch = xp[:, _conv_slices(ho, dy, spec.stride), _conv_slices(wo, dx, spec.stride), :]
                acc += (patch.reshape(-1, spec.in_channels) @ w64[dy, dx]).reshape(
                    n, ho, wo, spec.out_channels
                )
        return acc.astype(dtype), ()

    if kind == "batch_norm":
        if x.shape[-1] != spec.in_channels:
            raise DimensionError(
                f"node {node.name!r}: expected C={spec.in_channels}, got {x.shape}"
            )
        axes = tuple(range(x.ndim - 1))
        x64 = _f64(x)
        mean = x64.mean(axis=axes)
        var = x64.var(axis=axes)  # population variance, batch statistics
        istd = 1.0 / np.sqrt(var + BN_EPS)
        xhat = (x64 - mean) * istd
        y = _f64(params["gamma"]) * xhat + _f64(params["beta"])
        return y.astype(dtype), (xhat.astype(dtype), istd)

    if kind == "relu":
        return np.maximum(x, 0), ()

    if kind == "zeroize":
        return np.zeros_like(x), ()

    if kind == "identity":
        return x, ()

    if kind == "add":
        acc = _f64(xs[0]).copy()
        for other in xs[1:]:
            if other.shape != xs[0].shape:
                raise DimensionError(f"node {node.name!r}: add over mismatched shapes")
            acc += _f64(other)
        return acc.astype(dtype), ()

    if kind == "flatten":
        return x.reshape(x.shape[0], -1), ()

    if kind == "avg_pool":
        n, h, w, c = x.shape
        ho, wo = _out_hw(h, w, spec.kernel, spec.stride, spec.padding, node.name)
        xp = _pad_hw(_f64(x), spec.padding)
        acc = np.zeros((n, ho, wo, c), dtype=np.float64)
        for dy in range(spec.kernel):
            for dx in range(spec.kernel):
                acc += xp[:, _conv_slices(ho, dy, spec.stride), _conv_slices(wo, dx, spec.stride), :]
        counts = _pool_counts(h, w, spec, ho, wo)
        y = acc / counts[None, :, :, None]
        return y.astype(dtype), (counts,)

    if kind == "global_avg_pool":
        if x.ndim != 4:
            raise DimensionError(f"node {node.name!r}: expected NHWC, got {x.shape}")
        return _f64(x).mean(axis=(1, 2)).astype(dtype), ()

    raise DimensionError(f"node {node.name!r}: no forward rule for kind {kind!r}")


def forward_with_cache(
    net: NetworkInstance, batch: np.ndarray, dtype=np.float32
) -> tuple[np.ndarray, ForwardCache]:
    graph = net.graph
    if tuple(batch.shape[1:]) != graph.input_shape:
        raise DimensionError(
            f"batch shape {batch.shape[1:]} does not match network input {graph.input_shape}"
        )
    acts: dict[str, np.ndarray] = {graph.nodes[0].name: batch.astype(dtype)}
    aux: dict[str, tuple] = {}
    for node in graph.nodes[1:]:
        xs = [acts[name] for name in node.inputs]
        y, extras = _node_forward(node, xs, net.weights.get(node.name, {}), dtype)
        acts[node.name] = y
        if extras:
            aux[node.name] = extras
    logits = acts[graph.output_name]
    _check_finite(logits, graph.output_name)
    return logits, ForwardCache(acts=acts, aux=aux, dtype=np.dtype(dtype))


def forward(net: NetworkInstance, batch: np.ndarray, dtype=np.float32) -> np.ndarray:
    """Logits for a batch; pure function of (weights, batch)."""
    return forward_with_cache(net, batch, dtype=dtype)[0]


def _node_backward(
    node: Node, g: np.ndarray, cache: ForwardCache, params: dict
) -> tuple[list[np.ndarray], dict[str, np.ndarray]]:
    """Gradients w.r.t. each input of `node` and w.r.t. its parameters."""
    spec = node.spec
    kind = spec.kind
    dtype = cache.dtype
    x = cache.acts[node.inputs[0]]
    g64 = _f64(g)

    if kind in ("dense", "classifier"):
        dw = _f64(x).T @ g64
        db = g64.sum(axis=0)
        dx = (g64 @ _f64(params["w"]).T).astype(dtype)
        return [dx], {"w": dw, "b": db}

    if kind == "conv2d":
        n, h, w, _ = x.shape
        ho, wo = g.shape[1], g.shape[2]
        xp = _pad_hw(_f64(x), spec.padding)
        w64 = _f64(params["w"])
        gflat = g64.reshape(-1, spec.out_channels)
        dw = np.zeros_like(w64)
        dxp = np.zeros_like(xp)
        for dy in range(spec.kernel):
            for dx_ in range(spec.kernel):
                rows = _conv_slices(ho, dy, spec.stride)
                cols = _conv_slices(wo, dx_, spec.stride)
                patch = xp[:, rows, cols, :].reshape(-1, spec.in_channels)
                dw[dy, dx_] = patch.T @ gflat
                dxp[:, rows, cols, :] += (gflat @ w64[dy, dx_].T).reshape(
                    n, ho, wo, spec.in_channels
                )
        p = spec.padding
        dx = dxp[:, p : p + h, p : p + w, :].astype(dtype)
        return [dx], {"w": dw}

    if kind == "batch_norm":
        xhat, istd = cache.aux[node.name]
        axes = tuple(range(x.ndim - 1))
        count = 1
        for ax in axes:
            count *= x.shape[ax]
        xhat64 = _f64(xhat)
        dgamma = (g64 * xhat64).sum(axis=axes)
        dbeta = g64.sum(axis=axes)
        coeff = _f64(params["gamma"]) * istd / count
        dx = (coeff * (count * g64 - dbeta - xhat64 * dgamma)).astype(dtype)
        return [dx], {"gamma": dgamma, "beta": dbeta}

    if kind == "relu":
        return [(g * (x > 0)).astype(dtype)], {}

    if kind == "zeroize":
        return [np.zeros_like(x)], {}

    if kind == "identity":
        return [g], {}

    if kind == "add":
        return [g for _ in node.inputs], {}

    if kind == "flatten":
        return [g.reshape(x.shape)], {}

    if kind == "avg_pool":
        (counts,) = cache.aux[node.name]
        n, h, w, c = x.shape
        ho, wo = g.shape[1], g.shape[2]
        shared = g64 / counts[None, :, :, None]
        dxp = np.zeros(
            (n, h + 2 * spec.padding, w + 2 * spec.padding, c), dtype=np.float64
        )
        for dy in range(spec.kernel):
            for dx_ in range(spec.kernel):
                dxp[:, _conv_slices(ho, dy, spec.stride), _conv_slices(wo, dx_, spec.stride), :] += shared
        p = spec.padding
        return [dxp[:, p : p + h, p : p + w, :].astype(dtype)], {}

    if kind == "global_avg_pool":
        n, h, w, c = x.shape
        dx = np.broadcast_to(g64[:, None, None, :] / (h * w), x.shape)
        return [dx.astype(dtype)], {}

    raise DimensionError(f"node {node.name!r}: no backward rule for kind {kind!r}")


def backward(
    net: NetworkInstance, cache: ForwardCache, upstream: np.ndarray
) -> tuple[dict[str, dict[str, np.ndarray]], np.ndarray]:
    """Gradients of sum(logits * upstream) w.r.t. parameters and input.

    Parameter gradients come back in float64 (they are pure reductions);
    the input gradient matches the batch shape.  Requires the cache of a
    prior forward pass.
    """
    graph = net.graph
    if not isinstance(cache, ForwardCache) or graph.output_name not in cache.acts:
        raise ProtocolError("backward requires the cache of a completed forward pass")
    logits = cache.acts[graph.output_name]
    if upstream.shape != logits.shape:
        raise DimensionError(
            f"upstream grad shape {upstream.shape} does not match logits {logits.shape}"
        )
    gacts: dict[str, np.ndarray] = {graph.output_name: upstream.astype(cache.dtype)}
    param_grads: dict[str, dict[str, np.ndarray]] = {}
    for node in reversed(graph.nodes[1:]):
        g = gacts.pop(node.name, None)
        if g is None:
            continue  # dead branch: nothing downstream consumed this node
        input_grads, pgrads = _node_backward(node, g, cache, net.weights.get(node.name, {}))
        if pgrads:
            param_grads[node.name] = pgrads
        for name, grad in zip(node.inputs, input_grads):
            if name in gacts:
                gacts[name] = gacts[name] + grad
            else:
                gacts[name] = grad
    input_name = graph.nodes[0].name
    input_grad = gacts.get(input_name)
    if input_grad is None:
        input_grad = np.zeros(cache.acts[input_name].shape, dtype=np.float64)
    return param_grads, _f64(input_grad)


def input_jacobian(net: NetworkInstance, batch: np.ndarray, dtype=np.float32) -> np.ndarray:
    """One flattened input-gradient row per image.

    Computed as a single reverse pass of the total summed logits, so with
    batch-coupled layers (batch norm) row i includes the cross-image
    terms; without them it reduces to the per-image gradient exactly.
    """
    _, cache = forward_with_cache(net, batch, dtype=dtype)
    logits = cache.acts[net.graph.output_name]
    _, input_grad = backward(net, cache, np.ones_like(logits))
    return input_grad.reshape(batch.shape[0], -1)


def predictions(logits: np.ndarray) -> np.ndarray:
    """Argmax class per row; ties resolve to the lowest class index."""
    return np.argmax(logits, axis=1)


def accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    if logits.shape[0] != labels.shape[0]:
        raise DimensionError("logits/labels length mismatch")
    correct = int(np.count_nonzero(predictions(logits) == np.asarray(labels)))
    return correct / logits.shape[0]


def softmax_cross_entropy(
    logits: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy loss and its gradient w.r.t. the logits."""
    n = logits.shape[0]
    z = _f64(logits)
    z = z - z.max(axis=1, keepdims=True)
    expz = np.exp(z)
    probs = expz / expz.sum(axis=1, keepdims=True)
    picked = probs[np.arange(n), np.asarray(labels)]
    loss = float(-np.log(np.maximum(picked, 1e-300)).mean())
    grad = probs.copy()
    grad[np.arange(n), np.asarray(labels)] -= 1.0
    grad /= n
    return loss, grad.astype(logits.dtype)
