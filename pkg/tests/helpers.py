"""Shared test utilities: oracles and small graph builders."""

from __future__ import annotations

import numpy as np

from tlnas.nn import backward, forward, forward_with_cache, initialise_weights
from tlnas.nn.graph import Graph, LayerSpec, Node


def tiny_net(layers: list[Node], input_shape, num_classes=3, seed=5):
    nodes = [Node("input", LayerSpec("input"))] + layers
    return initialise_weights(Graph(nodes, input_shape, num_classes), seed)


def promote_to_float64(net) -> None:
    """Replace float32 storage with float64 so FD steps are exact."""
    for params in net.weights.values():
        for name in params:
            params[name] = params[name].astype(np.float64)


def fd_gradient_errors(net, x, probes_per_tensor=3, h=1e-3, seed=0):
    """Central finite differences against backward(), float64 mode.

    Yields relative errors for randomly probed parameter entries and
    input pixels.  The scalar under test is sum(logits * fixed random
    upstream), the exact quantity backward() differentiates.
    """
    promote_to_float64(net)
    x = x.astype(np.float64)
    rng = np.random.default_rng(seed)
    logits, cache = forward_with_cache(net, x, dtype=np.float64)
    upstream = rng.normal(size=logits.shape)
    param_grads, input_grad = backward(net, cache, upstream)

    def scalar():
        return float((forward(net, x, dtype=np.float64) * upstream).sum())

    errors = []
    for node, params in param_grads.items():
        for pname, analytic in params.items():
            flat = net.weights[node][pname].reshape(-1)
            for _ in range(min(probes_per_tensor, flat.size)):
                i = int(rng.integers(flat.size))
                orig = flat[i]
                flat[i] = orig + h
                fp = scalar()
                flat[i] = orig - h
                fm = scalar()
                flat[i] = orig
                fd = (fp - fm) / (2 * h)
                an = float(analytic.reshape(-1)[i])
                errors.append(abs(fd - an) / max(1e-6, abs(fd), abs(an)))
    flat = x.reshape(-1)
    for _ in range(probes_per_tensor):
        i = int(rng.integers(flat.size))
        orig = flat[i]
        flat[i] = orig + h
        fp = scalar()
        flat[i] = orig - h
        fm = scalar()
        flat[i] = orig
        fd = (fp - fm) / (2 * h)
        an = float(input_grad.reshape(-1)[i])
        errors.append(abs(fd - an) / max(1e-6, abs(fd), abs(an)))
    return errors


def naive_conv2d(x, w, stride, padding):
    """Six-loop reference convolution, NHWC x HWIO."""
    n, h, wd, cin = x.shape
    k = w.shape[0]
    cout = w.shape[3]
    xp = np.zeros((n, h + 2 * padding, wd + 2 * padding, cin))
    xp[:, padding : padding + h, padding : padding + wd, :] = x
    ho = (h + 2 * padding - k) // stride + 1
    wo = (wd + 2 * padding - k) // stride + 1
    out = np.zeros((n, ho, wo, cout))
    for img in range(n):
        for oy in range(ho):
            for ox in range(wo):
                for oc in range(cout):
                    acc = 0.0
                    for dy in range(k):
                        for dx in range(k):
                            for ic in range(cin):
                                acc += xp[img, oy * stride + dy, ox * stride + dx, ic] * w[dy, dx, ic, oc]
                    out[img, oy, ox, oc] = acc
    return out


def torch_replica_grads(net, x, upstream):
    """Independent oracle: rebuild the graph in torch, return autograd
    parameter gradients plus the input gradient and the logits."""
    import torch

    from tlnas.nn.engine import BN_EPS

    graph = net.graph
    params: dict[str, dict] = {}
    xin = torch.tensor(x.astype(np.float64), requires_grad=True)
    acts = {graph.nodes[0].name: xin}
    for node in graph.nodes[1:]:
        kind = node.spec.kind
        xs = [acts[n] for n in node.inputs]
        t = xs[0]
        tensors = {
            p: torch.tensor(a.astype(np.float64), requires_grad=True)
            for p, a in net.weights.get(node.name, {}).items()
        }
        params[node.name] = tensors
        if kind in ("dense", "classifier"):
            y = t @ tensors["w"] + tensors["b"]
        elif kind == "conv2d":
            y = torch.nn.functional.conv2d(
                t.permute(0, 3, 1, 2),
                tensors["w"].permute(3, 2, 0, 1),
                stride=node.spec.stride,
                padding=node.spec.padding,
            ).permute(0, 2, 3, 1)
        elif kind == "batch_norm":
            tc = t.permute(0, 3, 1, 2) if t.dim() == 4 else t
            y = torch.nn.functional.batch_norm(
                tc, None, None, tensors["gamma"], tensors["beta"],
                training=True, momentum=0.0, eps=BN_EPS,
            )
            y = y.permute(0, 2, 3, 1) if t.dim() == 4 else y
        elif kind == "relu":
            y = torch.relu(t)
        elif kind == "zeroize":
            y = torch.zeros_like(t)
        elif kind == "identity":
            y = t
        elif kind == "add":
            y = xs[0]
            for other in xs[1:]:
                y = y + other
        elif kind == "flatten":
            y = t.reshape(t.shape[0], -1)
        elif kind == "avg_pool":
            y = torch.nn.functional.avg_pool2d(
                t.permute(0, 3, 1, 2),
                node.spec.kernel,
                stride=node.spec.stride,
                padding=node.spec.padding,
                count_include_pad=node.spec.count_include_pad,
            ).permute(0, 2, 3, 1)
        elif kind == "global_avg_pool":
            y = t.mean(dim=(1, 2))
        else:
            raise AssertionError(kind)
        acts[node.name] = y
    logits = acts[graph.output_name]
    (logits * torch.tensor(upstream.astype(np.float64))).sum().backward()
    grads = {
        node: {p: t.grad.numpy() if t.grad is not None else np.zeros(t.shape) for p, t in ts.items()}
        for node, ts in params.items()
        if ts
    }
    input_grad = xin.grad.numpy() if xin.grad is not None else np.zeros_like(x, dtype=np.float64)
    return grads, input_grad, logits.detach().numpy()


def synthetic_image_dataset(name, split="train", n=60, side=8, channels=3, classes=10, seed=0):
    """Random pixels with a balanced label cycle; enough signal for
    determinism tests, none for learning."""
    from tlnas.data import ImageDataset

    rng = np.random.default_rng(seed)
    images = rng.integers(0, 256, size=(n, side, side, channels), dtype=np.uint8)
    labels = (np.arange(n) % classes).astype(np.int64)
    return ImageDataset(name, split, images, labels, classes)


def write_fixture_jsonl(path, indices, dataset="cifar10", seed=0):
    """Fixture rows for the given cell indices; accuracies vary per row."""
    import json

    from tlnas.space import cell_from_index, format_arch_string

    rng = np.random.default_rng(seed)
    with open(path, "w") as fh:
        for i in indices:
            fh.write(
                json.dumps(
                    {
                        "arch": format_arch_string(cell_from_index(int(i))),
                        "dataset": dataset,
                        "val_acc": round(float(rng.uniform(30, 95)), 2),
                        "test_acc": round(float(rng.uniform(30, 95)), 2),
                    }
                )
                + "\n"
            )
