from .adam import AdamState, adam_step
from .engine import (
    BN_EPS,
    ForwardCache,
    accuracy,
    backward,
    forward,
    forward_with_cache,
    input_jacobian,
    predictions,
    softmax_cross_entropy,
)
from .graph import Graph, LayerSpec, NetworkInstance, Node
from .init import he_uniform_init, initialise_weights

__all__ = [
    "AdamState",
    "adam_step",
    "BN_EPS",
    "ForwardCache",
    "accuracy",
    "backward",
    "forward",
    "forward_with_cache",
    "input_jacobian",
    "predictions",
    "softmax_cross_entropy",
    "Graph",
    "LayerSpec",
    "NetworkInstance",
    "Node",
    "he_uniform_init",
    "initialise_weights",
]
