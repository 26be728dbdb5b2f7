"""Layer stacks: deep attention+MLP compositions as one in-context map.

A stack of T layers acts on a point by threading it through each layer while
the context measure is pushed forward alongside (the diamond rule).  The same
stack acts on measures by relocating every atom, and on token sequences by
acting pointwise while keeping the input order.

Each layer carries an optional velocity scale: at scale 1 the layer applies
``F(x + Att(mu, x))`` directly, at scale c it applies ``x + c * velocity``,
which is how depth-rescaled stacks realize explicit Euler steps of the layer
velocity field.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attention import AttentionParams, MlpParams, gamma, mlp, velocity
from .errors import DimensionMismatch
from .measures import DiscreteMeasure, TokenSequence, canonicalize, iota, push_forward


@dataclass(frozen=True)
class Layer:
    """One attention+MLP block with an optional velocity scale."""

    attention: AttentionParams
    mlp: MlpParams
    scale: float = 1.0


@dataclass(frozen=True)
class LayerStack:
    """Ordered attention+MLP layers; an empty stack is the identity map."""

    layers: tuple[Layer, ...]
    dim: int

    def __post_init__(self) -> None:
        for layer in self.layers:
            if layer.attention.dim != self.dim:
                raise DimensionMismatch(
                    f"layer dimension {layer.attention.dim} != stack dimension {self.dim}"
                )
            if layer.mlp.dim is not None and layer.mlp.dim != self.dim:
                raise DimensionMismatch("MLP dimension does not match the stack")

    @property
    def depth(self) -> int:
        return len(self.layers)


def apply_layer(layer: Layer, mu: DiscreteMeasure, x: np.ndarray) -> np.ndarray:
    """One layer at context ``mu``: F(Gamma(mu, x)), or the scaled velocity step."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if layer.scale == 1.0:
        return mlp(layer.mlp, gamma(layer.attention, mu, x))
    return x + layer.scale * velocity(layer.attention, layer.mlp, mu, x)


def context_chain(stack: LayerStack, mu: DiscreteMeasure) -> list[DiscreteMeasure]:
    """Canonical context measures seen by each layer, plus the final measure.

    Entry tau is the context for layer tau; the last entry is the output
    measure of the whole stack.
    """
    nu = canonicalize(mu)
    chain = [nu]
    for layer in stack.layers:
        ctx = nu
        nu = push_forward(ctx, lambda z: apply_layer(layer, ctx, z))
        chain.append(nu)
    return chain


def forward_map(stack: LayerStack, mu: DiscreteMeasure, x: np.ndarray) -> np.ndarray:
    """The stack's in-context map at (mu, x)."""
    chain = context_chain(stack, mu)
    y = np.asarray(x, dtype=float).reshape(-1)
    for layer, ctx in zip(stack.layers, chain):
        y = apply_layer(layer, ctx, y)
    return y


def forward_measure(stack: LayerStack, mu: DiscreteMeasure) -> DiscreteMeasure:
    """Push ``mu`` through the stack (layerwise push-forwards composed)."""
    return context_chain(stack, mu)[-1]


def forward_tokens(stack: LayerStack, seq: TokenSequence) -> TokenSequence:
    """Act on a token sequence, preserving the input order.

    Every token is mapped through the stack against the contexts generated by
    the sequence's empirical measure, so equal tokens receive equal images and
    permuting the input permutes the output identically.
    """
    mu = iota(seq)
    chain = context_chain(stack, mu)
    out = np.empty_like(seq.tokens)
    for i in range(seq.n):
        y = seq.tokens[i]
        for layer, ctx in zip(stack.layers, chain):
            y = apply_layer(layer, ctx, y)
        out[i] = y
    box = seq.box if seq.box.contains(out) else seq.box.hull(out)
    out.flags.writeable = False
    return TokenSequence(out, box)
