"""Multi-head self-attention on discrete measures, MLPs, and in-context maps.

Attention here is measure-weighted: the softmax over context atoms carries the
atom weights in numerator and denominator, which matches the integral form of
the layer and makes the output invariant under rescaling the total mass.  For
uniform weights it coincides with the familiar token-sequence softmax.

A single residual layer is attention followed by an MLP with unit skip; its
displacement ``x -> F(x + Att(mu, x)) - x`` is the layer velocity.  In-context
maps compose with the diamond rule: the second map sees the first map's
pushed-forward context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, EmptyMeasure, LengthMismatch, SkipNotUnit
from .measures import DiscreteMeasure, canonicalize, push_forward

ACTIVATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "tanh": np.tanh,
    "sigmoid": lambda z: 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500))),
    "relu-smooth": lambda z: np.logaddexp(0.0, z),
}


@dataclass(frozen=True)
class HeadParams:
    """One attention head: query/key (k x d), value (d_head x d), output (d x d_head)."""

    q: np.ndarray
    k: np.ndarray
    v: np.ndarray
    w: np.ndarray


@dataclass(frozen=True)
class AttentionParams:
    """Multi-head attention parameters with shared key dimension."""

    heads: tuple[HeadParams, ...]
    key_dim: int

    def __post_init__(self) -> None:
        if not self.heads:
            raise LengthMismatch("attention needs at least one head")
        d = self.heads[0].q.shape[1]
        for h in self.heads:
            if h.q.shape != (self.key_dim, d) or h.k.shape != (self.key_dim, d):
                raise DimensionMismatch("query/key matrices must be key_dim x d")
            if h.v.shape[1] != d or h.w.shape[0] != d or h.w.shape[1] != h.v.shape[0]:
                raise DimensionMismatch("value/output matrices have inconsistent shapes")
            for m in (h.q, h.k, h.v, h.w):
                if not np.isfinite(m).all():
                    raise DimensionMismatch("attention matrices must be finite")

    @property
    def n_heads(self) -> int:
        return len(self.heads)

    @property
    def dim(self) -> int:
        return self.heads[0].q.shape[1]


@dataclass(frozen=True)
class MlpParams:
    """MLP ``x -> skip * x + act(A_L(...act(A_1 x + b_1)...) + b_L)``.

    An empty layer list is the pure skip map ``skip * x``.
    """

    skip: float
    layers: tuple[tuple[np.ndarray, np.ndarray], ...]
    activation: str = "tanh"

    def __post_init__(self) -> None:
        if self.activation not in ACTIVATIONS:
            raise LengthMismatch(f"unknown activation {self.activation!r}")
        if self.layers:
            d = self.layers[0][0].shape[1]
            prev = d
            for a, b in self.layers:
                if a.shape[1] != prev or b.shape[0] != a.shape[0]:
                    raise DimensionMismatch("MLP layer shapes do not chain")
                prev = a.shape[0]
            if prev != d:
                raise DimensionMismatch("MLP must map back to its input dimension")

    @property
    def dim(self) -> int | None:
        return self.layers[0][0].shape[1] if self.layers else None


def identity_mlp() -> MlpParams:
    """Unit-skip MLP with no layers: the identity map."""
    return MlpParams(skip=1.0, layers=())


def attention_weights(params: AttentionParams, mu: DiscreteMeasure, x: np.ndarray) -> list[np.ndarray]:
    """Per-head measure-weighted softmax weights over the canonical atoms.

    Logits are (Q x) . (K x_l) / sqrt(key_dim), stabilized by subtracting the
    maximum before exponentiation; each returned vector sums to one.
    """
    if mu.n == 0:
        raise EmptyMeasure("attention needs a nonempty context measure")
    mu_c = canonicalize(mu)
    x = np.asarray(x, dtype=float).reshape(-1)
    scale = 1.0 / math.sqrt(params.key_dim)
    out = []
    for head in params.heads:
        logits = (mu_c.points @ head.k.T) @ (head.q @ x) * scale
        z = mu_c.weights * np.exp(logits - np.max(logits))
        out.append(z / np.sum(z))
    return out


def attention(params: AttentionParams, mu: DiscreteMeasure, x: np.ndarray) -> np.ndarray:
    """Attention displacement sum_h W_h V_h (sum_l p_l x_l) at query x.

    Context atoms are reduced in canonical order, so the result is identical
    (bitwise) for any atom relabeling of ``mu``.
    """
    mu_c = canonicalize(mu)
    x = np.asarray(x, dtype=float).reshape(-1)
    weights = attention_weights(params, mu_c, x)
    out = np.zeros(x.shape[0])
    for head, p in zip(params.heads, weights):
        pooled = p @ mu_c.points
        out = out + head.w @ (head.v @ pooled)
    return out


def gamma(params: AttentionParams, mu: DiscreteMeasure, x: np.ndarray) -> np.ndarray:
    """Residual attention layer x + Att(mu, x)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    return x + attention(params, mu, x)


def mlp(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Evaluate the MLP (skip term plus activated layer chain)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if not params.layers:
        return params.skip * x
    act = ACTIVATIONS[params.activation]
    h = x
    for a, b in params.layers:
        h = act(a @ h + b)
    return params.skip * x + h


def velocity(att: AttentionParams, mlp_p: MlpParams, mu: DiscreteMeasure, x: np.ndarray) -> np.ndarray:
    """One-layer displacement Att(mu, x) + H(x + Att(mu, x)) with H = F - Id.

    Requires a unit skip coefficient so that the layer is a perturbation of
    the identity; then x + velocity(mu, x) = F(x + Att(mu, x)) exactly.
    """
    if mlp_p.skip != 1.0:
        raise SkipNotUnit(f"velocity needs skip coefficient 1, got {mlp_p.skip}")
    x = np.asarray(x, dtype=float).reshape(-1)
    a = attention(att, mu, x)
    g = x + a
    return a + (mlp(mlp_p, g) - g)


@dataclass(eq=False)
class InContextMap:
    """A map (measure, point) -> point, with a push-forward action on measures."""

    fn: Callable[[DiscreteMeasure, np.ndarray], np.ndarray]
    dim_in: int
    dim_out: int
    _pushed: dict[int, tuple[DiscreteMeasure, DiscreteMeasure]] = field(
        default_factory=dict, repr=False
    )

    def __call__(self, mu: DiscreteMeasure, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(mu, np.asarray(x, dtype=float).reshape(-1)), dtype=float)

    def push(self, mu: DiscreteMeasure) -> DiscreteMeasure:
        """Push-forward of ``mu`` under this map's point action (cached per measure)."""
        key = id(mu)
        hit = self._pushed.get(key)
        if hit is not None and hit[0] is mu:
            return hit[1]
        nu = push_forward(mu, lambda z: self.fn(mu, z))
        self._pushed[key] = (mu, nu)
        return nu

    @staticmethod
    def identity(dim: int) -> "InContextMap":
        return InContextMap(lambda mu, x: x, dim, dim)

    @staticmethod
    def from_gamma(params: AttentionParams) -> "InContextMap":
        d = params.dim
        return InContextMap(lambda mu, x: gamma(params, mu, x), d, d)

    @staticmethod
    def from_layer(att: AttentionParams, mlp_p: MlpParams) -> "InContextMap":
        d = att.dim
        return InContextMap(lambda mu, x: mlp(mlp_p, gamma(att, mu, x)), d, d)


def compose_diamond(g1: InContextMap, g2: InContextMap) -> InContextMap:
    """Diamond composition: (mu, x) -> g2(g1 push-forward of mu, g1(mu, x))."""
    if g1.dim_out != g2.dim_in:
        raise DimensionMismatch(
            f"cannot chain output dimension {g1.dim_out} into input dimension {g2.dim_in}"
        )

    def composed(mu: DiscreteMeasure, x: np.ndarray) -> np.ndarray:
        return g2(g1.push(mu), g1(mu, x))

    return InContextMap(composed, g1.dim_in, g2.dim_out)
