"""Interacting-particle flows driven by a measure-dependent velocity field.

The coupled system is ``dx_i/dt = v(t, mu_t, x_i)`` with ``mu_t`` the current
empirical measure of the particles themselves, over the fixed horizon [0, 1].
Explicit Euler realizes a depth-T residual stack whose layers carry velocity
scale 1/T; classical RK4 provides the reference solution for convergence
studies.  The characteristic map transports an arbitrary query point along the
flow generated by the particles, with the query acting as a passive tracer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .attention import AttentionParams, MlpParams, velocity
from .errors import NonFiniteState, TooFewTimePoints
from .measures import Box, DiscreteMeasure, canonicalize
from .transport import w1_matching

VelocityFn = Callable[[float, DiscreteMeasure, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class VelocityField:
    """Velocity ``(t, mu, x) -> dx/dt`` with a smoothness tag."""

    fn: VelocityFn
    smoothness: str = "c1"

    def __call__(self, t: float, mu: DiscreteMeasure, x: np.ndarray) -> np.ndarray:
        return np.asarray(self.fn(t, mu, x), dtype=float).reshape(-1)

    @staticmethod
    def from_layer(att: AttentionParams, mlp_p: MlpParams) -> "VelocityField":
        """Time-independent field given by one attention+MLP layer displacement."""
        return VelocityField(lambda t, mu, x: velocity(att, mlp_p, mu, x))

    @staticmethod
    def from_stack(stack) -> "VelocityField":
        """Piecewise-constant-in-time field: layer floor(t * depth) drives [0, 1]."""
        layers = stack.layers
        if not layers:
            return VelocityField(lambda t, mu, x: np.zeros_like(np.asarray(x, dtype=float)))

        def fn(t: float, mu: DiscreteMeasure, x: np.ndarray) -> np.ndarray:
            idx = min(int(t * len(layers)), len(layers) - 1)
            layer = layers[idx]
            return layer.scale * velocity(layer.attention, layer.mlp, mu, x)

        return VelocityField(fn)


@dataclass(frozen=True)
class Trajectory:
    """Time grid plus one measure per time: fixed weights, moving atoms."""

    times: np.ndarray
    states: tuple[DiscreteMeasure, ...]

    @property
    def final(self) -> DiscreteMeasure:
        return self.states[-1]

    def positions(self) -> np.ndarray:
        """Stacked atom positions, shape (n_times, n_atoms, dim)."""
        return np.stack([s.points for s in self.states])


def _state_measure(points: np.ndarray, weights: np.ndarray, box: Box) -> DiscreteMeasure:
    if not np.isfinite(points).all():
        raise NonFiniteState("particle positions became non-finite")
    state_box = box if box.contains(points) else box.hull(points)
    pts = np.array(points)
    pts.flags.writeable = False
    return DiscreteMeasure(pts, weights, state_box, False)


def _eval_field(v: VelocityField, t: float, mu: DiscreteMeasure, points: np.ndarray) -> np.ndarray:
    return np.stack([v(t, mu, points[i]) for i in range(points.shape[0])])


def euler_flow(v: VelocityField, mu0: DiscreteMeasure, T: int) -> Trajectory:
    """T explicit Euler steps of size 1/T on [0, 1].

    All atoms within a step advance from the same frozen measure.  Weights and
    atom count never change; the initial measure is canonicalized once.
    """
    if T < 1:
        raise TooFewTimePoints("need at least one Euler step")
    mu_c = canonicalize(mu0)
    w = mu_c.weights
    box = mu_c.box
    dt = 1.0 / T
    x = np.array(mu_c.points)
    times = [0.0]
    states = [_state_measure(x, w, box)]
    for step in range(T):
        t = step * dt
        frozen = states[-1]
        x = x + dt * _eval_field(v, t, frozen, x)
        times.append((step + 1) * dt)
        states.append(_state_measure(x, w, box))
    return Trajectory(np.array(times), tuple(states))


def _rk4_advance(
    v: VelocityField,
    x: np.ndarray,
    w: np.ndarray,
    box: Box,
    t: float,
    h: float,
    tracer: np.ndarray | None,
) -> tuple[np.ndarray, np.ndarray | None]:
    """One RK4 step of the particle system, optionally dragging a passive tracer.

    Stage measures are rebuilt from the stage particle positions; the tracer
    sees those measures but never enters them.
    """

    def stage(ts: float, xs: np.ndarray, ys: np.ndarray | None):
        mu_s = _state_measure(xs, w, box)
        kx = _eval_field(v, ts, mu_s, xs)
        ky = v(ts, mu_s, ys) if ys is not None else None
        return kx, ky

    y = tracer
    k1x, k1y = stage(t, x, y)
    k2x, k2y = stage(t + h / 2, x + (h / 2) * k1x, None if y is None else y + (h / 2) * k1y)
    k3x, k3y = stage(t + h / 2, x + (h / 2) * k2x, None if y is None else y + (h / 2) * k2y)
    k4x, k4y = stage(t + h, x + h * k3x, None if y is None else y + h * k3y)
    x_next = x + (h / 6) * (k1x + 2 * k2x + 2 * k3x + k4x)
    y_next = None if y is None else y + (h / 6) * (k1y + 2 * k2y + 2 * k3y + k4y)
    return x_next, y_next


def rk4_flow(v: VelocityField, mu0: DiscreteMeasure, steps: int) -> Trajectory:
    """Classical 4-stage Runge-Kutta on the coupled particle system over [0, 1]."""
    if steps < 1:
        raise TooFewTimePoints("need at least one RK4 step")
    mu_c = canonicalize(mu0)
    w = mu_c.weights
    box = mu_c.box
    h = 1.0 / steps
    x = np.array(mu_c.points)
    times = [0.0]
    states = [_state_measure(x, w, box)]
    for step in range(steps):
        x, _ = _rk4_advance(v, x, w, box, step * h, h, None)
        times.append((step + 1) * h)
        states.append(_state_measure(x, w, box))
    return Trajectory(np.array(times), tuple(states))


def characteristic_map(
    v: VelocityField,
    mu0: DiscreteMeasure,
    x: np.ndarray,
    t: float,
    steps: int = 256,
) -> np.ndarray:
    """Transport the query point x along the flow of ``mu0`` up to time t.

    The particle system is integrated with RK4 while the query rides along as
    a passive tracer evaluated against the same stage measures, so a query
    placed on an atom reproduces that atom's trajectory exactly.  ``steps``
    is the step count for the full unit horizon; integration to time t uses
    round(steps * t) steps of equal size.
    """
    if not 0.0 <= t <= 1.0:
        raise TooFewTimePoints(f"time {t} outside [0, 1]")
    y = np.array(np.asarray(x, dtype=float).reshape(-1))
    if t == 0.0:
        return y
    mu_c = canonicalize(mu0)
    w = mu_c.weights
    box = mu_c.box
    n = max(1, int(round(steps * t)))
    h = t / n
    xs = np.array(mu_c.points)
    for step in range(n):
        xs, y = _rk4_advance(v, xs, w, box, step * h, h, y)
    if not np.isfinite(y).all():
        raise NonFiniteState("characteristic became non-finite")
    return y


def weak_residual(traj: Trajectory, v: VelocityField, phi) -> float:
    """Max transport-identity residual over interior grid times.

    Compares the central difference of t -> <phi, mu_t> with
    <grad(phi) . v(t, mu_t, .), mu_t>.  ``phi`` must expose ``value`` and
    ``gradient``.
    """
    if len(traj.states) < 3:
        raise TooFewTimePoints("need at least three time points")
    pairings = [
        float(np.sum(s.weights * np.array([phi.value(p) for p in s.points])))
        for s in traj.states
    ]
    worst = 0.0
    for k in range(1, len(traj.states) - 1):
        dt2 = traj.times[k + 1] - traj.times[k - 1]
        lhs = (pairings[k + 1] - pairings[k - 1]) / dt2
        mu_k = traj.states[k]
        rhs = float(
            np.sum(
                mu_k.weights
                * np.array(
                    [
                        np.dot(phi.gradient(p), v(traj.times[k], mu_k, p))
                        for p in mu_k.points
                    ]
                )
            )
        )
        worst = max(worst, abs(lhs - rhs))
    return worst


def scaled_stack(att: AttentionParams, mlp_p: MlpParams, T: int):
    """Depth-T stack whose every layer applies 1/T of the base layer velocity."""
    from .deep_transformer import Layer, LayerStack

    layer = Layer(att, mlp_p, scale=1.0 / T)
    return LayerStack(tuple([layer] * T), att.dim)


def velocity_family(att: AttentionParams, mlp_p: MlpParams) -> Callable[[int], "LayerStack"]:
    """The map T -> depth-T stack with layer velocities scaled by 1/T."""
    return lambda T: scaled_stack(att, mlp_p, T)


def depth_limit_error(stack_family, mu0: DiscreteMeasure, T: int) -> float:
    """W1 gap between the depth-T scaled stack and the RK4 continuum reference.

    The base layer velocity is read off the depth-1 member of the family; the
    reference uses 4T RK4 steps of that velocity.
    """
    base = stack_family(1).layers[0]
    v = VelocityField.from_layer(base.attention, base.mlp)
    stack_final = _forward_measure(stack_family(T), mu0)
    ref_final = rk4_flow(v, mu0, 4 * T).final
    return w1_matching(stack_final, ref_final).cost


def _forward_measure(stack, mu0: DiscreteMeasure) -> DiscreteMeasure:
    from .deep_transformer import forward_measure

    return forward_measure(stack, mu0)
