"""A W1-continuous, support-preserving measure map with no continuous pointwise form.

On [-3, 3] the map pushes a probability measure through a bump perturbation of
the identity whose oscillation frequency is the reciprocal of the mass the
measure places near the origin.  Two families of two-atom measures converging
to the same point mass then force pointwise values near +1/10 and -1/10 at
vanishing W1 distance, so no continuous in-context representation exists.  The
scanner tabulates this numerically, extracting the pointwise values from the
black-box map via the patched difference quotient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .derivative import MeasureMap, extract_g_detailed
from .errors import NotProbability, OutOfDomain
from .measures import Box, DiscreteMeasure, canonicalize, new_discrete, push_forward
from .transport import w1_1d

DOMAIN_HALF_WIDTH = 3.0
BUMP_AMPLITUDE = 0.1
KAPPA_FLOOR = 1e-14
PROBABILITY_TOL = 1e-10


def domain_box() -> Box:
    return Box(np.array([-DOMAIN_HALF_WIDTH]), np.array([DOMAIN_HALF_WIDTH]))


def r_map(a: float, x: float) -> float:
    """Identity outside (-1, 1); inside, add the oscillating bump.

    ``r_map(a, x) = x + (1/10) cos^2(pi x / 2) cos(a x)`` for |x| < 1.  The
    bump vanishes with its derivative at x = +-1, so the map is C^1 on the
    whole interval and fixes everything with |x| >= 1.
    """
    if a < 0.0:
        raise OutOfDomain(f"frequency parameter must be nonnegative, got {a}")
    if abs(x) > DOMAIN_HALF_WIDTH:
        raise OutOfDomain(f"point {x} outside [-3, 3]")
    if abs(x) >= 1.0:
        return float(x)
    c = math.cos(0.5 * math.pi * x)
    return float(x + BUMP_AMPLITUDE * c * c * math.cos(a * x))


def _near_origin_weight(x: float) -> float:
    ax = abs(x)
    if ax < 1.0:
        return 1.0
    if ax <= 2.0:
        return 2.0 - ax
    return 0.0


def kappa(mu: DiscreteMeasure) -> float:
    """Mass near the origin: atoms weighted 1 inside (-1, 1), tapering to 0 at |x| = 2."""
    if mu.dim != 1:
        raise OutOfDomain(f"defined in dimension one, got {mu.dim}")
    if np.any(np.abs(mu.points[:, 0]) > DOMAIN_HALF_WIDTH):
        raise OutOfDomain("support leaves [-3, 3]")
    return float(
        np.sum(mu.weights * np.array([_near_origin_weight(x) for x in mu.points[:, 0]]))
    )


def frequency(mu: DiscreteMeasure) -> float:
    """1/kappa(mu) when the near-origin mass is positive, else 0."""
    k = kappa(mu)
    return 1.0 / k if k > KAPPA_FLOOR else 0.0


def f_counter(mu: DiscreteMeasure) -> DiscreteMeasure:
    """Push the probability measure through the bump map at its own frequency."""
    if abs(mu.total_mass - 1.0) > PROBABILITY_TOL:
        raise NotProbability(f"total mass {mu.total_mass!r} is not 1")
    a = frequency(mu)
    return push_forward(mu, lambda p: np.array([r_map(a, float(p[0]))]))


def f_counter_extended(mu: DiscreteMeasure) -> DiscreteMeasure:
    """Mass-homogeneous extension to positive measures.

    The frequency is read off the normalized measure and the weights are
    carried through unchanged, so the extension restricts to the probability
    map and stays support preserving.  Derivative probes, which inject a small
    extra mass, evaluate through this extension.
    """
    a = frequency(mu.normalized())
    return push_forward(mu, lambda p: np.array([r_map(a, float(p[0]))]))


def counter_map() -> MeasureMap:
    """The counterexample as a black-box measure map (output dimension one)."""
    return MeasureMap(f_counter_extended, 1)


def two_atom_measure(eps: float) -> DiscreteMeasure:
    """(1 - eps) delta_2 + eps delta_sqrt(eps) on [-3, 3]."""
    if not 0.0 < eps < 1.0:
        raise OutOfDomain(f"eps must lie in (0, 1), got {eps}")
    return canonicalize(
        new_discrete([[2.0], [math.sqrt(eps)]], [1.0 - eps, eps], domain_box())
    )


@dataclass(frozen=True)
class ScanRow:
    """One scanned eps: W1 distance to the limit plus closed-form and extracted values."""

    family: str
    m: int
    eps: float
    w1_to_limit: float
    g_closed_form: float
    g_extracted: float


def _family_eps(family: str, m: int) -> float:
    if family == "limsup":
        return 1.0 / (2.0 * math.pi * m) ** 2
    if family == "liminf":
        return 1.0 / ((2.0 * m + 1.0) * math.pi) ** 2
    raise OutOfDomain(f"unknown family {family!r}")


def discontinuity_scan(m_max: int, eps_fd: float | None = None) -> list[ScanRow]:
    """Tabulate the two eps-families for m = 2..m_max.

    For each eps: the W1 distance from the two-atom measure to delta_2, the
    closed-form pointwise value at sqrt(eps), and the value recovered from the
    black box by the difference-quotient extractor.  The limsup family picks
    eps with cos(1/sqrt(eps)) = +1, the liminf family -1; the finite-difference
    mass defaults to min(1e-6, eps^{3/2}/20) so the probe never detunes the
    oscillation past the patch check.
    """
    if m_max < 2:
        raise OutOfDomain("scan needs m_max >= 2")
    f = counter_map()
    delta2 = new_discrete([[2.0]], [1.0], domain_box())
    rows = []
    for family in ("limsup", "liminf"):
        for m in range(2, m_max + 1):
            eps = _family_eps(family, m)
            mu_eps = two_atom_measure(eps)
            x = math.sqrt(eps)
            fd = eps_fd if eps_fd is not None else min(1e-6, eps**1.5 / 20.0)
            extracted, _ = extract_g_detailed(f, mu_eps, np.array([x]), fd)
            rows.append(
                ScanRow(
                    family=family,
                    m=m,
                    eps=eps,
                    w1_to_limit=w1_1d(mu_eps, delta2),
                    g_closed_form=r_map(1.0 / eps, x),
                    g_extracted=float(extracted[0]),
                )
            )
    return rows
