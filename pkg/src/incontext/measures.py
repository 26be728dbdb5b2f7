"""Discrete positive measures on a compact box.

The carrier type is :class:`DiscreteMeasure`, a finite weighted sum of point
masses ``sum_i a_i * delta(x_i)`` with strictly positive weights, living inside
a declared ambient box.  Canonical form (atoms merged within a tolerance and
sorted lexicographically) gives every measure a unique representative, which is
what makes reductions over atoms reproducible bit for bit.

Alongside the carrier live the push-forward of a measure under a point map,
the minimal subset-sum gap of the weight vector, a seeded perturbation that
makes all disjoint subset sums distinct, and the identification between token
sequences and uniform empirical measures.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    EmptyMeasure,
    EmptySequence,
    ExhaustedRetries,
    LengthMismatch,
    MapUndefinedAtAtom,
    NonpositiveWeight,
    NotRationalGrid,
    PointOutsideBox,
    SupportTooLarge,
)

# Atoms closer than this (max norm) are treated as the same point.
MERGE_TOL = 1e-9

# Exhaustive subset-sum enumeration refuses beyond this support size.
GAP_SUPPORT_CAP = 20

_MAKE_DIF_TRIES = 64


@dataclass(frozen=True)
class Box:
    """Axis-aligned compact box [lo_1, hi_1] x ... x [lo_d, hi_d]."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self) -> None:
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.ndim != 1 or hi.ndim != 1 or lo.shape != hi.shape:
            raise LengthMismatch("box corners must be 1-d vectors of equal length")
        if not (np.isfinite(lo).all() and np.isfinite(hi).all()):
            raise PointOutsideBox("box corners must be finite")
        if np.any(lo > hi):
            raise PointOutsideBox("box lower corner exceeds upper corner")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    def contains(self, points: np.ndarray) -> bool:
        pts = np.atleast_2d(points)
        return bool(np.all(pts >= self.lo) and np.all(pts <= self.hi))

    def hull(self, points: np.ndarray) -> "Box":
        """Smallest box containing both self and the given points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return Box(np.minimum(self.lo, pts.min(axis=0)), np.maximum(self.hi, pts.max(axis=0)))

    def enlarged(self, margin: float) -> "Box":
        return Box(self.lo - margin, self.hi + margin)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Box):
            return NotImplemented
        return np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)


def default_box(dim: int) -> Box:
    """The default ambient box [-3, 3]^d."""
    return Box(np.full(dim, -3.0), np.full(dim, 3.0))


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Finite positive measure sum_i weights[i] * delta(points[i]).

    ``points`` has shape (n, d), ``weights`` shape (n,) with all entries > 0,
    and every point lies componentwise inside ``box``.  Instances are
    immutable; arrays are stored read-only.
    """

    points: np.ndarray
    weights: np.ndarray
    box: Box
    is_canonical: bool = field(default=False, compare=False, repr=False)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def atom(self, i: int) -> tuple[np.ndarray, float]:
        return self.points[i], float(self.weights[i])

    def normalized(self) -> "DiscreteMeasure":
        """Same atoms with weights scaled to total mass one."""
        w = self.weights / self.total_mass
        return _raw_measure(self.points, w, self.box, self.is_canonical)

    def scaled(self, s: float) -> "DiscreteMeasure":
        if s <= 0.0:
            raise NonpositiveWeight("scale factor must be positive")
        return _raw_measure(self.points, self.weights * s, self.box, self.is_canonical)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (
            np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
            and self.box == other.box
        )

    def __repr__(self) -> str:
        return f"DiscreteMeasure(n={self.n}, dim={self.dim}, mass={self.total_mass:.6g})"


@dataclass(frozen=True, eq=False)
class TokenSequence:
    """Ordered sequence of d-dimensional tokens (repeats allowed)."""

    tokens: np.ndarray
    box: Box

    @property
    def n(self) -> int:
        return self.tokens.shape[0]

    @property
    def dim(self) -> int:
        return self.tokens.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TokenSequence):
            return NotImplemented
        return np.array_equal(self.tokens, other.tokens) and self.box == other.box

    def __repr__(self) -> str:
        return f"TokenSequence(n={self.n}, dim={self.dim})"


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.flags.writeable = False
    return out


def _raw_measure(points: np.ndarray, weights: np.ndarray, box: Box, canonical: bool) -> DiscreteMeasure:
    """Internal constructor that skips validation (inputs already checked)."""
    return DiscreteMeasure(_freeze(points), _freeze(weights), box, canonical)


def new_discrete(
    points: Sequence[Sequence[float]] | np.ndarray,
    weights: Sequence[float] | np.ndarray,
    box: Box | None = None,
) -> DiscreteMeasure:
    """Validate and build a discrete measure.

    Raises LengthMismatch, NonpositiveWeight, PointOutsideBox or EmptyMeasure
    when the inputs violate the carrier invariants.  ``box`` defaults to
    [-3, 3]^d.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.asarray(weights, dtype=float).reshape(-1)
    if pts.shape[0] == 0:
        raise EmptyMeasure("a measure needs at least one atom")
    if pts.shape[0] != w.shape[0]:
        raise LengthMismatch(f"{pts.shape[0]} points vs {w.shape[0]} weights")
    if not np.isfinite(w).all() or np.any(w <= 0.0):
        raise NonpositiveWeight("weights must be finite and strictly positive")
    if not np.isfinite(pts).all():
        raise PointOutsideBox("points must be finite")
    if box is None:
        box = default_box(pts.shape[1])
    if box.dim != pts.shape[1]:
        raise LengthMismatch(f"box dimension {box.dim} vs point dimension {pts.shape[1]}")
    if not box.contains(pts):
        raise PointOutsideBox("some point lies outside the ambient box")
    return _raw_measure(pts, w, box, False)


def dirac(point: Sequence[float] | np.ndarray, mass: float = 1.0, box: Box | None = None) -> DiscreteMeasure:
    """Single point mass ``mass * delta(point)``."""
    return new_discrete(np.atleast_2d(np.asarray(point, dtype=float)), [mass], box)


def _lex_order(points: np.ndarray) -> np.ndarray:
    # lexicographic by coordinate 0, then 1, ... ; np.lexsort keys are last-major
    return np.lexsort(points.T[::-1])


def canonicalize(mu: DiscreteMeasure, tol: float = MERGE_TOL) -> DiscreteMeasure:
    """Merge atoms within ``tol`` (max norm) and sort lexicographically.

    Weights inside a merge group are summed in ascending order, so the result
    does not depend on the input atom order.  Idempotent.
    """
    if mu.is_canonical:
        return mu
    order = _lex_order(mu.points)
    pts = mu.points[order]
    w = mu.weights[order]
    rep_rows: list[int] = []
    group_weights: list[float] = []
    current: list[float] = []
    for i in range(pts.shape[0]):
        if rep_rows and np.max(np.abs(pts[i] - pts[rep_rows[-1]])) <= tol:
            current.append(w[i])
        else:
            if current:
                group_weights.append(float(np.sum(np.sort(current))))
            rep_rows.append(i)
            current = [w[i]]
    group_weights.append(float(np.sum(np.sort(current))))
    out = _raw_measure(pts[rep_rows], np.array(group_weights), mu.box, True)
    return out


def push_forward(mu: DiscreteMeasure, point_map: Callable[[np.ndarray], np.ndarray]) -> DiscreteMeasure:
    """Relocate every atom through ``point_map`` and canonicalize.

    The output box is the input box when the images stay inside it (and the
    dimension is unchanged); otherwise the smallest box containing the images
    (hulled with the input box when dimensions match).  Total mass is
    preserved up to merge-summation rounding.
    """
    images = []
    for i in range(mu.n):
        try:
            y = np.asarray(point_map(mu.points[i]), dtype=float).reshape(-1)
        except Exception as exc:  # noqa: BLE001 - map failure is a domain error
            raise MapUndefinedAtAtom(f"map failed at atom {i}: {exc}") from exc
        if not np.isfinite(y).all():
            raise MapUndefinedAtAtom(f"map returned a non-finite value at atom {i}")
        images.append(y)
    img = np.vstack(images)
    if img.shape[1] == mu.dim:
        box = mu.box if mu.box.contains(img) else mu.box.hull(img)
    else:
        box = Box(img.min(axis=0), img.max(axis=0))
    return canonicalize(_raw_measure(img, mu.weights, box, False))


def add_atom(mu: DiscreteMeasure, x: np.ndarray, mass: float) -> DiscreteMeasure:
    """Canonical form of ``mu + mass * delta(x)`` (merges with an existing atom
    when x is within the merge tolerance)."""
    if mass <= 0.0:
        raise NonpositiveWeight("added mass must be positive")
    x = np.asarray(x, dtype=float).reshape(1, -1)
    if x.shape[1] != mu.dim:
        raise LengthMismatch("atom dimension does not match the measure")
    box = mu.box if mu.box.contains(x) else mu.box.hull(x)
    pts = np.vstack([mu.points, x])
    w = np.concatenate([mu.weights, [mass]])
    return canonicalize(_raw_measure(pts, w, box, False))


# -- subset-sum gap -------------------------------------------------------------


def _half_signed_sums(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All signed subset sums of one index half.

    Returns (sums, has_pos, has_neg); entry 0 is the all-skip combination.
    """
    sums = np.zeros(1)
    has_pos = np.zeros(1, dtype=bool)
    has_neg = np.zeros(1, dtype=bool)
    for w in weights:
        sums = np.concatenate([sums, sums + w, sums - w])
        has_pos = np.concatenate([has_pos, np.ones_like(has_pos), has_pos])
        has_neg = np.concatenate([has_neg, has_neg, np.ones_like(has_neg)])
    return sums, has_pos, has_neg


def _min_abs_pair_sum(a: np.ndarray, b_sorted: np.ndarray) -> float:
    """min over (x, y) in a x b_sorted of |x + y| (either array may be empty)."""
    if a.size == 0 or b_sorted.size == 0:
        return np.inf
    idx = np.searchsorted(b_sorted, -a)
    best = np.inf
    for shift in (0, -1):
        j = idx + shift
        ok = (j >= 0) & (j < b_sorted.size)
        if np.any(ok):
            best = min(best, float(np.min(np.abs(a[ok] + b_sorted[j[ok]]))))
    return best


def _gap_both(mu: DiscreteMeasure, cap: int) -> tuple[float, float]:
    """(gap with the second index set allowed empty, gap with both nonempty).

    Meet-in-the-middle over signed subset sums; the second value is +inf when
    no pair of disjoint nonempty index sets exists (n = 1).
    """
    w = np.asarray(mu.weights, dtype=float)
    n = w.shape[0]
    if n > cap:
        raise SupportTooLarge(f"support size {n} exceeds enumeration cap {cap}")
    half = n // 2
    sa, pa, na = _half_signed_sums(w[:half])
    sb, pb, nb = _half_signed_sums(w[half:])

    zero_b = np.zeros(sb.size, dtype=bool)
    zero_b[0] = True
    b_all = np.sort(sb)
    b_nonzero_vec = np.sort(sb[~zero_b])
    b_has_pos = np.sort(sb[pb])
    b_has_neg = np.sort(sb[nb])
    b_both = np.sort(sb[pb & nb])

    a_zero_vec = np.zeros(sa.size, dtype=bool)
    a_zero_vec[0] = True

    # Any nonzero sign vector: all pairs except (zero vector, zero vector).
    gap_any = min(
        _min_abs_pair_sum(sa[~a_zero_vec], b_all),
        _min_abs_pair_sum(sa[a_zero_vec], b_nonzero_vec),
    )

    # Both signs present in the union.
    gap_strict = min(
        _min_abs_pair_sum(sa[pa & na], b_all),
        _min_abs_pair_sum(sa[pa & ~na], b_has_neg),
        _min_abs_pair_sum(sa[~pa & na], b_has_pos),
        _min_abs_pair_sum(sa[a_zero_vec], b_both),
    )
    return gap_any, gap_strict


def gap(mu: DiscreteMeasure, cap: int = GAP_SUPPORT_CAP) -> float:
    """Minimal |sum_J a_j - sum_K a_k| over disjoint index sets, J nonempty.

    K may be empty, so single-atom measures report their own weight.  Raises
    SupportTooLarge beyond ``cap`` atoms.
    """
    return _gap_both(mu, cap)[0]


def gap_strict(mu: DiscreteMeasure, cap: int = GAP_SUPPORT_CAP) -> float:
    """Same minimum restricted to both index sets nonempty (+inf when n = 1)."""
    return _gap_both(mu, cap)[1]


def is_dif(mu: DiscreteMeasure, cap: int = GAP_SUPPORT_CAP) -> bool:
    """Whether all sums over disjoint nonempty index subsets are distinct."""
    return _gap_both(mu, cap)[1] > 0.0


def make_dif(mu: DiscreteMeasure, eps: float, seed: int) -> DiscreteMeasure:
    """Perturb weights so all disjoint subset sums become distinct.

    Each weight moves by less than eps/n, the perturbed measure stays within
    extended-W1 distance eps of the canonical input, and the draw is
    deterministic given ``seed``.  Measures already having distinct subset
    sums are returned unchanged (canonicalized).
    """
    from .transport import w1_extended  # deferred: transport builds on measures

    if eps <= 0.0:
        raise NonpositiveWeight("eps must be positive")
    mu_c = canonicalize(mu)
    if is_dif(mu_c):
        return mu_c
    n = mu_c.n
    delta = min(eps / (2.0 * n), float(np.min(mu_c.weights)) / 2.0)
    rng = np.random.default_rng(seed)
    for _ in range(_MAKE_DIF_TRIES):
        eta = rng.uniform(-delta, delta, size=n)
        cand = _raw_measure(mu_c.points, mu_c.weights + eta, mu_c.box, True)
        if is_dif(cand) and w1_extended(mu_c, cand) < eps:
            return cand
    raise ExhaustedRetries(f"no valid perturbation found in {_MAKE_DIF_TRIES} draws")


# -- token sequences ---------------------------------------------------------------


def new_tokens(tokens: Sequence[Sequence[float]] | np.ndarray, box: Box | None = None) -> TokenSequence:
    toks = np.atleast_2d(np.asarray(tokens, dtype=float))
    if toks.shape[0] == 0:
        raise EmptySequence("a token sequence needs at least one token")
    if not np.isfinite(toks).all():
        raise PointOutsideBox("tokens must be finite")
    if box is None:
        box = default_box(toks.shape[1])
    if not box.contains(toks):
        raise PointOutsideBox("some token lies outside the declared box")
    return TokenSequence(_freeze(toks), box)


def iota(seq: TokenSequence) -> DiscreteMeasure:
    """Uniform empirical measure (1/n) sum_i delta(token_i), canonicalized.

    Repeated tokens merge into atoms of weight k/n.
    """
    if seq.n == 0:
        raise EmptySequence("cannot identify an empty sequence with a measure")
    w = np.full(seq.n, 1.0 / seq.n)
    return canonicalize(_raw_measure(seq.tokens, w, seq.box, False))


def iota_inv(mu: DiscreteMeasure, n: int, tol: float = 1e-9) -> TokenSequence:
    """Canonical token sequence of length n identified with ``mu``.

    Requires every weight to be an integer multiple of 1/n (within ``tol`` on
    the multiplicity) with multiplicities summing to n; otherwise raises
    NotRationalGrid.  Output tokens are sorted lexicographically.
    """
    mu_c = canonicalize(mu)
    counts = mu_c.weights * n
    rounded = np.rint(counts)
    if np.any(np.abs(counts - rounded) > tol) or np.any(rounded < 1):
        raise NotRationalGrid(f"weights are not multiples of 1/{n}")
    ks = rounded.astype(int)
    if int(ks.sum()) != n:
        raise NotRationalGrid(f"multiplicities sum to {int(ks.sum())}, expected {n}")
    tokens = np.repeat(mu_c.points, ks, axis=0)
    return TokenSequence(_freeze(tokens), mu_c.box)
