"""Ordered metric spaces and altering-distance control functions.

Everything downstream works on a set carrying both a metric and a partial
order; contraction hypotheses are stated through altering-distance
functions (continuous, non-decreasing, zero exactly at zero).  This module
holds the space description, the altering-distance family, and
finite-sample audits of the axioms.

The audits are sampling based.  A reported violation is a concrete,
re-checkable counterexample; a clean report means no violation was found
at the sampled points, nothing stronger.  Completeness of the metric is
assumed throughout the package and is not observable from finitely many
samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

# Absolute slack used by every axiom audit.  Values are expected to be of
# order one; callers working at other scales should rescale their metric.
AXIOM_TOL = 1e-12


class SamplerError(RuntimeError):
    """A space's sampler failed to produce a point."""


@dataclass(frozen=True)
class Violation:
    """One concrete counterexample found by a checker.

    prop is a short property name, witness holds the points and values
    involved, margin quantifies how badly the property failed (larger is
    worse; 0.0 marks a boundary case such as an output that is exactly
    zero where a positive value is required).
    """

    prop: str
    witness: tuple
    margin: float


@dataclass
class ValidationReport:
    """Outcome of a sampling audit.

    checked counts the individual property evaluations that ran, skipped
    counts probes that could not be evaluated (incomparable pairs, for
    instance).  inconclusive is set when nothing at all could be checked,
    in which case passed being True carries no information.
    """

    violations: list
    checked: int = 0
    skipped: int = 0
    inconclusive: bool = False
    passed: bool = field(init=False)

    def __post_init__(self) -> None:
        self.passed = not self.violations

    def worst(self) -> Optional[Violation]:
        if not self.violations:
            return None
        return max(self.violations, key=lambda v: v.margin)


@dataclass
class OrderedMetricSpace:
    """A set with a metric and a partial order, described by callables.

    distance(a, b) returns a float.  leq(a, b) returns True when a <= b,
    False when the pair is comparable only the other way around, and None
    when the points are incomparable; incomparable pairs are ordinary in a
    partial order and are counted as skipped, never as failed.  sampler(rng)
    draws one point and feeds the sampling audits.  order_defect(a, b), if
    supplied, quantifies how far a <= b is from holding (0.0 when it holds);
    the iteration layer uses it to tolerate float-noise boundary cases.
    """

    distance: Callable[[Any, Any], float]
    leq: Callable[[Any, Any], Optional[bool]]
    sampler: Callable[[Any], Any]
    name: str = "space"
    order_defect: Optional[Callable[[Any, Any], float]] = None


def real_line_space(lo: float = -10.0, hi: float = 10.0) -> OrderedMetricSpace:
    """The reals sampled from [lo, hi], absolute-value metric, usual order."""
    if not hi > lo:
        raise ValueError("need hi > lo")
    return OrderedMetricSpace(
        distance=lambda a, b: abs(a - b),
        leq=lambda a, b: bool(a <= b),
        sampler=lambda rng: float(rng.uniform(lo, hi)),
        name=f"reals[{lo:g},{hi:g}]",
        order_defect=lambda a, b: max(0.0, a - b),
    )


@dataclass(frozen=True)
class AlteringDistance:
    """Control function for contraction bounds.

    A valid instance is continuous, non-decreasing, and vanishes exactly at
    zero.  Validity is not enforced at construction; run
    validate_altering_distance to audit a candidate on a grid.
    """

    fn: Callable[[float], float]
    name: str

    def __call__(self, t: float) -> float:
        return float(self.fn(t))


SQUARE = AlteringDistance(lambda t: t * t, "square")

# t^2 - ln(1 + t^2); derivative 2t^3/(1+t^2) >= 0, so non-decreasing, and
# it vanishes only at 0.  log1p keeps small arguments accurate.
SQUARE_MINUS_LOG = AlteringDistance(
    lambda t: t * t - math.log1p(t * t), "square_minus_log"
)

IDENTITY = AlteringDistance(lambda t: float(t), "identity")

# Deliberately invalid: positive arguments map to zero.  Kept as a built-in
# so the validator has a stock counterexample to demonstrate on.
ZERO = AlteringDistance(lambda t: 0.0, "zero")


def scaled(c: float) -> AlteringDistance:
    """c * t for c > 0."""
    if not c > 0:
        raise ValueError("scale must be positive")
    return AlteringDistance(lambda t: c * t, f"scaled[{c:g}]")


BUILTIN_ALTERING = {
    "square": SQUARE,
    "square_minus_log": SQUARE_MINUS_LOG,
    "identity": IDENTITY,
    "zero": ZERO,
}


def validate_altering_distance(f, grid) -> ValidationReport:
    """Audit an altering-distance candidate on a grid of arguments.

    The grid must be one dimensional with at least two points, sorted
    ascending, nonnegative, and start at 0 (the anchor for the
    vanish-at-zero axiom).  Flags non-finite outputs, f(0) != 0,
    nonpositive outputs at positive arguments, and every pair of grid
    points on which the function decreases by more than AXIOM_TOL.
    """
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < 2:
        raise ValueError("grid must be a 1-d array with at least 2 points")
    if np.any(np.diff(g) < 0):
        raise ValueError("grid must be sorted ascending")
    if g[0] < 0:
        raise ValueError("grid values must be nonnegative")
    if g[0] != 0.0:
        raise ValueError("grid must start at 0")

    values = np.array([float(f(t)) for t in g])
    viols: list = []

    finite = np.isfinite(values)
    for i in np.flatnonzero(~finite):
        viols.append(
            Violation("non-finite output", (float(g[i]), float(values[i])), math.inf)
        )

    if finite[0] and values[0] != 0.0:
        viols.append(
            Violation(
                "zero input maps to nonzero", (0.0, float(values[0])), abs(float(values[0]))
            )
        )
    for i in range(1, g.size):
        if g[i] > 0 and finite[i] and values[i] <= 0.0:
            viols.append(
                Violation(
                    "nonpositive output at positive input",
                    (float(g[i]), float(values[i])),
                    max(0.0, -float(values[i])),
                )
            )

    i_idx, j_idx = np.triu_indices(g.size, k=1)
    drop = values[i_idx] - values[j_idx]
    with np.errstate(invalid="ignore"):
        bad = np.isfinite(drop) & (drop > AXIOM_TOL)
    for i, j in zip(i_idx[bad], j_idx[bad]):
        viols.append(
            Violation(
                "not non-decreasing",
                (float(g[i]), float(g[j]), float(values[i]), float(values[j])),
                float(values[i] - values[j]),
            )
        )

    return ValidationReport(viols, checked=int(g.size))


def oscillation_defect(f, lo: float, hi: float, levels: int = 7, base: int = 16) -> float:
    """Largest adjacent-sample jump of f at the finest of several dyadic
    refinements of [lo, hi].

    For a continuous f this shrinks as the mesh refines; a jump
    discontinuity keeps it pinned near the jump height.  This is an
    estimate from finitely many samples, not a proof of continuity.
    """
    if not hi > lo:
        raise ValueError("need hi > lo")
    if levels < 1 or base < 2:
        raise ValueError("need levels >= 1 and base >= 2")
    gap = math.inf
    for k in range(levels):
        n = base * (2 ** k)
        ts = np.linspace(lo, hi, n + 1)
        ys = np.array([float(f(t)) for t in ts])
        gap = float(np.max(np.abs(np.diff(ys))))
    return gap


def check_metric_order_axioms(space: OrderedMetricSpace, sample_count: int = 48,
                              seed: int = 0) -> ValidationReport:
    """Probe metric and partial-order axioms on points drawn from the space.

    Checks zero self-distance, symmetry, nonnegativity, the triangle
    inequality, order reflexivity, order transitivity, and antisymmetry
    against the metric (mutually comparable points must be at distance 0).
    Deterministic for a given seed.  Needs at least three effectively
    distinct sampled points; otherwise the report is inconclusive.
    """
    if sample_count < 3:
        raise ValueError("sample_count must be at least 3")
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(sample_count):
        try:
            pts.append(space.sampler(rng))
        except Exception as exc:
            raise SamplerError(f"sampler for {space.name!r} failed: {exc}") from exc

    n = len(pts)
    D = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            D[i, j] = float(space.distance(pts[i], pts[j]))

    finite_D = np.where(np.isfinite(D), D, 0.0)
    kept: list = []
    for i in range(n):
        if all(abs(finite_D[i, j]) > AXIOM_TOL for j in kept):
            kept.append(i)
    if len(kept) < 3:
        return ValidationReport([], checked=0, skipped=n, inconclusive=True)

    viols: list = []
    for i, j in np.argwhere(~np.isfinite(D)):
        viols.append(
            Violation("non-finite distance", (pts[i], pts[j], float(D[i, j])), math.inf)
        )
    for i in range(n):
        if np.isfinite(D[i, i]) and abs(D[i, i]) > AXIOM_TOL:
            viols.append(
                Violation("nonzero self-distance", (pts[i], float(D[i, i])), abs(float(D[i, i])))
            )
    asym = np.abs(D - D.T)
    with np.errstate(invalid="ignore"):
        asym_bad = np.triu(asym > AXIOM_TOL, k=1)
    for i, j in np.argwhere(asym_bad):
        viols.append(
            Violation(
                "asymmetric distance",
                (pts[i], pts[j], float(D[i, j]), float(D[j, i])),
                float(asym[i, j]),
            )
        )
    with np.errstate(invalid="ignore"):
        neg = D < -AXIOM_TOL
    for i, j in np.argwhere(neg):
        viols.append(
            Violation("negative distance", (pts[i], pts[j], float(D[i, j])), float(-D[i, j]))
        )

    # excess[i, j, k] = d(i, j) - d(i, k) - d(k, j); positive means the
    # triangle inequality failed through midpoint k.
    excess = D[:, :, None] - D[:, None, :] - D.T[None, :, :]
    with np.errstate(invalid="ignore"):
        tri_bad = np.argwhere(excess > AXIOM_TOL)
    for i, j, k in tri_bad:
        viols.append(
            Violation(
                "triangle inequality",
                (pts[i], pts[j], pts[k], float(excess[i, j, k])),
                float(excess[i, j, k]),
            )
        )

    L = np.empty((n, n), dtype=int)
    for i in range(n):
        for j in range(n):
            r = space.leq(pts[i], pts[j])
            L[i, j] = -1 if r is None else (1 if r else 0)

    for i in range(n):
        if L[i, i] != 1:
            viols.append(Violation("order not reflexive", (pts[i],), 1.0))

    B = L == 1
    both = np.triu(B & B.T, k=1)
    for i, j in np.argwhere(both):
        if np.isfinite(D[i, j]) and D[i, j] > AXIOM_TOL:
            viols.append(
                Violation(
                    "antisymmetry violated", (pts[i], pts[j], float(D[i, j])), float(D[i, j])
                )
            )

    reach = (B.astype(int) @ B.astype(int)) > 0
    for i, k in np.argwhere(reach & ~B):
        j = int(np.argmax(B[i] & B[:, k]))
        viols.append(Violation("order not transitive", (pts[i], pts[j], pts[k]), 1.0))

    return ValidationReport(viols, checked=n)
