"""Coupled two-argument maps with tracking maps, and their hypothesis audits.

A coupled problem bundles a two-argument map F with two one-argument
tracking maps G and S on the same ordered metric space.  The object of
interest is a coupled coincidence pair: points (a, b) with
G(a) = F(a, b) and G(b) = F(b, a), reached by interleaving G-images and
S-images of a pair of sequences (see the iteration module).

The checkers in this module sample three hypotheses that make that
iteration converge: mixed monotonicity of F relative to (G, S), an
altering-distance contraction bound on order-comparable tuples, and
commutation of the tracking maps with F.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from .order_metric import (
    AXIOM_TOL,
    AlteringDistance,
    OrderedMetricSpace,
    ValidationReport,
    Violation,
)


class PreimageError(RuntimeError):
    """A preimage selector could not produce a point mapping to the target."""

    def __init__(self, message: str, target: Any = None):
        super().__init__(message)
        self.target = target


def identity_preimage(value):
    return value


def tabulated_preimage(g, grid) -> Callable[[float], float]:
    """Preimage selector for a scalar monotone map, by inverse interpolation.

    g is sampled once on the grid; the selector inverts by interpolating the
    sampled graph.  Targets outside the sampled range raise PreimageError
    carrying the unreachable target.  Accuracy is limited by the grid
    resolution, so use a grid fine enough for the tolerance you iterate at.
    """
    xs = np.asarray(grid, dtype=float)
    if xs.ndim != 1 or xs.size < 2:
        raise ValueError("grid must be a 1-d array with at least 2 points")
    ys = np.array([float(g(x)) for x in xs])
    if not np.all(np.isfinite(ys)):
        raise ValueError("g produced non-finite values on the grid")
    order = np.argsort(ys, kind="stable")
    ys_sorted = ys[order]
    xs_sorted = xs[order]
    lo, hi = float(ys_sorted[0]), float(ys_sorted[-1])
    span_slack = 1e-9 * max(1.0, abs(lo), abs(hi))

    def select(target: float) -> float:
        t = float(target)
        if not (lo - span_slack <= t <= hi + span_slack):
            raise PreimageError(
                f"target {t!r} is outside the tabulated range [{lo!r}, {hi!r}]",
                target=target,
            )
        return float(np.interp(t, ys_sorted, xs_sorted))

    return select


@dataclass
class CoupledProblem:
    """A two-argument map F with tracking maps G and S on one space.

    F(x, y) must land in the same space as its arguments.  G_preimage and
    S_preimage select a point mapping to a given target under G or S; they
    default to the identity, which is correct when G and S are the
    identity.  tuple_sampler(rng), if given, draws (x, y, u, v) tuples for
    the sampling checkers; the default draws four independent points, which
    may rarely be order comparable in strongly partial orders, so supply a
    sampler that produces comparable tuples when checking such spaces.
    """

    space: OrderedMetricSpace
    F: Callable[[Any, Any], Any]
    G: Callable[[Any], Any] = identity_preimage
    S: Callable[[Any], Any] = identity_preimage
    G_preimage: Callable[[Any], Any] = identity_preimage
    S_preimage: Callable[[Any], Any] = identity_preimage
    tuple_sampler: Optional[Callable[[Any], tuple]] = None

    def draw_tuple(self, rng) -> tuple:
        if self.tuple_sampler is not None:
            return tuple(self.tuple_sampler(rng))
        s = self.space.sampler
        return (s(rng), s(rng), s(rng), s(rng))


def check_mixed_GS_monotone(problem: CoupledProblem, sample_count: int = 200,
                            seed: int = 0) -> ValidationReport:
    """Sample the mixed monotonicity of F relative to (G, S).

    For each drawn tuple (x, y, u, v) the first argument is probed at the
    fixed second argument y: whenever G(x) and S(u) are comparable, F must
    move the same way in its first slot.  The second argument is probed at
    the fixed first argument x with the pair (v, y): whenever G(v) and S(y)
    are comparable, F must move the opposite way in its second slot.
    Incomparable probes are counted as skipped; the report is inconclusive
    when nothing could be checked.
    """
    rng = np.random.default_rng(seed)
    d = problem.space.distance
    leq = problem.space.leq
    viols: list = []
    checked = 0
    skipped = 0

    for _ in range(sample_count):
        x, y, u, v = problem.draw_tuple(rng)

        r1 = leq(problem.G(x), problem.S(u))
        if r1 is None:
            skipped += 1
        else:
            checked += 1
            fx = problem.F(x, y)
            fu = problem.F(u, y)
            if r1 is True:
                if leq(fx, fu) is not True:
                    viols.append(
                        Violation(
                            "first argument: G(x1) <= S(x2) must give F(x1, y) <= F(x2, y)",
                            (x, u, y),
                            float(d(fx, fu)),
                        )
                    )
            else:
                if leq(fu, fx) is not True:
                    viols.append(
                        Violation(
                            "first argument: S(x2) <= G(x1) must give F(x2, y) <= F(x1, y)",
                            (x, u, y),
                            float(d(fx, fu)),
                        )
                    )

        r2 = leq(problem.G(v), problem.S(y))
        if r2 is None:
            skipped += 1
        else:
            checked += 1
            fy = problem.F(x, y)
            fv = problem.F(x, v)
            if r2 is True:
                # second slot reverses order: y1 = v below y2 = y pushes
                # F(x, y) below F(x, v)
                if leq(fy, fv) is not True:
                    viols.append(
                        Violation(
                            "second argument: G(y1) <= S(y2) must give F(x, y2) <= F(x, y1)",
                            (v, y, x),
                            float(d(fy, fv)),
                        )
                    )
            else:
                if leq(fv, fy) is not True:
                    viols.append(
                        Violation(
                            "second argument: S(y2) <= G(y1) must give F(x, y1) <= F(x, y2)",
                            (v, y, x),
                            float(d(fy, fv)),
                        )
                    )

    return ValidationReport(viols, checked=checked, skipped=skipped,
                            inconclusive=(checked == 0))


@dataclass(frozen=True)
class ContractionWitness:
    """One evaluated contraction instance.

    points is the sampled (x, y, u, v); lhs and rhs are the two sides of
    the contraction inequality; margin = rhs - lhs, so a negative margin is
    a violation.  index is the draw number, kept as a deterministic
    tie-break in sorted output.
    """

    points: tuple
    lhs: float
    rhs: float
    margin: float
    index: int


@dataclass
class ContractionReport:
    """All eligible contraction evaluations, worst margin first.

    eligible counts the tuples whose paired images were order comparable
    and were therefore evaluated; skipped counts the rest.  A bare list of
    violations could not distinguish a clean run from one that never found
    an eligible tuple, hence the inconclusive flag.
    """

    witnesses: list
    eligible: int
    skipped: int
    inconclusive: bool

    @property
    def violations(self) -> list:
        return [w for w in self.witnesses if w.margin < -AXIOM_TOL]

    @property
    def passed(self) -> bool:
        return not self.violations


def check_contraction(problem: CoupledProblem, phi: AlteringDistance,
                      psi: AlteringDistance, sample_count: int = 200,
                      seed: int = 0) -> ContractionReport:
    """Sample the altering-distance contraction bound.

    A drawn tuple (x, y, u, v) is eligible when G(x) is comparable with
    S(u) and S(y) is comparable with G(v) (either direction; the bound is
    symmetric in the distance).  For eligible tuples, with
    m = max(d(G(x), S(u)), d(S(y), G(v))), the inequality
    phi(d(F(x, y), F(u, v))) <= phi(m) - psi(m) is evaluated and recorded.
    Non-finite phi or psi outputs raise ValueError since a broken control
    function would poison every margin.
    """
    rng = np.random.default_rng(seed)
    d = problem.space.distance
    leq = problem.space.leq
    witnesses: list = []
    eligible = 0
    skipped = 0

    for idx in range(sample_count):
        x, y, u, v = problem.draw_tuple(rng)
        gx, su = problem.G(x), problem.S(u)
        sy, gv = problem.S(y), problem.G(v)
        if leq(gx, su) is None or leq(sy, gv) is None:
            skipped += 1
            continue
        eligible += 1
        m = max(float(d(gx, su)), float(d(sy, gv)))
        lhs = phi(float(d(problem.F(x, y), problem.F(u, v))))
        rhs = phi(m) - psi(m)
        if not (np.isfinite(lhs) and np.isfinite(rhs)):
            raise ValueError(
                f"control functions produced non-finite values at m={m!r}: "
                f"lhs={lhs!r}, rhs={rhs!r}"
            )
        witnesses.append(
            ContractionWitness(points=(x, y, u, v), lhs=lhs, rhs=rhs,
                               margin=rhs - lhs, index=idx)
        )

    witnesses.sort(key=lambda w: (w.margin, w.index))
    return ContractionReport(witnesses=witnesses, eligible=eligible,
                             skipped=skipped, inconclusive=(eligible == 0))


def check_commutation(problem: CoupledProblem, sample_count: int = 100,
                      seed: int = 0, tol: float = AXIOM_TOL) -> ValidationReport:
    """Sample whether the tracking maps commute with F.

    For drawn pairs (x, y) this compares G(F(x, y)) with F(G(x), G(y)) and
    S(F(x, y)) with F(S(x), S(y)); gaps beyond tol become violations.
    """
    rng = np.random.default_rng(seed)
    d = problem.space.distance
    s = problem.space.sampler
    viols: list = []
    checked = 0

    for _ in range(sample_count):
        x, y = s(rng), s(rng)
        fxy = problem.F(x, y)
        for label, tracking in (("G commutation", problem.G), ("S commutation", problem.S)):
            checked += 1
            gap = float(d(tracking(fxy), problem.F(tracking(x), tracking(y))))
            if gap > tol:
                viols.append(Violation(label, (x, y, gap), gap))

    return ValidationReport(viols, checked=checked)
