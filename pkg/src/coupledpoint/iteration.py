"""Interleaved pair iteration toward a coupled coincidence point.

Two pairs of sequences are advanced in lockstep: an even-indexed chain
whose images live under the tracking map G and an odd-indexed chain whose
images live under S.  Each step applies F to the current pair and pulls
the result back through the matching preimage selector, so the G-images
and S-images interleave into one monotone chain per component (rising for
the first component, falling for the second).

Progress is measured by M, the larger of the two distances between the
current G-image and S-image of each component.  Under the contraction
hypotheses M is non-increasing and the run certifies once both M and the
coincidence residuals fall below the tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

from .coupled_core import CoupledProblem, PreimageError

# Order checks along the chains accept this much quantitative defect (when
# the space can measure one) before recording a violation; float rounding
# in preimage selectors routinely produces defects near machine epsilon.
CHAIN_SLACK = 1e-12

# A run whose M grows past DIVERGENCE_FACTOR times its starting value is
# cut off rather than left to overflow.
DIVERGENCE_FACTOR = 1e6


class InitOrderError(ValueError):
    """The starting points do not satisfy the required order chains."""


@dataclass(slots=True)
class IterationState:
    """One snapshot of the interleaved iteration.

    x_even / y_even are the current arguments of the G chain, x_odd /
    y_odd those of the S chain.  Gx, Gy, Sx, Sy are the corresponding
    images (cached; they are what convergence is measured on).  M is the
    current pairing distance.  chain_defects holds the order defects
    recorded while producing this state, as (n, label, defect) tuples.
    """

    n: int
    x_even: Any
    y_even: Any
    x_odd: Any
    y_odd: Any
    Gx: Any
    Gy: Any
    Sx: Any
    Sy: Any
    M: float
    chain_defects: tuple = ()


def _order_holds(space, a, b):
    """Return (holds, defect) for a <= b, tolerating measured float noise."""
    r = space.leq(a, b)
    if r is True:
        return True, 0.0
    if space.order_defect is not None:
        defect = float(space.order_defect(a, b))
        return defect <= CHAIN_SLACK, defect
    return False, math.inf


def _select(selector, target):
    try:
        return selector(target)
    except PreimageError:
        raise
    except Exception as exc:
        raise PreimageError(
            f"preimage selector failed for target {target!r}: {exc}", target=target
        ) from exc


def init_iteration(problem: CoupledProblem, x0, y0, x1, y1) -> IterationState:
    """Validate the starting order chains and build the initial state.

    Requires G(x0) <= S(x1) <= F(x0, y0) and F(y0, x0) <= S(y1) <= G(y0).
    These are exactly the inequalities that let the interleaved chains
    stay monotone, so a bad start is rejected here with the failing
    inequality named rather than surfacing later as mysterious defects.
    """
    gx0 = problem.G(x0)
    gy0 = problem.G(y0)
    sx1 = problem.S(x1)
    sy1 = problem.S(y1)
    fx = problem.F(x0, y0)
    fy = problem.F(y0, x0)

    for label, a, b in (
        ("G(x0) <= S(x1)", gx0, sx1),
        ("S(x1) <= F(x0, y0)", sx1, fx),
        ("S(y1) <= G(y0)", sy1, gy0),
        ("F(y0, x0) <= S(y1)", fy, sy1),
    ):
        ok, defect = _order_holds(problem.space, a, b)
        if not ok:
            raise InitOrderError(
                f"starting points do not satisfy {label} (defect {defect:.3g})"
            )

    d = problem.space.distance
    m0 = max(float(d(gx0, sx1)), float(d(gy0, sy1)))
    return IterationState(
        n=0, x_even=x0, y_even=y0, x_odd=x1, y_odd=y1,
        Gx=gx0, Gy=gy0, Sx=sx1, Sy=sy1, M=m0,
    )


def step(problem: CoupledProblem, state: IterationState) -> IterationState:
    """Advance both chains by one application of F.

    The even chain's new G-images are F of the even arguments; the odd
    chain's new S-images are F of the odd arguments.  New arguments are
    recovered through the preimage selectors.  Order defects along the
    interleaved chains are recorded on the returned state, not raised:
    a float-level defect should show up in the result's provenance rather
    than abort a run that is otherwise converging.
    """
    F = problem.F
    sp = problem.space

    gx_new = F(state.x_even, state.y_even)
    gy_new = F(state.y_even, state.x_even)
    sx_new = F(state.x_odd, state.y_odd)
    sy_new = F(state.y_odd, state.x_odd)

    n_new = state.n + 1
    defects = []
    for label, a, b in (
        ("previous S(x) <= new G(x) image", state.Sx, gx_new),
        ("new G(x) image <= new S(x) image", gx_new, sx_new),
        ("new G(y) image <= previous S(y)", gy_new, state.Sy),
        ("new S(y) image <= new G(y) image", sy_new, gy_new),
    ):
        ok, defect = _order_holds(sp, a, b)
        if not ok:
            defects.append((n_new, label, defect))

    x_even = _select(problem.G_preimage, gx_new)
    y_even = _select(problem.G_preimage, gy_new)
    x_odd = _select(problem.S_preimage, sx_new)
    y_odd = _select(problem.S_preimage, sy_new)

    d = sp.distance
    m = max(float(d(gx_new, sx_new)), float(d(gy_new, sy_new)))
    return IterationState(
        n=n_new, x_even=x_even, y_even=y_even, x_odd=x_odd, y_odd=y_odd,
        Gx=gx_new, Gy=gy_new, Sx=sx_new, Sy=sy_new, M=m,
        chain_defects=tuple(defects),
    )


@dataclass
class CoincidenceResult:
    """Outcome of a run.

    alpha and alpha_prime are the candidate coincidence points (the
    freshest S-images; at convergence the G- and S-images agree to within
    M).  residuals is (res_Gx, res_Sx, res_Gy, res_Sy): the distances
    d(G(alpha), F(alpha, alpha_prime)), d(S(alpha), F(alpha, alpha_prime))
    and the same with the roles of alpha and alpha_prime swapped, always
    computed on the final state.  status is "converged" when both M and
    all residuals certified below tol (chain_events may still be nonempty:
    order breaks are logged, never fatal); an uncertified run reports
    "chain_violation" when order defects were recorded along the way and
    "max_iter" otherwise, with the note saying whether the budget ran out
    or the divergence guard fired.  trace holds (n, M) per iteration.
    """

    alpha: Any
    alpha_prime: Any
    residuals: tuple
    trace: list
    status: str
    iterations: int
    chain_events: tuple = ()
    note: str = ""

    @property
    def max_residual(self) -> float:
        return max(self.residuals)


def _residuals(problem: CoupledProblem, state: IterationState) -> tuple:
    alpha = state.Sx
    alpha_prime = state.Sy
    f1 = problem.F(alpha, alpha_prime)
    f2 = problem.F(alpha_prime, alpha)
    d = problem.space.distance
    return (
        float(d(problem.G(alpha), f1)),
        float(d(problem.S(alpha), f1)),
        float(d(problem.G(alpha_prime), f2)),
        float(d(problem.S(alpha_prime), f2)),
    )


def run(problem: CoupledProblem, init: IterationState, tol: float = 1e-10,
        max_iter: int = 10_000) -> CoincidenceResult:
    """Iterate from an initialized state until certification or cutoff.

    Certification requires both M <= tol and every coincidence residual
    <= tol: M alone only says the two image chains have met, while the
    residuals say the meeting point actually reproduces itself through F,
    which is the property callers rely on.  The divergence guard stops
    runs whose M exceeds DIVERGENCE_FACTOR times the starting M.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 0:
        raise ValueError("max_iter must be nonnegative")

    state = init
    m0 = init.M
    trace = [(0, init.M)]
    chain_events = list(init.chain_defects)
    note = ""
    certified = False
    res: Optional[tuple] = None

    while True:
        if state.M <= tol:
            res = _residuals(problem, state)
            if max(res) <= tol:
                certified = True
                break
        if state.n >= max_iter:
            note = f"iteration budget exhausted at n={state.n}"
            break
        if m0 > 0 and state.M > DIVERGENCE_FACTOR * m0:
            note = (
                f"diverged: M={state.M:.6g} exceeded "
                f"{DIVERGENCE_FACTOR:g} times the starting value"
            )
            break
        state = step(problem, state)
        chain_events.extend(state.chain_defects)
        trace.append((state.n, state.M))

    if res is None:
        res = _residuals(problem, state)

    # Chain breaks are diagnostics, not aborts: a certified run reports
    # converged and carries its chain_events for inspection.  When a run
    # fails to certify, logged breaks name the likely cause, so they take
    # precedence over a bare budget report.
    if certified:
        status = "converged"
    elif chain_events:
        status = "chain_violation"
    else:
        status = "max_iter"

    return CoincidenceResult(
        alpha=state.Sx,
        alpha_prime=state.Sy,
        residuals=res,
        trace=trace,
        status=status,
        iterations=state.n,
        chain_events=tuple(chain_events),
        note=note,
    )


TRACE_HEADER = "n,M,res_Gx,res_Gy"


def trace_csv_text(result: CoincidenceResult) -> str:
    """Render the M trace as CSV.

    Residual columns are filled only on the final row; residuals are only
    computed at certification time, and recomputing them per step would
    double the F evaluations of every run.  %.17g keeps float round-trips
    exact so traces can serve as regression fixtures.
    """
    lines = [TRACE_HEADER]
    last = len(result.trace) - 1
    for i, (n, m) in enumerate(result.trace):
        if i == last:
            lines.append(
                f"{n},{m:.17g},{result.residuals[0]:.17g},{result.residuals[2]:.17g}"
            )
        else:
            lines.append(f"{n},{m:.17g},,")
    return "\n".join(lines) + "\n"


def write_trace_csv(result: CoincidenceResult, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(trace_csv_text(result))


# Each probe run is certified this much tighter than the advertised
# agreement tolerance.  A run certified at tol only pins its limit to
# about tol/(1 - rho) for contraction factor rho, so certifying at tol
# alone could not honor the 2 * tol cross-start agreement contract.
PROBE_REFINEMENT = 8.0


@dataclass
class UniquenessReport:
    """Cross-start agreement evidence for the coincidence pair.

    agree is True when every probed start converged, the limits pairwise
    agree within 2 * tol, and the fixed-point identities hold within tol.
    inconclusive is set when some start failed to converge, in which case
    agree is False without being evidence of non-uniqueness.
    """

    outcomes: list
    max_disagreement: float
    fixed_point_defect: float
    tol: float
    inconclusive: bool
    agree: bool = field(init=False)

    def __post_init__(self) -> None:
        self.agree = (
            not self.inconclusive
            and self.max_disagreement <= 2.0 * self.tol
            and self.fixed_point_defect <= self.tol
        )


def _pair_comparable(space, a, b) -> bool:
    """Mixed product-order comparability of two starting pairs."""
    xa, ya = a
    xb, yb = b
    forward = space.leq(xa, xb) is True and space.leq(yb, ya) is True
    backward = space.leq(xb, xa) is True and space.leq(ya, yb) is True
    return forward or backward


def uniqueness_probe(problem: CoupledProblem, starts, tol: float = 1e-10,
                     max_iter: int = 10_000) -> UniquenessReport:
    """Run the iteration from several starts and compare the limits.

    starts is a sequence of (x0, y0, x1, y1) tuples, at least two.  The
    pairs (x0, y0) must be pairwise comparable in the mixed product order
    (first components one way, second components the other); the
    uniqueness argument this probe mirrors only covers comparable starts,
    so incomparable ones raise ValueError rather than produce an answer
    the theory does not back.
    """
    starts = [tuple(s) for s in starts]
    if len(starts) < 2:
        raise ValueError("need at least two starts to compare")
    for i in range(len(starts)):
        for j in range(i + 1, len(starts)):
            a = (starts[i][0], starts[i][1])
            b = (starts[j][0], starts[j][1])
            if not _pair_comparable(problem.space, a, b):
                raise ValueError(
                    f"starting pairs {i} and {j} are not comparable in the "
                    "mixed product order; the uniqueness probe does not "
                    "apply to them"
                )

    run_tol = tol / PROBE_REFINEMENT
    outcomes = []
    for s in starts:
        state = init_iteration(problem, *s)
        outcomes.append(run(problem, state, tol=run_tol, max_iter=max_iter))

    if any(r.status != "converged" for r in outcomes):
        return UniquenessReport(
            outcomes=outcomes,
            max_disagreement=math.inf,
            fixed_point_defect=math.inf,
            tol=tol,
            inconclusive=True,
        )

    d = problem.space.distance
    disagreement = 0.0
    for i in range(len(outcomes)):
        for j in range(i + 1, len(outcomes)):
            disagreement = max(
                disagreement,
                float(d(outcomes[i].alpha, outcomes[j].alpha)),
                float(d(outcomes[i].alpha_prime, outcomes[j].alpha_prime)),
            )

    # the limit should be a common fixed point: equal to its own G- and
    # S-images, not merely a coincidence pair
    defect = 0.0
    for r in outcomes:
        defect = max(defect, r.max_residual)
        for point in (r.alpha, r.alpha_prime):
            defect = max(defect, float(d(point, problem.G(point))))
            defect = max(defect, float(d(point, problem.S(point))))
            defect = max(defect, float(d(problem.G(point), problem.S(point))))

    return UniquenessReport(
        outcomes=outcomes,
        max_disagreement=disagreement,
        fixed_point_defect=defect,
        tol=tol,
        inconclusive=False,
    )
