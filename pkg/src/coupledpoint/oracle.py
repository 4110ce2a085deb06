"""Independent reference results for testing the solver stack.

Everything here is deliberately disjoint from the production code paths:
the periodic-orbit finder integrates with a hand-rolled classical
Runge-Kutta sweep and locates the periodic initial value by bisection on
the period displacement, sharing no kernel, quadrature, or iteration code
with the solver modules; the finite problems carry explicit order and
distance tables, validated exactly, and their coupled coincidence pairs
come from an exhaustive scan.  Agreement between these answers and the
solver's is therefore evidence, not bookkeeping.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Optional

import numpy as np

from .coupled_core import CoupledProblem, PreimageError
from .order_metric import OrderedMetricSpace


@dataclass(frozen=True, eq=False)
class FiniteProblem:
    """A finite ordered metric space with tabulated maps.

    points are distinct hashable labels.  order holds pairs (a, b) meaning
    a <= b; reflexive pairs are added automatically and the result must be
    antisymmetric and transitive, checked exactly since there is no
    floating point here.  distances maps unordered pairs to positive
    values (symmetrized automatically, diagonal implicitly zero, triangle
    inequality checked exactly).  F maps every ordered pair (x, y) to a
    point.  G and S map every point to a point; identity when omitted.
    """

    points: tuple
    order: Any
    distances: dict
    F: dict
    G: Optional[dict] = None
    S: Optional[dict] = None

    def __post_init__(self):
        pts = tuple(self.points)
        if not pts:
            raise ValueError("need at least one point")
        if len(set(pts)) != len(pts):
            raise ValueError("points must be distinct")
        pset = set(pts)

        order = set()
        for pair in self.order:
            a, b = pair
            if a not in pset or b not in pset:
                raise ValueError(f"order pair {pair!r} uses unknown points")
            order.add((a, b))
        for p in pts:
            order.add((p, p))
        for a, b in order:
            if a != b and (b, a) in order:
                raise ValueError(f"order is not antisymmetric on {a!r}, {b!r}")
        for a, b in order:
            for c, d in order:
                if b == c and (a, d) not in order:
                    raise ValueError(
                        f"order is not transitive: {a!r} <= {b!r} <= {d!r} "
                        f"but ({a!r}, {d!r}) is missing"
                    )

        dist = {}
        for (a, b), d in dict(self.distances).items():
            if a not in pset or b not in pset:
                raise ValueError(f"distance pair ({a!r}, {b!r}) uses unknown points")
            d = float(d)
            prev = dist.get((a, b))
            if prev is not None and prev != d:
                raise ValueError(f"conflicting distances for ({a!r}, {b!r})")
            dist[(a, b)] = d
            dist[(b, a)] = d
        for p in pts:
            dist[(p, p)] = 0.0
        for a in pts:
            for b in pts:
                if a == b:
                    continue
                d = dist.get((a, b))
                if d is None:
                    raise ValueError(f"missing distance for ({a!r}, {b!r})")
                if not d > 0.0:
                    raise ValueError(
                        f"distance for ({a!r}, {b!r}) must be positive, got {d!r}"
                    )
        for a in pts:
            for b in pts:
                for c in pts:
                    if dist[(a, c)] > dist[(a, b)] + dist[(b, c)]:
                        raise ValueError(
                            f"triangle inequality fails at ({a!r}, {b!r}, {c!r})"
                        )

        fmap = dict(self.F)
        for x in pts:
            for y in pts:
                if (x, y) not in fmap:
                    raise ValueError(f"F is missing the pair ({x!r}, {y!r})")
                if fmap[(x, y)] not in pset:
                    raise ValueError(f"F({x!r}, {y!r}) lands outside the space")

        gmap = {p: p for p in pts} if self.G is None else dict(self.G)
        smap = {p: p for p in pts} if self.S is None else dict(self.S)
        for name, table in (("G", gmap), ("S", smap)):
            for p in pts:
                if p not in table:
                    raise ValueError(f"{name} is missing the point {p!r}")
                if table[p] not in pset:
                    raise ValueError(f"{name}({p!r}) lands outside the space")

        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "order", frozenset(order))
        object.__setattr__(self, "distances", dist)
        object.__setattr__(self, "F", fmap)
        object.__setattr__(self, "G", gmap)
        object.__setattr__(self, "S", smap)

    def leq(self, a, b):
        if (a, b) in self.order:
            return True
        if (b, a) in self.order:
            return False
        return None

    def distance(self, a, b) -> float:
        return self.distances[(a, b)]

    def space(self) -> OrderedMetricSpace:
        pts = self.points

        def sample(rng):
            return pts[int(rng.integers(0, len(pts)))]

        return OrderedMetricSpace(
            distance=self.distance,
            leq=self.leq,
            sampler=sample,
            name=f"finite[{len(pts)} points]",
        )

    def coupled(self) -> CoupledProblem:
        """The same tables wrapped for the abstract iteration engine."""

        def operator(x, y):
            return self.F[(x, y)]

        def preimage_in(table: dict, name: str) -> Callable:
            # first match in declared point order keeps selection stable
            def select(target):
                for p in self.points:
                    if table[p] == target:
                        return p
                raise PreimageError(
                    f"{name} never maps onto {target!r}", target=target
                )

            return select

        return CoupledProblem(
            space=self.space(),
            F=operator,
            G=lambda p: self.G[p],
            S=lambda p: self.S[p],
            G_preimage=preimage_in(self.G, "G"),
            S_preimage=preimage_in(self.S, "S"),
        )


@dataclass(frozen=True)
class CoincidenceSets:
    """Exhaustively enumerated coupled coincidence pairs.

    g_points holds pairs (x, y) with G(x) = F(x, y) and G(y) = F(y, x),
    s_points the analogous pairs for S, common their intersection: the
    pairs where both tracking maps coincide with the coupled image.
    """

    g_points: tuple
    s_points: tuple
    common: tuple


def enumerate_coupled_points(problem: FiniteProblem) -> CoincidenceSets:
    """Brute-force scan of all ordered pairs; no iteration involved."""
    g_hits, s_hits, both = [], [], []
    for x, y in itertools.product(problem.points, repeat=2):
        fxy = problem.F[(x, y)]
        fyx = problem.F[(y, x)]
        g_ok = problem.G[x] == fxy and problem.G[y] == fyx
        s_ok = problem.S[x] == fxy and problem.S[y] == fyx
        if g_ok:
            g_hits.append((x, y))
        if s_ok:
            s_hits.append((x, y))
        if g_ok and s_ok:
            both.append((x, y))
    return CoincidenceSets(tuple(g_hits), tuple(s_hits), tuple(both))


def _rk4_trajectory(rhs: Callable, u0: float, period: float, steps: int) -> tuple:
    """Classical fourth-order sweep over [0, period] starting at u0."""
    if steps < 1:
        raise ValueError("need at least one step")
    dt = period / steps
    times = np.linspace(0.0, period, steps + 1)
    values = np.empty(steps + 1)
    values[0] = u0
    u = float(u0)
    for i in range(steps):
        t = i * dt
        k1 = rhs(t, u)
        k2 = rhs(t + 0.5 * dt, u + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, u + 0.5 * dt * k2)
        k4 = rhs(t + dt, u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        values[i + 1] = u
    return times, values


@dataclass(frozen=True)
class PeriodicOrbit:
    """A periodic trajectory found by shooting.

    u0 is the periodic initial value, times and values the final sweep
    over one period (values[-1] returns to u0 within the bisection
    tolerance), bisection_steps the number of interval halvings spent.
    """

    u0: float
    times: np.ndarray
    values: np.ndarray
    bisection_steps: int


def solve_periodic_ode(rhs: Callable, period: float, steps: int, bracket: tuple,
                       tol: float = 1e-12, max_steps: int = 200) -> PeriodicOrbit:
    """Find u(0) with u(period) = u(0) by bisection on the displacement.

    bracket = (lo, hi) must straddle the periodic initial value: the
    displacement u(period) - u(0) has to change sign (or vanish) across
    it, else ValueError.  Contractive flows change sign across any bracket
    containing the fixed point, so a too-narrow bracket is the usual
    failure mode.  tol bounds the final bracket width, not the
    integration error, which is set by steps alone.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")

    def displacement(u0: float) -> float:
        _, vals = _rk4_trajectory(rhs, u0, period, steps)
        return float(vals[-1] - u0)

    d_lo = displacement(lo)
    d_hi = displacement(hi)
    if d_lo == 0.0:
        hi = lo
    elif d_hi == 0.0:
        lo = hi
    elif (d_lo > 0.0) == (d_hi > 0.0):
        raise ValueError(
            "periodic solution not bracketed: displacement is "
            f"{d_lo:.3g} at {lo:g} and {d_hi:.3g} at {hi:g} (same sign)"
        )

    halvings = 0
    while hi - lo > tol and halvings < max_steps:
        mid = 0.5 * (lo + hi)
        d_mid = displacement(mid)
        if d_mid == 0.0:
            lo = hi = mid
            break
        if (d_mid > 0.0) == (d_lo > 0.0):
            lo = mid
            d_lo = d_mid
        else:
            hi = mid
        halvings += 1

    u0 = 0.5 * (lo + hi)
    times, values = _rk4_trajectory(rhs, u0, period, steps)
    return PeriodicOrbit(u0=float(u0), times=times, values=values,
                         bisection_steps=halvings)
