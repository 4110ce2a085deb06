"""Shared fixtures: small exactly-solvable problems used across the suite.

The finite problems are built on the tabulated FiniteProblem type so their
coupled coincidence sets can be enumerated exactly and compared against
whatever the iteration engine returns.  The scalar linear problem is the
standing smoke case: its pair dynamics are a 2x2 linear system whose
eigenvalues 3/4 and 1/4 are known in closed form.
"""

from coupledpoint import (
    BvpSpec,
    CoupledProblem,
    FiniteProblem,
    affine_rhs,
    real_line_space,
)


def linear_coupled(lo: float = -10.0, hi: float = 10.0) -> CoupledProblem:
    """F(x, y) = (2x - y)/4 on the reals, identity tracking maps."""
    return CoupledProblem(
        space=real_line_space(lo, hi),
        F=lambda x, y: (2.0 * x - y) / 4.0,
    )


# valid start for linear_coupled: chains G(x0) <= S(x1) <= F(x0, y0) and
# F(y0, x0) <= S(y1) <= G(y0) hold with M0 = 0.1
LINEAR_START = (-1.0, 1.0, -0.9, 0.9)


def _chain_order(points):
    return [(a, b) for a in points for b in points if a <= b]


def _abs_distances(points):
    return {(a, b): float(abs(a - b)) for a in points for b in points if a != b}


def chain_problem_constant() -> FiniteProblem:
    """Five-point chain, F identically 2; unique coincidence pair (2, 2)."""
    pts = (0, 1, 2, 3, 4)
    return FiniteProblem(
        points=pts,
        order=_chain_order(pts),
        distances=_abs_distances(pts),
        F={(x, y): 2 for x in pts for y in pts},
    )


def chain_problem_shift() -> FiniteProblem:
    """Seven-point chain, F(x, y) = (x - y + 6) // 2.

    Coincidence pairs are exactly those with x + y in {5, 6}: thirteen
    pairs, so membership checks exercise a set larger than a singleton.
    """
    pts = tuple(range(7))
    return FiniteProblem(
        points=pts,
        order=_chain_order(pts),
        distances=_abs_distances(pts),
        F={(x, y): (x - y + 6) // 2 for x in pts for y in pts},
    )


def diamond_problem() -> FiniteProblem:
    """bot below five mutually incomparable points below top; F is constant.

    Distances: 1 between comparable distinct points, 2 between
    incomparable ones (triangle holds with equality through bot or top).
    """
    mids = tuple(f"a{i}" for i in range(1, 6))
    pts = ("bot",) + mids + ("top",)
    order = [("bot", m) for m in mids] + [(m, "top") for m in mids]
    order.append(("bot", "top"))

    dist = {}
    for i, a in enumerate(pts):
        for b in pts[i + 1:]:
            comparable = "bot" in (a, b) or "top" in (a, b)
            dist[(a, b)] = 1.0 if comparable else 2.0

    return FiniteProblem(
        points=pts,
        order=order,
        distances=dist,
        F={(x, y): "a1" for x in pts for y in pts},
    )


def finite_cases():
    """(problem, valid_start) pairs for the engine-vs-enumeration tests."""
    return [
        (chain_problem_constant(), (0, 4, 1, 3)),
        (chain_problem_shift(), (0, 6, 0, 6)),
        (chain_problem_shift(), (1, 5, 1, 5)),
        (diamond_problem(), ("bot", "top", "a1", "a1")),
    ]


def degenerate_spec(lambda1: float = 4.0, lambda2: float = 1.0,
                    c1: float = 2.0, c2: float = 3.0, n: int = 200,
                    mu1: float = 1.0, mu2: float = 1.0) -> BvpSpec:
    """f = -lambda1 u + c1 and h = -lambda2 u + c2 on period 1.

    f + lambda1 u and h + lambda2 u are both constant, so the growth
    increments vanish identically and the solution is the constant
    (c1 + c2) / (lambda1 + lambda2): u identically 1 for the defaults.
    """
    return BvpSpec(
        T=1.0,
        lambda1=lambda1,
        lambda2=lambda2,
        mu1=mu1,
        mu2=mu2,
        f=affine_rhs(-lambda1, c1),
        h=affine_rhs(-lambda2, c2),
        N=n,
    )


def monotone_spec(n: int = 40) -> BvpSpec:
    """f = -2u + 2, h = -u + 3 at rates (4, 1): a genuinely mixed-monotone
    integral operator (the own-source weight k1 - k2 is the strictly
    positive difference-mode kernel, and f' + lambda1 = h' - lambda2 = 2
    up to sign)."""
    return BvpSpec(
        T=1.0,
        lambda1=4.0,
        lambda2=1.0,
        mu1=1.0,
        mu2=1.0,
        f=affine_rhs(-2.0, 2.0),
        h=affine_rhs(-1.0, 3.0),
        N=n,
    )
