"""First-order periodic boundary value problems via a coupled pair iteration.

The problem u' = f(t, u) + h(t, u) with u(0) = u(T) is rewritten as a
fixed-point equation for a pair (u, v).  Adding lambda1 u - lambda2 v to
both sides and mirroring the roles gives a linear left side per mode: the
sum u + v decays at sigma2 = lambda2 - lambda1 and the difference u - v at
sigma1 = -(lambda1 + lambda2), each inverted by the periodic one-sided
exponential kernel

    K_sigma(t, s) = exp(sigma (t - s)) / (1 - exp(sigma T))   for s <= t,
                    exp(sigma (t + T - s)) / (1 - exp(sigma T)) otherwise.

Recombining the modes yields the two coupling kernels k1 = (K_s1 + K_s2)/2
and k2 = (K_s2 - K_s1)/2 that the integral operator applies to the own and
partner sources.  For 0 < lambda2 < lambda1 both sigmas are negative and
K_s2 > K_s1 pointwise, so k1 > 0, k2 > 0, and k1 +/- k2 > 0; the exact
kernel masses are int k1 ds = lambda1/(lambda1^2 - lambda2^2) and
int k2 ds = lambda2/(lambda1^2 - lambda2^2) at every t.

Quadrature is the trapezoid model in product form: the source is taken
piecewise linear on the grid and the exponential kernel factor is
integrated exactly on each panel, splitting the panel containing s = t.
Plain trapezoid weights bias every kernel mass by about sigma (T/N)^2 / 12,
which is visible at the tolerances this package certifies; the product
form reproduces the masses to machine precision at any N.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Optional

import numpy as np

from .coupled_core import CoupledProblem
from .iteration import init_iteration, run
from .order_metric import OrderedMetricSpace, ValidationReport, Violation


@dataclass(frozen=True, eq=False)
class GridFunction:
    """A real function sampled on a uniform grid over one period [0, T].

    values holds the N+1 node samples including both endpoints; node N sits
    at t = T and describes the same circle point as node 0, so a periodic
    function has values[0] == values[N] (solver output does).  Instances
    are immutable and compare by identity; use sup_distance and
    pointwise_leq for metric and order comparisons.
    """

    values: np.ndarray
    period: float

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 1 or arr.size < 2:
            raise ValueError("values must be a 1-d array with at least 2 entries")
        if not np.all(np.isfinite(arr)):
            raise ValueError("values must be finite")
        p = float(self.period)
        if not p > 0:
            raise ValueError("period must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "period", p)

    @property
    def n_panels(self) -> int:
        return self.values.size - 1

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.period, self.values.size)

    @classmethod
    def constant(cls, value: float, period: float, n: int) -> "GridFunction":
        return cls(np.full(n + 1, float(value)), period)

    @classmethod
    def from_callable(cls, func, period: float, n: int) -> "GridFunction":
        ts = np.linspace(0.0, period, n + 1)
        return cls(np.array([float(func(t)) for t in ts]), period)

    def __repr__(self) -> str:
        return (
            f"GridFunction(n={self.n_panels}, T={self.period:g}, "
            f"range=[{self.values.min():.4g}, {self.values.max():.4g}])"
        )


def _check_same_grid(u: GridFunction, v: GridFunction) -> None:
    if u.values.size != v.values.size or abs(u.period - v.period) > 1e-12 * max(
        1.0, u.period
    ):
        raise ValueError(
            f"grid mismatch: {u.values.size} nodes over T={u.period:g} vs "
            f"{v.values.size} nodes over T={v.period:g}"
        )


def sup_distance(u: GridFunction, v: GridFunction) -> float:
    _check_same_grid(u, v)
    return float(np.max(np.abs(u.values - v.values)))


def pointwise_leq(u: GridFunction, v: GridFunction):
    """True for u <= v everywhere, False for v <= u everywhere, else None."""
    _check_same_grid(u, v)
    diff = v.values - u.values
    if np.all(diff >= 0.0):
        return True
    if np.all(diff <= 0.0):
        return False
    return None


def grid_order_defect(u: GridFunction, v: GridFunction) -> float:
    """How far u <= v is from holding; 0.0 when it holds."""
    return float(max(0.0, np.max(u.values - v.values)))


def grid_function_space(period: float, n: int, value_span: float = 3.0,
                        modes: int = 3) -> OrderedMetricSpace:
    """Grid functions under the sup metric and the pointwise partial order.

    The sampler draws a constant plus a few random smooth oscillations, so
    sampled pairs are sometimes comparable and sometimes not, exercising
    both branches of the order-gated checkers.
    """
    if n < 1:
        raise ValueError("need at least one panel")
    ts = np.linspace(0.0, period, n + 1)

    def sample(rng) -> GridFunction:
        vals = np.full(n + 1, float(rng.uniform(-value_span, value_span)))
        for k in range(1, modes + 1):
            amp = value_span / (2.0 * k)
            vals = vals + float(rng.uniform(-amp, amp)) * np.cos(
                2.0 * math.pi * k * ts / period
            )
            vals = vals + float(rng.uniform(-amp, amp)) * np.sin(
                2.0 * math.pi * k * ts / period
            )
        return GridFunction(vals, period)

    return OrderedMetricSpace(
        distance=sup_distance,
        leq=pointwise_leq,
        sampler=sample,
        name=f"grid_functions[T={period:g}, n={n}]",
        order_defect=grid_order_defect,
    )


def _identity(x: float) -> float:
    return x


@dataclass
class BvpSpec:
    """A periodic problem u' = f(t, u) + h(t, u), u(0) = u(T), discretized.

    lambda1 and lambda2 are the decay rates paired with f and h in the
    fixed-point reformulation; they shape the kernels and must satisfy
    lambda1 >= lambda2 > 0.  Strict inequality is required for the kernels
    to exist: equality passes construction and fails in make_kernels,
    which names the singular denominator.  mu1 and mu2 are the growth
    budgets audited by check_growth_conditions; they do not enter the
    solver numerics.  g and g_inverse transport the unknown (both default
    to the identity); g_inverse must invert g to roughly 1e-12 or the
    iteration will report spurious chain defects.
    """

    T: float
    lambda1: float
    lambda2: float
    mu1: float
    mu2: float
    f: Callable
    h: Callable
    N: int = 200
    quadrature: str = "trapezoid"
    g: Callable = _identity
    g_inverse: Callable = _identity

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("period T must be positive")
        if not (self.lambda1 > 0 and self.lambda2 > 0):
            raise ValueError("decay rates lambda1 and lambda2 must be positive")
        if self.lambda1 < self.lambda2:
            raise ValueError("need lambda1 >= lambda2 (the f-side decay dominates)")
        if self.mu1 < 0 or self.mu2 < 0:
            raise ValueError("growth budgets mu1 and mu2 must be nonnegative")
        if int(self.N) != self.N or int(self.N) < 4:
            raise ValueError("grid must have at least 4 panels")
        self.N = int(self.N)
        if self.quadrature != "trapezoid":
            raise ValueError(f"unknown quadrature rule {self.quadrature!r}")

    @property
    def contraction_number(self) -> float:
        """2 max(mu1, mu2) / (lambda1 + lambda2); must be < 1 to certify."""
        return 2.0 * max(self.mu1, self.mu2) / (self.lambda1 + self.lambda2)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.N + 1)


@dataclass(frozen=True)
class KernelPair:
    """The two coupling kernels of the pair reformulation.

    sigma1 = -(lambda1 + lambda2) governs the difference mode u - v and
    sigma2 = lambda2 - lambda1 the sum mode u + v.  k1 and k2 are
    vectorized (t, s) callables: k1 weights the own-component source and
    k2 the partner-component source.  k1 - k2 and k1 + k2 are the
    one-sided mode kernels, each strictly positive, so k1 > k2 > 0.
    """

    sigma1: float
    sigma2: float
    k1: Callable
    k2: Callable
    period: float


def _single_kernel(sigma: float, period: float):
    den = -math.expm1(sigma * period)   # 1 - e^{sigma T} > 0 for sigma < 0

    def kernel(t, s):
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        # exponents are nonpositive for t, s in [0, T]; the clip only
        # guards float dust at the s == t boundary
        below = np.minimum(sigma * (t - s), 0.0)
        above = np.minimum(sigma * (t + period - s), 0.0)
        return np.where(s <= t, np.exp(below), np.exp(above)) / den

    return kernel


def make_kernels(spec: BvpSpec) -> KernelPair:
    sigma1 = -(spec.lambda1 + spec.lambda2)
    sigma2 = spec.lambda2 - spec.lambda1
    if sigma2 == 0.0:
        raise ValueError(
            "equal decay rates make the sum-mode kernel denominator "
            "1 - exp(0) vanish; lambda1 must strictly exceed lambda2"
        )
    ka = _single_kernel(sigma1, spec.T)
    kb = _single_kernel(sigma2, spec.T)

    def k1(t, s):
        return 0.5 * (ka(t, s) + kb(t, s))

    def k2(t, s):
        return 0.5 * (kb(t, s) - ka(t, s))

    return KernelPair(sigma1=sigma1, sigma2=sigma2, k1=k1, k2=k2, period=spec.T)


# Panel moments of the exponential kernel against a linear hat:
#   phi1(z)  = int_0^1 e^{z q} dq
#   psi_a(z) = int_0^1 (1 - q) e^{z q} dq
#   psi_b(z) = int_0^1 q e^{z q} dq
# Closed forms suffer catastrophic cancellation near z = 0, so small
# arguments switch to the truncated series (error below 1e-14 at |z|<1e-3).
_SERIES_CUT = 1e-3


def _phi1(z: float) -> float:
    if abs(z) < _SERIES_CUT:
        return 1.0 + z * (1.0 / 2.0 + z * (1.0 / 6.0 + z / 24.0))
    return math.expm1(z) / z


def _psi_a(z: float) -> float:
    if abs(z) < _SERIES_CUT:
        return 0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0))
    return (math.expm1(z) - z) / (z * z)


def _psi_b(z: float) -> float:
    if abs(z) < _SERIES_CUT:
        return 0.5 + z * (1.0 / 3.0 + z * (1.0 / 8.0 + z / 30.0))
    return (math.expm1(z) * (z - 1.0) + z) / (z * z)


def greens_weights(sigma: float, period: float, n: int, t: float) -> np.ndarray:
    """Quadrature weights for the kernel integral at offset t.

    The returned w of length n+1 satisfies: w @ phi_nodes equals the exact
    integral over [0, period] of the one-sided exponential kernel times the
    piecewise-linear interpolant of phi on the uniform grid, with the panel
    containing s = t split at t.  Summing w reproduces the kernel mass
    -1/sigma to machine precision for every t and n.
    """
    if sigma >= 0:
        raise ValueError("kernel decay rate sigma must be negative")
    if n < 1:
        raise ValueError("need at least one panel")
    if not 0.0 <= t <= period:
        raise ValueError("offset t must lie in [0, period]")
    delta = period / n
    den = -math.expm1(sigma * period)
    w = np.zeros(n + 1)

    m = int(t / delta)
    if m > n - 1:
        m = n - 1
    dlt = t - m * delta
    if dlt < 0.0:
        dlt = 0.0
    elif dlt > delta:
        dlt = delta

    z_full = -sigma * delta
    psa = _psi_a(z_full)
    psb = _psi_b(z_full)

    # panels entirely below t: kernel e^{sigma (t - s)}
    if m > 0:
        j = np.arange(m)
        base = np.exp(sigma * (t - j * delta)) / den
        w[:m] += base * (delta * psa)
        w[1:m + 1] += base * (delta * psb)

    # lower part of the panel containing t: s in [m delta, t]
    if dlt > 0.0:
        frac = dlt / delta
        zb = -sigma * dlt
        base = math.exp(sigma * dlt) / den
        w[m] += base * dlt * (_phi1(zb) - frac * _psi_b(zb))
        w[m + 1] += base * dlt * frac * _psi_b(zb)

    # upper part of the same panel: s in [t, (m+1) delta], kernel wraps
    dab = delta - dlt
    if dab > 0.0:
        frac = dlt / delta
        r = dab / delta
        za = -sigma * dab
        base = math.exp(sigma * period) / den
        w[m] += base * dab * ((1.0 - frac) * _phi1(za) - r * _psi_b(za))
        w[m + 1] += base * dab * (frac * _phi1(za) + r * _psi_b(za))

    # panels entirely above t: kernel e^{sigma (t + period - s)}
    if m + 1 < n:
        j = np.arange(m + 1, n)
        base = np.exp(sigma * (t + period - j * delta)) / den
        w[m + 1:n] += base * (delta * psa)
        w[m + 2:n + 1] += base * (delta * psb)

    return w


@lru_cache(maxsize=16)
def _greens_matrix(sigma: float, period: float, n: int) -> np.ndarray:
    ts = np.linspace(0.0, period, n + 1)
    mat = np.empty((n + 1, n + 1))
    for i, t in enumerate(ts):
        mat[i] = greens_weights(sigma, period, n, float(t))
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=16)
def _combined_matrices(sigma1: float, sigma2: float, period: float, n: int):
    a = _greens_matrix(sigma1, period, n)
    b = _greens_matrix(sigma2, period, n)
    w1 = 0.5 * (a + b)
    w2 = 0.5 * (b - a)
    w1.setflags(write=False)
    w2.setflags(write=False)
    return w1, w2


def kernel_quadrature_masses(kernels: KernelPair, n: int, t: float) -> tuple:
    """Quadrature masses (int k1 ds, int k2 ds) at offset t.

    Exact values are lambda1/(lambda1^2 - lambda2^2) and
    lambda2/(lambda1^2 - lambda2^2) independently of t; the product-form
    weights reproduce them to machine precision, which is what pins the
    solver's steady states to the analytic ones.
    """
    wa = greens_weights(kernels.sigma1, kernels.period, n, t)
    wb = greens_weights(kernels.sigma2, kernels.period, n, t)
    ma = float(wa.sum())
    mb = float(wb.sum())
    return 0.5 * (ma + mb), 0.5 * (mb - ma)


def _eval_rhs(func, ts, vals, label: str) -> np.ndarray:
    """Evaluate a source term on arrays, falling back to scalar calls."""
    ts = np.asarray(ts, dtype=float)
    vals = np.asarray(vals, dtype=float)
    out = None
    try:
        cand = np.asarray(func(ts, vals), dtype=float)
        if cand.shape == ts.shape:
            out = cand
    except Exception:
        out = None
    if out is None:
        out = np.array([float(func(float(t), float(u))) for t, u in zip(ts, vals)])
    bad = ~np.isfinite(out)
    if bad.any():
        i = int(np.argmax(bad))
        raise ValueError(
            f"{label} returned a non-finite value at node {i} "
            f"(t={ts[i]:.6g}, got {out[i]!r})"
        )
    return out


def _check_grid_matches(spec: BvpSpec, u: GridFunction) -> None:
    if u.n_panels != spec.N or abs(u.period - spec.T) > 1e-12 * max(1.0, spec.T):
        raise ValueError(
            f"grid function has {u.n_panels} panels over T={u.period:g}, "
            f"spec wants {spec.N} panels over T={spec.T:g}"
        )


def apply_F(spec: BvpSpec, kernels: KernelPair, u: GridFunction,
            v: GridFunction) -> GridFunction:
    """One application of the coupled integral operator.

    Integrates the own source f(., u) + lambda1 u + h(., v) - lambda2 v
    against k1 and the partner source (roles of u and v swapped) against
    k2.  Non-finite source values raise with the offending term and node
    named, since they would otherwise spread through the whole grid.
    """
    _check_grid_matches(spec, u)
    _check_grid_matches(spec, v)
    ts = u.nodes
    fu = _eval_rhs(spec.f, ts, u.values, "f(t, u)")
    hv = _eval_rhs(spec.h, ts, v.values, "h(t, v)")
    fv = _eval_rhs(spec.f, ts, v.values, "f(t, v)")
    hu = _eval_rhs(spec.h, ts, u.values, "h(t, u)")
    b1 = fu + spec.lambda1 * u.values + hv - spec.lambda2 * v.values
    b2 = fv + spec.lambda1 * v.values + hu - spec.lambda2 * u.values
    w1, w2 = _combined_matrices(kernels.sigma1, kernels.sigma2, spec.T, spec.N)
    return GridFunction(w1 @ b1 + w2 @ b2, spec.T)


# Deterministic separations probed ahead of any random sampling: the growth
# bound ln(1 + d^2) shrinks like d^2 while generic perturbations shrink
# like d, so violations concentrate at small separations and a fixed probe
# there keeps their detection reproducible.
PROBE_SEPARATIONS = (0.1, 0.01, 0.001)


def check_growth_conditions(spec: BvpSpec, sample_count: int = 2000, seed: int = 0,
                            value_span: float = 5.0,
                            tol: float = 1e-10) -> ValidationReport:
    """Audit the one-sided growth bounds and the contraction number.

    For probe pairs a > b the f side must satisfy
        0 <= (f(t, a) + lambda1 a) - (f(t, b) + lambda1 b)
          <= mu1 * ln(1 + (g(a) - g(b))^2)
    and the h side the mirrored bounds
        -mu2 * ln(1 + (g(a) - g(b))^2)
          <= (h(t, a) + lambda2 a) - (h(t, b) + lambda2 b) <= 0.
    The contraction number 2 max(mu1, mu2) / (lambda1 + lambda2) must be
    strictly below 1.  A deterministic probe block over PROBE_SEPARATIONS
    runs before sample_count seeded random probes.
    """
    rng = np.random.default_rng(seed)
    viols: list = []
    checked = 1

    cn = spec.contraction_number
    if cn >= 1.0:
        viols.append(
            Violation(
                "contraction number",
                (spec.mu1, spec.mu2, spec.lambda1, spec.lambda2, cn),
                cn - 1.0,
            )
        )

    probe_t, probe_b, probe_sep = [], [], []
    for sep in PROBE_SEPARATIONS:
        for tfrac in (0.0, 1.0 / 3.0, 2.0 / 3.0):
            for base in (-1.0, 0.0, 1.0):
                probe_t.append(tfrac * spec.T)
                probe_b.append(base)
                probe_sep.append(sep)
    kt = np.array(probe_t)
    kb = np.array(probe_b)
    ks = np.array(probe_sep)
    if sample_count > 0:
        kt = np.concatenate([kt, rng.uniform(0.0, spec.T, sample_count)])
        kb = np.concatenate([kb, rng.uniform(-value_span, value_span, sample_count)])
        ks = np.concatenate(
            [ks, 10.0 ** rng.uniform(-3.0, math.log10(max(value_span, 1.01)), sample_count)]
        )
    ka = kb + ks

    if spec.g is _identity:
        ga, gb = ka, kb
    else:
        ga = np.array([float(spec.g(x)) for x in ka])
        gb = np.array([float(spec.g(x)) for x in kb])
    bound_f = spec.mu1 * np.log1p((ga - gb) ** 2)
    bound_h = spec.mu2 * np.log1p((ga - gb) ** 2)

    fa = _eval_rhs(spec.f, kt, ka, "f(t, a)")
    fb = _eval_rhs(spec.f, kt, kb, "f(t, b)")
    df = (fa + spec.lambda1 * ka) - (fb + spec.lambda1 * kb)
    ha = _eval_rhs(spec.h, kt, ka, "h(t, a)")
    hb = _eval_rhs(spec.h, kt, kb, "h(t, b)")
    dh = (ha + spec.lambda2 * ka) - (hb + spec.lambda2 * kb)
    checked += 2 * int(kt.size)

    for i in np.flatnonzero(df < -tol):
        viols.append(
            Violation(
                "f-growth lower bound",
                (float(kt[i]), float(kb[i]), float(ka[i]), float(df[i]), 0.0),
                float(-df[i]),
            )
        )
    for i in np.flatnonzero(df > bound_f + tol):
        viols.append(
            Violation(
                "f-growth upper bound",
                (float(kt[i]), float(kb[i]), float(ka[i]), float(df[i]), float(bound_f[i])),
                float(df[i] - bound_f[i]),
            )
        )
    for i in np.flatnonzero(dh > tol):
        viols.append(
            Violation(
                "h-growth upper bound",
                (float(kt[i]), float(kb[i]), float(ka[i]), float(dh[i]), 0.0),
                float(dh[i]),
            )
        )
    for i in np.flatnonzero(dh < -bound_h - tol):
        viols.append(
            Violation(
                "h-growth lower bound",
                (float(kt[i]), float(kb[i]), float(ka[i]), float(dh[i]), float(-bound_h[i])),
                float(-bound_h[i] - dh[i]),
            )
        )

    return ValidationReport(viols, checked=checked)


def _apply_scalar_map(func, u: GridFunction) -> GridFunction:
    if func is _identity:
        return u
    return GridFunction(np.array([float(func(x)) for x in u.values]), u.period)


def verify_lower_upper(spec: BvpSpec, kernels: KernelPair, alpha: GridFunction,
                       beta: GridFunction, tol: float = 1e-10) -> ValidationReport:
    """Check that (alpha, beta) is an admissible bracketing pair.

    Nodewise: g(alpha) <= F(alpha, beta) (alpha is a lower solution),
    F(beta, alpha) <= g(beta) (beta is an upper solution), and
    alpha <= beta.  Violations carry the offending node index and time.
    """
    _check_grid_matches(spec, alpha)
    _check_grid_matches(spec, beta)
    ga = _apply_scalar_map(spec.g, alpha)
    gb = _apply_scalar_map(spec.g, beta)
    fab = apply_F(spec, kernels, alpha, beta)
    fba = apply_F(spec, kernels, beta, alpha)
    ts = alpha.nodes
    viols: list = []
    checked = 3 * int(ts.size)

    for i in np.flatnonzero(ga.values > fab.values + tol):
        viols.append(
            Violation(
                "lower solution",
                (int(i), float(ts[i]), float(ga.values[i]), float(fab.values[i])),
                float(ga.values[i] - fab.values[i]),
            )
        )
    for i in np.flatnonzero(fba.values > gb.values + tol):
        viols.append(
            Violation(
                "upper solution",
                (int(i), float(ts[i]), float(fba.values[i]), float(gb.values[i])),
                float(fba.values[i] - gb.values[i]),
            )
        )
    for i in np.flatnonzero(alpha.values > beta.values + tol):
        viols.append(
            Violation(
                "lower below upper",
                (int(i), float(ts[i]), float(alpha.values[i]), float(beta.values[i])),
                float(alpha.values[i] - beta.values[i]),
            )
        )
    return ValidationReport(viols, checked=checked)


def coupled_problem_from_spec(spec: BvpSpec,
                              kernels: Optional[KernelPair] = None) -> CoupledProblem:
    """Wrap the integral operator as an abstract coupled problem.

    Both tracking maps are the nodewise transport g with preimages through
    g_inverse.  The tuple sampler draws order-related tuples (third point
    above the first, fourth below the second) so the order-gated checkers
    always find eligible samples in this strongly partial order.
    """
    if kernels is None:
        kernels = make_kernels(spec)
    space = grid_function_space(spec.T, spec.N)

    def operator(u, v):
        return apply_F(spec, kernels, u, v)

    def tracking(u):
        return _apply_scalar_map(spec.g, u)

    def preimage(target):
        return _apply_scalar_map(spec.g_inverse, target)

    def tuple_sampler(rng):
        x = space.sampler(rng)
        y = space.sampler(rng)
        lift = 10.0 ** rng.uniform(-3.0, 0.5)
        drop = 10.0 ** rng.uniform(-3.0, 0.5)
        up = lift * (0.2 + rng.uniform(0.0, 1.0, x.values.size))
        down = drop * (0.2 + rng.uniform(0.0, 1.0, y.values.size))
        u = GridFunction(x.values + up, spec.T)
        v = GridFunction(y.values - down, spec.T)
        return (x, y, u, v)

    return CoupledProblem(
        space=space,
        F=operator,
        G=tracking,
        S=tracking,
        G_preimage=preimage,
        S_preimage=preimage,
        tuple_sampler=tuple_sampler,
    )


def iteration_start(spec: BvpSpec, kernels: KernelPair, alpha: GridFunction,
                    beta: GridFunction) -> tuple:
    """Starting quadruple for the interleaved iteration.

    The even chain starts at (alpha, beta); the odd chain starts one F
    application ahead, at the g-preimages of F(alpha, beta) and
    F(beta, alpha).  Starting both chains at the same pair would make the
    pairing distance identically zero (the chains would coincide forever)
    and certify before any contraction happened; the stagger is what gives
    M its meaning.
    """
    fab = apply_F(spec, kernels, alpha, beta)
    fba = apply_F(spec, kernels, beta, alpha)
    x1 = _apply_scalar_map(spec.g_inverse, fab)
    y1 = _apply_scalar_map(spec.g_inverse, fba)
    return (alpha, beta, x1, y1)


class NonCollapseError(RuntimeError):
    """The pair iteration certified without collapsing to one function.

    The periodic problem's answer is a single function; when the certified
    pair keeps u and v measurably apart there is no single function to
    report.  gap carries the offending distance.  Certifying at a loose
    tolerance is the usual cause.
    """

    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


@dataclass
class BvpSolution:
    """Solver output.

    u is the reported periodic solution and v its pair partner (equal to u
    within collapse_gap).  result is the full iteration outcome.
    max_residual is the worst coincidence residual, ode_defect the worst
    nodewise defect of u against the differential equation under periodic
    central differences, periodicity_gap the endpoint mismatch
    |u(0) - u(T)|, and collapse_gap the sup distance between u and v.
    """

    u: GridFunction
    v: GridFunction
    result: Any
    max_residual: float
    ode_defect: float
    periodicity_gap: float
    collapse_gap: float


# Below this decay-rate split the pair map's linear rate
# 2 lambda2 / (lambda1 - lambda2) reaches 1 and the iteration stalls.
SLOW_SPLIT_FACTOR = 3.0


def solve_bvp(spec: BvpSpec, alpha, beta, tol: float = 1e-12,
              max_iter: int = 10_000, collapse_tol: Optional[float] = None) -> BvpSolution:
    """Solve the periodic problem by the interleaved pair iteration.

    alpha and beta may be GridFunctions on the spec's grid, scalars, or
    arrays of N+1 node values; they must form a lower/upper bracketing
    pair (checked, ValueError otherwise).  A run that fails to certify is
    returned with its status rather than raised, so callers can inspect
    the trace.  A certified run whose pair did not collapse to a single
    function raises NonCollapseError; collapse_tol defaults to tol.
    """
    kernels = make_kernels(spec)
    alpha = _as_grid(alpha, spec)
    beta = _as_grid(beta, spec)

    pair_check = verify_lower_upper(spec, kernels, alpha, beta)
    if not pair_check.passed:
        worst = pair_check.worst()
        raise ValueError(
            "(alpha, beta) is not a lower/upper bracketing pair: "
            f"{worst.prop} fails at node {worst.witness[0]} "
            f"(t={worst.witness[1]:.6g}) by {worst.margin:.3g}"
        )

    if spec.lambda1 <= SLOW_SPLIT_FACTOR * spec.lambda2:
        warnings.warn(
            "decay split lambda1 <= 3 lambda2: the pair iteration's linear "
            f"rate 2 lambda2 / (lambda1 - lambda2) is "
            f"{2 * spec.lambda2 / (spec.lambda1 - spec.lambda2):.3g} >= 1, "
            "so the run may not converge",
            RuntimeWarning,
            stacklevel=2,
        )

    problem = coupled_problem_from_spec(spec, kernels)
    start = iteration_start(spec, kernels, alpha, beta)
    state = init_iteration(problem, *start)
    result = run(problem, state, tol=tol, max_iter=max_iter)

    u = result.alpha
    v = result.alpha_prime
    gap = sup_distance(u, v)
    defect, pgap = ode_residual(spec, u)

    if result.status == "converged":
        threshold = tol if collapse_tol is None else collapse_tol
        if gap > threshold:
            raise NonCollapseError(
                f"pair iteration certified but u and v stay {gap:.6g} apart "
                f"(collapse tolerance {threshold:.6g}); no single periodic "
                "function to report",
                gap=float(gap),
            )

    return BvpSolution(
        u=u,
        v=v,
        result=result,
        max_residual=float(result.max_residual),
        ode_defect=float(defect),
        periodicity_gap=float(pgap),
        collapse_gap=float(gap),
    )


def _as_grid(value, spec: BvpSpec) -> GridFunction:
    if isinstance(value, GridFunction):
        _check_grid_matches(spec, value)
        return value
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return GridFunction.constant(float(arr), spec.T, spec.N)
    if arr.ndim == 1 and arr.size == spec.N + 1:
        return GridFunction(arr, spec.T)
    raise ValueError(
        f"expected a scalar or {spec.N + 1} node values, got shape {arr.shape}"
    )


def ode_residual(spec: BvpSpec, u: GridFunction) -> tuple:
    """Defect of u against u' = f(t, u) + h(t, u), plus the endpoint gap.

    The derivative is a periodic central difference over the core nodes
    0..N-1 (node N duplicates node 0 on the circle).  Returns
    (max_residual, |u(0) - u(T)|).
    """
    _check_grid_matches(spec, u)
    n = u.n_panels
    core = u.values[:n]
    ts = u.nodes[:n]
    delta = spec.T / n
    du = (np.roll(core, -1) - np.roll(core, 1)) / (2.0 * delta)
    rhs = _eval_rhs(spec.f, ts, core, "f(t, u)") + _eval_rhs(spec.h, ts, core, "h(t, u)")
    residual = float(np.max(np.abs(du - rhs)))
    gap = float(abs(u.values[0] - u.values[n]))
    return residual, gap


def affine_rhs(slope: float, intercept: float) -> Callable:
    """Source term slope * u + intercept, independent of t."""

    def rhs(t, u):
        return slope * u + intercept

    return rhs


def sin_forced_rhs(slope: float, amplitude: float, frequency: float) -> Callable:
    """Source term slope * u + amplitude * sin(2 pi frequency t)."""
    omega = 2.0 * math.pi * frequency

    def rhs(t, u):
        return slope * u + amplitude * np.sin(omega * t)

    return rhs


BUILTIN_RHS = {
    "affine": affine_rhs,
    "sin_forced": sin_forced_rhs,
}


def make_rhs(config) -> Callable:
    """Build a source term from a config mapping.

    Accepts {"kind": "affine", "slope": -4, "intercept": 2} or the
    one-key shorthand {"affine": {"slope": -4, "intercept": 2}}.
    """
    if not isinstance(config, dict):
        raise ValueError("rhs config must be a mapping")
    cfg = dict(config)
    kind = cfg.pop("kind", None)
    if kind is None:
        if len(cfg) == 1:
            kind, params = next(iter(cfg.items()))
            if not isinstance(params, dict):
                raise ValueError("rhs shorthand must map a kind to its parameters")
            cfg = dict(params)
        else:
            raise ValueError("rhs config needs a 'kind' key")
    if kind not in BUILTIN_RHS:
        raise ValueError(
            f"unknown rhs kind {kind!r}; known kinds: {sorted(BUILTIN_RHS)}"
        )
    try:
        return BUILTIN_RHS[kind](**cfg)
    except TypeError as exc:
        raise ValueError(f"bad parameters for rhs kind {kind!r}: {exc}") from exc
