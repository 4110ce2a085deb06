"""Grid functions, kernels, quadrature, growth audit, and the BVP solver."""

import math
import warnings

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coupledpoint import (
    BvpSpec,
    GridFunction,
    NonCollapseError,
    affine_rhs,
    apply_F,
    check_growth_conditions,
    check_metric_order_axioms,
    check_mixed_GS_monotone,
    coupled_problem_from_spec,
    greens_weights,
    grid_function_space,
    iteration_start,
    kernel_quadrature_masses,
    make_kernels,
    make_rhs,
    ode_residual,
    pointwise_leq,
    sin_forced_rhs,
    solve_bvp,
    sup_distance,
    verify_lower_upper,
)

from helpers import degenerate_spec, monotone_spec


class TestGridFunction:
    def test_constant_and_nodes(self):
        u = GridFunction.constant(2.5, 1.0, 8)
        assert u.values.shape == (9,)
        assert u.n_panels == 8
        assert u.nodes[0] == 0.0 and u.nodes[-1] == 1.0

    def test_from_callable(self):
        u = GridFunction.from_callable(lambda t: t * t, 2.0, 4)
        assert u.values[-1] == pytest.approx(4.0)

    def test_values_are_read_only(self):
        u = GridFunction.constant(0.0, 1.0, 4)
        with pytest.raises(ValueError):
            u.values[0] = 1.0

    def test_validation(self):
        with pytest.raises(ValueError):
            GridFunction(np.array([1.0]), 1.0)
        with pytest.raises(ValueError):
            GridFunction(np.array([1.0, math.nan]), 1.0)
        with pytest.raises(ValueError):
            GridFunction(np.array([1.0, 2.0]), 0.0)

    def test_sup_distance_and_grid_mismatch(self):
        u = GridFunction.constant(1.0, 1.0, 4)
        v = GridFunction.constant(3.5, 1.0, 4)
        assert sup_distance(u, v) == 2.5
        w = GridFunction.constant(0.0, 1.0, 5)
        with pytest.raises(ValueError, match="grid mismatch"):
            sup_distance(u, w)

    def test_pointwise_leq_three_outcomes(self):
        lo = GridFunction.constant(0.0, 1.0, 4)
        hi = GridFunction.constant(1.0, 1.0, 4)
        crossing = GridFunction(np.array([-1.0, 2.0, -1.0, 2.0, -1.0]), 1.0)
        assert pointwise_leq(lo, hi) is True
        assert pointwise_leq(hi, lo) is False
        assert pointwise_leq(crossing, lo) is None

    @given(
        shift=st.floats(min_value=-2.0, max_value=2.0, allow_nan=False),
        bumps=st.lists(
            st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
            min_size=5, max_size=5,
        ),
    )
    @settings(max_examples=50, deadline=None)
    def test_pointwise_leq_matches_numpy(self, shift, bumps):
        base = np.linspace(-1.0, 1.0, 5) + shift
        u = GridFunction(base, 1.0)
        v = GridFunction(base + np.array(bumps), 1.0)
        # v >= u by construction
        assert pointwise_leq(u, v) is True
        got = pointwise_leq(v, u)
        if all(b == 0.0 for b in bumps):
            assert got is True
        else:
            assert got is False


class TestBvpSpecValidation:
    def test_defaults_fine(self):
        spec = degenerate_spec()
        assert spec.contraction_number == pytest.approx(0.4)
        assert spec.grid.size == spec.N + 1

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"T": 0.0},
            {"lambda2": 0.0},
            {"lambda2": -1.0},
            {"mu1": -0.5},
            {"N": 3},
            {"quadrature": "simpson"},
        ],
    )
    def test_bad_fields_raise(self, kwargs):
        base = dict(T=1.0, lambda1=4.0, lambda2=1.0, mu1=1.0, mu2=1.0,
                    f=affine_rhs(-4.0, 2.0), h=affine_rhs(-1.0, 3.0), N=16)
        base.update(kwargs)
        with pytest.raises(ValueError):
            BvpSpec(**base)

    def test_lambda_order_enforced(self):
        with pytest.raises(ValueError, match="lambda1 >= lambda2"):
            BvpSpec(T=1.0, lambda1=1.0, lambda2=2.0, mu1=0.0, mu2=0.0,
                    f=affine_rhs(0.0, 0.0), h=affine_rhs(0.0, 0.0), N=8)

    def test_equal_lambdas_fail_at_kernel_build(self):
        spec = BvpSpec(T=1.0, lambda1=2.0, lambda2=2.0, mu1=0.0, mu2=0.0,
                       f=affine_rhs(0.0, 0.0), h=affine_rhs(0.0, 0.0), N=8)
        with pytest.raises(ValueError, match="denominator"):
            make_kernels(spec)


def _mp_single_kernel(sigma, period, t, s):
    num = mp.exp(sigma * (t - s)) if s <= t else mp.exp(sigma * (t + period - s))
    return num / (1 - mp.exp(sigma * period))


class TestKernels:
    def test_point_values_match_high_precision(self):
        # independent evaluation of both combination kernels at 50 digits
        spec = degenerate_spec(lambda1=2.0, lambda2=1.0, n=8)
        kernels = make_kernels(spec)
        assert kernels.sigma1 == -3.0
        assert kernels.sigma2 == -1.0
        with mp.workdps(50):
            for t, s in [(0.5, 0.25), (0.25, 0.5), (0.0, 0.75), (1.0, 0.0),
                         (0.3, 0.3)]:
                ka = _mp_single_kernel(mp.mpf(-3), mp.mpf(1), mp.mpf(t), mp.mpf(s))
                kb = _mp_single_kernel(mp.mpf(-1), mp.mpf(1), mp.mpf(t), mp.mpf(s))
                want_k1 = float((ka + kb) / 2)
                want_k2 = float((kb - ka) / 2)
                assert float(kernels.k1(t, s)) == pytest.approx(want_k1, rel=1e-13)
                assert float(kernels.k2(t, s)) == pytest.approx(want_k2, rel=1e-13)

    def test_positivity_ordering(self):
        rng = np.random.default_rng(3)
        for lam1, lam2 in [(2.0, 1.0), (4.0, 1.0), (5.0, 2.0)]:
            spec = degenerate_spec(lambda1=lam1, lambda2=lam2, n=8)
            kernels = make_kernels(spec)
            t = rng.uniform(0.0, 1.0, 500)
            s = rng.uniform(0.0, 1.0, 500)
            k1 = kernels.k1(t, s)
            k2 = kernels.k2(t, s)
            assert np.all(k1 > 0.0)
            assert np.all(k2 > 0.0)
            assert np.all(k1 - k2 > 0.0)


class TestGreensWeights:
    def test_argument_validation(self):
        with pytest.raises(ValueError):
            greens_weights(1.0, 1.0, 8, 0.5)
        with pytest.raises(ValueError):
            greens_weights(-2.0, 1.0, 0, 0.5)
        with pytest.raises(ValueError):
            greens_weights(-2.0, 1.0, 8, 1.5)

    def test_weight_sums_hit_kernel_mass(self):
        # sum of weights must equal the exact kernel integral -1/sigma
        for sigma in (-0.5, -3.0, -5.0, -7.0):
            for n in (7, 50, 400):
                for t in (0.0, 0.31, 0.5, 0.97, 1.0):
                    w = greens_weights(sigma, 1.0, n, t)
                    assert w.shape == (n + 1,)
                    total = float(np.sum(w))
                    assert total == pytest.approx(-1.0 / sigma, rel=2e-13)

    def test_quadrature_of_smooth_integrand_matches_mpmath(self):
        sigma, period, t0 = -3.0, 1.0, 0.37

        def integrand(s):
            return math.exp(math.cos(2.0 * math.pi * s))

        w = greens_weights(sigma, period, 400, t0)
        nodes = np.linspace(0.0, period, 401)
        got = float(np.sum(w * np.array([integrand(s) for s in nodes])))

        with mp.workdps(40):
            def full(s):
                return _mp_single_kernel(
                    mp.mpf(sigma), mp.mpf(period), mp.mpf(t0), s
                ) * mp.exp(mp.cos(2 * mp.pi * s))

            # split at the kernel's jump
            want = float(mp.quad(full, [0, t0, period]))
        assert got == pytest.approx(want, abs=5e-4)

    def test_masses_match_closed_forms(self):
        for lam1, lam2 in [(2.0, 1.0), (4.0, 1.0), (5.0, 2.0)]:
            spec = degenerate_spec(lambda1=lam1, lambda2=lam2, n=8)
            kernels = make_kernels(spec)
            denom = lam1 ** 2 - lam2 ** 2
            for t in (0.0, 0.2, 0.55, 1.0):
                m1, m2 = kernel_quadrature_masses(kernels, 400, t)
                assert m1 == pytest.approx(lam1 / denom, abs=1e-9)
                assert m2 == pytest.approx(lam2 / denom, abs=1e-9)


class TestApplyF:
    def test_fixed_constant_is_reproduced(self):
        spec = degenerate_spec(n=64)
        kernels = make_kernels(spec)
        one = GridFunction.constant(1.0, spec.T, spec.N)
        image = apply_F(spec, kernels, one, one)
        assert sup_distance(image, one) <= 1e-12

    def test_constant_pair_closed_form(self):
        # for the degenerate family F(a, b) is affine in (a, b) with
        # masses lambda1, lambda2 over (lambda1^2 - lambda2^2)
        spec = degenerate_spec(n=64)
        kernels = make_kernels(spec)
        a = GridFunction.constant(0.0, spec.T, spec.N)
        b = GridFunction.constant(1.5, spec.T, spec.N)
        image = apply_F(spec, kernels, a, b)
        want = 5.0 / 3.0 - (8.0 * 1.5 + 2.0 * 0.0) / 15.0
        assert np.allclose(image.values, want, atol=1e-12)

    @pytest.mark.filterwarnings("ignore:divide by zero")
    def test_non_finite_source_is_named(self):
        spec = BvpSpec(T=1.0, lambda1=4.0, lambda2=1.0, mu1=0.0, mu2=0.0,
                       f=lambda t, u: 1.0 / (u - 1.0), h=affine_rhs(-1.0, 0.0),
                       N=8)
        kernels = make_kernels(spec)
        one = GridFunction.constant(1.0, spec.T, spec.N)
        with pytest.raises(ValueError, match="f\\(t, u\\)"):
            apply_F(spec, kernels, one, one)


class TestGrowthConditions:
    def test_degenerate_family_is_clean(self):
        report = check_growth_conditions(degenerate_spec(), sample_count=2000)
        assert report.passed
        assert report.checked > 4000

    def test_contraction_number_gate(self):
        ok = degenerate_spec(lambda1=2.0, lambda2=1.0, mu1=1.0, mu2=1.0)
        assert check_growth_conditions(ok, sample_count=200).passed

        bad = degenerate_spec(lambda1=2.0, lambda2=1.0, mu1=2.0, mu2=2.0)
        report = check_growth_conditions(bad, sample_count=200)
        assert not report.passed
        props = {v.prop for v in report.violations}
        assert "contraction number" in props

    def test_small_separation_witness_found(self):
        # f drifts 0.1 u above the pure -lambda1 u decay: the increment
        # 0.1 (a - b) beats mu1 ln(1 + (a - b)^2) at small separations
        spec = BvpSpec(T=1.0, lambda1=4.0, lambda2=1.0, mu1=5.0, mu2=1.0,
                       f=affine_rhs(-3.9, 2.0), h=affine_rhs(-1.0, 3.0), N=16)
        report = check_growth_conditions(spec, sample_count=0)
        hits = [v for v in report.violations if v.prop == "f-growth upper bound"]
        assert hits
        seps = {round(v.witness[2] - v.witness[1], 12) for v in hits}
        assert 0.01 in seps
        probe = [v for v in hits
                 if abs((v.witness[2] - v.witness[1]) - 0.01) < 1e-12]
        assert probe[0].margin == pytest.approx(
            1e-3 - 5.0 * math.log1p(1e-4), rel=1e-9
        )

    def test_h_side_upper_bound_flagged(self):
        # h gaining on its decay rate pushes the h increment above zero
        spec = BvpSpec(T=1.0, lambda1=4.0, lambda2=1.0, mu1=1.0, mu2=1.0,
                       f=affine_rhs(-4.0, 2.0), h=affine_rhs(-0.9, 3.0), N=16)
        report = check_growth_conditions(spec, sample_count=100)
        assert "h-growth upper bound" in {v.prop for v in report.violations}


class TestLowerUpper:
    def test_valid_pair_passes(self):
        spec = degenerate_spec(n=32)
        kernels = make_kernels(spec)
        alpha = GridFunction.constant(0.0, spec.T, spec.N)
        beta = GridFunction.constant(1.5, spec.T, spec.N)
        report = verify_lower_upper(spec, kernels, alpha, beta)
        assert report.passed
        assert report.checked == 3 * (spec.N + 1)

    def test_bad_lower_is_flagged(self):
        spec = degenerate_spec(n=32)
        kernels = make_kernels(spec)
        alpha = GridFunction.constant(1.4, spec.T, spec.N)
        beta = GridFunction.constant(1.5, spec.T, spec.N)
        report = verify_lower_upper(spec, kernels, alpha, beta)
        assert "lower solution" in {v.prop for v in report.violations}

    def test_swapped_pair_is_flagged(self):
        spec = degenerate_spec(n=32)
        kernels = make_kernels(spec)
        alpha = GridFunction.constant(2.0, spec.T, spec.N)
        beta = GridFunction.constant(0.0, spec.T, spec.N)
        report = verify_lower_upper(spec, kernels, alpha, beta)
        assert "lower below upper" in {v.prop for v in report.violations}


class TestCoupledWrapping:
    def test_grid_space_axioms(self):
        space = grid_function_space(1.0, 12)
        report = check_metric_order_axioms(space, sample_count=24)
        assert report.passed

    def test_monotone_instance_is_mixed_monotone(self):
        problem = coupled_problem_from_spec(monotone_spec(n=24))
        report = check_mixed_GS_monotone(problem, sample_count=60)
        assert report.passed
        assert report.checked > 0

    def test_iteration_start_is_staggered(self):
        spec = degenerate_spec(n=32)
        kernels = make_kernels(spec)
        alpha = GridFunction.constant(0.0, spec.T, spec.N)
        beta = GridFunction.constant(1.5, spec.T, spec.N)
        x0, y0, x1, y1 = iteration_start(spec, kernels, alpha, beta)
        assert x0 is alpha and y0 is beta
        assert sup_distance(x1, alpha) > 0.1
        assert np.allclose(x1.values, 13.0 / 15.0, atol=1e-12)
        assert np.allclose(y1.values, 22.0 / 15.0, atol=1e-12)


class TestSolveBvp:
    def test_degenerate_instance_converges_to_one(self):
        solution = solve_bvp(degenerate_spec(), 0.0, 1.5, tol=1e-12)
        assert solution.result.status == "converged"
        assert np.max(np.abs(solution.u.values - 1.0)) <= 1e-6
        assert solution.ode_defect <= 1e-4
        assert solution.periodicity_gap <= 1e-10
        assert solution.collapse_gap <= 1e-11
        # first-slot monotonicity genuinely fails for this instance
        # (the partner kernel weight is positive), so the chain log
        # must carry events even on a certified run
        assert len(solution.result.chain_events) > 0

    def test_list_and_grid_brackets_accepted(self):
        spec = degenerate_spec(n=32)
        alpha = [0.0] * (spec.N + 1)
        beta = GridFunction.constant(1.5, spec.T, spec.N)
        solution = solve_bvp(spec, alpha, beta, tol=1e-10)
        assert solution.result.status == "converged"

    def test_wrong_length_bracket_rejected(self):
        spec = degenerate_spec(n=32)
        with pytest.raises(ValueError, match="node values"):
            solve_bvp(spec, [0.0] * 7, 1.5)

    def test_invalid_pair_is_rejected_with_worst_violation(self):
        with pytest.raises(ValueError, match="bracketing pair"):
            solve_bvp(degenerate_spec(n=32), 2.0, 1.0)

    def test_budget_exhaustion_returns_unconverged(self):
        solution = solve_bvp(degenerate_spec(n=32), 0.0, 1.5, tol=1e-12,
                             max_iter=5)
        assert solution.result.status == "chain_violation"
        assert solution.result.iterations == 5

    def test_loose_tolerance_raises_non_collapse(self):
        with pytest.raises(NonCollapseError) as exc_info:
            solve_bvp(degenerate_spec(n=64), 0.0, 2.0, tol=0.1)
        assert 0.05 < exc_info.value.gap < 0.5

    def test_slow_split_warns_and_run_fails(self):
        # at (2, 1) the pair map's sum mode has factor
        # -2 lambda2 / (lambda1 - lambda2) = -2, so the iteration must
        # blow up; the warning announces exactly this
        spec = degenerate_spec(lambda1=2.0, lambda2=1.0, n=32)
        with pytest.warns(RuntimeWarning, match="decay split"):
            solution = solve_bvp(spec, 0.0, 3.0, tol=1e-10, max_iter=2000)
        assert solution.result.status != "converged"
        assert solution.result.iterations < 100

    def test_fast_split_does_not_warn(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            solve_bvp(degenerate_spec(n=32), 0.0, 1.5, tol=1e-10)


class TestOdeResidual:
    def test_true_solution_has_small_defect(self):
        spec = degenerate_spec()
        u = GridFunction.constant(1.0, spec.T, spec.N)
        defect, gap = ode_residual(spec, u)
        assert defect <= 1e-12
        assert gap == 0.0

    def test_wrong_function_has_large_defect(self):
        spec = degenerate_spec()
        u = GridFunction(np.linspace(0.0, 1.0, spec.N + 1), spec.T)
        defect, gap = ode_residual(spec, u)
        assert defect > 1.0
        assert gap == 1.0


class TestRhsFactories:
    def test_affine(self):
        rhs = affine_rhs(-4.0, 2.0)
        assert rhs(0.3, 1.0) == pytest.approx(-2.0)

    def test_sin_forced(self):
        rhs = sin_forced_rhs(-4.0, 1.0, 1.0)
        assert rhs(0.25, 0.0) == pytest.approx(1.0)

    def test_make_rhs_kinds_and_shorthand(self):
        rhs = make_rhs({"kind": "affine", "slope": -4.0, "intercept": 2.0})
        assert rhs(0.0, 1.0) == pytest.approx(-2.0)
        rhs2 = make_rhs({"sin_forced": {"slope": -4.0, "amplitude": 1.0,
                                        "frequency": 1.0}})
        assert rhs2(0.25, 0.0) == pytest.approx(1.0)

    def test_make_rhs_rejects_garbage(self):
        with pytest.raises(ValueError, match="unknown rhs kind"):
            make_rhs({"kind": "fourier"})
        with pytest.raises(ValueError, match="kind"):
            make_rhs({"slope": 1.0, "intercept": 0.0})
        with pytest.raises(ValueError, match="parameters"):
            make_rhs({"kind": "affine", "slope": 1.0})
