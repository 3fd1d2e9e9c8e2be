import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mlorder.exceptions import DomainError, MLOverflowError
from mlorder.inverse import (
    G,
    PointObservation,
    PskhuProblem,
    Status,
    _bisect,
    alimov_U,
    check_hypotheses,
    compute_n0,
    norm_map,
    pskhu_forward,
    pskhu_log_map,
    pskhu_map,
    solve_alimov,
    solve_norm,
    solve_point,
    solve_pskhu,
)
from mlorder.monotonicity import threshold_increasing
from mlorder.oracle import ml_reference
from mlorder.special import dml_drho_scaled
from mlorder.spectral import (
    DerivativeKind,
    InitialField,
    SpectralDomain,
    forward_eval,
    l2_norm_sq,
    solve_forward,
)

DOM = SpectralDomain.interval(1.0, 10)
FIELD = InitialField.given([0.6, 0.2, 0.05])
RHO0 = 0.5
T0 = 0.02
X0 = 0.3


def point_data(rho, field=FIELD, x0=X0, t0=T0):
    return forward_eval(solve_forward(DOM, field, rho), x0, t0)


class TestG:
    def test_single_mode_closed_form(self):
        f = InitialField.given([0.7])
        assert G(1.0, DOM, f, X0, T0) == pytest.approx(0.7 * math.exp(-math.pi**2 * T0)
                                                       * DOM.v(1, X0), rel=1e-14)

    def test_small_time_limit(self):
        expect = math.fsum(FIELD.coefficients * DOM.eigenfunction_values(X0, 3))
        assert G(0.6, DOM, FIELD, X0, 1e-300) == pytest.approx(expect, rel=1e-14)

    def test_multimode_oracle(self):
        lam = DOM.eigenvalues[:3]
        v = DOM.eigenfunction_values(X0, 3)
        ref = math.fsum(c * ml_reference(0.6, 1, -l * T0**0.6) * vk
                        for c, l, vk in zip(FIELD.coefficients, lam, v))
        assert G(0.6, DOM, FIELD, X0, T0) == pytest.approx(ref, rel=1e-13)

    def test_matches_forward(self):
        assert G(0.7, DOM, FIELD, X0, T0) == pytest.approx(point_data(0.7), rel=1e-15)

    def test_bad_n(self):
        with pytest.raises(DomainError):
            G(0.7, DOM, FIELD, X0, T0, N=4)


class TestN0:
    def test_single_mode(self):
        assert compute_n0(1e-12, RHO0, T0, DOM, InitialField.given([1.0])) == 1

    def test_vacuous(self):
        assert compute_n0(1e3, RHO0, T0, DOM, FIELD) == 1

    def test_power_decay(self):
        dom = SpectralDomain.interval(1.0, 40)
        k = np.arange(1, 41)
        field = InitialField.given(k**-3.0)
        n0 = compute_n0(1e-4, 0.3, 0.01, dom, field, 0.3)
        assert n0 == 15
        # direct tail with the same sampled sup
        grid = np.linspace(0.3, 0.999, 32)
        w = [k_**-3.0 * abs(dom.v(k_, 0.3)) * 2
             * max(abs(dml_drho_scaled(float(r), float(dom.eigenvalues[k_ - 1]), 0.01))
                   for r in grid) for k_ in range(1, 41)]
        assert math.fsum(w[n0:]) < 1e-4 <= math.fsum(w[n0 - 1:])

    def test_sup_norm_is_conservative(self):
        dom = SpectralDomain.interval(1.0, 40)
        field = InitialField.given(np.arange(1, 41) ** -3.0)
        assert compute_n0(1e-4, 0.3, 0.01, dom, field) >= compute_n0(1e-4, 0.3, 0.01, dom,
                                                                     field, 0.3)

    def test_incomplete_field_error(self):
        field = InitialField.given(np.ones(10), complete=False)
        with pytest.raises(DomainError):
            compute_n0(1e-12, RHO0, T0, DOM, field)

    @given(st.floats(1e-10, 1e-2), st.floats(1.5, 100.0))
    @settings(max_examples=15)
    def test_monotone_in_epsilon(self, eps, factor):
        field = InitialField.given(np.arange(1, 11) ** -2.0)
        assert compute_n0(eps * factor, RHO0, T0, DOM, field) <= compute_n0(eps, RHO0, T0, DOM,
                                                                            field)


class TestHypotheses:
    def test_single_positive_mode(self):
        h = check_hypotheses(1e-6, RHO0, PointObservation(X0, T0, 0.0), DOM,
                             InitialField.given([1.0]))
        assert h.verified and h.n0 == 1 and h.M_values[0] > 0

    def test_negative_coefficient(self):
        h = check_hypotheses(1e-6, RHO0, PointObservation(X0, T0, 0.0), DOM,
                             InitialField.given([-1.0]))
        assert not h.per_mode_sign_ok and not h.verified

    def test_negative_eigenfunction_value(self):
        # v_3(0.5) = -sqrt(2)
        h = check_hypotheses(1e-6, RHO0, PointObservation(0.5, T0, 0.0), DOM, FIELD)
        assert not h.per_mode_sign_ok

    def test_margin(self):
        obs = PointObservation(X0, T0, 0.0)
        h = check_hypotheses(1e-6, RHO0, obs, DOM, FIELD)
        s = math.fsum(FIELD.coefficients[:h.n0] * DOM.eigenfunction_values(X0, h.n0))
        assert h.margin == pytest.approx(s - 1e-6 / min(h.M_values), rel=1e-14)
        assert h.margin_ok == (h.margin > 0)

    def test_borderline_margin(self):
        # margin condition fails once epsilon is large against the data
        obs = PointObservation(X0, T0, 0.0)
        field = InitialField.given([1e-3])
        small = check_hypotheses(1e-9, RHO0, obs, DOM, field)
        big = check_hypotheses(1e-2, RHO0, obs, DOM, field)
        assert small.margin_ok and not big.margin_ok

    def test_out_of_regime(self):
        h = check_hypotheses(1e-6, RHO0, PointObservation(X0, 0.5, 0.0), DOM,
                             InitialField.given([1.0]))
        assert not h.in_regime and not h.verified


class TestPoint:
    @pytest.mark.parametrize("rho", [0.55, 0.7, 0.95])
    def test_round_trip(self, rho):
        res = solve_point(PointObservation(X0, T0, point_data(rho)), DOM, FIELD, RHO0)
        assert res.status is Status.Unique
        assert abs(res.rho_hat - rho) <= 1e-8
        assert res.direction == "increasing"

    def test_endpoint(self):
        res = solve_point(PointObservation(X0, T0, point_data(1.0)), DOM, FIELD, RHO0)
        assert res.rho_hat == 1.0 and res.status is Status.Unique

    def test_below(self):
        d0 = point_data(RHO0) - 1e-3
        res = solve_point(PointObservation(X0, T0, d0), DOM, FIELD, RHO0)
        assert res.status is Status.NoSolutionBelowRange and math.isnan(res.rho_hat)

    def test_above(self):
        d0 = point_data(1.0) + 1e-3
        res = solve_point(PointObservation(X0, T0, d0), DOM, FIELD, RHO0)
        assert res.status is Status.NoSolutionAboveRange

    def test_unverified_still_solves(self):
        res = solve_point(PointObservation(X0, 0.2, point_data(0.7, t0=0.2)), DOM, FIELD, RHO0)
        assert res.status is Status.HypothesesUnverified
        assert any(abs(c - 0.7) <= 1e-8 for c in res.candidates)

    def test_result_json(self):
        res = solve_point(PointObservation(X0, T0, point_data(0.7)), DOM, FIELD, RHO0)
        d = json.loads(json.dumps(res.to_dict()))
        assert d["status"] == "Unique" and d["hypotheses"]["n0"] >= 1

    def test_bad_t0(self):
        with pytest.raises(DomainError):
            PointObservation(X0, 0.0, 1.0)

    @given(st.floats(0.2, 0.7), st.floats(0.0, 1.0), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
    @settings(max_examples=20)
    def test_admissible_round_trip(self, rho0, a, frac, x0):
        t0 = threshold_increasing(rho0) * frac
        field = InitialField.given([1.0, 0.3])
        x0 = 0.5 * x0
        if not check_hypotheses(1e-6, rho0, PointObservation(x0, t0, 0.0), DOM, field).verified:
            return
        rs = rho0 + a * (1.0 - rho0)
        d0 = forward_eval(solve_forward(DOM, field, rs), x0, t0)
        res = solve_point(PointObservation(x0, t0, d0), DOM, field, rho0)
        assert res.status is Status.Unique and abs(res.rho_hat - rs) <= 1e-6


def mixed_sign_field():
    # the mode derivatives cancel near the middle of [0.3, 1]
    return InitialField.given([1.0, -2.4852677085059014])


class TestMissingSignCondition:
    rho0 = 0.3
    x0 = 0.25

    def test_g_not_monotone(self):
        t0 = threshold_increasing(self.rho0)
        g = [G(float(r), DOM, mixed_sign_field(), self.x0, t0)
             for r in np.linspace(self.rho0, 1.0, 64)]
        assert np.any(np.diff(g) < 0) and np.any(np.diff(g) > 0)

    def test_hypotheses_flag_it(self):
        t0 = threshold_increasing(self.rho0)
        h = check_hypotheses(1e-6, self.rho0, PointObservation(self.x0, t0, 0.0), DOM,
                             mixed_sign_field())
        assert not h.per_mode_sign_ok

    def test_solver_lists_all_roots(self):
        t0 = threshold_increasing(self.rho0)
        field = mixed_sign_field()
        d0 = G(0.5, DOM, field, self.x0, t0)
        res = solve_point(PointObservation(self.x0, t0, d0), DOM, field, self.rho0)
        assert res.status is Status.HypothesesUnverified
        assert any(abs(c - 0.5) <= 1e-8 for c in res.candidates)
        assert len(res.candidates) == 2


class TestNorm:
    def test_round_trip(self):
        d0 = l2_norm_sq(solve_forward(DOM, FIELD, 0.5), T0)
        res = solve_norm(T0, d0, DOM, FIELD, 0.3)
        assert res.status is Status.Unique and abs(res.rho_hat - 0.5) <= 1e-8

    def test_t0_limit_unreachable(self):
        res = solve_norm(T0, FIELD.norm_sq, DOM, FIELD, RHO0)
        assert res.status is Status.NoSolutionAboveRange

    def test_single_mode(self):
        f = InitialField.given([2.0])
        d0 = 4.0 * ml_reference(0.8, 1, -math.pi**2 * T0**0.8) ** 2
        res = solve_norm(T0, d0, DOM, f, RHO0)
        assert abs(res.rho_hat - 0.8) <= 1e-8
        assert norm_map(0.8, T0, DOM, f) == pytest.approx(d0, rel=1e-14)

    def test_zero_field(self):
        with pytest.raises(DomainError):
            solve_norm(T0, 1.0, DOM, InitialField.given([0.0, 0.0]), RHO0)

    def test_large_time_flag(self):
        d0 = l2_norm_sq(solve_forward(DOM, FIELD, 0.7), 0.5)
        res = solve_norm(0.5, d0, DOM, FIELD, RHO0)
        assert res.status is Status.HypothesesUnverified
        res = solve_norm(0.5, d0, DOM, FIELD, RHO0, large_time=True)
        assert abs(res.rho_hat - 0.7) <= 1e-8


def alimov_problem(phi1, n=2):
    lam = [-1.0] + [float(k) for k in range(2, n + 1)]
    v = [1.0] + [0.5] * (n - 1)
    dom = SpectralDomain.custom(lam, point_values={0.5: v})
    return dom, InitialField.given([phi1] + [0.1] * (n - 1))


class TestAlimov:
    @pytest.mark.parametrize("phi1, direction", [(1.0, "decreasing"), (-1.0, "increasing")])
    def test_round_trip(self, phi1, direction):
        dom, field = alimov_problem(phi1)
        d0 = alimov_U(0.6, dom, field, 0.5, 10.0)
        res = solve_alimov(PointObservation(0.5, 10.0, d0), dom, field)
        assert abs(res.rho_hat - 0.6) <= 1e-6
        assert res.direction == direction

    def test_direction_sampled(self):
        dom, field = alimov_problem(1.0)
        u = [alimov_U(r, dom, field, 0.5, 10.0) for r in (0.3, 0.5, 0.7, 0.9)]
        assert np.all(np.diff(u) < 0)

    def test_out_of_range(self):
        dom, field = alimov_problem(1.0)
        hi = alimov_U(0.05, dom, field, 0.5, 10.0)
        res = solve_alimov(PointObservation(0.5, 10.0, 2 * hi), dom, field)
        assert res.status is Status.NoSolutionAboveRange
        res = solve_alimov(PointObservation(0.5, 10.0, -1.0), dom, field)
        assert res.status is Status.NoSolutionBelowRange

    def test_phi1_zero(self):
        dom, _ = alimov_problem(1.0)
        with pytest.raises(DomainError):
            solve_alimov(PointObservation(0.5, 10.0, 1.0), dom, InitialField.given([0.0, 1.0]))

    def test_t0_too_small(self):
        dom, field = alimov_problem(1.0)
        with pytest.raises(DomainError):
            solve_alimov(PointObservation(0.5, 0.5, 1.0), dom, field)

    def test_needs_negative_first(self):
        dom = SpectralDomain.custom([1.0, 2.0], point_values={0.5: [1.0, 1.0]})
        with pytest.raises(DomainError):
            solve_alimov(PointObservation(0.5, 10.0, 1.0), dom, InitialField.given([1.0, 1.0]))


class TestPskhu:
    def test_endpoint(self):
        res = solve_pskhu(PskhuProblem(2.0, 2.0, 0.8, 2.0 * math.exp(1.6)))
        assert res.rho_hat == 1.0 and res.status is Status.Unique

    def test_round_trip(self):
        u0 = pskhu_forward(0.4, 1.0, 2.0, 0.8)
        res = solve_pskhu(PskhuProblem(1.0, 2.0, 0.8, u0))
        assert res.status is Status.Unique and abs(res.rho_hat - 0.4) <= 1e-8

    def test_below_exp(self):
        res = solve_pskhu(PskhuProblem(1.0, 2.0, 0.8, 0.9 * math.exp(1.6)))
        assert res.status is Status.NoSolutionBelowRange

    def test_large_lambda_log_space(self):
        # the map overflows near rho0 = 0.1 but u0 itself is finite
        with pytest.raises(MLOverflowError):
            pskhu_map(0.1, 40.0, 0.9)
        u0 = pskhu_forward(0.9, 1.0, 40.0, 0.9)
        res = solve_pskhu(PskhuProblem(1.0, 40.0, 0.9, u0))
        assert abs(res.rho_hat - 0.9) <= 1e-8

    @pytest.mark.parametrize("kw", [dict(phi=0.0, lam=1.0, x0=0.5, u0=1.0),
                                    dict(phi=1.0, lam=1.0, x0=0.0, u0=1.0),
                                    dict(phi=1.0, lam=1.0, x0=0.5, u0=-1.0)])
    def test_validation(self, kw):
        with pytest.raises(DomainError):
            PskhuProblem(**kw)

    def test_map_oracle(self):
        assert pskhu_map(0.6, 0.5, 0.8) == pytest.approx(
            0.8 ** -0.4 * ml_reference(0.6, 0.6, 0.5 * 0.8**0.6), rel=1e-13)

    def test_positive_lambda_counterexample(self):
        # the map rises before it falls, on the oracle as well
        def f(r):
            return 0.8 ** (r - 1) * ml_reference(r, r, 0.5 * 0.8**r)

        assert f(0.3) < f(0.5) < f(0.7) and f(0.7) > f(1.0)
        res = solve_pskhu(PskhuProblem(1.0, 0.5, 0.8, pskhu_forward(0.8, 1.0, 0.5, 0.8)))
        assert res.status is Status.HypothesesUnverified
        assert any(abs(c - 0.8) <= 1e-8 for c in res.candidates)

    def test_negative_lambda_counterexample(self):
        # x0 = 0.1 is inside the stated decreasing regime for rho0 = 0.5
        def f(r):
            return 0.1 ** (r - 1) * ml_reference(r, r, -(0.1**r))

        assert f(0.5) < f(0.6) < f(0.65)
        res = solve_pskhu(PskhuProblem(1.0, -1.0, 0.1, pskhu_forward(0.7, 1.0, -1.0, 0.1)), 0.5)
        assert res.status is Status.HypothesesUnverified
        assert any(abs(c - 0.7) <= 1e-8 for c in res.candidates)

    @given(st.floats(1.0, 10.0), st.floats(0.05, 1.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    @settings(max_examples=30)
    def test_decreasing_for_larger_lambda(self, lam, x0, a, b):
        # holds whenever lambda >= 1 on the sampled range
        r1, r2 = sorted((0.1 + 0.9 * a, 0.1 + 0.9 * b))
        if r2 - r1 < 1e-3:
            return
        assert pskhu_log_map(r1, lam, x0) > pskhu_log_map(r2, lam, x0)


def test_bisect_keeps_sign_change():
    f = lambda r: r - 0.3137  # noqa: E731
    root, res, lo, hi, it = _bisect(f, 0.0, 1.0, f(0.0), f(1.0), 1e-14, 1e-15)
    assert f(lo) <= 0 <= f(hi) and hi - lo <= 1e-14 and abs(root - 0.3137) <= 1e-14


def test_rl_kind_forward_for_alimov():
    dom, field = alimov_problem(1.0)
    sol = solve_forward(dom, field, 0.6, DerivativeKind.RiemannLiouville)
    assert forward_eval(sol, 0.5, 10.0) == alimov_U(0.6, dom, field, 0.5, 10.0)
