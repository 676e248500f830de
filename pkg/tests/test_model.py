"""Model layer: profiles, equilibria, bistable window, hypothesis checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frontier.errors import DomainError, HypothesisError
from frontier.model import (
    MARGINAL,
    SADDLE,
    STABLE,
    UNSTABLE,
    CompetitionModel,
    GradientSpec,
    equilibria,
    equilibrium_derivatives,
    evaluate_reaction,
    find_bistable_interval,
    jacobian,
    saturation_coefficient,
    verify_hypotheses,
)


def linear_model(s_a=2.0, s_b=2.0, d_a=1.0, d_b=1.0):
    return CompetitionModel(
        gradient_a=GradientSpec.linear(2.0, -1.5),
        gradient_b=GradientSpec.linear(0.5, 1.5),
        s_a=s_a, s_b=s_b, d_a=d_a, d_b=d_b)


class TestGradientSpec:
    def test_linear_values_and_direction(self):
        g = GradientSpec.linear(2.0, -1.5)
        assert g.direction == "decreasing"
        assert g(0.0) == pytest.approx(2.0)
        assert g(1.0) == pytest.approx(0.5)
        assert g.derivative(0.3) == pytest.approx(-1.5)

    def test_exponential(self):
        g = GradientSpec.exponential(2.0, -1.0)
        assert g(0.0) == pytest.approx(2.0)
        assert g(1.0) == pytest.approx(2.0 * math.exp(-1.0))
        assert g.derivative(0.5) == pytest.approx(-2.0 * math.exp(-0.5))
        assert g.direction == "decreasing"

    def test_tabulated_matches_knots(self):
        knots = [0.0, 0.25, 0.5, 0.75, 1.0]
        values = [2.0, 1.7, 1.2, 0.8, 0.5]
        g = GradientSpec.tabulated(knots, values)
        for k, v in zip(knots, values):
            assert g(k) == pytest.approx(v)
        assert g.direction == "decreasing"

    def test_floor_violation_rejected(self):
        with pytest.raises(DomainError):
            GradientSpec.linear(1.0, -1.0)  # hits 0 at x=1

    def test_non_monotone_tabulated_rejected(self):
        with pytest.raises(DomainError):
            GradientSpec.tabulated([0.0, 0.5, 1.0], [1.0, 2.0, 1.5])

    def test_knots_must_cover_domain(self):
        with pytest.raises(DomainError):
            GradientSpec.tabulated([0.1, 0.5, 1.0], [2.0, 1.5, 1.0])

    def test_vector_evaluation(self):
        g = GradientSpec.linear(2.0, -1.5)
        xs = np.array([0.0, 0.5, 1.0])
        np.testing.assert_allclose(g(xs), [2.0, 1.25, 0.5])

    @given(st.floats(0.1, 5.0), st.floats(-3.0, -0.01))
    @settings(max_examples=30, deadline=None)
    def test_tabulated_tracks_linear_profile(self, c0, c1):
        # monotone cubic through linear data reproduces the line
        if c0 + c1 >= 0.05:
            knots = np.linspace(0.0, 1.0, 7)
            g = GradientSpec.tabulated(knots, c0 + c1 * knots, floor=1e-4)
            xs = np.linspace(0.0, 1.0, 41)
            np.testing.assert_allclose(g(xs), c0 + c1 * xs, atol=1e-12)


class TestReaction:
    def test_values_at_origin(self):
        m = linear_model()
        out = evaluate_reaction(m, 0.0, 0.0, 0.0)
        assert out.g_a == pytest.approx(2.0)
        assert out.g_b == pytest.approx(0.5)
        assert (out.dga_da, out.dga_db) == (-1.0, -2.0)
        assert (out.dgb_da, out.dgb_db) == (-2.0, -1.0)

    def test_zero_at_interior_crossing(self):
        m = linear_model()
        out = evaluate_reaction(m, 0.5, 5.0 / 12.0, 5.0 / 12.0)
        assert abs(out.g_a) < 1e-14
        assert abs(out.g_b) < 1e-14

    def test_position_out_of_range(self):
        with pytest.raises(DomainError):
            evaluate_reaction(linear_model(), 1.2, 0.0, 0.0)

    def test_vectorized(self):
        m = linear_model()
        xs = np.linspace(0.0, 1.0, 5)
        out = evaluate_reaction(m, xs, np.zeros(5), np.zeros(5))
        np.testing.assert_allclose(out.g_a, 2.0 - 1.5 * xs)

    def test_reaction_bound(self):
        # over [0,2]x[0,2]: g_a in [0.5-2-4, 2], so |g| peaks at 5.5
        assert linear_model().reaction_bound() == pytest.approx(5.5)


class TestEquilibria:
    def test_midpoint_set(self):
        eq = equilibria(linear_model(), 0.5)
        assert eq.origin.label == UNSTABLE
        assert eq.pure_a.a == pytest.approx(1.25)
        assert eq.pure_a.label == STABLE
        assert eq.pure_b.b == pytest.approx(1.25)
        assert eq.pure_b.label == STABLE
        assert eq.saddle is not None
        assert eq.saddle.a == pytest.approx(5.0 / 12.0)
        assert eq.saddle.b == pytest.approx(5.0 / 12.0)
        assert eq.saddle.label == SADDLE

    def test_saddle_eigenvalues_midpoint(self):
        # Jacobian -(5/12) * [[1, 2], [2, 1]] has eigenvalues 5/12, -15/12
        eq = equilibria(linear_model(), 0.5)
        eigs = sorted(np.real(eq.saddle.eigenvalues))
        assert eigs[0] == pytest.approx(-15.0 / 12.0)
        assert eigs[1] == pytest.approx(5.0 / 12.0)

    def test_saddle_absent_outside_window(self):
        eq = equilibria(linear_model(), 0.05)
        assert eq.saddle is None

    def test_saddle_degenerate_at_threshold(self):
        # at the lower threshold the interior state touches the pure state
        eq = equilibria(linear_model(), 2.0 / 9.0)
        assert eq.saddle is not None
        assert eq.saddle.a == pytest.approx(0.0, abs=1e-12)
        assert eq.saddle.label == MARGINAL

    def test_stability_exchange_across_upper_threshold(self):
        m = linear_model()
        assert equilibria(m, 7.0 / 9.0 - 0.01).pure_a.label == STABLE
        assert equilibria(m, 7.0 / 9.0 + 0.01).pure_a.label == UNSTABLE

    def test_stability_exchange_across_lower_threshold(self):
        m = linear_model()
        assert equilibria(m, 2.0 / 9.0 + 0.01).pure_b.label == STABLE
        assert equilibria(m, 2.0 / 9.0 - 0.01).pure_b.label == UNSTABLE

    @given(st.floats(0.0, 1.0))
    @settings(max_examples=60, deadline=None)
    def test_equilibria_kill_the_field(self, x):
        m = linear_model()
        eq = equilibria(m, x)
        for e in (eq.origin, eq.pure_a, eq.pure_b):
            ga, gb = m.growth(x, e.a, e.b)
            assert abs(e.a * ga) < 1e-12 and abs(e.b * gb) < 1e-12
        if eq.saddle is not None:
            ga, gb = m.growth(x, eq.saddle.a, eq.saddle.b)
            assert abs(ga) < 1e-12 and abs(gb) < 1e-12

    @given(st.floats(0.23, 0.77))
    @settings(max_examples=60, deadline=None)
    def test_saddle_determinant_negative_inside_window(self, x):
        eq = equilibria(linear_model(), x)
        assert eq.saddle is not None
        det = float(np.linalg.det(
            jacobian(linear_model(), x, eq.saddle.a, eq.saddle.b)))
        assert det < 0.0


class TestBistableInterval:
    def test_reference_thresholds(self):
        w = find_bistable_interval(linear_model())
        assert w.lower == pytest.approx(2.0 / 9.0, abs=1e-12)
        assert w.upper == pytest.approx(7.0 / 9.0, abs=1e-12)

    def test_asymmetric_thresholds(self):
        # s_b=3 moves the upper root: 0.5+1.5x = 3(2-1.5x) -> x = 11/12
        w = find_bistable_interval(linear_model(s_b=3.0))
        assert w.lower == pytest.approx(2.0 / 9.0, abs=1e-12)
        assert w.upper == pytest.approx(11.0 / 12.0, abs=1e-12)

    def test_no_sign_change_raises(self):
        m = CompetitionModel(
            gradient_a=GradientSpec.linear(2.0, -1.5),
            gradient_b=GradientSpec.linear(0.5, 1.5),
            s_a=10.0, s_b=10.0)
        with pytest.raises(HypothesisError):
            find_bistable_interval(m)

    def test_margins_vanish_at_roots(self):
        m = linear_model()
        w = find_bistable_interval(m)
        assert m.f_a(w.lower) - m.s_a * m.f_b(w.lower) == pytest.approx(
            0.0, abs=1e-10)
        assert m.f_b(w.upper) - m.s_b * m.f_a(w.upper) == pytest.approx(
            0.0, abs=1e-10)


class TestEquilibriumDerivatives:
    def test_reference_values_midpoint(self):
        d = equilibrium_derivatives(linear_model(), 0.5)
        assert d.pure_a == pytest.approx(-1.5)
        assert d.pure_b == pytest.approx(1.5)
        # interior branch: a*(x) = 1.5x - 1/3, b*(x) = (3.5 - 4.5x)/3
        assert d.saddle_a == pytest.approx(1.5)
        assert d.saddle_b == pytest.approx(-1.5)

    def test_outside_window_rejected(self):
        with pytest.raises(DomainError):
            equilibrium_derivatives(linear_model(), 0.1)

    @given(st.floats(0.24, 0.76))
    @settings(max_examples=40, deadline=None)
    def test_matches_finite_differences(self, x):
        m = linear_model()
        d = equilibrium_derivatives(m, x)
        h = 1e-6
        lo, hi = equilibria(m, x - h), equilibria(m, x + h)
        assert d.saddle_a == pytest.approx(
            (hi.saddle.a - lo.saddle.a) / (2 * h), abs=1e-6)
        assert d.saddle_b == pytest.approx(
            (hi.saddle.b - lo.saddle.b) / (2 * h), abs=1e-6)
        assert d.pure_a == pytest.approx(
            (hi.pure_a.a - lo.pure_a.a) / (2 * h), abs=1e-6)


class TestVerifyHypotheses:
    def test_reference_model_passes(self):
        report = verify_hypotheses(linear_model())
        assert report.all_passed
        codes = {c.code for c in report.checks}
        assert codes == {"H1", "H2", "H3", "GH2", "GH1a", "GH1b", "GH1c"}

    def test_weak_competition_fails_h3(self):
        report = verify_hypotheses(linear_model(s_a=0.5, s_b=0.5))
        assert not report["H3"].passed

    def test_wrong_direction_fails_h1_gh2(self):
        m = CompetitionModel(
            gradient_a=GradientSpec.linear(0.5, 1.5),  # increasing, wrong
            gradient_b=GradientSpec.linear(0.6, 1.5),
            s_a=2.0, s_b=2.0)
        report = verify_hypotheses(m)
        assert not report["H1"].passed
        assert report["H1"].first_violation is not None
        assert 0.0 <= report["H1"].first_violation <= 1.0
        assert not report["GH2"].passed

    def test_exponential_demo_model_passes(self):
        m = CompetitionModel(
            gradient_a=GradientSpec.exponential(2.0, -1.0),
            gradient_b=GradientSpec.exponential(2.0 * math.exp(-1.0), 1.0),
            s_a=2.0, s_b=2.0)
        assert verify_hypotheses(m).all_passed


class TestSaturationCoefficient:
    def test_reference_pairs(self):
        assert saturation_coefficient(1.0, 2.0) == pytest.approx(2.0)
        assert saturation_coefficient(3.0, 4.0) == pytest.approx(4.0)

    def test_equal_rates_rejected(self):
        with pytest.raises(DomainError):
            saturation_coefficient(2.0, 2.0)

    def test_inverted_rates_rejected(self):
        with pytest.raises(DomainError):
            saturation_coefficient(3.0, 2.0)

    @given(st.floats(0.01, 10.0), st.floats(0.01, 10.0))
    @settings(max_examples=50, deadline=None)
    def test_exceeds_one_whenever_defined(self, p, q):
        if p < q:
            assert saturation_coefficient(p, q) > 1.0


class TestConstructorGuards:
    def test_negative_diffusivity(self):
        with pytest.raises(DomainError):
            linear_model(d_a=-1.0)

    def test_negative_competition(self):
        with pytest.raises(DomainError):
            linear_model(s_a=-0.5)
