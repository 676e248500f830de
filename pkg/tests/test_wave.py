import numpy as np
import pytest

from frontier.errors import DomainError, DomainTooSmallError
from frontier.model import CompetitionModel, GradientSpec
from frontier.wave import (
    BVP_SPACING,
    WaveProblem,
    default_half_length,
    front_tracking_speed,
    locate_boundary,
    solve_wave_bvp,
    speed_map,
)


def reference_model(s_b=2.0):
    return CompetitionModel(
        gradient_a=GradientSpec.linear(2.0, -1.5),
        gradient_b=GradientSpec.linear(0.5, 1.5),
        s_a=2.0, s_b=s_b)


@pytest.fixture(scope="module")
def model():
    return reference_model()


@pytest.fixture(scope="module")
def wave_mid(model):
    return solve_wave_bvp(WaveProblem(model, 0.5))


@pytest.fixture(scope="module")
def wave_03(model):
    return solve_wave_bvp(WaveProblem(model, 0.3), estimate_condition=False)


class TestWaveProblem:
    def test_default_truncation(self, model):
        p = WaveProblem(model, 0.5)
        assert p.L == pytest.approx(50.0)
        assert p.m % 2 == 1
        assert p.h == pytest.approx(BVP_SPACING, rel=1e-12)

    def test_slow_tail_extends_domain(self, model):
        # near the lower threshold the pure-b state is barely stable
        assert default_half_length(model, 0.24) > 50.0

    def test_outside_window_rejected(self, model):
        with pytest.raises(DomainError):
            WaveProblem(model, 0.1)
        with pytest.raises(DomainError):
            WaveProblem(model, 2.0 / 9.0)

    def test_equilibria_match_pure_states(self, model):
        p = WaveProblem(model, 0.4)
        a_eq, b_eq = p.equilibria
        assert a_eq == pytest.approx(2.0 - 1.5 * 0.4)
        assert b_eq == pytest.approx(0.5 + 1.5 * 0.4)


class TestSolveBvp:
    def test_symmetric_speed_vanishes(self, wave_mid):
        assert wave_mid.converged
        assert abs(wave_mid.c) <= 1e-10

    def test_sign_convention(self, wave_03):
        # species a holds the advantage left of center and invades
        assert wave_03.c > 0.1

    def test_antisymmetric_pair(self, model, wave_03):
        mirror = solve_wave_bvp(WaveProblem(model, 0.7),
                                estimate_condition=False)
        assert abs(wave_03.c + mirror.c) <= 2e-5

    def test_pinning(self, model, wave_03):
        assert wave_03.phase_error <= 1e-10 * model.f_a(0.0)

    def test_profiles_monotone(self, wave_03):
        assert np.all(np.diff(wave_03.a) <= 1e-9)
        assert np.all(np.diff(wave_03.b) >= -1e-9)

    def test_profiles_nontrivial(self, model, wave_03):
        floor = 0.5 * min(model.f_a(0.3), model.f_b(0.3))
        assert min(wave_03.a.max(), wave_03.b.max()) >= floor

    def test_far_field_flat(self, wave_03):
        assert wave_03.far_field_mismatch <= 1e-6

    def test_truncation_insensitive(self, model, wave_03):
        wide = solve_wave_bvp(WaveProblem(model, 0.3, L=100.0),
                              estimate_condition=False)
        assert abs(wide.c - wave_03.c) <= 1e-6

    def test_short_domain_widens_automatically(self, model, wave_03):
        r = solve_wave_bvp(WaveProblem(model, 0.3, L=5.0),
                           estimate_condition=False)
        assert r.converged
        assert r.L > 5.0
        assert r.far_field_mismatch <= 1e-6
        assert abs(r.c - wave_03.c) <= 1e-6

    def test_continuation_guess(self, model, wave_03):
        warm = solve_wave_bvp(WaveProblem(model, 0.32), wave_03,
                              estimate_condition=False)
        cold = solve_wave_bvp(WaveProblem(model, 0.32),
                              estimate_condition=False)
        assert abs(warm.c - cold.c) <= 1e-10


class TestFrontTracking:
    def test_agrees_with_bvp(self, model):
        p = WaveProblem(model, 0.35)
        bvp = solve_wave_bvp(p, estimate_condition=False)
        track = front_tracking_speed(p)
        assert track.solver == "front_tracking"
        assert abs(track.c - bvp.c) <= 1e-3 * (abs(bvp.c) + 0.01)
        assert track.fit_residual <= 1e-3

    def test_escaping_front_detected(self, model):
        with pytest.raises(DomainTooSmallError):
            front_tracking_speed(WaveProblem(model, 0.3, L=5.0))


class TestSpeedMap:
    def test_strictly_decreasing(self, model):
        xs = np.linspace(2.0 / 9.0, 7.0 / 9.0, 11)[1:-1]
        sm = speed_map(model, xs)
        assert np.all(sm.converged)
        assert np.all(np.diff(sm.cs) < 1e-8)

    def test_bad_samples_rejected(self, model):
        with pytest.raises(DomainError):
            speed_map(model, [0.5, 0.4])
        with pytest.raises(DomainError):
            speed_map(model, [0.1, 0.5])


class TestLocateBoundary:
    def test_symmetric_model(self, model):
        loc = locate_boundary(model)
        assert loc.at_endpoint is None
        assert abs(loc.x_star - 0.5) <= 1e-4
        assert loc.bracket[1] - loc.bracket[0] <= 1e-4
        xs = [x for x, _ in loc.c_values]
        assert xs == sorted(xs)
        assert loc.c_values[0][1] > 0.0 > loc.c_values[-1][1]

    def test_degenerate_margin_reports_endpoint(self):
        # probes pinched so tightly together that both sit left of the
        # zero; the report points at the window endpoint instead of raising
        loc = locate_boundary(reference_model(s_b=3.0), edge_margin=0.48)
        assert loc.at_endpoint == "upper"
        assert loc.x_star == pytest.approx(11.0 / 12.0, abs=1e-9)
