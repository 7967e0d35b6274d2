"""Generator tests: solenoidality, support, analytic norm targets."""

import math

import numpy as np
import pytest

from nslab.data import (
    localize,
    localize_with_correction,
    solenoidal_bump,
    taylor_green,
    weak_l3_profile,
)
from nslab.norms import LorentzSpec, lebesgue_norm, lorentz_norm
from nslab.spectral import (
    Ball,
    Grid3,
    PHYSICAL,
    VectorField,
    divergence_defect,
    l2_norm_spectral,
    leray_project,
    nonlinear_divergence,
    to_physical,
    to_spectral,
)

from conftest import TWO_PI, random_solenoidal

CENTER = (np.pi, np.pi, np.pi)


@pytest.fixture(scope="module")
def grid64():
    return Grid3(64, TWO_PI)


@pytest.fixture(scope="module")
def bump64(grid64):
    return solenoidal_bump(CENTER, 1.5, 1.0, grid64)


def speed(field):
    phys = to_physical(field).data
    return np.sqrt(np.sum(phys**2, axis=0))


class TestTaylorGreen:
    def test_matches_trig_formula(self, grid32):
        amp = 0.7
        u = to_physical(taylor_green(amp, grid32))
        x = grid32.axis_coords
        X, Y = x[:, None, None], x[None, :, None]
        assert np.max(np.abs(u.data[0] - amp * np.sin(X) * np.cos(Y))) < 1e-13
        assert np.max(np.abs(u.data[1] + amp * np.cos(X) * np.sin(Y))) < 1e-13
        assert np.max(np.abs(u.data[2])) == 0.0

    def test_clean_spectral_data(self, grid32):
        u = taylor_green(0.5, grid32)
        assert u.is_spectral
        assert divergence_defect(u) < 1e-13
        assert np.max(np.abs(u.data[:, 0, 0, 0])) < 1e-15

    def test_nonlinearity_is_pure_gradient(self, grid32):
        u = taylor_green(0.5, grid32)
        forced = leray_project(nonlinear_divergence(u, u))
        assert np.max(np.abs(forced.data)) < 1e-13

    def test_amplitude_zero_and_homogeneity(self, grid16):
        assert np.max(np.abs(taylor_green(0.0, grid16).data)) == 0.0
        one = taylor_green(1.0, grid16)
        two = taylor_green(2.0, grid16)
        assert np.max(np.abs(two.data - 2.0 * one.data)) < 1e-13

    def test_requires_two_pi_box(self):
        with pytest.raises(ValueError, match="2\\*pi"):
            taylor_green(1.0, Grid3(16, 4.0))


class TestSolenoidalBump:
    def test_solenoidal_mean_zero(self, bump64):
        assert divergence_defect(bump64) < 1e-13
        assert np.max(np.abs(bump64.data[:, 0, 0, 0])) == 0.0

    def test_peak_speed_is_amplitude(self, bump64):
        assert np.max(speed(bump64)) == pytest.approx(1.0, rel=1e-12)

    def test_supported_in_ball(self, grid64, bump64):
        mag = speed(bump64)
        r = grid64.radial_distance(CENTER)
        assert np.max(mag[r > 1.1 * 1.5]) <= 1e-10

    def test_homogeneity(self, grid64, bump64):
        double = solenoidal_bump(CENTER, 1.5, 2.0, grid64)
        assert np.max(np.abs(double.data - 2.0 * bump64.data)) < 1e-12

    def test_local_lp_finite(self, grid64, bump64):
        val = lebesgue_norm(bump64, 5.0, Ball(CENTER, 1.5))
        assert np.isfinite(val) and val > 0

    def test_rejects_oversized_ball(self, grid16):
        with pytest.raises(ValueError, match="margin"):
            solenoidal_bump(CENTER, grid16.box_length / 3.0, 1.0, grid16)


class TestWeakL3Profile:
    def test_weak_l3_norm_target(self, grid64):
        amp = 0.7
        u = weak_l3_profile(2.0 * grid64.spacing, amp, grid64)
        got = lorentz_norm(u, LorentzSpec(3.0, math.inf))
        target = amp * (4.0 * np.pi / 3.0) ** (1.0 / 3.0)
        assert abs(got - target) / target < 0.10

    def test_solenoidal_mean_zero(self, grid64):
        u = weak_l3_profile(3.0 * grid64.spacing, 1.0, grid64)
        assert divergence_defect(u) < 1e-12
        assert np.max(np.abs(u.data[:, 0, 0, 0])) == 0.0

    def test_l2_grid_stable(self, grid64):
        g32 = Grid3(32, TWO_PI)
        eps = 4.0 * grid64.spacing  # = 2h on the coarse grid
        coarse = lebesgue_norm(weak_l3_profile(eps, 1.0, g32), 2.0)
        fine = lebesgue_norm(weak_l3_profile(eps, 1.0, grid64), 2.0)
        assert abs(fine - coarse) / fine < 0.02

    def test_rejects_unresolvable_epsilon(self, grid16):
        with pytest.raises(ValueError, match="resolvable"):
            weak_l3_profile(0.5 * grid16.spacing, 1.0, grid16)


class TestLocalize:
    def test_identity_on_interior_data(self, grid64):
        # bump tails sit at ~2e-11 in sup norm (band-limit ringing), so the
        # L2 discrepancy floor is that times sqrt(box volume) ~ 4e-10
        inner = solenoidal_bump(CENTER, 1.57, 1.0, grid64)
        ball = Ball(CENTER, 2.6)
        out, correction = localize_with_correction(inner, ball)
        diff = VectorField(grid64, out.representation, out.data - inner.data)
        assert l2_norm_spectral(diff) < 1e-9
        assert correction < 1e-9

    def test_output_clean_for_global_data(self, grid32):
        u0 = random_solenoidal(grid32, seed=101, amplitude=1.0)
        ball = Ball(CENTER, 1.2)
        out, correction = localize_with_correction(u0, ball)
        assert divergence_defect(out) < 1e-12
        assert np.max(np.abs(out.data[:, 0, 0, 0])) == 0.0
        assert correction > 0

    def test_correction_route_equality(self, grid32):
        from nslab.data import _bridge

        u0 = random_solenoidal(grid32, seed=102, amplitude=1.0)
        ball = Ball(CENTER, 1.2)
        out, correction = localize_with_correction(u0, ball)
        chi = _bridge((ball.radius - grid32.radial_distance(ball.center)) / (ball.radius / 4.0))
        cut = to_spectral(VectorField(grid32, PHYSICAL, to_physical(u0).data * chi))
        diff = VectorField(grid32, out.representation, out.data - cut.data)
        assert correction == pytest.approx(l2_norm_spectral(diff), rel=1e-12)

    def test_localize_wrapper(self, grid32):
        u0 = random_solenoidal(grid32, seed=103, amplitude=0.5)
        ball = Ball(CENTER, 1.2)
        assert np.array_equal(localize(u0, ball).data,
                              localize_with_correction(u0, ball)[0].data)
