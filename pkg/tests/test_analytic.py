import math

import numpy as np
import pytest
from scipy.optimize import brentq

from superbunch.analytic import (
    AnalyticModel,
    ModelKind,
    evaluate_curve,
    fringe_period,
    g2_cascade,
    g2_fringe,
    g2_hbt,
    g2_scanned,
    peak_to_background,
    sinc,
)
from superbunch.model import CascadeConfig, ChannelStage, OpticalConfig, angle_from_degrees

LAMBDA, R, Z = 780e-9, 356e-6, 1.79
THETA_FRINGE = angle_from_degrees(0.007)
THETA0_SCAN = angle_from_degrees(0.022)


def cfg_with(dx_grid):
    return OpticalConfig(LAMBDA, R, Z, dx_grid)


CFG = cfg_with(np.linspace(-8e-3, 8e-3, 161))


class TestSinc:
    def test_removable_singularity(self):
        assert sinc(0.0) == 1.0

    def test_zero_at_pi(self):
        assert abs(sinc(math.pi)) < 1e-15

    def test_half_pi(self):
        # oracle: direct evaluation of sin(u)/u
        assert sinc(math.pi / 2) == pytest.approx(2 / math.pi, rel=1e-14)
        assert sinc(math.pi / 2) == pytest.approx(0.63662, abs=5e-6)

    def test_even(self):
        u = np.linspace(-30, 30, 1001)
        assert np.allclose(sinc(u), sinc(-u), rtol=1e-12, atol=0)

    def test_matches_naive_ratio(self):
        u = np.linspace(1e-6, 40, 500)
        assert np.allclose(sinc(u), np.sin(u) / u, rtol=1e-12)


class TestHbt:
    def test_peak_is_two(self):
        assert g2_hbt(CFG, 0.0) == 2.0

    def test_first_envelope_zero(self):
        # oracle: k R dx / (2 z) = pi  =>  dx = lambda z / R
        dx0 = LAMBDA * Z / R
        assert dx0 == pytest.approx(3.9219e-3, rel=1e-4)
        assert g2_hbt(CFG, dx0) == pytest.approx(1.0, abs=1e-12)

    def test_decays_to_one(self):
        assert g2_hbt(CFG, 1.0) == pytest.approx(1.0, abs=1e-6)

    def test_bounds(self):
        vals = g2_hbt(CFG, np.linspace(-0.05, 0.05, 4001))
        assert np.all(vals >= 1.0) and np.all(vals <= 2.0)


class TestFringe:
    def test_peak_is_three(self):
        assert g2_fringe(CFG, THETA_FRINGE, 0.0) == 3.0

    def test_zero_theta_degenerates_to_scaled_hbt(self):
        dx = np.linspace(-8e-3, 8e-3, 101)
        assert np.allclose(
            g2_fringe(CFG, 0.0, dx), 1.5 * g2_hbt(CFG, dx), rtol=1e-12
        )

    def test_half_period_minimum_factor(self):
        # oracle: dx = lambda/(2 theta) makes cos(k theta dx) = -1
        dx_half = LAMBDA / (2 * THETA_FRINGE)
        assert dx_half == pytest.approx(3.1922e-3, rel=1e-4)
        ratio = g2_fringe(CFG, THETA_FRINGE, dx_half) / g2_hbt(CFG, dx_half)
        assert ratio == pytest.approx(0.5, abs=1e-9)

    def test_bounds(self):
        vals = g2_fringe(CFG, THETA_FRINGE, np.linspace(-0.05, 0.05, 4001))
        assert np.all(vals >= 0.5 - 1e-12) and np.all(vals <= 3.0 + 1e-12)

    def test_factorization_property(self):
        dx = np.linspace(-8e-3, 8e-3, 161)
        ratio = g2_fringe(CFG, THETA_FRINGE, dx) / g2_hbt(CFG, dx)
        expected = 1 + 0.5 * np.cos(CFG.wavenumber * THETA_FRINGE * dx)
        assert np.allclose(ratio, expected, rtol=1e-12)


class TestScanned:
    def test_peak_is_three(self):
        assert g2_scanned(CFG, THETA0_SCAN, 0.0) == 3.0

    def test_channel_zero_crossing(self):
        # oracle: k theta0 dx / 2 = pi  =>  dx = lambda/theta0
        dx = LAMBDA / THETA0_SCAN
        assert dx == pytest.approx(2.0314e-3, rel=1e-4)
        assert g2_scanned(CFG, THETA0_SCAN, dx) == pytest.approx(
            g2_hbt(CFG, dx), abs=1e-12
        )

    def test_decays_to_one(self):
        assert g2_scanned(CFG, THETA0_SCAN, 1.0) == pytest.approx(1.0, abs=1e-3)

    def test_theta_average_identity(self):
        # midpoint-rule average of the fixed-angle fringe over the scan
        # range reproduces the scanned curve (the side-lobe smearing).
        dx = CFG.dx_grid
        n = 10_000
        thetas = (np.arange(n) + 0.5) / n * THETA0_SCAN - THETA0_SCAN / 2
        acc = np.zeros_like(dx)
        for th in thetas:
            acc += g2_fringe(CFG, th, dx)
        avg = acc / n
        assert np.max(np.abs(avg - g2_scanned(CFG, THETA0_SCAN, dx))) < 1e-6


class TestCascade:
    def test_empty_cascade_is_hbt(self):
        dx = np.linspace(-8e-3, 8e-3, 81)
        assert np.array_equal(g2_cascade(CFG, CascadeConfig.hbt(), dx), g2_hbt(CFG, dx))

    def test_single_scan_stage_matches_scanned(self):
        dx = np.linspace(-8e-3, 8e-3, 81)
        stages = CascadeConfig((ChannelStage.scan(THETA0_SCAN),))
        assert np.array_equal(
            g2_cascade(CFG, stages, dx), g2_scanned(CFG, THETA0_SCAN, dx)
        )

    @pytest.mark.parametrize("n,expected", [(0, 2.0), (1, 3.0), (2, 4.5), (3, 6.75), (4, 10.125)])
    def test_peak_scaling(self, n, expected):
        stages = CascadeConfig(tuple(ChannelStage.scan(THETA0_SCAN) for _ in range(n)))
        assert g2_cascade(CFG, stages, 0.0) == expected

    def test_mixed_cascade(self):
        stages = CascadeConfig((ChannelStage.fixed(THETA_FRINGE), ChannelStage.scan(THETA0_SCAN)))
        dx = np.linspace(-8e-3, 8e-3, 81)
        expected = (
            g2_hbt(CFG, dx)
            * (1 + 0.5 * np.cos(CFG.wavenumber * THETA_FRINGE * dx))
            * (1 + 0.5 * sinc(CFG.wavenumber * THETA0_SCAN * dx / 2))
        )
        assert np.allclose(g2_cascade(CFG, stages, dx), expected, rtol=1e-12)

    def test_evenness(self):
        dx = np.linspace(1e-5, 8e-3, 200)
        stages = CascadeConfig((ChannelStage.fixed(THETA_FRINGE), ChannelStage.scan(THETA0_SCAN)))
        plus = g2_cascade(CFG, stages, dx)
        minus = g2_cascade(CFG, stages, -dx)
        assert np.allclose(plus, minus, rtol=1e-12)


class TestFringePeriod:
    def test_paper_parameters(self):
        # oracle: lambda / theta
        assert fringe_period(CFG, THETA_FRINGE) == pytest.approx(LAMBDA / THETA_FRINGE, rel=1e-15)
        assert fringe_period(CFG, THETA_FRINGE) == pytest.approx(6.3844e-3, rel=1e-4)

    def test_inverse_scaling(self):
        assert fringe_period(CFG, 2 * THETA_FRINGE) == pytest.approx(3.1922e-3, rel=1e-4)

    def test_zero_rejected(self):
        with pytest.raises(ValueError, match="nonzero"):
            fringe_period(CFG, 0.0)

    def test_sign_invariant(self):
        assert fringe_period(CFG, -THETA_FRINGE) == fringe_period(CFG, THETA_FRINGE)


class TestEvaluateCurve:
    def test_hbt_single_point(self):
        model = AnalyticModel(ModelKind.HBT, cfg_with(np.array([0.0])))
        curve = evaluate_curve(model)
        assert curve.g2.tolist() == [2.0]
        assert curve.se.tolist() == [0.0]
        assert curve.meta["model"] == "hbt"

    def test_scanned_peak(self):
        theta0 = angle_from_degrees(0.026)
        model = AnalyticModel(
            ModelKind.SCANNED, CFG, CascadeConfig((ChannelStage.scan(theta0),))
        )
        curve = evaluate_curve(model)
        assert curve.g2[np.argmin(np.abs(curve.dx))] == 3.0

    def test_fringe_period_on_curve(self):
        model = AnalyticModel(
            ModelKind.FRINGE, CFG, CascadeConfig((ChannelStage.fixed(THETA_FRINGE),))
        )
        curve = evaluate_curve(model)
        # distance between the two fringe maxima flanking dx=0 equals one period
        chan = curve.g2 / g2_hbt(CFG, curve.dx)
        maxima = [
            i for i in range(1, curve.n_points - 1)
            if chan[i] > chan[i - 1] and chan[i] > chan[i + 1]
        ]
        centers = curve.dx[maxima]
        right = centers[centers > 1e-4].min()
        assert right == pytest.approx(fringe_period(CFG, THETA_FRINGE), rel=0.02)

    def test_analytic_curves_positive(self):
        for kind, stages in [
            (ModelKind.HBT, CascadeConfig.hbt()),
            (ModelKind.FRINGE, CascadeConfig((ChannelStage.fixed(THETA_FRINGE),))),
            (ModelKind.SCANNED, CascadeConfig((ChannelStage.scan(THETA0_SCAN),))),
        ]:
            curve = evaluate_curve(AnalyticModel(kind, CFG, stages))
            assert np.all(curve.g2 > 0)

    def test_kind_stage_consistency_enforced(self):
        with pytest.raises(ValueError, match="no stages"):
            AnalyticModel(ModelKind.HBT, CFG, CascadeConfig((ChannelStage.fixed(1e-4),)))
        with pytest.raises(ValueError, match="fixed-angle"):
            AnalyticModel(ModelKind.FRINGE, CFG, CascadeConfig((ChannelStage.scan(1e-4),)))
        with pytest.raises(ValueError, match="scanning"):
            AnalyticModel(ModelKind.SCANNED, CFG, CascadeConfig((ChannelStage.fixed(1e-4),)))


class TestPeakToBackground:
    def wide_grid(self):
        # 10 envelope widths, single-sided
        return cfg_with(np.linspace(0.0, 10 * LAMBDA * Z / R, 401))

    def test_hbt_ratio(self):
        curve = evaluate_curve(AnalyticModel(ModelKind.HBT, self.wide_grid()))
        assert peak_to_background(curve) == pytest.approx(2.0, abs=1e-2)

    def test_scanned_ratio(self):
        cfg = self.wide_grid()
        curve = evaluate_curve(
            AnalyticModel(ModelKind.SCANNED, cfg, CascadeConfig((ChannelStage.scan(THETA0_SCAN),)))
        )
        assert peak_to_background(curve) == pytest.approx(3.0, abs=2e-2)

    def test_cascade_n2_ratio(self):
        cfg = self.wide_grid()
        stages = CascadeConfig(tuple(ChannelStage.scan(THETA0_SCAN) for _ in range(2)))
        curve = evaluate_curve(AnalyticModel(ModelKind.CASCADE, cfg, stages))
        assert peak_to_background(curve) == pytest.approx(4.5, abs=3e-2)

    def test_too_short(self):
        curve = evaluate_curve(AnalyticModel(ModelKind.HBT, cfg_with(np.array([0.0, 1e-4]))))
        with pytest.raises(ValueError, match="too short"):
            peak_to_background(curve)


def test_fwhm_constant_oracle():
    # The half-max width of 1 + sinc^2 solves sinc^2(u) = 1/2; the root is
    # frozen as 1.39156 and FWHM = 0.8859 * lambda z / R.
    u_half = brentq(lambda u: (math.sin(u) / u) ** 2 - 0.5, 1.0, 2.0)
    assert u_half == pytest.approx(1.39156, abs=1e-5)
    fwhm = 2 * u_half * LAMBDA * Z / (math.pi * R)
    assert fwhm == pytest.approx(0.8859 * LAMBDA * Z / R, rel=1e-4)
