import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wakenode import (
    CalibrationCurve,
    CalibrationDomainError,
    CalPoint,
    FitError,
    adc_to_db,
    db_to_adc,
    fit_curve,
    r_squared,
)

DEFAULTS = CalibrationCurve()

# frozen from a 40-digit evaluation of the default model
DB_AT_1023 = 94.54464413579384
DB_AT_500 = 80.013466086548745

FIXTURE_GRID = np.linspace(360.0, 1023.0, 20)
NOISY_FIXTURE_SEED = 6


def model_points(grid=FIXTURE_GRID, curve=DEFAULTS) -> list[CalPoint]:
    return [CalPoint(float(x), adc_to_db(float(x), curve)) for x in grid]


def noisy_fixture() -> list[CalPoint]:
    """Model points with +/-1 dB uniform noise; the noise scale keeps the
    expected goodness-of-fit near the reference 0.995."""
    rng = np.random.default_rng(NOISY_FIXTURE_SEED)
    points = []
    for x in FIXTURE_GRID:
        db = adc_to_db(float(x), DEFAULTS) + float(rng.uniform(-1.0, 1.0))
        points.append(CalPoint(float(x), db))
    return points


class TestCurveDefaults:
    def test_default_parameters(self):
        assert DEFAULTS.a == -290.5
        assert DEFAULTS.b == -0.04258
        assert DEFAULTS.c == 350.0
        assert DEFAULTS.d == 314.7


class TestAdcToDb:
    def test_unit_offset_makes_power_term_one(self):
        assert adc_to_db(351.0) == pytest.approx(24.2, abs=1e-12)

    def test_full_scale_reading(self):
        assert adc_to_db(1023.0) == pytest.approx(DB_AT_1023, abs=1e-9)

    def test_midrange_reading(self):
        assert adc_to_db(500.0) == pytest.approx(DB_AT_500, abs=1e-9)

    def test_floor_is_out_of_domain(self):
        with pytest.raises(CalibrationDomainError, match="floor"):
            adc_to_db(350.0)
        with pytest.raises(CalibrationDomainError):
            adc_to_db(100.0)

    @given(
        x1=st.floats(351.0, 1023.0),
        x2=st.floats(351.0, 1023.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_strictly_increasing_in_default_regime(self, x1, x2):
        if x1 == x2:
            return
        lo, hi = sorted((x1, x2))
        assert adc_to_db(lo) < adc_to_db(hi)


class TestDbToAdc:
    def test_round_trip_at_500(self):
        assert db_to_adc(adc_to_db(500.0)) == pytest.approx(500.0, abs=1e-6)

    def test_inverse_of_unit_offset(self):
        assert db_to_adc(-290.5 + 314.7) == pytest.approx(351.0, abs=1e-9)

    def test_asymptote_rejected(self):
        with pytest.raises(CalibrationDomainError, match="asymptote|range"):
            db_to_adc(DEFAULTS.d)

    @given(x=st.floats(351.001, 1023.0))
    @settings(max_examples=100, deadline=None)
    def test_round_trip_identity(self, x):
        assert db_to_adc(adc_to_db(x)) == pytest.approx(x, abs=1e-6)


class TestFitCurve:
    def test_noiseless_points_recovered(self):
        points = model_points()
        curve, r2 = fit_curve(points)
        assert r2 >= 0.9999
        residuals = [abs(adc_to_db(p.adc_value, curve) - p.spl_db) for p in points]
        assert max(residuals) < 0.01

    def test_noisy_fixture_matches_reference_quality(self):
        curve, r2 = fit_curve(noisy_fixture())
        assert r2 >= 0.99
        assert r2 == pytest.approx(0.995, abs=0.004)

    def test_too_few_points_rejected(self):
        points = model_points()[:5]
        with pytest.raises(ValueError, match="at least 6"):
            fit_curve(points)

    def test_degenerate_points_rejected(self):
        flat = [CalPoint(400.0 + i, 70.0) for i in range(8)]
        with pytest.raises(FitError, match="degenerate"):
            fit_curve(flat)

    def test_fit_is_deterministic(self):
        points = noisy_fixture()
        first = fit_curve(points)
        second = fit_curve(points)
        assert first == second


class TestRSquared:
    def test_exact_curve_scores_one(self):
        points = model_points()
        assert r_squared(points, DEFAULTS) == pytest.approx(1.0, abs=1e-12)

    def test_constant_prediction_scores_at_most_zero(self):
        points = model_points()
        mean_db = float(np.mean([p.spl_db for p in points]))
        flat = CalibrationCurve(a=0.0, b=1.0, c=0.0, d=mean_db)
        assert r_squared(points, flat) <= 0.0 + 1e-12

    def test_zero_variance_rejected(self):
        points = [CalPoint(400.0, 70.0), CalPoint(500.0, 70.0)]
        with pytest.raises(ValueError, match="variance"):
            r_squared(points, DEFAULTS)

    def test_too_few_points_rejected(self):
        with pytest.raises(ValueError, match="at least 2"):
            r_squared([CalPoint(400.0, 70.0)], DEFAULTS)

    def test_points_below_floor_rejected(self):
        points = [CalPoint(100.0, 10.0)] + model_points()
        with pytest.raises(CalibrationDomainError, match="floor"):
            r_squared(points, DEFAULTS)


class TestCalPoint:
    def test_rejects_out_of_scale_adc(self):
        with pytest.raises(ValueError, match="adc_value"):
            CalPoint(1024.0, 90.0)
        with pytest.raises(ValueError, match="adc_value"):
            CalPoint(-1.0, 90.0)
