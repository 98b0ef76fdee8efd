import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from uamdp.core.errors import DegenerateSeries
from uamdp.core.metrics import (
    InventoryTrace,
    coverage,
    crps_empirical,
    crps_gaussian,
    gmroi,
    ks_uniform,
    mae,
    max_drawdown,
    pit_ks,
    positive_days,
    reliability_points,
    rmse,
    service_level,
    sharpe_daily,
    smape,
    stockout_rate,
    turnover,
)
from uamdp.core.models import EquityCurve, ForecastRecord, PredictiveDist


@pytest.fixture
def calibrated_records():
    """Записи прогноза N(0, 1) с фактами из того же распределения"""
    y = np.random.default_rng(42).normal(size=500)
    return [ForecastRecord(PredictiveDist.gaussian([0.0], [1.0]), [v]) for v in y]


def test_point_metrics():
    pred, actual = [1.0, 2.0, 3.0], [1.0, 4.0, 0.0]
    assert rmse(pred, actual) == pytest.approx(np.sqrt((0 + 4 + 9) / 3))
    assert mae(pred, actual) == pytest.approx(5 / 3)
    with pytest.raises(ValueError):
        rmse([1.0], [1.0, 2.0])


def test_smape_handles_zero_pairs():
    """Пары нулей дают нулевой вклад, значение в процентах"""
    assert smape([0.0, 1.0], [0.0, 1.0]) == 0.0
    assert smape([1.0], [0.0]) == pytest.approx(200.0)


def test_crps_gaussian_closed_form():
    """В центре CRPS = σ(2φ(0) − 1/√π)"""
    expected = 2.0 * (2 * norm.pdf(0.0) - 1 / np.sqrt(np.pi))
    assert crps_gaussian(0.0, 2.0, 0.0) == pytest.approx(expected)
    assert crps_gaussian(0.0, 1.0, 3.0) > crps_gaussian(0.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        crps_gaussian(0.0, 0.0, 1.0)


def test_crps_empirical_matches_gaussian():
    """Выборка M = 10⁴ из N(0, 1) по квантилям: расхождение не больше 2%"""
    m = 10_000
    samples = norm.ppf((np.arange(m) + 0.5) / m)
    for y in (-1.2, 0.0, 0.3, 2.0):
        assert crps_empirical(samples, y) == pytest.approx(crps_gaussian(0.0, 1.0, y), rel=0.02)

    random_samples = np.random.default_rng(0).normal(size=m)
    assert crps_empirical(random_samples, 0.3) == pytest.approx(crps_gaussian(0.0, 1.0, 0.3), rel=0.05)


def test_crps_empirical_point_mass():
    """Для вырожденной выборки CRPS равен абсолютной ошибке"""
    assert crps_empirical([2.0, 2.0, 2.0], 5.0) == pytest.approx(3.0)


def test_coverage_and_reliability(calibrated_records):
    assert coverage(calibrated_records, 0.8) == pytest.approx(0.8, abs=0.05)
    points = reliability_points(calibrated_records, [0.5, 0.9])
    assert [p[0] for p in points] == [0.5, 0.9]
    assert points[1][1] > points[0][1]
    with pytest.raises(ValueError):
        coverage(calibrated_records, 1.0)


def test_pit_uniform_for_calibrated(calibrated_records):
    stat, pvalue = pit_ks(calibrated_records)
    assert 0.0 <= stat < 0.1
    assert pvalue > 0.01


def test_pit_rejects_miscalibrated():
    y = np.random.default_rng(1).normal(size=300)
    records = [ForecastRecord(PredictiveDist.gaussian([3.0], [0.25]), [v]) for v in y]
    _, pvalue = pit_ks(records)
    assert pvalue < 1e-6

    with pytest.raises(ValueError):
        pit_ks(records[:3])


def test_ks_uniform_exact_grid():
    u = (np.arange(10) + 0.5) / 10
    stat, _ = ks_uniform(u)
    assert stat == pytest.approx(0.05)


def test_sharpe_daily():
    assert sharpe_daily([0.01, 0.03]) == pytest.approx(0.02 / np.std([0.01, 0.03], ddof=1))
    with pytest.raises(DegenerateSeries):
        sharpe_daily([0.01, 0.01, 0.01])
    with pytest.raises(DegenerateSeries):
        sharpe_daily([0.01])


def test_equity_curve_metrics():
    """Просадка, оборот и доля положительных дней"""
    curve = EquityCurve(np.array([100.0, 110.0, 99.0, 120.0]), np.array([0.3, 0.0, 0.1]))
    assert max_drawdown(curve) == pytest.approx(99.0 / 110.0 - 1.0)
    assert turnover(curve) == pytest.approx(0.4 / 3)
    assert positive_days(curve) == pytest.approx(2 / 3)

    flat = EquityCurve(np.array([100.0]))
    assert max_drawdown(flat) == 0.0
    assert turnover(flat) == 0.0
    assert positive_days(flat) == 0.0


def test_equity_curve_rejects_nonpositive():
    with pytest.raises(ValueError):
        EquityCurve(np.array([100.0, 0.0]))


def test_inventory_metrics():
    trace = InventoryTrace(
        demand=np.array([10.0, 20.0, 10.0]),
        sold=np.array([10.0, 15.0, 10.0]),
        end_on_hand=np.array([5.0, 0.0, 10.0]),
        unit_margin=4.0,
        unit_cost=6.0,
    )
    assert service_level(trace) == pytest.approx(35 / 40)
    assert stockout_rate(trace) == pytest.approx(5 / 3)
    assert gmroi(trace) == pytest.approx(35 * 4.0 / (5.0 * 6.0))


def test_inventory_degenerate_cases():
    empty_stock = InventoryTrace(np.zeros(2), np.zeros(2), np.zeros(2), 4.0, 6.0)
    assert service_level(empty_stock) == 1.0
    with pytest.raises(DegenerateSeries):
        gmroi(empty_stock)
    with pytest.raises(ValueError):
        InventoryTrace(np.zeros(2), np.zeros(3), np.zeros(2), 4.0, 6.0)


def _crps_by_quadrature(mu, sigma, y):
    """∫(F(t) − 1{t ≥ y})² dt численно"""
    left, _ = quad(lambda t: norm.cdf(t, mu, sigma) ** 2, -np.inf, y, epsabs=1e-12, epsrel=1e-12)
    right, _ = quad(lambda t: norm.sf(t, mu, sigma) ** 2, y, np.inf, epsabs=1e-12, epsrel=1e-12)
    return left + right


@pytest.mark.parametrize("mu,sigma,y", [
    (0.0, 1.0, 0.0),
    (0.0, 1.0, 1.7),
    (1.5, 0.3, 0.9),
    (-2.0, 4.0, 3.0),
    (0.2, 0.5, -0.4),
])
def test_crps_gaussian_matches_quadrature(mu, sigma, y):
    assert crps_gaussian(mu, sigma, y) == pytest.approx(_crps_by_quadrature(mu, sigma, y), abs=1e-6)


def test_crps_gaussian_center_value():
    assert crps_gaussian(0.0, 1.0, 0.0) == pytest.approx(0.23370, abs=1e-5)


def _ar_records(seed, n):
    """Правильно заданный прогноз AR(1): x_t ~ N(0.6·x_{t−1}, 0.5²)"""
    rng = np.random.default_rng(seed)
    records, prev = [], 0.0
    for _ in range(n):
        mean = 0.6 * prev
        actual = mean + 0.5 * rng.normal()
        records.append(ForecastRecord(PredictiveDist.gaussian([mean], [0.25]), [actual]))
        prev = actual
    return records


def test_coverage_of_well_specified_forecaster():
    """80%-интервал накрывает факт в 80 ± 1.5% случаев при n = 10⁴"""
    records = _ar_records(0, 10_000)
    assert coverage(records, 0.8) == pytest.approx(0.8, abs=0.015)
    _, pvalue = pit_ks(records)
    assert pvalue > 0.001


@pytest.mark.slow
def test_pit_uniform_across_trials():
    """PIT-KS p > 0.05 не менее чем в 90 из 100 прогонов"""
    passed = sum(pit_ks(_ar_records(trial, 10_000))[1] > 0.05 for trial in range(100))
    assert passed >= 90
