"""
Метрики качества: точечные, вероятностные, торговые и складские
"""
import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy.stats import kstwobign, norm

from uamdp.core.errors import DegenerateSeries
from uamdp.core.models import EquityCurve, ForecastRecord

logger = logging.getLogger(__name__)

INV_SQRT_PI = 1.0 / np.sqrt(np.pi)


def _pair(pred: Sequence[float], actual: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=float).ravel()
    a = np.asarray(actual, dtype=float).ravel()
    if p.size != a.size or p.size == 0:
        raise ValueError("Прогноз и факт должны быть непустыми и одной длины")
    return p, a


def rmse(pred: Sequence[float], actual: Sequence[float]) -> float:
    p, a = _pair(pred, actual)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def mae(pred: Sequence[float], actual: Sequence[float]) -> float:
    p, a = _pair(pred, actual)
    return float(np.mean(np.abs(p - a)))


def smape(pred: Sequence[float], actual: Sequence[float]) -> float:
    """Симметричная MAPE в процентах (0-200); пары нулей дают 0"""
    p, a = _pair(pred, actual)
    denom = np.abs(p) + np.abs(a)
    terms = np.zeros_like(denom)
    nz = denom > 0
    terms[nz] = 2.0 * np.abs(p[nz] - a[nz]) / denom[nz]
    return float(100.0 * terms.mean())


def crps_gaussian(mu, sigma, y):
    """
    CRPS гауссова прогноза в замкнутой форме

    σ[z(2Φ(z) − 1) + 2φ(z) − 1/√π],  z = (y − μ)/σ
    """
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma <= 0):
        raise ValueError("sigma должна быть положительной")
    z = (np.asarray(y, dtype=float) - mu) / sigma
    result = sigma * (z * (2.0 * norm.cdf(z) - 1.0) + 2.0 * norm.pdf(z) - INV_SQRT_PI)
    return float(result) if np.ndim(result) == 0 else result


def crps_empirical(samples: Sequence[float], y: float) -> float:
    """
    CRPS выборочного прогноза: E|X − y| − ½E|X − X'|

    Попарный член считается по отсортированной выборке.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    m = x.size
    if m == 0:
        raise ValueError("Выборка пуста")
    first = np.mean(np.abs(x - y))
    ranks = 2.0 * np.arange(1, m + 1) - m - 1
    pairwise = 2.0 * np.sum(ranks * x) / (m * m)
    return float(max(first - 0.5 * pairwise, 0.0))


def _gaussian_parts(records: Sequence[ForecastRecord]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(records) == 0:
        raise ValueError("Нет записей прогноза")
    mu = np.concatenate([r.predicted.means for r in records])
    sd = np.sqrt(np.concatenate([r.predicted.variances for r in records]))
    y = np.concatenate([r.actual for r in records])
    return mu, sd, y


def coverage(records: Sequence[ForecastRecord], level: float) -> float:
    """Доля фактов внутри центрального интервала уровня level"""
    if not 0.0 < level < 1.0:
        raise ValueError(f"Уровень должен лежать в (0, 1): {level}")
    mu, sd, y = _gaussian_parts(records)
    half = norm.ppf(0.5 + level / 2.0) * sd
    return float(np.mean(np.abs(y - mu) <= half))


def reliability_points(records: Sequence[ForecastRecord], levels: Sequence[float]) -> List[Tuple[float, float]]:
    """Точки диаграммы надёжности: (номинал, эмпирическое покрытие)"""
    return [(float(lv), coverage(records, lv)) for lv in levels]


def pit_values(records: Sequence[ForecastRecord]) -> np.ndarray:
    mu, sd, y = _gaussian_parts(records)
    return norm.cdf(y, loc=mu, scale=sd)


def ks_uniform(u: Sequence[float]) -> Tuple[float, float]:
    """
    Одновыборочный KS против Uniform(0, 1)

    :return: (статистика, асимптотическое p-значение)
    """
    u = np.sort(np.asarray(u, dtype=float).ravel())
    n = u.size
    if n == 0:
        raise ValueError("Пустая выборка PIT")
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - u)
    d_minus = np.max(u - (i - 1) / n)
    stat = float(max(d_plus, d_minus))
    return stat, float(kstwobign.sf(np.sqrt(n) * stat))


def pit_ks(records: Sequence[ForecastRecord]) -> Tuple[float, float]:
    """KS-тест равномерности PIT"""
    if len(records) < 5:
        raise ValueError("Для PIT-теста нужно не меньше 5 записей")
    return ks_uniform(pit_values(records))


def sharpe_daily(returns: Sequence[float]) -> float:
    """
    Дневной коэффициент Шарпа: среднее / выборочное SD (безрисковая ставка 0)

    :raises DegenerateSeries: При нулевом разбросе
    """
    r = np.asarray(returns, dtype=float).ravel()
    if r.size < 2:
        raise DegenerateSeries("Для Шарпа нужно хотя бы две доходности")
    sd = r.std(ddof=1)
    if sd == 0 or not np.isfinite(sd):
        raise DegenerateSeries("Нулевое стандартное отклонение доходностей")
    return float(r.mean() / sd)


def max_drawdown(curve: EquityCurve) -> float:
    """Минимум V_t / max_{τ≤t} V_τ − 1 (неположительное число)"""
    values = curve.values
    peaks = np.maximum.accumulate(values)
    return float(np.min(values / peaks - 1.0))


def turnover(curve: EquityCurve) -> float:
    """Средний за шаг оборот (L1-изменение весов / 2)"""
    if curve.turnover_per_step.size == 0:
        return 0.0
    return float(curve.turnover_per_step.mean())


def positive_days(curve: EquityCurve) -> float:
    r = curve.returns
    if r.size == 0:
        return 0.0
    return float(np.mean(r > 0))


@dataclass(frozen=True)
class InventoryTrace:
    """Складская траектория по дням"""
    demand: np.ndarray
    sold: np.ndarray
    end_on_hand: np.ndarray
    unit_margin: float
    unit_cost: float

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, n), dtype=float) for n in ("demand", "sold", "end_on_hand")]
        if arrays[0].size == 0 or len({a.size for a in arrays}) != 1:
            raise ValueError("Траектория должна быть непустой и согласованной")
        for name, arr in zip(("demand", "sold", "end_on_hand"), arrays):
            object.__setattr__(self, name, arr)


def service_level(trace: InventoryTrace) -> float:
    """Доля удовлетворённого спроса"""
    total = trace.demand.sum()
    return 1.0 if total == 0 else float(trace.sold.sum() / total)


def stockout_rate(trace: InventoryTrace) -> float:
    """Средний неудовлетворённый спрос в день"""
    return float(np.mean(trace.demand - trace.sold))


def gmroi(trace: InventoryTrace) -> float:
    """
    Валовая маржа / средний запас по себестоимости

    :raises DegenerateSeries: Если запас всё время нулевой
    """
    mean_cost = float(np.mean(trace.end_on_hand) * trace.unit_cost)
    if mean_cost <= 0:
        raise DegenerateSeries("Средний запас равен нулю")
    return float(trace.sold.sum() * trace.unit_margin / mean_cost)
