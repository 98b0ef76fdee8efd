"""
Признаки для прогнозистов: рынок и спрос.

Порядок и длина векторов фиксированы и описаны в feature_schema.json.
"""
import json
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from uamdp.core.errors import WarmupInsufficient

SCHEMA_PATH = Path(__file__).with_name("feature_schema.json")

TRADING_WARMUP = 60
INVENTORY_WARMUP = 28


@lru_cache(maxsize=1)
def feature_schema() -> Dict[str, List[str]]:
    """Раскладка признаков из поставляемого файла схемы"""
    with open(SCHEMA_PATH, encoding="utf-8") as f:
        return {name: entry["features"] for name, entry in json.load(f).items()}


def log_return(prices: Sequence[float], t: int) -> float:
    return float(np.log(prices[t] / prices[t - 1]))


def true_range(high: float, low: float, prev_close: float) -> float:
    return float(max(high, prev_close) - min(low, prev_close))


def demand_growth(demand: Sequence[float], t: int) -> float:
    return float(np.log1p(demand[t]) - np.log1p(demand[t - 1]))


def _rolling(values: np.ndarray, window: int) -> List[float]:
    tail = values[-window:]
    sd = float(tail.std(ddof=1)) if tail.size > 1 else 0.0
    return [float(tail.mean()), sd]


def features_trading(prices, highs, lows, volumes, t: int) -> np.ndarray:
    """
    Рыночные признаки на момент t

    :param prices: Цены закрытия индекса P_0..P_T
    :param t: Момент (нужно t ≥ 60)
    :raises WarmupInsufficient: До накопления окна 60 шагов
    """
    if t < TRADING_WARMUP:
        raise WarmupInsufficient(f"Нужно t ≥ {TRADING_WARMUP}, получено {t}")
    p = np.asarray(prices, dtype=float)[: t + 1]
    returns = np.diff(np.log(p))

    close = pd.Series(p)
    ema12 = close.ewm(span=12, adjust=False).mean()
    ema26 = close.ewm(span=26, adjust=False).mean()
    macd = ema12 - ema26
    signal = macd.ewm(span=9, adjust=False).mean()

    row = [
        returns[-1],
        true_range(highs[t], lows[t], p[t - 1]),
        float(volumes[t]) * p[t],
        ema12.iloc[-1],
        ema26.iloc[-1],
        macd.iloc[-1],
        signal.iloc[-1],
    ]
    for window in (5, 20, 60):
        row.extend(_rolling(returns, window))
    row.extend([np.sin(2 * np.pi * t / 5), np.cos(2 * np.pi * t / 5)])
    row.extend(returns[-2:-7:-1])
    return np.asarray(row, dtype=float)


def features_inventory(demand, prices, t: int, unmet: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Признаки спроса на момент t

    :param demand: Дневной спрос d_0..d_T
    :param prices: Цена p_0..p_T
    :param unmet: Неудовлетворённый спрос по дням u_0..u_t (флаг дефицита в последний день)
    :raises WarmupInsufficient: До накопления окна 28 дней
    """
    if t < INVENTORY_WARMUP:
        raise WarmupInsufficient(f"Нужно t ≥ {INVENTORY_WARMUP}, получено {t}")
    d = np.asarray(demand, dtype=float)[: t + 1]
    p = np.asarray(prices, dtype=float)[: t + 1]
    log_d = np.log1p(d)

    week = (t // 7) % 52
    stockout = False if unmet is None else float(unmet[t]) > 0
    row = [
        demand_growth(d, t),
        p[t] / p[t - 1] - 1.0,
        float(p[t] < np.median(p[-7:])),
    ]
    row.extend(_rolling(log_d, 7))
    row.extend(_rolling(log_d, 28))
    row.append(pd.Series(log_d).ewm(span=14, adjust=False).mean().iloc[-1])
    row.extend([np.sin(2 * np.pi * week / 52), np.cos(2 * np.pi * week / 52)])
    row.extend(log_d[-2:-6:-1])
    row.append(float(stockout))
    return np.asarray(row, dtype=float)


class FeatureNoise:
    """
    Гауссов шум в случайном подмножестве признаков

    Подмножество из round(frac·p) измерений выбирается по сиду один раз.
    """

    def __init__(self, n_features: int, frac: float, sigma: float, rng_seed: int):
        if not 0.0 <= frac <= 1.0:
            raise ValueError("Доля зашумлённых признаков должна лежать в [0, 1]")
        self.sigma = sigma
        self.rng_seed = rng_seed
        k = int(round(frac * n_features))
        self.dims = np.sort(np.random.default_rng(rng_seed).permutation(n_features)[:k])

    def apply(self, u: np.ndarray, step: int) -> np.ndarray:
        if self.dims.size == 0 or self.sigma == 0:
            return u
        noisy = np.array(u, dtype=float)
        rng = np.random.default_rng([self.rng_seed, step])
        noisy[self.dims] += rng.normal(0.0, self.sigma, size=self.dims.size)
        return noisy
