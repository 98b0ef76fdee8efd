"""
Синтетические данные: рыночные цены и спрос с переключением режимов
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
import pandas as pd

from uamdp.core.errors import ConfigError, IoFailure
from uamdp.core.models import LatentParam

logger = logging.getLogger(__name__)

INITIAL_PRICE = 100.0
BASE_VOLUME = 1e6


@dataclass(frozen=True)
class RegimeModel:
    """
    Набор режимов и вероятность переключения за шаг

    Параметры режима:
    рынок - (дрейф индекса, волатильность индекса, дрейф облигаций, волатильность облигаций);
    спрос - (средний спрос, множитель промо, амплитуда сезонности).
    """
    kind: str
    regimes: List[LatentParam]
    transition: float = 0.0
    shock: str = "gaussian"
    shock_df: float = 3.0
    promo_prob: float = 0.15
    period: int = 7
    base_price: float = 10.0
    promo_discount: float = 0.2

    def __post_init__(self):
        if self.kind not in ("market", "demand"):
            raise ValueError(f"Неизвестный тип модели режимов: {self.kind}")
        if not self.regimes:
            raise ValueError("Нужен хотя бы один режим")
        if not 0.0 <= self.transition <= 1.0 or not 0.0 <= self.promo_prob <= 1.0:
            raise ValueError("Вероятности должны лежать в [0, 1]")
        if self.shock not in ("gaussian", "student_t"):
            raise ValueError(f"Неизвестный тип шока: {self.shock}")
        if self.shock == "student_t" and self.shock_df <= 2:
            raise ValueError("Для t-шоков нужна конечная дисперсия (df > 2)")
        for regime in self.regimes:
            p = regime.params
            if self.kind == "market" and (len(p) != 4 or p[1] < 0 or p[3] < 0):
                raise ValueError(f"Некорректные параметры рыночного режима {regime.id}")
            if self.kind == "demand" and (len(p) != 3 or p[0] < 0 or p[1] <= 0 or abs(p[2]) > 1):
                raise ValueError(f"Некорректные параметры режима спроса {regime.id}")

    def regime(self, regime_id: str) -> LatentParam:
        for r in self.regimes:
            if r.id == regime_id:
                return r
        raise KeyError(regime_id)

    def seasonal_factor(self, t: int) -> np.ndarray:
        return 1.0 + np.array([r.params[2] for r in self.regimes]) * np.sin(2 * np.pi * t / self.period)

    def unit_shocks(self, rng: np.random.Generator, size=None):
        """Шоки единичной дисперсии"""
        if self.shock == "student_t":
            scale = np.sqrt((self.shock_df - 2.0) / self.shock_df)
            return rng.standard_t(self.shock_df, size=size) * scale
        return rng.standard_normal(size=size)


def _regime_path(model: RegimeModel, length: int, rng: np.random.Generator,
                 initial_regime: Optional[str]) -> List[int]:
    n = len(model.regimes)
    if initial_regime is None:
        current = int(rng.integers(n))
    else:
        current = [r.id for r in model.regimes].index(initial_regime)
    path = []
    for _ in range(length):
        path.append(current)
        if n > 1 and rng.random() < model.transition:
            others = [i for i in range(n) if i != current]
            current = others[int(rng.integers(len(others)))]
    return path


@dataclass
class MarketPath:
    """Цены индекса и облигационного ETF; prices[0] - начальная точка"""
    prices: np.ndarray
    highs: np.ndarray
    lows: np.ndarray
    volumes: np.ndarray
    log_returns: np.ndarray
    regimes: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.log_returns.shape[0]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": np.arange(self.prices.shape[0]),
            "price": self.prices[:, 0],
            "bond_price": self.prices[:, 1],
            "high": self.highs,
            "low": self.lows,
            "volume": self.volumes,
            "regime": [""] + list(self.regimes),
        })


@dataclass
class DemandPath:
    """Дневной спрос, цена и флаг промо"""
    demand: np.ndarray
    prices: np.ndarray
    promo: np.ndarray
    regimes: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return self.demand.size

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": np.arange(self.demand.size),
            "demand": self.demand,
            "price": self.prices,
            "promo": self.promo.astype(int),
            "regime": list(self.regimes),
        })


def generate_market(model: RegimeModel, length: int, rng_seed: int,
                    initial_regime: Optional[str] = None) -> MarketPath:
    """
    Геометрическое случайное блуждание с режимным дрейфом и волатильностью

    :param model: Рыночная модель режимов
    :param length: Число шагов
    :param rng_seed: Сид
    :param initial_regime: Начальный режим (по умолчанию разыгрывается)
    """
    if model.kind != "market":
        raise ValueError("Нужна рыночная модель режимов")
    rng = np.random.default_rng(rng_seed)
    labels = _regime_path(model, length, rng, initial_regime)

    log_returns = np.zeros((length, 2))
    for t, k in enumerate(labels):
        mu_i, sd_i, mu_b, sd_b = model.regimes[k].params
        log_returns[t, 0] = mu_i + sd_i * model.unit_shocks(rng)
        log_returns[t, 1] = mu_b + sd_b * rng.standard_normal()

    prices = INITIAL_PRICE * np.exp(np.vstack([np.zeros((1, 2)), np.cumsum(log_returns, axis=0)]))
    index = prices[:, 0]
    prev = np.concatenate([[index[0]], index[:-1]])
    vols = np.array([0.0] + [model.regimes[k].params[1] for k in labels])
    wiggle = np.abs(rng.standard_normal(length + 1)) * vols * 0.5
    highs = np.maximum(index, prev) * np.exp(wiggle)
    lows = np.minimum(index, prev) * np.exp(-wiggle)
    volumes = BASE_VOLUME * np.exp(0.2 * rng.standard_normal(length + 1))

    logger.debug(f"Сгенерирован рынок: {length} шагов, сид {rng_seed}")
    return MarketPath(prices, highs, lows, volumes, log_returns, [model.regimes[k].id for k in labels])


def generate_demand(model: RegimeModel, length: int, rng_seed: int,
                    initial_regime: Optional[str] = None) -> DemandPath:
    """
    Пуассоновский спрос вокруг сезонного среднего с промо-множителем

    :param model: Модель режимов спроса
    :param length: Число дней
    :param rng_seed: Сид
    """
    if model.kind != "demand":
        raise ValueError("Нужна модель режимов спроса")
    rng = np.random.default_rng(rng_seed)
    labels = _regime_path(model, length, rng, initial_regime)

    promo = rng.random(length) < model.promo_prob
    demand = np.zeros(length, dtype=int)
    for t, k in enumerate(labels):
        mean, lift, amp = model.regimes[k].params
        rate = mean * (1.0 + amp * np.sin(2 * np.pi * t / model.period)) * (lift if promo[t] else 1.0)
        demand[t] = rng.poisson(max(rate, 0.0))
    prices = np.where(promo, model.base_price * (1.0 - model.promo_discount), model.base_price)
    return DemandPath(demand, prices, promo, [model.regimes[k].id for k in labels])


def save_path(path: Union[MarketPath, DemandPath], target: Union[str, Path]) -> Path:
    """Экспорт сгенерированного ряда в CSV"""
    target = Path(target)
    try:
        path.to_frame().to_csv(target, index=False)
    except OSError as e:
        raise IoFailure(f"Не удалось сохранить ряд ({e})", target) from e
    return target


def market_preset(name: str) -> RegimeModel:
    """Рыночные пресеты two_regime и heavy_tail"""
    if name == "two_regime":
        return RegimeModel("market", [
            LatentParam("bull", (0.01, 0.005, 0.002, 0.008)),
            LatentParam("bear", (-0.01, 0.02, 0.002, 0.008)),
        ])
    if name == "heavy_tail":
        return RegimeModel("market", [
            LatentParam("calm", (0.004, 0.01, 0.001, 0.003)),
            LatentParam("stressed", (0.002, 0.03, 0.001, 0.003)),
        ], shock="student_t", shock_df=3.0)
    raise ConfigError(f"Неизвестный рыночный пресет: {name}")


def demand_preset(name: str) -> RegimeModel:
    """Пресет спроса seasonal"""
    if name == "seasonal":
        return RegimeModel("demand", [
            LatentParam("normal", (20.0, 1.5, 0.3)),
            LatentParam("surge", (35.0, 2.0, 0.3)),
        ], promo_prob=0.15, period=7)
    raise ConfigError(f"Неизвестный пресет спроса: {name}")


PRESETS: Dict[str, str] = {"two_regime": "market", "heavy_tail": "market", "seasonal": "demand"}
