"""
Торговая среда: распределение капитала между деньгами, индексом и облигационным ETF
"""
import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from uamdp.core.config import RunConfig
from uamdp.core.errors import ConfigError
from uamdp.core.forecaster import (
    ConjugateForecaster,
    GPForecaster,
    PersistenceForecaster,
    RegimeForecaster,
    sample_next,
)
from uamdp.core.models import Belief, HyperState, LatentParam, PredictiveDist
from uamdp.envs.base import EnvModel, ForecastScenario, Transition
from uamdp.envs.features import TRADING_WARMUP, FeatureNoise, features_trading
from uamdp.envs.generators import RegimeModel, generate_market, market_preset

logger = logging.getLogger(__name__)

ASSETS = ("cash", "index", "bond")
HOLD_TOL = 1e-12

Allocation = Tuple[float, float, float]


@dataclass(frozen=True)
class TradingState:
    """
    Состояние портфеля

    :param position: Текущие веса (после дрейфа цен)
    :param target: Последнее выбранное распределение
    """
    prices: Tuple[float, float]
    position: Allocation
    portfolio_value: float
    cost_rate: float = 0.0002
    target: Allocation = (1.0, 0.0, 0.0)
    step: int = 0
    last_return: float = 0.0
    last_turnover: float = 0.0

    def __post_init__(self):
        w = np.asarray(self.position, dtype=float)
        if w.shape != (3,) or np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"Некорректные веса портфеля: {self.position}")
        if self.portfolio_value <= 0:
            raise ValueError("Стоимость портфеля должна быть положительной")


def allocation_grid(step: float) -> List[Allocation]:
    """Все распределения с шагом step, начиная с «всё в деньгах»"""
    n = int(round(1.0 / step))
    grid = []
    for i in range(n + 1):
        for b in range(n + 1 - i):
            grid.append(((n - i - b) / n, i / n, b / n))
    return grid


def allocation_label(a: Sequence[float]) -> str:
    return "c{:.0f}/i{:.0f}/b{:.0f}".format(*(100 * np.asarray(a)))


def trading_step(st: TradingState, a: Sequence[float], next_return: Sequence[float]) -> Tuple[TradingState, float]:
    """
    Один торговый шаг

    Действие, совпадающее с текущей целью, - удержание: сделки нет,
    веса дрейфуют с ценами. Иначе портфель ребалансируется в a с
    издержками cost_rate·(L1/2)·V.

    :param next_return: Лог-доходности (индекс, облигации) или (деньги, индекс, облигации)
    :return: (новое состояние, лог-доходность портфеля)
    """
    target = np.asarray(a, dtype=float)
    r = np.asarray(next_return, dtype=float)
    if r.size == 2:
        r = np.concatenate([[0.0], r])
    position = np.asarray(st.position, dtype=float)

    if np.allclose(target, st.target, atol=HOLD_TOL, rtol=0.0):
        weights, turnover = position, 0.0
    else:
        weights = target
        turnover = float(np.abs(position - target).sum() / 2.0)
    cost = st.cost_rate * turnover * st.portfolio_value

    grown = weights * np.exp(r)
    new_value = (st.portfolio_value - cost) * grown.sum()
    reward = float(np.log(new_value / st.portfolio_value))
    next_state = replace(
        st,
        prices=tuple(float(p) for p in np.asarray(st.prices) * np.exp(r[1:])),
        position=tuple(float(w) for w in grown / grown.sum()),
        portfolio_value=float(new_value),
        target=tuple(float(w) for w in target),
        step=st.step + 1,
        last_return=reward,
        last_turnover=turnover,
    )
    return next_state, reward


class TradingModel(EnvModel):
    """
    Модель планирования: доходности разыгрываются из прогноза,
    зафиксированного в узле решения
    """

    def __init__(self, grid: List[Allocation], predictive: Callable[[LatentParam], PredictiveDist]):
        self.grid = grid
        self.predictive = predictive

    def actions(self, state):
        return self.grid

    def action_label(self, action):
        return allocation_label(action)

    def step(self, state, action, theta, rng):
        r = sample_next(self.predictive(theta), rng)
        next_state, reward = trading_step(state, action, r)
        return Transition(next_state, reward)

    def observe(self, state):
        return np.array([state.last_return])


def regime_moments(u: np.ndarray, theta: LatentParam) -> Tuple[np.ndarray, np.ndarray]:
    """Аналитический прогноз доходностей (индекс, облигации) для режима"""
    mu_i, sd_i, mu_b, sd_b = theta.params
    return np.array([mu_i, mu_b]), np.array([sd_i ** 2, sd_b ** 2])


class TradingScenario(ForecastScenario):
    """
    Синтетический рынок с переключением режимов

    Скрытый режим разыгрывается по сиду; первые warmup шагов ряда
    служат разогревом признаков и в управлении не участвуют.
    """

    name = "trading"

    def __init__(self, config: RunConfig, rng_seed: int, model: Optional[RegimeModel] = None):
        if config.warmup < TRADING_WARMUP:
            raise ConfigError(f"Для торговой среды warmup должен быть не меньше {TRADING_WARMUP}")
        self.config = config
        self.rng_seed = rng_seed
        self.model = model or market_preset(config.preset)
        self.grid = allocation_grid(config.allocation_step)
        self.market = generate_market(self.model, config.warmup + config.T + 1, rng_seed)
        super().__init__(self._make_forecaster())

    def _make_forecaster(self):
        cfg = self.config
        if cfg.forecaster == "regime":
            return RegimeForecaster(regime_moments)
        if cfg.forecaster == "conjugate":
            return ConjugateForecaster(cfg.noise_var, lambda th: np.array([th.params[0], th.params[2]]))
        if cfg.forecaster == "persistence":
            return PersistenceForecaster(var_window=20)
        return self._fit_gp()

    def _fit_gp(self) -> GPForecaster:
        """GP по отдельным обучающим рядам для каждого режима"""
        cfg = self.config
        per_regime = max(cfg.gp_train_size // len(self.model.regimes), 1)
        rows, labels, targets = [], [], []
        for k, regime in enumerate(self.model.regimes):
            path = generate_market(
                replace(self.model, transition=0.0),
                cfg.warmup + per_regime + 1,
                [self.rng_seed, 1000 + k],
                initial_regime=regime.id,
            )
            for t in range(cfg.warmup, cfg.warmup + per_regime):
                rows.append(features_trading(path.prices[:, 0], path.highs, path.lows, path.volumes, t))
                labels.append(k)
                targets.append(path.log_returns[t])
        forecaster = GPForecaster.fit(np.array(rows), labels, np.array(targets), self.model.regimes, cfg.gp_train_size)
        if cfg.noise_frac > 0:
            forecaster.noise = FeatureNoise(len(rows[0]), cfg.noise_frac, cfg.noise_sigma, self.rng_seed)
        return forecaster

    def reset(self, rng_seed: Optional[int] = None) -> TradingState:
        start = self.config.warmup
        return TradingState(
            prices=tuple(float(p) for p in self.market.prices[start]),
            position=(1.0, 0.0, 0.0),
            portfolio_value=1.0,
            cost_rate=self.config.cost_rate,
            target=(1.0, 0.0, 0.0),
            step=start,
        )

    def prior(self) -> Belief:
        return Belief.uniform(self.model.regimes)

    def inputs(self, hyper: HyperState) -> np.ndarray:
        m, t = self.market, hyper.env_state.step
        return features_trading(m.prices[:, 0], m.highs, m.lows, m.volumes, t)

    def observed(self, hyper: HyperState):
        return self.market.log_returns[: hyper.env_state.step]

    def planning_model(self, hyper: HyperState) -> TradingModel:
        return TradingModel(self.grid, lambda theta: self.predict(hyper, theta))

    def execute(self, state: TradingState, action) -> Tuple[TradingState, float, np.ndarray]:
        r = self.market.log_returns[state.step]
        next_state, reward = trading_step(state, action, r)
        return next_state, reward, np.array(r, dtype=float)

    def hidden_label(self, state: TradingState) -> str:
        return self.market.regimes[min(state.step, len(self.market) - 1)]

    def summary(self, state: TradingState) -> Dict[str, Any]:
        return {
            "portfolio_value": state.portfolio_value,
            "position": list(state.position),
            "target": list(state.target),
            "turnover": state.last_turnover,
            "price": state.prices[0],
        }
