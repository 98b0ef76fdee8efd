"""
Складская среда: ежедневный заказ при сезонном спросе с промо
"""
import logging
from dataclasses import dataclass, replace
from typing import Any, Callable, Dict, List, Optional, Tuple

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
from uamdp.core.metrics import InventoryTrace
from uamdp.core.models import Belief, HyperState, LatentParam, PredictiveDist
from uamdp.envs.base import EnvModel, ForecastScenario, Transition
from uamdp.envs.features import INVENTORY_WARMUP, FeatureNoise, features_inventory
from uamdp.envs.generators import RegimeModel, demand_preset, generate_demand

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class InventoryState:
    """
    Состояние склада

    backorders - накопленный неудовлетворённый спрос (продажи теряются,
    счётчик идёт только в сводку шага); флаг дефицита берётся из last_unmet.
    """
    on_hand: int
    backorders: int = 0
    price: float = 10.0
    unit_cost: float = 6.0
    holding_cost: float = 0.1
    stockout_penalty: float = 50.0
    step: int = 0
    last_demand: int = 0
    last_sold: int = 0
    last_unmet: int = 0

    def __post_init__(self):
        if self.on_hand < 0 or self.backorders < 0:
            raise ValueError("Запас и недопоставки не могут быть отрицательными")
        if self.price <= 0:
            raise ValueError("Цена должна быть положительной")


def inventory_step(st: InventoryState, order_qty: int, demand: int) -> Tuple[InventoryState, float]:
    """
    Один день склада (поставка без задержки)

    :param order_qty: Заказ, приходящий до начала продаж
    :param demand: Спрос за день
    :return: (новое состояние, прибыль дня)
    """
    if order_qty < 0 or demand < 0:
        raise ValueError("Заказ и спрос не могут быть отрицательными")
    available = st.on_hand + int(order_qty)
    sold = min(available, int(demand))
    unmet = max(0, int(demand) - available)
    end_on_hand = available - sold
    reward = (
        sold * (st.price - st.unit_cost)
        - st.holding_cost * end_on_hand
        - st.stockout_penalty * unmet
    )
    next_state = replace(
        st,
        on_hand=end_on_hand,
        backorders=st.backorders + unmet,
        step=st.step + 1,
        last_demand=int(demand),
        last_sold=sold,
        last_unmet=unmet,
    )
    return next_state, float(reward)


def order_grid(order_step: int, max_order: int) -> List[int]:
    return list(range(0, max_order + 1, order_step))


class InventoryModel(EnvModel):
    """Модель планирования: спрос разыгрывается из прогноза и округляется"""

    def __init__(self, orders: List[int], predictive: Callable[[LatentParam], PredictiveDist]):
        self.orders = orders
        self.predictive = predictive

    def actions(self, state):
        return self.orders

    def action_label(self, action):
        return f"q{action}"

    def step(self, state, action, theta, rng):
        draw = float(sample_next(self.predictive(theta), rng)[0])
        next_state, reward = inventory_step(state, action, max(0, int(round(draw))))
        return Transition(next_state, reward)

    def observe(self, state):
        return np.array([float(state.on_hand)])


class InventoryScenario(ForecastScenario):
    """Синтетический спрос с режимами normal/surge"""

    name = "inventory"

    def __init__(self, config: RunConfig, rng_seed: int, model: Optional[RegimeModel] = None,
                 initial_on_hand: int = 20):
        if config.warmup < INVENTORY_WARMUP:
            raise ConfigError(f"Для складской среды warmup должен быть не меньше {INVENTORY_WARMUP}")
        self.config = config
        self.rng_seed = rng_seed
        self.model = model or demand_preset("seasonal" if config.preset == "two_regime" else config.preset)
        self.orders = order_grid(config.order_step, config.max_order)
        self.initial_on_hand = initial_on_hand
        self.path = generate_demand(self.model, config.warmup + config.T + 1, rng_seed)
        super().__init__(self._make_forecaster())

    def demand_moments(self, u: np.ndarray, theta: LatentParam) -> Tuple[np.ndarray, np.ndarray]:
        """
        Моменты пуассоновского спроса со случайным промо

        u[0] - календарный день прогноза.
        """
        mean, lift, amp = theta.params
        q = self.model.promo_prob
        base = mean * (1.0 + amp * np.sin(2 * np.pi * u[0] / self.model.period))
        expected = base * (1.0 - q + q * lift)
        variance = expected + q * (1.0 - q) * (base * (lift - 1.0)) ** 2
        return np.array([expected]), np.array([max(variance, 1e-6)])

    def _make_forecaster(self):
        cfg = self.config
        if cfg.forecaster == "regime":
            return RegimeForecaster(self.demand_moments)
        if cfg.forecaster == "conjugate":
            q = self.model.promo_prob
            return ConjugateForecaster(
                max(cfg.noise_var, 1.0),
                lambda th: np.array([th.params[0] * (1.0 - q + q * th.params[1])]),
            )
        if cfg.forecaster == "persistence":
            return PersistenceForecaster(var_window=28)
        return self._fit_gp()

    def _fit_gp(self) -> GPForecaster:
        cfg = self.config
        per_regime = max(cfg.gp_train_size // len(self.model.regimes), 1)
        rows, labels, targets = [], [], []
        for k, regime in enumerate(self.model.regimes):
            path = generate_demand(replace(self.model, transition=0.0), cfg.warmup + per_regime + 1,
                                   [self.rng_seed, 2000 + k], initial_regime=regime.id)
            for t in range(cfg.warmup, cfg.warmup + per_regime):
                rows.append(features_inventory(path.demand, path.prices, t))
                labels.append(k)
                targets.append([path.demand[t + 1]])
        forecaster = GPForecaster.fit(np.array(rows), labels, np.array(targets, dtype=float),
                                      self.model.regimes, cfg.gp_train_size)
        if cfg.noise_frac > 0:
            forecaster.noise = FeatureNoise(len(rows[0]), cfg.noise_frac, cfg.noise_sigma, self.rng_seed)
        return forecaster

    def reset(self, rng_seed: Optional[int] = None) -> InventoryState:
        start = self.config.warmup
        return InventoryState(on_hand=self.initial_on_hand, price=float(self.path.prices[start]), step=start)

    def prior(self) -> Belief:
        return Belief.uniform(self.model.regimes)

    def inputs(self, hyper: HyperState) -> np.ndarray:
        t = hyper.env_state.step
        if isinstance(self.forecaster, RegimeForecaster):
            return np.array([float(t + 1)])
        unmet = np.zeros(t + 1)
        unmet[t] = hyper.env_state.last_unmet
        return features_inventory(self.path.demand, self.path.prices, t, unmet)

    def observed(self, hyper: HyperState):
        return self.path.demand[: hyper.env_state.step + 1].reshape(-1, 1).astype(float)

    def planning_model(self, hyper: HyperState) -> InventoryModel:
        return InventoryModel(self.orders, lambda theta: self.predict(hyper, theta))

    def execute(self, state: InventoryState, action) -> Tuple[InventoryState, float, np.ndarray]:
        day = state.step + 1
        priced = replace(state, price=float(self.path.prices[day]))
        demand = int(self.path.demand[day])
        next_state, reward = inventory_step(priced, int(action), demand)
        return next_state, reward, np.array([float(demand)])

    def hidden_label(self, state: InventoryState) -> str:
        return self.path.regimes[min(state.step + 1, len(self.path) - 1)]

    def summary(self, state: InventoryState) -> Dict[str, Any]:
        return {
            "on_hand": state.on_hand,
            "backorders": state.backorders,
            "demand": state.last_demand,
            "sold": state.last_sold,
            "unmet": state.last_unmet,
        }


def trace_from_states(states: List[Dict[str, Any]], unit_margin: float = 4.0, unit_cost: float = 6.0) -> InventoryTrace:
    """Складская траектория из сводок шагов"""
    return InventoryTrace(
        demand=np.array([s["demand"] for s in states], dtype=float),
        sold=np.array([s["sold"] for s in states], dtype=float),
        end_on_hand=np.array([s["on_hand"] for s in states], dtype=float),
        unit_margin=unit_margin,
        unit_cost=unit_cost,
    )
