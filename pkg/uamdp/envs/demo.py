"""
Двухшаговая демонстрация: 50/50 деньги/индекс, сопряжённый прогноз
доходности, заданные розыгрыши сценариев и цены.
"""
import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm

from uamdp.core.config import RunConfig
from uamdp.core.forecaster import conjugate_update
from uamdp.core.models import Belief, HyperState, LatentParam, PredictiveDist, ScalarGaussianBelief
from uamdp.envs.base import EnvModel, Scenario, Transition
from uamdp.envs.trading import TradingState, trading_step

logger = logging.getLogger(__name__)

DEMO_PRICES = (100.0, 102.0, 101.5)
DEMO_DRAWS = (0.009, 0.005)
EQUITY_GRID = (0.2, 0.5, 0.8)
PRIOR_MEAN = 0.0
PRIOR_VAR = 5e-4
DOLLARS_PER_UNIT = 10.0


def equity_allocation(w: float) -> Tuple[float, float, float]:
    return (1.0 - w, w, 0.0)


@dataclass(frozen=True)
class DemoState:
    """Портфель и сопряжённое убеждение о доходности индекса"""
    trading: TradingState
    forecast: ScalarGaussianBelief
    t: int = 0


class DemoModel(EnvModel):
    """Детерминированная модель: доходность индекса равна сценарию θ"""

    def __init__(self, grid: Sequence[float] = EQUITY_GRID):
        self.grid = [equity_allocation(w) for w in grid]

    def actions(self, state):
        return self.grid

    def action_label(self, action):
        return f"e{100 * action[1]:.0f}"

    def step(self, state, action, theta, rng):
        trading, reward = trading_step(state.trading, action, (theta.params[0], 0.0))
        return Transition(replace(state, trading=trading, t=state.t + 1), reward)

    def observe(self, state):
        return np.array([state.trading.last_return])


class DemoScenario(Scenario):
    """
    Сценарий демонстрации

    θ_k не разыгрывается из убеждения, а берётся из заданного списка
    сценарных доходностей; эпизод длится один шаг.
    """

    name = "demo"

    def __init__(self, config: RunConfig, rng_seed: int = 0, prices: Sequence[float] = DEMO_PRICES,
                 draws: Sequence[float] = DEMO_DRAWS, cost_rate: Optional[float] = None):
        self.config = config
        self.prices = list(prices)
        self.draws = list(draws)
        self.cost_rate = config.cost_rate if cost_rate is None else cost_rate
        self.model = DemoModel()
        self._hypothesis = LatentParam("conjugate", (PRIOR_MEAN,))

    def reset(self, rng_seed: Optional[int] = None) -> DemoState:
        trading = TradingState(
            prices=(self.prices[0], 1.0),
            position=equity_allocation(0.5),
            portfolio_value=self.prices[0],
            cost_rate=self.cost_rate,
            target=equity_allocation(0.5),
        )
        forecast = ScalarGaussianBelief(mu=PRIOR_MEAN, var=PRIOR_VAR, noise_var=self.config.noise_var)
        return DemoState(trading, forecast, 0)

    def prior(self) -> Belief:
        return Belief.uniform([self._hypothesis])

    def sample_theta(self, belief: Belief, rng_seed: Any, episode: int) -> LatentParam:
        return LatentParam(f"draw_{episode}", (self.draws[episode],))

    def planning_model(self, hyper: HyperState) -> DemoModel:
        return self.model

    def execute(self, state: DemoState, action) -> Tuple[DemoState, float, np.ndarray]:
        r = float(np.log(self.prices[state.t + 1] / self.prices[state.t]))
        trading, reward = trading_step(state.trading, action, (r, 0.0))
        forecast = conjugate_update(state.forecast, r)
        return DemoState(trading, forecast, state.t + 1), reward, np.array([r])

    def log_likelihoods(self, hyper: HyperState, action, x_next) -> np.ndarray:
        f = hyper.env_state.forecast
        ll = float(norm.logpdf(np.atleast_1d(x_next)[0], loc=f.mu, scale=np.sqrt(f.var + f.noise_var)))
        return np.full(len(hyper.belief), ll)

    def one_step_forecast(self, hyper: HyperState) -> PredictiveDist:
        f = hyper.env_state.forecast
        return PredictiveDist.gaussian([f.mu], [f.var])

    def summary(self, state: DemoState) -> Dict[str, Any]:
        return {
            "price": self.prices[state.t],
            "portfolio_value": state.trading.portfolio_value,
            "equity_weight": state.trading.target[1],
            "mu": state.forecast.mu,
            "var": state.forecast.var,
        }


def buy_and_hold_value(prices: Sequence[float] = DEMO_PRICES, equity: float = 0.5) -> float:
    """Стоимость портфеля без ребалансировки"""
    return float(prices[0] * (1.0 - equity) + prices[0] * equity * prices[-1] / prices[0])


def action_kind(previous: float, current: float) -> str:
    if abs(current - previous) <= 1e-12:
        return "Hold"
    return "Buy" if current > previous else "Sell"


def trace_rows(summaries: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """Строки таблицы демонстрации: t, цена, r_t, μ_t, σ_t², действие, доля акций"""
    rows = []
    for k, st in enumerate(summaries):
        if k == 0:
            r, action = float("nan"), "Sample θ_0"
        else:
            r = float(np.log(st["price"] / summaries[k - 1]["price"]))
            action = action_kind(summaries[k - 1]["equity_weight"], st["equity_weight"])
        rows.append({
            "t": k,
            "price": st["price"],
            "log_return": r,
            "mu": st["mu"],
            "var": st["var"],
            "action": action,
            "equity_weight": st["equity_weight"],
        })
    return rows
