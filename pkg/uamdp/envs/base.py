"""
Базовые интерфейсы сред: модель для планирования и исполняемый сценарий
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from uamdp.core.belief import thompson_sample
from uamdp.core.forecaster import mixture_moments
from uamdp.core.models import Belief, HyperState, LatentParam, PredictiveDist


@dataclass(frozen=True)
class Transition:
    next_state: Any
    reward: float
    done: bool = False


class EnvModel(ABC):
    """
    Симулируемая динамика при фиксированной гипотезе θ

    Методы чистые: состояние не изменяется, случайность берётся
    только из переданного генератора.
    """

    @abstractmethod
    def actions(self, state: Any) -> List[Any]:
        """Конечный непустой набор действий"""

    def action_label(self, action: Any) -> str:
        return str(action)

    @abstractmethod
    def step(self, state: Any, action: Any, theta: LatentParam, rng: np.random.Generator) -> Transition:
        """Один шаг симуляции"""

    def observe(self, state: Any) -> np.ndarray:
        """Наблюдаемый вектор состояния для вероятностного ограничения"""
        return np.zeros(1)


class Scenario(ABC):
    """Исполняемая среда управляющего цикла"""

    name = "scenario"

    @abstractmethod
    def reset(self, rng_seed: int) -> Any:
        """Начальное состояние среды (и скрытый режим) для сида"""

    @abstractmethod
    def prior(self) -> Belief:
        """Априорное убеждение о θ"""

    @abstractmethod
    def planning_model(self, hyper: HyperState) -> EnvModel:
        """Модель динамики для планировщика в текущем гиперсостоянии"""

    @abstractmethod
    def execute(self, state: Any, action: Any) -> Tuple[Any, float, np.ndarray]:
        """Шаг реальной среды: (новое состояние, награда, наблюдение)"""

    @abstractmethod
    def log_likelihoods(self, hyper: HyperState, action: Any, x_next: Sequence[float]) -> np.ndarray:
        """log p(x_next | s_t, a, θ_i) для каждой гипотезы убеждения"""

    def one_step_forecast(self, hyper: HyperState) -> PredictiveDist:
        """Прогноз следующего наблюдения, усреднённый по убеждению"""
        raise NotImplementedError

    def episode_reset(self, state: Any) -> Any:
        """Состояние в начале нового эпизода"""
        return state

    def sample_theta(self, belief: Belief, rng_seed: Any, episode: int) -> LatentParam:
        """Розыгрыш θ_k для эпизода"""
        return thompson_sample(belief, rng_seed)

    def summary(self, state: Any) -> Dict[str, Any]:
        return {}

    def hidden_label(self, state: Any) -> str:
        """Истинный режим (только для диагностики)"""
        return ""


class ForecastScenario(Scenario):
    """
    Сценарий, в котором наблюдение прогнозируется прогнозистом

    Прогнозы кэшируются по (t, θ.id): частицы с одинаковым id
    разделяют одно прогнозное распределение.
    """

    def __init__(self, forecaster):
        self.forecaster = forecaster
        self._cache: Dict[Tuple[int, str], PredictiveDist] = {}
        self._cache_t = -1

    def inputs(self, hyper: HyperState) -> np.ndarray:
        """Вход прогнозиста u_t"""
        raise NotImplementedError

    def observed(self, hyper: HyperState) -> Sequence[Sequence[float]]:
        """Наблюдённый ряд до момента t включительно (с разогревом)"""
        return hyper.history

    def predict(self, hyper: HyperState, theta: LatentParam) -> PredictiveDist:
        if hyper.t != self._cache_t:
            self._cache.clear()
            self._cache_t = hyper.t
        key = (hyper.t, theta.id)
        if key not in self._cache:
            self._cache[key] = self.forecaster.predict(self.inputs(hyper), theta, self.observed(hyper))
        return self._cache[key]

    def log_likelihoods(self, hyper: HyperState, action: Any, x_next: Sequence[float]) -> np.ndarray:
        by_id = {h.id: self.forecaster.log_likelihood(self.predict(hyper, h), x_next)
                 for h in hyper.belief.distinct()}
        return np.array([by_id[h.id] for h in hyper.belief.hypotheses])

    def one_step_forecast(self, hyper: HyperState) -> PredictiveDist:
        marginal = hyper.belief.marginal()
        hyps = hyper.belief.distinct()
        return mixture_moments([self.predict(hyper, h) for h in hyps], [marginal[h.id] for h in hyps])
