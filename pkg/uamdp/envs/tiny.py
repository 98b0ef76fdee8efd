"""
Малый BAMDP как сценарий управляющего цикла
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from uamdp.core.config import RunConfig
from uamdp.core.models import Belief, HyperState, PredictiveDist
from uamdp.envs.base import EnvModel, Scenario, Transition
from uamdp.oracle.bamdp import TinyBAMDP, load_instance


@dataclass(frozen=True)
class TinyState:
    s: int
    step: int = 0


class TinyModel(EnvModel):
    """Динамика M(θ) для планировщика"""

    def __init__(self, p: TinyBAMDP):
        self.p = p

    def actions(self, state):
        return list(range(self.p.n_actions))

    def action_label(self, action):
        return self.p.actions[action]

    def step(self, state, action, theta, rng):
        probs = self.p.transitions[self.p.theta_index(theta.id), state.s, action]
        s_next = int(rng.choice(self.p.n_states, p=probs))
        return Transition(TinyState(s_next, state.step + 1), float(self.p.rewards[state.s, action]))

    def observe(self, state):
        return np.array([float(state.s)])


class TinyBAMDPScenario(Scenario):
    """
    Истинная гипотеза разыгрывается из априорного распределения по сиду;
    в начале каждого эпизода состояние возвращается в начальное
    """

    name = "tiny-bamdp"

    def __init__(self, config: RunConfig, rng_seed: int, p: Optional[TinyBAMDP] = None):
        self.config = config
        self.rng_seed = rng_seed
        self.p = p or load_instance(config.instance)
        rng = np.random.default_rng([rng_seed, 5])
        self.true_index = int(rng.choice(len(self.p.thetas), p=self.p.prior.weights))
        self.model = TinyModel(self.p)

    def reset(self, rng_seed: Optional[int] = None) -> TinyState:
        return TinyState(self.p.initial_state, 0)

    def episode_reset(self, state: TinyState) -> TinyState:
        return TinyState(self.p.initial_state, state.step)

    def prior(self) -> Belief:
        return self.p.prior

    def planning_model(self, hyper: HyperState) -> TinyModel:
        return self.model

    def execute(self, state: TinyState, action) -> Tuple[TinyState, float, np.ndarray]:
        rng = np.random.default_rng([self.rng_seed, 3, state.step])
        probs = self.p.transitions[self.true_index, state.s, action]
        s_next = int(rng.choice(self.p.n_states, p=probs))
        reward = float(self.p.rewards[state.s, action])
        return TinyState(s_next, state.step + 1), reward, np.array([float(s_next)])

    def log_likelihoods(self, hyper: HyperState, action, x_next) -> np.ndarray:
        s, s_next = hyper.env_state.s, int(np.atleast_1d(x_next)[0])
        with np.errstate(divide="ignore"):
            return np.log(self.p.likelihoods(hyper.belief, s, int(action), s_next))

    def one_step_forecast(self, hyper: HyperState, action: Any = None) -> PredictiveDist:
        """Моменты индекса следующего состояния под убеждением (действие 0 по умолчанию)"""
        a = 0 if action is None else int(action)
        w = self.p.weights_of(hyper.belief)
        probs = w @ self.p.transitions[:, hyper.env_state.s, a]
        idx = np.arange(self.p.n_states)
        mean = float(probs @ idx)
        var = float(probs @ (idx - mean) ** 2)
        return PredictiveDist.gaussian([mean], [max(var, 1e-12)])

    def hidden_label(self, state) -> str:
        return self.p.thetas[self.true_index].id

    def summary(self, state: TinyState) -> Dict[str, Any]:
        return {"state": self.p.states[state.s]}
