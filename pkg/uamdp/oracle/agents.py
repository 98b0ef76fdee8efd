"""
Агенты для малых BAMDP с интерфейсом управляющего цикла:
begin_episode → policy → update.

Внутреннее состояние агента - AgentContext; методы action_probs и
advance чистые, поэтому точная оценка политики может перебрать все
ветви без копирования агента.
"""
import logging
from dataclasses import dataclass
from typing import Any, List, Optional, Tuple

import numpy as np

from uamdp.core.belief import bayes_update, maybe_resample, sample_particles, thompson_sample
from uamdp.core.config import ParticleFilterConfig
from uamdp.core.errors import AllZeroLikelihood
from uamdp.core.models import Belief
from uamdp.oracle.bamdp import TinyBAMDP
from uamdp.oracle.solver import BayesSolver, argmax_lowest, exact_mdp_optimal

logger = logging.getLogger(__name__)

SeedLike = Any


@dataclass(frozen=True)
class AgentContext:
    """Состояние агента внутри эпизода"""
    seed: Any
    belief: Optional[Belief] = None
    start_belief: Optional[Belief] = None
    theta_index: int = -1


class BaseAgent:
    """Общая часть: розыгрыш действия из action_probs и хранение контекста"""

    name = "agent"

    def __init__(self, p: TinyBAMDP):
        self.p = p
        self.ctx: Optional[AgentContext] = None
        self._rng: Optional[np.random.Generator] = None

    def episode_contexts(self, seed: SeedLike) -> List[Tuple[float, AgentContext]]:
        """Возможные начальные контексты эпизода с вероятностями"""
        return [(1.0, AgentContext(seed=seed))]

    def action_probs(self, ctx: AgentContext, t: int, s: int) -> np.ndarray:
        raise NotImplementedError

    def advance(self, ctx: AgentContext, t: int, s: int, a: int, s_next: int) -> AgentContext:
        return ctx

    def begin_episode(self, seed: SeedLike):
        contexts = self.episode_contexts(seed)
        self._rng = np.random.default_rng(seed)
        if len(contexts) == 1:
            self.ctx = contexts[0][1]
        else:
            probs = np.array([w for w, _ in contexts])
            self.ctx = contexts[int(self._rng.choice(len(contexts), p=probs / probs.sum()))][1]

    def policy(self, t: int, s: int) -> int:
        probs = self.action_probs(self.ctx, t, s)
        nonzero = np.flatnonzero(probs > 0)
        if nonzero.size == 1:
            return int(nonzero[0])
        return int(self._rng.choice(len(probs), p=probs))

    def update(self, t: int, s: int, a: int, s_next: int):
        self.ctx = self.advance(self.ctx, t, s, a, s_next)


class BayesAgent(BaseAgent):
    """
    Байесовский агент: точный фильтр или N частиц, переборный
    планировщик глубины L с нулевой ценностью листа

    :param n_particles: None - точный фильтр
    :param depth: Глубина L (None - весь остаток горизонта)
    """

    def __init__(self, p: TinyBAMDP, n_particles: Optional[int] = None, depth: Optional[int] = None,
                 resample_threshold: float = 0.5):
        super().__init__(p)
        self.n_particles = n_particles
        self.depth = depth
        self.resample_threshold = resample_threshold
        self.solver = BayesSolver(p)
        filt = "exact" if n_particles is None else f"N={n_particles}"
        self.name = f"bayes[{filt}, L={'H' if depth is None else depth}]"

    def _filter_config(self, seed: SeedLike) -> ParticleFilterConfig:
        base = int(np.random.default_rng(seed).integers(2 ** 31))
        return ParticleFilterConfig(n_particles=self.n_particles, resample_threshold=self.resample_threshold,
                                    rng_seed=base)

    def episode_contexts(self, seed):
        if self.n_particles is None:
            belief = self.p.prior
        else:
            belief = sample_particles(self.p.prior, self._filter_config(seed))
        return [(1.0, AgentContext(seed=seed, belief=belief, start_belief=belief))]

    def action_probs(self, ctx, t, s):
        steps = self.p.horizon - t if self.depth is None else min(self.depth, self.p.horizon - t)
        q = self.solver.q_values(self.p.weights_of(ctx.belief), s, steps)
        probs = np.zeros(self.p.n_actions)
        probs[argmax_lowest(q)] = 1.0
        return probs

    def advance(self, ctx, t, s, a, s_next):
        try:
            belief = bayes_update(ctx.belief, self.p.likelihoods(ctx.belief, s, a, s_next))
        except AllZeroLikelihood:
            logger.debug(f"{self.name}: нулевое правдоподобие на шаге {t}, сброс убеждения")
            belief = ctx.start_belief
        if self.n_particles is not None:
            belief, _ = maybe_resample(belief, self._filter_config(ctx.seed), t)
        return AgentContext(seed=ctx.seed, belief=belief, start_belief=ctx.start_belief)


class RandomAgent(BaseAgent):
    """Равномерно случайная политика"""

    name = "random"

    def action_probs(self, ctx, t, s):
        return np.full(self.p.n_actions, 1.0 / self.p.n_actions)


class PosteriorSamplingAgent(BaseAgent):
    """Розыгрыш θ_k из убеждения в начале эпизода, затем оптимальная политика M(θ_k)"""

    name = "psrl"

    def __init__(self, p: TinyBAMDP, belief: Optional[Belief] = None):
        super().__init__(p)
        self.belief = belief or p.prior
        self.solutions = [exact_mdp_optimal(p, theta) for theta in p.thetas]

    def episode_contexts(self, seed):
        weights = self.p.weights_of(self.belief)
        return [(float(w), AgentContext(seed=seed, theta_index=k)) for k, w in enumerate(weights) if w > 0]

    def begin_episode(self, seed):
        theta = thompson_sample(self.belief, seed)
        self._rng = np.random.default_rng(seed)
        self.ctx = AgentContext(seed=seed, theta_index=self.p.theta_index(theta.id))

    def action_probs(self, ctx, t, s):
        probs = np.zeros(self.p.n_actions)
        probs[self.solutions[ctx.theta_index].policy[t, s]] = 1.0
        return probs


def make_agent(p: TinyBAMDP, kind: str, n_particles: Optional[int] = None, depth: Optional[int] = None) -> BaseAgent:
    """Фабрика агентов по имени строки набора"""
    if kind == "exact":
        return BayesAgent(p)
    if kind == "particle":
        return BayesAgent(p, n_particles=n_particles)
    if kind == "depth":
        return BayesAgent(p, depth=depth)
    if kind == "random":
        return RandomAgent(p)
    if kind == "psrl":
        return PosteriorSamplingAgent(p)
    raise ValueError(f"Неизвестный агент: {kind}")
