"""
Байесовское сожаление, точная ценность политики агента и проверка
границы ошибки Δ0 ≤ ε_p/(1−γ) + 2γR_max·ε_f/(1−γ)²
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from uamdp.core.belief import bayes_update, belief_l1
from uamdp.core.models import Belief
from uamdp.oracle.agents import AgentContext, BaseAgent, BayesAgent
from uamdp.oracle.bamdp import ErrorBudget, TinyBAMDP
from uamdp.oracle.solver import BayesSolver, exact_bayes_value

logger = logging.getLogger(__name__)

Z_95 = 1.96


@dataclass(frozen=True)
class RegretEstimate:
    """Среднее сожаление и нормальный 95% интервал"""
    mean: float
    half_width: float
    n_episodes: int

    @property
    def ci(self) -> Tuple[float, float]:
        return self.mean - self.half_width, self.mean + self.half_width

    def contains_zero(self, atol: float = 1e-9) -> bool:
        lo, hi = self.ci
        return lo - atol <= 0.0 <= hi + atol

    def overlaps(self, other: "RegretEstimate") -> bool:
        return self.ci[0] <= other.ci[1] and other.ci[0] <= self.ci[1]

    def to_dict(self) -> Dict[str, float]:
        lo, hi = self.ci
        return {"mean": self.mean, "ci_low": lo, "ci_high": hi, "episodes": self.n_episodes}


def _strata(rng: np.random.Generator, n: int) -> np.ndarray:
    """Латинский гиперкуб: по одной равномерной точке в каждой из n полос"""
    return (rng.permutation(n) + rng.random(n)) / n


def _draw(cumulative: np.ndarray, u: float) -> int:
    return int(min(np.searchsorted(cumulative, u, side="right"), cumulative.size - 1))


def run_episode(p: TinyBAMDP, agent: BaseAgent, theta_index: int, uniforms: np.ndarray, seed: Any) -> float:
    """Дисконтированная доходность одного эпизода при истинной гипотезе"""
    agent.begin_episode(seed)
    P = p.transitions[theta_index]
    s, total, scale = p.initial_state, 0.0, 1.0
    for t in range(p.horizon):
        a = agent.policy(t, s)
        total += scale * p.rewards[s, a]
        scale *= p.discount
        cumulative = np.cumsum(P[s, a])
        cumulative[-1] = 1.0
        s_next = _draw(cumulative, uniforms[t])
        agent.update(t, s, a, s_next)
        s = s_next
    return total


def bayes_regret(p: TinyBAMDP, agent: BaseAgent, n_episodes: int, rng_seed: int) -> RegretEstimate:
    """
    Монте-Карло оценка байесовского сожаления V*(s0) − G_k

    Истинная θ и каждый переход разыгрываются стратифицированно по эпизодам.

    :param p: Задача
    :param agent: Агент
    :param n_episodes: Число эпизодов
    :param rng_seed: Сид
    """
    if n_episodes < 1:
        raise ValueError("Нужен хотя бы один эпизод")
    if p.horizon == 0:
        return RegretEstimate(0.0, 0.0, n_episodes)

    v_star = exact_bayes_value(p).root
    rng = np.random.default_rng(rng_seed)
    theta_u = _strata(rng, n_episodes)
    step_u = np.array([_strata(rng, n_episodes) for _ in range(p.horizon)])
    prior_cum = np.cumsum(p.prior.weights)
    prior_cum[-1] = 1.0

    regrets = np.empty(n_episodes)
    for k in range(n_episodes):
        theta_index = _draw(prior_cum, theta_u[k])
        ret = run_episode(p, agent, theta_index, step_u[:, k], [rng_seed, k])
        regrets[k] = v_star - ret

    se = regrets.std(ddof=1) / np.sqrt(n_episodes) if n_episodes > 1 else 0.0
    estimate = RegretEstimate(float(regrets.mean()), float(Z_95 * se), n_episodes)
    logger.debug(f"{p.name} / {agent.name}: сожаление {estimate.mean:.4f} ± {estimate.half_width:.4f}")
    return estimate


def policy_value(p: TinyBAMDP, agent: BaseAgent, episode_seed: Any = 0) -> float:
    """Точная ожидаемая доходность агента под априорным распределением θ"""
    total = 0.0
    for k, prior_w in enumerate(p.prior.weights):
        if prior_w == 0:
            continue
        P = p.transitions[k]
        for ctx_w, ctx in agent.episode_contexts(episode_seed):

            def value(ctx: AgentContext, t: int, s: int) -> float:
                if t >= p.horizon:
                    return 0.0
                probs = agent.action_probs(ctx, t, s)
                v = 0.0
                for a in np.flatnonzero(probs > 0):
                    q = p.rewards[s, a]
                    for s_next in np.flatnonzero(P[s, a] > 0):
                        nxt = agent.advance(ctx, t, s, int(a), int(s_next))
                        q += p.discount * P[s, a, s_next] * value(nxt, t + 1, int(s_next))
                    v += probs[a] * q
                return v

            total += prior_w * ctx_w * value(ctx, 0, p.initial_state)
    return float(total)


@dataclass(frozen=True)
class Instrumentation:
    """Измеренные разрыв ценности Δ0 и ошибки ε_f, ε_p"""
    gap: float
    eps_f: float
    eps_p: float

    def budget(self, p: TinyBAMDP) -> ErrorBudget:
        return ErrorBudget(eps_f=self.eps_f, eps_p=max(self.eps_p, 0.0), r_max=p.r_max)


def instrument(p: TinyBAMDP, agent: BaseAgent, episode_seed: Any = 0) -> Instrumentation:
    """
    Измерение Δ0 = V* − V^agent, ε_f и ε_p

    ε_f - максимум L1 между убеждением агента и точным апостериорным по
    достижимым узлам; ε_p - максимальный проигрыш действия агента в
    байес-оптимальной Q под точным апостериорным.
    """
    solver = BayesSolver(p)
    gap = exact_bayes_value(p).root - policy_value(p, agent, episode_seed)
    eps_f, eps_p = 0.0, 0.0
    is_bayes = isinstance(agent, BayesAgent)

    def visit(ctx: AgentContext, exact: Belief, t: int, s: int):
        nonlocal eps_f, eps_p
        if t >= p.horizon:
            return
        if is_bayes:
            eps_f = max(eps_f, belief_l1(ctx.belief, exact))
        q = solver.q_values(p.weights_of(exact), s, p.horizon - t)
        probs = agent.action_probs(ctx, t, s)
        for a in np.flatnonzero(probs > 0):
            eps_p = max(eps_p, float(q.max() - q[a]))
            for s_next in range(p.n_states):
                lik = p.likelihoods(exact, s, int(a), s_next)
                if float(np.dot(exact.weights, lik)) <= 0:
                    continue
                nxt_exact = bayes_update(exact, lik)
                visit(agent.advance(ctx, t, s, int(a), s_next), nxt_exact, t + 1, s_next)

    for _, ctx in agent.episode_contexts(episode_seed):
        visit(ctx, p.prior, 0, p.initial_state)
    return Instrumentation(gap=float(gap), eps_f=float(eps_f), eps_p=float(eps_p))


def error_bound(budget: ErrorBudget, gamma: float) -> float:
    if not 0.0 < gamma < 1.0:
        raise ValueError("γ должен лежать в (0, 1)")
    return budget.eps_p / (1.0 - gamma) + 2.0 * gamma * budget.r_max * budget.eps_f / (1.0 - gamma) ** 2


def error_bound_check(p: TinyBAMDP, budget: ErrorBudget, measured_gap: float, gamma: float,
                      atol: float = 1e-12) -> bool:
    """Выполняется ли Δ0 ≤ ε_p/(1−γ) + 2γR_max·ε_f/(1−γ)²"""
    return measured_gap <= error_bound(budget, gamma) + atol


@dataclass(frozen=True)
class InstrumentationSummary:
    """
    Инструментирование по нескольким инициализациям фильтра

    Одна выборка частиц слишком шумная, чтобы по ней судить о зависимости
    ε_f от N; средние считаются по всем прогонам, граница проверяется в каждом.
    """
    runs: Tuple[Instrumentation, ...]

    def _mean(self, field: str) -> float:
        return float(np.mean([getattr(r, field) for r in self.runs]))

    @property
    def gap(self) -> float:
        return self._mean("gap")

    @property
    def eps_f(self) -> float:
        return self._mean("eps_f")

    @property
    def eps_p(self) -> float:
        return self._mean("eps_p")

    def budget(self, p: TinyBAMDP) -> ErrorBudget:
        return ErrorBudget(eps_f=self.eps_f, eps_p=max(self.eps_p, 0.0), r_max=p.r_max)

    def bound_ok(self, p: TinyBAMDP) -> bool:
        return all(error_bound_check(p, r.budget(p), r.gap, p.discount) for r in self.runs)


def instrument_seeds(p: TinyBAMDP, agent: BaseAgent, episode_seeds: Sequence[Any]) -> InstrumentationSummary:
    """
    instrument для каждого сида эпизода

    :param p: Задача
    :param agent: Агент
    :param episode_seeds: Сиды инициализации (для частиц - разные облака)
    :raises ValueError: Если сидов нет
    """
    if len(episode_seeds) == 0:
        raise ValueError("Нужен хотя бы один сид инициализации")
    return InstrumentationSummary(tuple(instrument(p, agent, seed) for seed in episode_seeds))
