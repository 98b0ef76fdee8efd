"""
Точное решение малых BAMDP обратной индукцией по дереву убеждений
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from uamdp.core.errors import BudgetExceeded
from uamdp.core.models import LatentParam
from uamdp.oracle.bamdp import TinyBAMDP
from uamdp.utils.profiler import profiler

logger = logging.getLogger(__name__)

TIE_TOL = 1e-12
DEFAULT_NODE_CAP = 200_000


def argmax_lowest(values: np.ndarray, tol: float = TIE_TOL) -> int:
    """Индекс максимума; при равенстве в пределах tol - наименьший"""
    values = np.asarray(values, dtype=float)
    return int(np.flatnonzero(values >= values.max() - tol)[0])


class BayesSolver:
    """
    Байесовская ценность V(b, s, k шагов) с мемоизацией

    Убеждение - вектор весов по гипотезам задачи; ключи мемо
    округляются до 12 знаков.
    """

    def __init__(self, p: TinyBAMDP, node_cap: int = DEFAULT_NODE_CAP):
        self.p = p
        self.node_cap = node_cap
        self._memo: Dict[Tuple[Tuple[float, ...], int, int], float] = {}

    @property
    def nodes(self) -> int:
        return len(self._memo)

    def _key(self, b: np.ndarray, s: int, steps: int):
        return tuple(np.round(b, 12)), s, steps

    def posterior(self, b: np.ndarray, s: int, a: int, s_next: int) -> Tuple[float, np.ndarray]:
        """Вероятность перехода под убеждением и апостериорные веса"""
        joint = b * self.p.transitions[:, s, a, s_next]
        prob = float(joint.sum())
        if prob <= 0:
            return 0.0, b
        return prob, joint / prob

    def q_values(self, b: np.ndarray, s: int, steps: int) -> np.ndarray:
        """Q(b, s, a) на steps шагов вперёд (для steps = 0 - нули)"""
        p = self.p
        q = np.zeros(p.n_actions)
        if steps <= 0:
            return q
        for a in range(p.n_actions):
            total = p.rewards[s, a]
            if steps > 1:
                for s_next in range(p.n_states):
                    prob, b_next = self.posterior(b, s, a, s_next)
                    if prob > 0:
                        total += p.discount * prob * self.value(b_next, s_next, steps - 1)
            q[a] = total
        return q

    def value(self, b: np.ndarray, s: int, steps: int) -> float:
        if steps <= 0:
            return 0.0
        key = self._key(b, s, steps)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        if len(self._memo) >= self.node_cap:
            raise BudgetExceeded(f"Дерево убеждений превысило {self.node_cap} узлов ({self.p.name})")
        v = float(np.max(self.q_values(b, s, steps)))
        self._memo[key] = v
        return v

    def best_action(self, b: np.ndarray, s: int, steps: int) -> int:
        return argmax_lowest(self.q_values(b, s, steps))


@dataclass
class BayesValueTable:
    """Ценности узлов достижимого дерева убеждений, ключ - история ((a, s'), ...)"""
    root: float
    nodes: Dict[Tuple[Tuple[int, int], ...], Dict[str, object]] = field(default_factory=dict)

    def value(self, history: Tuple[Tuple[int, int], ...] = ()) -> float:
        return float(self.nodes[history]["value"])


@profiler.profile(name="exact_bayes_value")
def exact_bayes_value(p: TinyBAMDP, node_cap: int = DEFAULT_NODE_CAP) -> BayesValueTable:
    """
    Точная байесовская ценность задачи

    :param p: Задача
    :param node_cap: Лимит узлов мемо
    :return: Ценность в корне и таблица по достижимым историям
    :raises BudgetExceeded: При превышении лимита
    """
    solver = BayesSolver(p, node_cap)
    b0 = p.prior.weights.copy()
    table = BayesValueTable(root=solver.value(b0, p.initial_state, p.horizon))

    def visit(history, b, s, t):
        steps = p.horizon - t
        table.nodes[history] = {
            "t": t,
            "state": s,
            "belief": b.tolist(),
            "value": solver.value(b, s, steps),
        }
        if steps <= 1:
            return
        for a in range(p.n_actions):
            for s_next in range(p.n_states):
                prob, b_next = solver.posterior(b, s, a, s_next)
                if prob > 0:
                    visit(history + ((a, s_next),), b_next, s_next, t + 1)

    visit((), b0, p.initial_state, 0)
    logger.debug(f"{p.name}: V* = {table.root:.6f}, узлов мемо {solver.nodes}")
    return table


@dataclass
class MDPSolution:
    """Оптимальная политика policy[h, s] и ценности values[h, s] (values[H] = 0)"""
    policy: np.ndarray
    values: np.ndarray

    def value(self, s: int) -> float:
        return float(self.values[0, s])


def exact_mdp_optimal(p: TinyBAMDP, theta: LatentParam) -> MDPSolution:
    """Конечногоризонтная итерация ценности для полностью наблюдаемой M(θ)"""
    P = p.transitions[p.theta_index(theta.id)]
    H = p.horizon
    values = np.zeros((H + 1, p.n_states))
    policy = np.zeros((H, p.n_states), dtype=int)
    for h in range(H - 1, -1, -1):
        q = p.rewards + p.discount * P @ values[h + 1]
        for s in range(p.n_states):
            policy[h, s] = argmax_lowest(q[s])
            values[h, s] = q[s, policy[h, s]]
    return MDPSolution(policy, values)
