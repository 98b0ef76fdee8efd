"""
Поиск по дереву (UCT) ограниченной глубины в гиперсостоянии.

Дерево разомкнутое: узел задаётся последовательностью действий от корня,
а каждая листовая оценка заново проигрывает этот путь из корневого
состояния при зафиксированной гипотезе θ. Убеждение внутри дерева
не обновляется.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from uamdp.core.config import PlannerConfig, RiskConfig
from uamdp.core.errors import NoFeasibleAction
from uamdp.core.models import HyperState, LatentParam
from uamdp.core.risk import blended_objective, chance_constraint_ok, cvar, violation
from uamdp.envs.base import EnvModel
from uamdp.utils.profiler import profiler

logger = logging.getLogger(__name__)

# Ветви генератора: итерации дерева, проверка ограничения, оценка Q
_TREE, _CONSTRAINT, _Q = 0, 1, 2


@dataclass
class PlanNode:
    """Узел дерева поиска"""
    path: Tuple[int, ...]
    state: Any = None
    visit_count: int = 0
    value_sum: float = 0.0
    own_rollouts: int = 0
    children: Dict[int, "PlanNode"] = field(default_factory=dict)
    return_samples: List[float] = field(default_factory=list)

    @property
    def depth(self) -> int:
        return len(self.path)

    @property
    def mean_value(self) -> float:
        return self.value_sum / self.visit_count if self.visit_count else float("-inf")

    def uct_score(self, parent_visits: int, c: float) -> float:
        return self.mean_value + c * math.sqrt(math.log(parent_visits) / self.visit_count)


@dataclass
class PlanDiagnostics:
    """Диагностика одного решения"""
    chosen: str = ""
    root_values: Dict[str, float] = field(default_factory=dict)
    visit_counts: Dict[str, int] = field(default_factory=dict)
    cvar_values: Dict[str, float] = field(default_factory=dict)
    excluded: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "chosen": self.chosen,
            "root_values": dict(self.root_values),
            "visit_counts": dict(self.visit_counts),
            "cvar_values": dict(self.cvar_values),
            "excluded": dict(self.excluded),
        }


def _uniform_rollout(
    state: Any,
    theta: LatentParam,
    env_model: EnvModel,
    depth: int,
    discount: float,
    rng: np.random.Generator,
) -> float:
    total, scale = 0.0, 1.0
    for _ in range(depth):
        actions = env_model.actions(state)
        action = actions[int(rng.integers(len(actions)))]
        tr = env_model.step(state, action, theta, rng)
        total += scale * tr.reward
        scale *= discount
        state = tr.next_state
        if tr.done:
            break
    return total


def rollout_return(state: Any, theta: LatentParam, env_model: EnvModel, depth: int,
                   discount: float, rng_seed: Any) -> float:
    """
    Дисконтированная доходность одной случайной траектории

    :param depth: Число шагов (0 - пустая сумма)
    :param rng_seed: Сид или генератор
    """
    if depth < 0:
        raise ValueError("Глубина не может быть отрицательной")
    return _uniform_rollout(state, theta, env_model, depth, discount, np.random.default_rng(rng_seed))


def _simulate_path(
    root_state: Any,
    actions: Sequence[Any],
    path: Sequence[int],
    theta: LatentParam,
    env_model: EnvModel,
    cfg: PlannerConfig,
    rng: np.random.Generator,
) -> Tuple[float, Any]:
    """Проигрыш пути из корня и случайный роллаут до depth_limit"""
    total, scale, state = 0.0, 1.0, root_state
    for a in path:
        tr = env_model.step(state, actions[a], theta, rng)
        total += scale * tr.reward
        scale *= cfg.discount
        state = tr.next_state
        if tr.done:
            return total, state
    remaining = cfg.depth_limit - len(path)
    total += scale * _uniform_rollout(state, theta, env_model, remaining, cfg.discount, rng)
    return total, state


def _constraint_paths(
    root_state: Any,
    action: Any,
    action_index: int,
    theta: LatentParam,
    env_model: EnvModel,
    cfg: PlannerConfig,
) -> np.ndarray:
    """leaf_samples траекторий наблюдений при повторении действия action"""
    paths = []
    for j in range(cfg.leaf_samples):
        rng = np.random.default_rng([cfg.rng_seed, _CONSTRAINT, action_index, j])
        state, rows = root_state, []
        for _ in range(cfg.depth_limit):
            tr = env_model.step(state, action, theta, rng)
            state = tr.next_state
            rows.append(np.atleast_1d(env_model.observe(state)))
            if tr.done:
                break
        while len(rows) < cfg.depth_limit:
            rows.append(rows[-1])
        paths.append(rows)
    return np.asarray(paths, dtype=float)


def _screen_actions(root_state, actions, theta, env_model, cfg, risk) -> Dict[int, float]:
    """Индексы действий, нарушающих ограничение, с величиной нарушения"""
    excluded: Dict[int, float] = {}
    for i, action in enumerate(actions):
        paths = _constraint_paths(root_state, action, i, theta, env_model, cfg)
        if not np.all(chance_constraint_ok(paths, risk)):
            excluded[i] = violation(paths, risk)
    return excluded


@profiler.profile(name="plan")
def plan(
    hyper: HyperState,
    theta: LatentParam,
    env_model: EnvModel,
    cfg: PlannerConfig,
    risk: Optional[RiskConfig] = None,
) -> Tuple[Any, PlanDiagnostics]:
    """
    Выбор действия в корне поиском UCT

    :param hyper: Текущее гиперсостояние (env_state - корневое состояние)
    :param theta: Гипотеза, при которой симулируется динамика
    :param env_model: Модель динамики
    :param cfg: Параметры поиска
    :param risk: Риск-параметры; None - оценка листьев по среднему
    :return: (действие, диагностика)
    :raises NoFeasibleAction: Если ограничение исключило все действия
    """
    root_state = hyper.env_state
    actions = list(env_model.actions(root_state))
    if not actions:
        raise ValueError("Пустой набор действий")
    labels = [env_model.action_label(a) for a in actions]
    n_actions = len(actions)

    excluded: Dict[int, float] = {}
    if risk is not None and risk.constraint_active:
        excluded = _screen_actions(root_state, actions, theta, env_model, cfg, risk)
        if len(excluded) == n_actions:
            fallback = min(excluded, key=lambda i: (excluded[i], i))
            raise NoFeasibleAction(
                "Все действия нарушают вероятностное ограничение",
                fallback_action=actions[fallback],
                violations={labels[i]: v for i, v in excluded.items()},
            )

    root = PlanNode(path=(), state=root_state)
    for it in range(cfg.rollout_budget):
        node, visited = root, [root]

        # Выбор
        while node.depth < cfg.depth_limit and len(node.children) == n_actions:
            parent_visits = node.visit_count
            node = max(
                (node.children[a] for a in range(n_actions)),
                key=lambda ch: ch.uct_score(parent_visits, cfg.exploration_const),
            )
            visited.append(node)

        # Расширение
        if node.depth < cfg.depth_limit:
            a = len(node.children)
            child = PlanNode(path=node.path + (a,))
            node.children[a] = child
            node = child
            visited.append(node)

        # Оценка листа
        samples = []
        for j in range(cfg.leaf_samples):
            rng = np.random.default_rng([cfg.rng_seed, _TREE, it, j])
            ret, end_state = _simulate_path(root_state, actions, node.path, theta, env_model, cfg, rng)
            if node.state is None:
                node.state = end_state
            samples.append(ret)
        score = blended_objective(samples, risk) if risk is not None else float(np.mean(samples))
        node.return_samples.extend(samples)
        node.own_rollouts += 1

        # Обратное распространение
        for n in visited:
            n.visit_count += 1
            n.value_sum += score

    profiler.count("rollouts", cfg.rollout_budget * cfg.leaf_samples)

    diagnostics = PlanDiagnostics()
    alpha = risk.alpha if risk is not None else 0.05
    for a, child in sorted(root.children.items()):
        diagnostics.root_values[labels[a]] = child.mean_value
        diagnostics.visit_counts[labels[a]] = child.visit_count
        pooled = _pooled_samples(child)
        if pooled:
            diagnostics.cvar_values[labels[a]] = cvar(pooled, alpha)
    diagnostics.excluded = {labels[i]: v for i, v in excluded.items()}

    candidates = [a for a in range(n_actions) if a not in excluded]
    visited_candidates = [a for a in candidates if a in root.children]
    if visited_candidates:
        best = max(visited_candidates, key=lambda a: (root.children[a].mean_value, -a))
    else:
        best = candidates[0]
    diagnostics.chosen = labels[best]
    logger.debug(f"План t={hyper.t}: {labels[best]} (θ={theta.id}, исключено {len(excluded)})")
    return actions[best], diagnostics


def _pooled_samples(node: PlanNode) -> List[float]:
    """Все выборки доходностей поддерева"""
    pooled = list(node.return_samples)
    for child in node.children.values():
        pooled.extend(_pooled_samples(child))
    return pooled


def q_estimate(
    hyper: HyperState,
    action: Any,
    theta: LatentParam,
    env_model: EnvModel,
    cfg: PlannerConfig,
) -> float:
    """
    Монте-Карло оценка Q: действие action, затем случайная политика

    Горизонт depth_limit шагов, rollout_budget траекторий.
    """
    total = 0.0
    for i in range(cfg.rollout_budget):
        rng = np.random.default_rng([cfg.rng_seed, _Q, i])
        tr = env_model.step(hyper.env_state, action, theta, rng)
        ret = tr.reward
        if not tr.done:
            ret += cfg.discount * _uniform_rollout(
                tr.next_state, theta, env_model, cfg.depth_limit - 1, cfg.discount, rng
            )
        total += ret
    return total / cfg.rollout_budget
