"""
Малые байес-адаптивные MDP с конечным набором гипотез о переходах
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from uamdp.core.errors import ConfigError, IoFailure
from uamdp.core.models import Belief, LatentParam

logger = logging.getLogger(__name__)

INSTANCES_DIR = Path(__file__).with_name("instances")
PROB_TOL = 1e-12
MAX_SIZE = 1000


@dataclass(frozen=True, eq=False)
class TinyBAMDP:
    """
    Задача ⟨S, A, {P_θ}, r, γ⟩ с априорным убеждением

    :param rewards: r(s, a), общие для всех гипотез
    :param transitions: P_θ(s'|s, a), массив (K, S, A, S)
    """
    name: str
    states: List[str]
    actions: List[str]
    rewards: np.ndarray
    thetas: List[LatentParam]
    transitions: np.ndarray
    prior: Belief
    horizon: int
    discount: float
    initial_state: int = 0

    def __post_init__(self):
        S, A, K = len(self.states), len(self.actions), len(self.thetas)
        rewards = np.asarray(self.rewards, dtype=float)
        transitions = np.asarray(self.transitions, dtype=float)
        if rewards.shape != (S, A):
            raise ValueError(f"{self.name}: таблица наград должна иметь форму ({S}, {A})")
        if transitions.shape != (K, S, A, S):
            raise ValueError(f"{self.name}: переходы должны иметь форму ({K}, {S}, {A}, {S})")
        if np.any(transitions < 0) or np.any(np.abs(transitions.sum(axis=3) - 1.0) > PROB_TOL):
            raise ValueError(f"{self.name}: строки переходов должны быть распределениями")
        if S * A * K > MAX_SIZE:
            raise ValueError(f"{self.name}: задача слишком велика ({S}·{A}·{K} > {MAX_SIZE})")
        if [h.id for h in self.prior.hypotheses] != [t.id for t in self.thetas]:
            raise ValueError(f"{self.name}: априорное убеждение не совпадает со списком гипотез")
        if self.horizon < 0 or not 0.0 < self.discount < 1.0:
            raise ValueError(f"{self.name}: некорректные горизонт или дисконт")
        if not 0 <= self.initial_state < S:
            raise ValueError(f"{self.name}: некорректное начальное состояние")
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "transitions", transitions)

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def r_max(self) -> float:
        return float(np.max(np.abs(self.rewards)))

    def theta_index(self, theta_id: str) -> int:
        for k, theta in enumerate(self.thetas):
            if theta.id == theta_id:
                return k
        raise KeyError(theta_id)

    def weights_of(self, belief: Belief) -> np.ndarray:
        """Убеждение (возможно, облако частиц) как вектор весов по гипотезам"""
        marginal = belief.marginal()
        return np.array([marginal.get(t.id, 0.0) for t in self.thetas])

    def likelihoods(self, belief: Belief, s: int, a: int, s_next: int) -> np.ndarray:
        """P_θ(s'|s, a) для каждой гипотезы убеждения"""
        return np.array([self.transitions[self.theta_index(h.id), s, a, s_next] for h in belief.hypotheses])

    def single(self, theta_id: str) -> "TinyBAMDP":
        """Задача без неопределённости: только гипотеза theta_id"""
        k = self.theta_index(theta_id)
        theta = self.thetas[k]
        return TinyBAMDP(
            name=f"{self.name}[{theta_id}]",
            states=self.states,
            actions=self.actions,
            rewards=self.rewards,
            thetas=[theta],
            transitions=self.transitions[k:k + 1],
            prior=Belief.uniform([theta]),
            horizon=self.horizon,
            discount=self.discount,
            initial_state=self.initial_state,
        )

    def with_horizon(self, horizon: int) -> "TinyBAMDP":
        return TinyBAMDP(self.name, self.states, self.actions, self.rewards, self.thetas,
                         self.transitions, self.prior, horizon, self.discount, self.initial_state)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "states": list(self.states),
            "actions": list(self.actions),
            "rewards": self.rewards.tolist(),
            "thetas": [
                {"id": t.id, "transitions": self.transitions[k].tolist()}
                for k, t in enumerate(self.thetas)
            ],
            "prior": [float(w) for w in self.prior.weights],
            "horizon": self.horizon,
            "discount": self.discount,
            "initial_state": self.initial_state,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TinyBAMDP":
        thetas = [LatentParam(str(t["id"])) for t in data["thetas"]]
        return cls(
            name=data.get("name", "instance"),
            states=[str(s) for s in data["states"]],
            actions=[str(a) for a in data["actions"]],
            rewards=np.asarray(data["rewards"], dtype=float),
            thetas=thetas,
            transitions=np.asarray([t["transitions"] for t in data["thetas"]], dtype=float),
            prior=Belief(tuple(thetas), np.asarray(data["prior"], dtype=float)),
            horizon=int(data["horizon"]),
            discount=float(data["discount"]),
            initial_state=int(data.get("initial_state", 0)),
        )


@dataclass(frozen=True)
class ErrorBudget:
    """Ошибки фильтра (ε_f) и планировщика (ε_p), граница наград r_max"""
    eps_f: float
    eps_p: float
    r_max: float = 1.0

    def __post_init__(self):
        if self.eps_f < 0 or self.eps_p < 0 or self.r_max < 0:
            raise ValueError("Составляющие бюджета ошибок не могут быть отрицательными")


def list_instances() -> List[str]:
    """Имена поставляемых задач"""
    return sorted(p.stem for p in INSTANCES_DIR.glob("*.json"))


def load_instance(name_or_path: Union[str, Path]) -> TinyBAMDP:
    """
    Загрузка задачи по имени поставляемого экземпляра или пути к JSON

    :raises ConfigError: Неизвестное имя или некорректное содержимое
    :raises IoFailure: Файл не читается
    """
    path = Path(name_or_path)
    if not path.suffix:
        path = INSTANCES_DIR / f"{name_or_path}.json"
        if not path.exists():
            raise ConfigError(f"Неизвестная задача '{name_or_path}'; доступны: {', '.join(list_instances())}")
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise IoFailure(f"Не удалось прочитать задачу ({e})", path) from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Некорректный JSON задачи {path}: {e}") from e

    try:
        instance = TinyBAMDP.from_dict(data)
    except (KeyError, ValueError) as e:
        raise ConfigError(f"Некорректная задача {path}: {e}") from e
    logger.debug(f"Загружена задача {instance.name}: S={instance.n_states}, A={instance.n_actions}, K={len(instance.thetas)}")
    return instance
