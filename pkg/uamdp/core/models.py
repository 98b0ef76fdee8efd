"""
Доменные модели: гипотезы, убеждения, прогнозные распределения,
гиперсостояния и журнал эпизодов.
"""
import json
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

WEIGHT_TOL = 1e-12


def _json_default(value: Any) -> Any:
    """numpy-скаляры и массивы в JSON"""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"Не сериализуется в JSON: {type(value).__name__}")


@dataclass(frozen=True)
class LatentParam:
    """Гипотеза о латентных параметрах среды"""
    id: str
    params: Tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.params, dtype=float)

    def to_dict(self) -> Dict[str, Any]:
        return {"id": self.id, "params": list(self.params)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LatentParam":
        return cls(id=str(data["id"]), params=tuple(data.get("params", ())))


@dataclass(frozen=True, eq=False)
class Belief:
    """
    Взвешенный набор гипотез

    Точное дискретное убеждение и облако частиц используют одно
    представление. Объект неизменяем: операции возвращают новый Belief.
    """
    hypotheses: Tuple[LatentParam, ...]
    weights: np.ndarray

    def __post_init__(self):
        hypotheses = tuple(self.hypotheses)
        weights = np.array(self.weights, dtype=float)
        if len(hypotheses) == 0:
            raise ValueError("Убеждение должно содержать хотя бы одну гипотезу")
        if weights.shape != (len(hypotheses),):
            raise ValueError(
                f"Число весов ({weights.size}) не совпадает с числом гипотез ({len(hypotheses)})"
            )
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("Веса должны быть конечными и неотрицательными")
        if abs(weights.sum() - 1.0) > WEIGHT_TOL * max(1, len(weights)):
            raise ValueError(f"Веса не нормированы: сумма {weights.sum()!r}")
        weights.setflags(write=False)
        object.__setattr__(self, "hypotheses", hypotheses)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return len(self.hypotheses)

    @classmethod
    def uniform(cls, hypotheses: Sequence[LatentParam]) -> "Belief":
        n = len(hypotheses)
        return cls(tuple(hypotheses), np.full(n, 1.0 / n))

    @classmethod
    def from_weights(cls, hypotheses: Sequence[LatentParam], weights: Sequence[float]) -> "Belief":
        """Создание убеждения из ненормированных весов"""
        w = np.asarray(weights, dtype=float)
        return cls(tuple(hypotheses), w / w.sum())

    def mode(self) -> LatentParam:
        """Гипотеза с наибольшим суммарным весом по id (при равенстве - первая)"""
        marginal = self.marginal()
        best = max(marginal, key=marginal.get)
        return next(h for h in self.hypotheses if h.id == best)

    def marginal(self) -> Dict[str, float]:
        """Веса, агрегированные по id гипотез, в порядке первого появления"""
        result: Dict[str, float] = {}
        for hyp, w in zip(self.hypotheses, self.weights):
            result[hyp.id] = result.get(hyp.id, 0.0) + float(w)
        return result

    def distinct(self) -> List[LatentParam]:
        """Уникальные гипотезы в порядке первого появления"""
        seen: Dict[str, LatentParam] = {}
        for hyp in self.hypotheses:
            seen.setdefault(hyp.id, hyp)
        return list(seen.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hypotheses": [h.to_dict() for h in self.hypotheses],
            "weights": [float(w) for w in self.weights],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Belief":
        return cls(
            tuple(LatentParam.from_dict(h) for h in data["hypotheses"]),
            np.asarray(data["weights"], dtype=float),
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Belief):
            return NotImplemented
        return self.hypotheses == other.hypotheses and np.array_equal(self.weights, other.weights)

    def __hash__(self) -> int:
        return hash((self.hypotheses, self.weights.tobytes()))


@dataclass(frozen=True, eq=False)
class PredictiveDist:
    """Прогнозное распределение следующего наблюдения"""
    kind: str
    means: np.ndarray
    variances: np.ndarray
    samples: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("diagonal-gaussian", "empirical"):
            raise ValueError(f"Неизвестный тип распределения: {self.kind}")
        means = np.atleast_1d(np.asarray(self.means, dtype=float))
        variances = np.atleast_1d(np.asarray(self.variances, dtype=float))
        if means.shape != variances.shape:
            raise ValueError("Средние и дисперсии разной размерности")
        if np.any(variances <= 0):
            raise ValueError("Дисперсии должны быть положительными")
        samples = self.samples
        if self.kind == "empirical":
            if samples is None:
                raise ValueError("Эмпирическое распределение требует выборку")
            samples = np.asarray(samples, dtype=float).reshape(-1, means.size)
            if samples.shape[0] < 1:
                raise ValueError("Выборка пуста")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "samples", samples)

    @property
    def dim(self) -> int:
        return int(self.means.size)

    @classmethod
    def gaussian(cls, means, variances) -> "PredictiveDist":
        return cls("diagonal-gaussian", means, variances)

    @classmethod
    def empirical(cls, samples, var_floor: float = 1e-12) -> "PredictiveDist":
        """Эмпирическое распределение по строкам выборки"""
        arr = np.atleast_2d(np.asarray(samples, dtype=float))
        variances = arr.var(axis=0, ddof=1) if arr.shape[0] > 1 else np.zeros(arr.shape[1])
        return cls("empirical", arr.mean(axis=0), np.maximum(variances, var_floor), arr)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "means": self.means.tolist(), "variances": self.variances.tolist()}


@dataclass(frozen=True)
class ScalarGaussianBelief:
    """Сопряжённое гауссово убеждение о скалярной доходности"""
    mu: float
    var: float
    noise_var: float

    def __post_init__(self):
        if self.var <= 0 or self.noise_var <= 0:
            raise ValueError("Дисперсии должны быть положительными")


@dataclass(frozen=True, eq=False)
class ReturnDistribution:
    """Выборка дисконтированных доходностей на горизонте H"""
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float).ravel()
        if samples.size == 0:
            raise ValueError("Выборка доходностей пуста")
        if not np.all(np.isfinite(samples)):
            raise ValueError("Доходности должны быть конечными")
        object.__setattr__(self, "samples", samples)

    def mean(self) -> float:
        return float(self.samples.mean())


@dataclass(frozen=True)
class HyperState:
    """
    Гиперсостояние: наблюдаемая история и убеждение

    :param history: наблюдения x_1..x_t
    :param past_actions: действия a_0..a_{t-1}
    :param env_state: снимок состояния симулятора (для планирования)
    """
    history: Tuple[Tuple[float, ...], ...]
    past_actions: Tuple[Any, ...]
    belief: Belief
    t: int = 0
    env_state: Any = None

    def __post_init__(self):
        if len(self.past_actions) != len(self.history) or len(self.history) != self.t:
            raise ValueError(
                f"История ({len(self.history)}) и действия ({len(self.past_actions)}) "
                f"не согласованы с t={self.t}"
            )

    @classmethod
    def initial(cls, belief: Belief, env_state: Any = None) -> "HyperState":
        return cls(history=(), past_actions=(), belief=belief, t=0, env_state=env_state)


@dataclass(frozen=True)
class ForecastRecord:
    """Пара прогноз/факт для оценки качества"""
    predicted: PredictiveDist
    actual: np.ndarray
    horizon: int = 1

    def __post_init__(self):
        actual = np.atleast_1d(np.asarray(self.actual, dtype=float))
        if actual.size != self.predicted.dim:
            raise ValueError("Размерности прогноза и факта не совпадают")
        object.__setattr__(self, "actual", actual)


@dataclass(frozen=True, eq=False)
class EquityCurve:
    """Кривая стоимости портфеля"""
    values: np.ndarray
    turnover_per_step: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.size == 0 or np.any(values <= 0):
            raise ValueError("Стоимость портфеля должна быть положительной")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "turnover_per_step", np.asarray(self.turnover_per_step, dtype=float))

    @property
    def returns(self) -> np.ndarray:
        return np.diff(np.log(self.values))


@dataclass
class StepRecord:
    """Запись одного шага управляющего цикла"""
    t: int
    episode: int
    theta_id: str
    action: str
    action_index: int
    reward: float
    entropy: float
    observation: List[float]
    state: Dict[str, Any] = field(default_factory=dict)
    forecast: Optional[Dict[str, Any]] = None
    root_values: Dict[str, float] = field(default_factory=dict)
    cvar_values: Dict[str, float] = field(default_factory=dict)
    visit_counts: Dict[str, int] = field(default_factory=dict)
    excluded: Dict[str, float] = field(default_factory=dict)
    events: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StepRecord":
        return cls(**data)


@dataclass
class EpisodeLog:
    """Журнал запуска: записи шагов и розыгрыши θ по эпизодам"""
    config: Dict[str, Any] = field(default_factory=dict)
    records: List[StepRecord] = field(default_factory=list)
    draws: List[Dict[str, Any]] = field(default_factory=list)
    events: List[Dict[str, Any]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def rewards(self) -> np.ndarray:
        return np.array([r.reward for r in self.records], dtype=float)

    def event_count(self, kind: Optional[str] = None) -> int:
        if kind is None:
            return len(self.events)
        return sum(1 for e in self.events if e.get("kind") == kind)

    def forecast_records(self) -> List[ForecastRecord]:
        """Пары прогноз/факт по шагам с сохранённым прогнозом"""
        result = []
        for rec in self.records:
            if rec.forecast is None:
                continue
            pred = PredictiveDist.gaussian(rec.forecast["means"], rec.forecast["variances"])
            result.append(ForecastRecord(pred, np.asarray(rec.observation)))
        return result

    def to_jsonl(self) -> str:
        """Сериализация в JSON lines: заголовок, затем по строке на шаг"""
        lines = [json.dumps({"type": "header", "config": self.config, "draws": self.draws,
                             "events": self.events}, ensure_ascii=False, default=_json_default)]
        for rec in self.records:
            lines.append(json.dumps({"type": "step", **rec.to_dict()}, ensure_ascii=False, default=_json_default))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "EpisodeLog":
        log = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            data = json.loads(line)
            kind = data.pop("type", "step")
            if kind == "header":
                log.config = data.get("config", {})
                log.draws = data.get("draws", [])
                log.events = data.get("events", [])
            else:
                log.records.append(StepRecord.from_dict(data))
        return log
