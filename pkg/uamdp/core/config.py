import os
import math
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, root_validator, validator

from uamdp.core.errors import ConfigError

logger = logging.getLogger(__name__)

ENV_PREFIX = "UAMDP_"
ABLATIONS = ("no-thompson", "no-cvar", "no-belief")


class ParticleFilterConfig(BaseModel):
    """Параметры фильтра частиц"""
    n_particles: int = Field(256, ge=1)
    resample_threshold: float = Field(0.5, gt=0, le=1)
    rng_seed: int = 0


class RiskConfig(BaseModel):
    """Параметры риск-функционалов и вероятностного ограничения"""
    alpha: float = Field(0.05, gt=0, lt=1)
    eta: float = Field(0.7, ge=0, le=1)
    delta: float = Field(0.05, gt=0, lt=1)
    safe_low: Optional[List[float]] = None
    safe_high: Optional[List[float]] = None

    @root_validator
    def validate_box(cls, values):
        """Проверка границ безопасного множества"""
        low, high = values.get("safe_low"), values.get("safe_high")
        if low is not None and high is not None:
            if len(low) != len(high):
                raise ValueError("Границы безопасного множества разной длины")
            if any(lo > hi for lo, hi in zip(low, high)):
                raise ValueError("Нижняя граница безопасного множества больше верхней")
        return values

    @property
    def constraint_active(self) -> bool:
        return self.safe_low is not None or self.safe_high is not None

    def box(self, dim: int):
        """Границы коробки для размерности dim (отсутствующие стороны - бесконечность)"""
        low = np.full(dim, -np.inf) if self.safe_low is None else np.asarray(self.safe_low, dtype=float)
        high = np.full(dim, np.inf) if self.safe_high is None else np.asarray(self.safe_high, dtype=float)
        return low, high


class PlannerConfig(BaseModel):
    """Параметры поиска по дереву"""
    depth_limit: int = Field(3, ge=1)
    rollout_budget: int = Field(128, ge=1)
    exploration_const: float = Field(math.sqrt(2), gt=0)
    discount: float = Field(0.99, gt=0, lt=1)
    leaf_samples: int = Field(8, ge=1)
    rng_seed: int = 0


class RunConfig(BaseModel):
    """Полная конфигурация запуска"""
    gamma: float = Field(0.99, gt=0, lt=1)
    T: int = Field(60, ge=0)
    H: int = Field(5, ge=1)
    alpha: float = Field(0.05, gt=0, lt=1)
    eta: float = Field(0.7, ge=0, le=1)
    delta: float = Field(0.05, gt=0, lt=1)
    n_particles: int = Field(256, ge=1)
    depth_limit: int = Field(3, ge=1)
    rollout_budget: int = Field(128, ge=1)
    leaf_samples: int = Field(8, ge=1)
    exploration_const: float = Field(math.sqrt(2), gt=0)
    env: Literal["demo", "trading", "inventory", "tiny-bamdp"] = "trading"
    forecaster: Literal["gp", "conjugate", "persistence", "regime"] = "regime"
    risk_enabled: bool = True
    ablations: List[str] = Field(default_factory=list)
    seeds: List[int] = Field(default_factory=lambda: [0])

    belief_filter: Literal["exact", "particle"] = "particle"
    resample_threshold: float = Field(0.5, gt=0, le=1)
    preset: str = "two_regime"
    instance: str = "switch_chain"
    cost_rate: float = Field(0.0002, ge=0)
    allocation_step: float = Field(0.1, gt=0, le=1)
    order_step: int = Field(5, ge=1)
    max_order: int = Field(60, ge=0)
    warmup: int = Field(60, ge=0)
    gp_train_size: int = Field(150, ge=1)
    noise_var: float = Field(2.5e-4, gt=0)
    noise_frac: float = Field(0.0, ge=0, le=1)
    noise_sigma: float = Field(1.0, ge=0)
    safe_low: Optional[List[float]] = None
    safe_high: Optional[List[float]] = None
    output_dir: str = "results"

    @validator("ablations", each_item=True)
    def validate_ablation(cls, v):
        """Проверка названия абляции"""
        if v not in ABLATIONS:
            raise ValueError(f"Неизвестная абляция: {v}")
        return v

    @validator("seeds")
    def validate_seeds(cls, v):
        """Список сидов не может быть пустым, сиды неотрицательны"""
        if not v:
            raise ValueError("Нужен хотя бы один сид")
        if any(s < 0 for s in v):
            raise ValueError("Сиды должны быть неотрицательными")
        return v

    @root_validator
    def validate_horizons(cls, values):
        """Проверка T ≥ H (T = 0 означает пустой запуск)"""
        T, H = values.get("T"), values.get("H")
        if T is not None and H is not None and T != 0 and T < H:
            raise ValueError(f"Глобальный горизонт T={T} меньше эпизода H={H}")
        return values

    def risk_config(self) -> Optional[RiskConfig]:
        """Риск-параметры с учётом абляций (None - риск отключён)"""
        if not self.risk_enabled:
            return None
        eta = 0.0 if "no-cvar" in self.ablations else self.eta
        return RiskConfig(
            alpha=self.alpha, eta=eta, delta=self.delta,
            safe_low=self.safe_low, safe_high=self.safe_high,
        )

    def planner_config(self, rng_seed: int) -> PlannerConfig:
        return PlannerConfig(
            depth_limit=self.depth_limit,
            rollout_budget=self.rollout_budget,
            exploration_const=self.exploration_const,
            discount=self.gamma,
            leaf_samples=self.leaf_samples,
            rng_seed=rng_seed,
        )

    def filter_config(self, rng_seed: int) -> ParticleFilterConfig:
        return ParticleFilterConfig(
            n_particles=self.n_particles,
            resample_threshold=self.resample_threshold,
            rng_seed=rng_seed,
        )

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Копия конфигурации с перепроверкой значений"""
        data = self.dict()
        data.update(overrides)
        return RunConfig(**data)


def _coerce(raw: str) -> Union[str, List[str]]:
    """Строковое значение или список через запятую"""
    raw = raw.strip()
    if "," in raw:
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw


def _normalize_list_fields(data: Dict[str, Any]) -> Dict[str, Any]:
    """Одиночные значения для списковых полей превращаются в списки"""
    list_fields = [
        name for name, fld in RunConfig.__fields__.items()
        if getattr(fld.outer_type_, "__origin__", None) in (list, List)
    ]
    for name in list_fields:
        value = data.get(name)
        if isinstance(value, str):
            data[name] = [value] if value else []
    return data


def parse_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Чтение плоского файла конфигурации вида key = value

    :param path: Путь к файлу
    :return: Словарь сырых значений
    :raises ConfigError: Если файл не читается или строка некорректна
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"Не удалось прочитать конфигурацию {path}: {e}") from e

    values: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: ожидается 'ключ = значение'")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in RunConfig.__fields__:
            raise ConfigError(f"{path}:{lineno}: неизвестный ключ '{key}'")
        values[key] = _coerce(raw)
    return values


def env_overrides(environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """Значения из переменных окружения UAMDP_<KEY>"""
    environ = os.environ if environ is None else environ
    values: Dict[str, Any] = {}
    for name in RunConfig.__fields__:
        raw = environ.get(f"{ENV_PREFIX}{name.upper()}")
        if raw is not None:
            values[name] = _coerce(raw)
    return values


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
    defaults: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """
    Сборка RunConfig: умолчания < defaults < файл < окружение < явные значения

    :param path: Файл конфигурации (опционально)
    :param overrides: Значения из командной строки
    :param environ: Окружение (по умолчанию os.environ)
    :param defaults: Базовые значения подкоманды
    :return: Проверенная конфигурация
    :raises ConfigError: Если значения не проходят проверку
    """
    data: Dict[str, Any] = dict(defaults or {})
    if path is not None:
        data.update(parse_config_file(path))
    data.update(env_overrides(environ))
    if overrides:
        data.update({k: v for k, v in overrides.items() if v is not None})

    try:
        config = RunConfig(**_normalize_list_fields(data))
    except ValidationError as e:
        raise ConfigError(f"Некорректная конфигурация: {e}") from e

    logger.debug(f"Конфигурация загружена: env={config.env}, T={config.T}, H={config.H}")
    return config
