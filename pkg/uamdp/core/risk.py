"""
Риск-функционалы над выборками доходностей
"""
import math
from typing import Sequence, Union

import numpy as np

from uamdp.core.config import RiskConfig
from uamdp.core.models import ReturnDistribution

FRACTION_SLACK = 1e-12

Returns = Union[ReturnDistribution, Sequence[float], np.ndarray]


def _samples(z: Returns) -> np.ndarray:
    if isinstance(z, ReturnDistribution):
        return z.samples
    return ReturnDistribution(np.asarray(z, dtype=float)).samples


def tail_size(m: int, alpha: float) -> int:
    """k = ⌈αM⌉, но не меньше одного"""
    return max(1, math.ceil(round(alpha * m, 9)))


def cvar(z: Returns, alpha: float) -> float:
    """
    Эмпирический CVaR: среднее по нижним ⌈αM⌉ выборкам

    :param z: Выборка доходностей (больше - лучше)
    :param alpha: Уровень хвоста в (0, 1)
    :return: Среднее худших исходов
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha должна лежать в (0, 1): {alpha}")
    samples = np.sort(_samples(z))
    return float(samples[:tail_size(samples.size, alpha)].mean())


def value_at_risk(z: Returns, alpha: float) -> float:
    """Граница хвоста: k-я по возрастанию доходность"""
    samples = np.sort(_samples(z))
    return float(samples[tail_size(samples.size, alpha) - 1])


def blended_objective(z: Returns, cfg: RiskConfig) -> float:
    """(1−η)·среднее + η·CVaR_α"""
    samples = _samples(z)
    if cfg.eta == 0.0:
        return float(samples.mean())
    return float((1.0 - cfg.eta) * samples.mean() + cfg.eta * cvar(samples, cfg.alpha))


def inside_fraction(paths: np.ndarray, cfg: RiskConfig) -> np.ndarray:
    """
    Доля траекторий внутри безопасной коробки на каждом шаге горизонта

    :param paths: Массив (выборка, шаг, размерность)
    :return: Вектор долей длины H
    """
    paths = np.asarray(paths, dtype=float)
    if paths.ndim == 2:
        paths = paths[:, :, None]
    if paths.ndim != 3 or paths.shape[0] == 0:
        raise ValueError("Ожидается непустой массив (выборка, шаг, размерность)")
    low, high = cfg.box(paths.shape[2])
    inside = np.all((paths >= low) & (paths <= high), axis=2)
    return inside.mean(axis=0)


def chance_constraint_ok(paths: np.ndarray, cfg: RiskConfig) -> np.ndarray:
    """
    Проверка Pr(x_{t+h} ∈ S_safe) ≥ 1 − δ по шагам горизонта

    При неактивном ограничении возвращает True на каждом шаге.
    """
    paths = np.asarray(paths, dtype=float)
    if not cfg.constraint_active:
        return np.ones(paths.shape[1] if paths.ndim >= 2 else 0, dtype=bool)
    return inside_fraction(paths, cfg) >= 1.0 - cfg.delta - FRACTION_SLACK


def violation(paths: np.ndarray, cfg: RiskConfig) -> float:
    """Суммарная нехватка доли безопасных траекторий до 1 − δ"""
    if not cfg.constraint_active:
        return 0.0
    shortfall = (1.0 - cfg.delta) - inside_fraction(paths, cfg)
    return float(np.sum(np.maximum(shortfall, 0.0)))
