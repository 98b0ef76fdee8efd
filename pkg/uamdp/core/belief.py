"""
Апостериорное убеждение о латентных параметрах среды.

Обновления выполняются в лог-пространстве с нормировкой через logsumexp,
поэтому длинные произведения правдоподобий не обнуляются.
"""
import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from uamdp.core.config import ParticleFilterConfig
from uamdp.core.errors import AllZeroLikelihood
from uamdp.core.models import Belief, LatentParam

logger = logging.getLogger(__name__)

SeedLike = Union[int, Sequence[int], np.random.Generator]


def bayes_update_log(b: Belief, log_likelihoods: Sequence[float]) -> Belief:
    """
    Байесовское обновление по лог-правдоподобиям

    :param b: Текущее убеждение
    :param log_likelihoods: log p(x | θ_i), допускается -inf
    :return: Новое убеждение с теми же гипотезами
    :raises AllZeroLikelihood: Если все произведения нулевые
    """
    log_lik = np.asarray(log_likelihoods, dtype=float)
    if log_lik.shape != (len(b),):
        raise ValueError(f"Ожидалось {len(b)} правдоподобий, получено {log_lik.size}")
    if np.any(np.isnan(log_lik)):
        raise ValueError("Правдоподобие содержит NaN")

    with np.errstate(divide="ignore"):
        log_post = np.log(b.weights) + log_lik
        log_norm = logsumexp(log_post)
    if not np.isfinite(log_norm):
        raise AllZeroLikelihood("Все произведения вес·правдоподобие равны нулю")

    return Belief(b.hypotheses, np.exp(log_post - log_norm))


def bayes_update(b: Belief, likelihoods: Sequence[float]) -> Belief:
    """
    Байесовское обновление: w_i ∝ w_i · l_i

    :param b: Текущее убеждение
    :param likelihoods: Неотрицательные правдоподобия
    :return: Новое убеждение
    """
    lik = np.asarray(likelihoods, dtype=float)
    if np.any(lik < 0):
        raise ValueError("Правдоподобия должны быть неотрицательными")
    with np.errstate(divide="ignore"):
        return bayes_update_log(b, np.log(lik))


def effective_sample_size(b: Belief) -> float:
    return float(1.0 / np.sum(b.weights ** 2))


def _offset(cfg: ParticleFilterConfig, step: Optional[int]) -> float:
    seed = [cfg.rng_seed] if step is None else [cfg.rng_seed, step]
    return float(np.random.default_rng(seed).random())


def resample(b: Belief, cfg: ParticleFilterConfig, offset: Optional[float] = None) -> Belief:
    """
    Систематический ресэмплинг

    :param b: Убеждение
    :param cfg: Параметры фильтра (N и сид)
    :param offset: Сдвиг u ∈ [0, 1); по умолчанию выводится из сида
    :return: N гипотез с равными весами
    """
    n = cfg.n_particles
    u = _offset(cfg, None) if offset is None else float(offset)
    if not 0.0 <= u < 1.0:
        raise ValueError(f"Сдвиг должен лежать в [0, 1): {u}")

    positions = (u + np.arange(n)) / n
    cumulative = np.cumsum(b.weights)
    cumulative[-1] = 1.0
    idx = np.searchsorted(cumulative, positions, side="right")
    idx = np.minimum(idx, len(b) - 1)
    return Belief(tuple(b.hypotheses[i] for i in idx), np.full(n, 1.0 / n))


def maybe_resample(b: Belief, cfg: ParticleFilterConfig, step: int) -> Tuple[Belief, bool]:
    """Ресэмплинг при ESS/N ниже порога; сдвиг выводится из (сид, шаг)"""
    if effective_sample_size(b) / len(b) >= cfg.resample_threshold:
        return b, False
    resampled = resample(b, cfg, offset=_offset(cfg, step))
    logger.debug(f"Ресэмплинг на шаге {step}: N={cfg.n_particles}")
    return resampled, True


def sample_particles(prior: Belief, cfg: ParticleFilterConfig) -> Belief:
    """N независимых частиц из априорного распределения"""
    rng = np.random.default_rng(cfg.rng_seed)
    idx = rng.choice(len(prior), size=cfg.n_particles, p=prior.weights)
    return Belief(tuple(prior.hypotheses[i] for i in idx), np.full(cfg.n_particles, 1.0 / cfg.n_particles))


def thompson_sample(b: Belief, rng_seed: SeedLike) -> LatentParam:
    """Розыгрыш гипотезы с вероятностью её веса"""
    rng = np.random.default_rng(rng_seed)
    return b.hypotheses[int(rng.choice(len(b), p=b.weights))]


def entropy(b: Belief) -> float:
    """Энтропия в натах (0·ln0 := 0)"""
    w = b.weights[b.weights > 0]
    return float(-np.sum(w * np.log(w)))


def belief_l1(b1: Belief, b2: Belief) -> float:
    """L1-расстояние между маргиналами по id гипотез"""
    m1, m2 = b1.marginal(), b2.marginal()
    keys = set(m1) | set(m2)
    return float(sum(abs(m1.get(k, 0.0) - m2.get(k, 0.0)) for k in keys))
