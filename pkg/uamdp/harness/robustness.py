"""
Устойчивость к шуму в признаках прогнозиста
"""
import logging
from typing import Dict, Sequence

import numpy as np
import pandas as pd

from uamdp.core.config import RunConfig
from uamdp.core.errors import ConfigError
from uamdp.harness.loop import run_seed

logger = logging.getLogger(__name__)

NOISE_FRACS = (0.0, 0.1, 0.2, 0.3)
ROBUSTNESS_COLUMNS = ["noise_frac", "sigma", "median_ratio", "mean_ratio", "ci_low", "ci_high", "n_seeds"]


def reward_ratio(noisy: float, clean: float) -> float:
    """
    Относительное качество зашумлённого прогона: 1 − (clean − noisy)/|clean|

    При положительной базе совпадает с noisy/clean; при отрицательной
    худший прогон тоже даёт значение меньше 1. 1.0 при совпадении, NaN при нулевой базе.
    """
    if noisy == clean:
        return 1.0
    if clean == 0.0:
        return float("nan")
    return 1.0 - (clean - noisy) / abs(clean)


def run_noise_robustness(cfg: RunConfig, noise_fracs: Sequence[float] = NOISE_FRACS,
                         sigma: float = 1.0) -> pd.DataFrame:
    """
    Кривая деградации: отношение средней награды с шумом к чистому прогону

    На каждом шаге случайная доля noise_frac признаков получает
    добавку N(0, σ²) в масштабированных единицах.

    :param cfg: Конфигурация с GP-прогнозистом на торговой или складской среде
    :param noise_fracs: Доли зашумлённых признаков
    :param sigma: СКО шума
    :return: Строка на уровень шума, отношения по сидам сведены в медиану и среднее
    """
    if cfg.env not in ("trading", "inventory") or cfg.forecaster != "gp":
        raise ConfigError("Шум признаков требует GP-прогнозиста на среде trading или inventory")

    clean_cfg = cfg.with_overrides(noise_frac=0.0, noise_sigma=sigma)
    clean: Dict[int, float] = {seed: float(run_seed(clean_cfg, seed).rewards.mean()) for seed in cfg.seeds}

    rows = []
    for frac in noise_fracs:
        noisy_cfg = cfg.with_overrides(noise_frac=frac, noise_sigma=sigma)
        ratios = np.array([
            reward_ratio(float(run_seed(noisy_cfg, seed).rewards.mean()), clean[seed])
            for seed in cfg.seeds
        ])
        finite = ratios[np.isfinite(ratios)]
        mean = float(finite.mean()) if finite.size else float("nan")
        se = float(finite.std(ddof=1) / np.sqrt(finite.size)) if finite.size > 1 else 0.0
        rows.append({
            "noise_frac": float(frac),
            "sigma": float(sigma),
            "median_ratio": float(np.median(finite)) if finite.size else float("nan"),
            "mean_ratio": mean,
            "ci_low": mean - 1.96 * se,
            "ci_high": mean + 1.96 * se,
            "n_seeds": int(finite.size),
        })
        logger.info(f"Шум {frac:.2f}: медианное отношение {rows[-1]['median_ratio']:.4f}")
    return pd.DataFrame(rows, columns=ROBUSTNESS_COLUMNS)
