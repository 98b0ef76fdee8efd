"""
Абляции управляющего цикла на общих сидах
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from scipy.stats import wilcoxon

from uamdp.core.config import ABLATIONS, RunConfig
from uamdp.core.errors import ConfigError
from uamdp.core.risk import cvar
from uamdp.harness.loop import run_seed

logger = logging.getLogger(__name__)

REALIZED_ALPHA = 0.05

# Синтетический рынок с двумя режимами, укрупнённая сетка распределений
ABLATION_DEFAULTS: Dict[str, Any] = {
    "env": "trading",
    "preset": "two_regime",
    "T": 60,
    "H": 5,
    "depth_limit": 2,
    "rollout_budget": 32,
    "leaf_samples": 8,
    "allocation_step": 0.5,
    "seeds": list(range(20)),
}


def ablation_config(**overrides: Any) -> RunConfig:
    return RunConfig(**{**ABLATION_DEFAULTS, **overrides})


def paired_pvalue(full, ablated) -> float:
    """
    Односторонний знаково-ранговый тест Уилкоксона: full > ablated

    При полном совпадении пар возвращается 1.0.
    """
    full = np.asarray(full, dtype=float)
    ablated = np.asarray(ablated, dtype=float)
    if np.all(full == ablated):
        return 1.0
    return float(wilcoxon(full, ablated, alternative="greater").pvalue)


@dataclass
class AblationReport:
    """Попарное сравнение полного агента и абляции по сидам"""
    which: str
    per_seed: pd.DataFrame
    deltas: Dict[str, float] = field(default_factory=dict)
    p_mean_reward: float = 1.0
    p_cvar: float = 1.0

    def summary(self) -> pd.DataFrame:
        return pd.DataFrame([
            {"ablation": self.which, "metric": "mean_reward",
             "delta": self.deltas["mean_reward"], "p_value": self.p_mean_reward},
            {"ablation": self.which, "metric": f"realized_cvar_{REALIZED_ALPHA:g}",
             "delta": self.deltas["realized_cvar"], "p_value": self.p_cvar},
        ])


def _seed_metrics(cfg: RunConfig, seed: int) -> Dict[str, float]:
    rewards = run_seed(cfg, seed).rewards
    if rewards.size == 0:
        return {"mean_reward": 0.0, "realized_cvar": 0.0}
    return {"mean_reward": float(rewards.mean()), "realized_cvar": cvar(rewards, REALIZED_ALPHA)}


def run_ablation(cfg: RunConfig, which: Optional[str] = None) -> AblationReport:
    """
    Полный агент против одной абляции на сидах cfg.seeds

    :param cfg: Базовая конфигурация (собственные абляции игнорируются)
    :param which: no-thompson, no-cvar, no-belief или None/"none"
    :return: Таблица по сидам, дельты (абляция − полный) и p-значения
    """
    if which in (None, "none"):
        which = "none"
        extra = []
    elif which in ABLATIONS:
        extra = [which]
    else:
        raise ConfigError(f"Неизвестная абляция: {which}")

    full_cfg = cfg.with_overrides(ablations=[])
    ablated_cfg = cfg.with_overrides(ablations=extra)

    rows = []
    for seed in cfg.seeds:
        full = _seed_metrics(full_cfg, seed)
        ablated = _seed_metrics(ablated_cfg, seed)
        rows.append({
            "seed": seed,
            "full_mean_reward": full["mean_reward"],
            "ablated_mean_reward": ablated["mean_reward"],
            "full_cvar": full["realized_cvar"],
            "ablated_cvar": ablated["realized_cvar"],
        })
        logger.debug(f"Абляция {which}, сид {seed}: {rows[-1]}")
    per_seed = pd.DataFrame(rows)

    report = AblationReport(
        which=which,
        per_seed=per_seed,
        deltas={
            "mean_reward": float((per_seed["ablated_mean_reward"] - per_seed["full_mean_reward"]).mean()),
            "realized_cvar": float((per_seed["ablated_cvar"] - per_seed["full_cvar"]).mean()),
        },
        p_mean_reward=paired_pvalue(per_seed["full_mean_reward"], per_seed["ablated_mean_reward"]),
        p_cvar=paired_pvalue(per_seed["full_cvar"], per_seed["ablated_cvar"]),
    )
    logger.info(
        f"Абляция {which}: Δ награды {report.deltas['mean_reward']:.6f} (p={report.p_mean_reward:.4f}), "
        f"Δ CVaR {report.deltas['realized_cvar']:.6f} (p={report.p_cvar:.4f})"
    )
    return report
