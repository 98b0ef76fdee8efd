"""
Двухшаговая демонстрация на заданных ценах
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd

from uamdp.core.config import RunConfig
from uamdp.core.models import EpisodeLog
from uamdp.envs.demo import DEMO_PRICES, DOLLARS_PER_UNIT, DemoScenario, buy_and_hold_value, trace_rows
from uamdp.harness.loop import run_seed

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["t", "price", "log_return", "mu", "var", "action", "equity_weight"]

DEMO_DEFAULTS: Dict[str, Any] = {
    "env": "demo",
    "T": 2,
    "H": 1,
    "depth_limit": 1,
    "rollout_budget": 16,
    "leaf_samples": 1,
    "belief_filter": "exact",
    "alpha": 0.05,
    "eta": 0.7,
    "cost_rate": 0.0002,
    "noise_var": 2.5e-4,
    "seeds": [0],
}


def demo_config(**overrides: Any) -> RunConfig:
    """Конфигурация демонстрации с переопределениями"""
    return RunConfig(**{**DEMO_DEFAULTS, **overrides})


@dataclass
class DemoResult:
    """Результат демонстрации"""
    log: EpisodeLog
    trace: pd.DataFrame
    gross_value: float
    net_value: float
    buy_and_hold: float

    @property
    def dollar_value(self) -> float:
        """Итог в долларах при стартовом капитале $1,000"""
        return self.net_value * DOLLARS_PER_UNIT

    @property
    def actions(self) -> List[str]:
        return list(self.trace["action"])


def _final_value(cfg: RunConfig, seed: int) -> Tuple[EpisodeLog, List[Dict[str, Any]], float]:
    scenario = DemoScenario(cfg, seed)
    initial = scenario.summary(scenario.reset(seed))
    log = run_seed(cfg, seed, scenario)
    summaries = [initial] + [rec.state for rec in log.records]
    return log, summaries, summaries[-1]["portfolio_value"]


def run_demo(cfg: Optional[RunConfig] = None) -> DemoResult:
    """
    Демонстрация: выборка θ_0, покупка до 80% акций, удержание

    Итоговая стоимость считается дважды: без издержек (валовая) и с
    издержками cost_rate (чистая).
    """
    cfg = cfg or demo_config()
    seed = cfg.seeds[0]
    log, summaries, net = _final_value(cfg, seed)
    _, _, gross = _final_value(cfg.with_overrides(cost_rate=0.0), seed)
    trace = pd.DataFrame(trace_rows(summaries), columns=TRACE_COLUMNS)
    result = DemoResult(
        log=log,
        trace=trace,
        gross_value=float(gross),
        net_value=float(net),
        buy_and_hold=buy_and_hold_value(DEMO_PRICES),
    )
    logger.info(
        f"Демонстрация: валовая {result.gross_value:.4f}, чистая {result.net_value:.4f}, "
        f"купить и держать {result.buy_and_hold:.4f}"
    )
    return result
