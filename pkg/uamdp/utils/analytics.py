import logging
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy.stats import norm

from uamdp.core.errors import DegenerateSeries
from uamdp.core import metrics
from uamdp.core.models import EpisodeLog, EquityCurve
from uamdp.core.risk import cvar
from uamdp.envs.inventory import trace_from_states
from uamdp.utils.logger import log_manager

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["model", "horizon", "metric", "value", "units"]
FAN_QUANTILES = (0.05, 0.25, 0.5, 0.75, 0.95)
RELIABILITY_LEVELS = tuple(round(0.1 * k, 1) for k in range(1, 10))
REALIZED_ALPHA = 0.05

Logs = Union[EpisodeLog, Mapping[int, EpisodeLog], Sequence[EpisodeLog]]


class Analytics:
    """Отчёт по метрикам и данные для графиков по журналам запусков"""

    def __init__(self, realized_alpha: float = REALIZED_ALPHA):
        self.realized_alpha = realized_alpha

    def _safe(self, name: str, fn: Callable[[], float], context: Dict[str, Any]) -> float:
        """Метрика или NaN с предупреждением в журнале"""
        try:
            return float(fn())
        except (DegenerateSeries, ValueError) as e:
            log_manager.log_warning(f"Метрика {name} не вычислена: {e}", context=context)
            return float("nan")

    @staticmethod
    def equity_curve(log: EpisodeLog) -> Optional[EquityCurve]:
        """
        Кривая стоимости портфеля по сводкам шагов

        Начальная стоимость восстанавливается из первой награды
        r = log(V₁/V₀).
        """
        values = [rec.state.get("portfolio_value") for rec in log.records]
        if not values or any(v is None for v in values):
            return None
        v0 = values[0] / np.exp(log.records[0].reward)
        turnovers = [rec.state.get("turnover", 0.0) for rec in log.records]
        return EquityCurve(np.array([v0] + values), np.array(turnovers))

    def log_metrics(self, log: EpisodeLog) -> Dict[str, Dict[str, Any]]:
        """
        Метрики одного журнала

        :return: {метрика: {"value", "units", "horizon"}}
        """
        h = int(log.config.get("H", 1))
        context = {"env": log.config.get("env"), "seed": log.config.get("seed")}
        rows: Dict[str, Dict[str, Any]] = {}

        def put(metric: str, value: float, units: str, horizon: int = h):
            rows[metric] = {"value": value, "units": units, "horizon": horizon}

        rewards = log.rewards
        put("steps", float(len(log)), "steps")
        put("events_no_feasible_action", float(log.event_count("no_feasible_action")), "count")
        put("events_all_zero_likelihood", float(log.event_count("all_zero_likelihood")), "count")
        if rewards.size:
            put("mean_reward", float(rewards.mean()), "reward")
            put("total_reward", float(rewards.sum()), "reward")
            put(f"realized_cvar_{self.realized_alpha:g}", cvar(rewards, self.realized_alpha), "reward")
            put("final_entropy", log.records[-1].entropy, "nats")

        records = log.forecast_records()
        if records:
            mu = np.concatenate([r.predicted.means for r in records])
            sd = np.sqrt(np.concatenate([r.predicted.variances for r in records]))
            y = np.concatenate([r.actual for r in records])
            put("rmse", metrics.rmse(mu, y), "obs", 1)
            put("mae", metrics.mae(mu, y), "obs", 1)
            put("smape", metrics.smape(mu, y), "%", 1)
            put("crps", float(np.mean(metrics.crps_gaussian(mu, sd, y))), "obs", 1)
            put("coverage_80", metrics.coverage(records, 0.8), "fraction", 1)
            put("pit_ks_pvalue", self._safe("pit_ks_pvalue", lambda: metrics.pit_ks(records)[1], context),
                "p", 1)

        curve = self.equity_curve(log)
        if curve is not None:
            put("final_value", float(curve.values[-1]), "value")
            put("sharpe_daily", self._safe("sharpe_daily", lambda: metrics.sharpe_daily(curve.returns), context),
                "ratio")
            put("max_drawdown", metrics.max_drawdown(curve), "fraction")
            put("turnover", metrics.turnover(curve), "fraction")
            put("positive_days", metrics.positive_days(curve), "fraction")

        if log.records and "on_hand" in log.records[0].state:
            trace = trace_from_states([rec.state for rec in log.records])
            put("service_level", metrics.service_level(trace), "fraction")
            put("stockout_rate", metrics.stockout_rate(trace), "units/day")
            put("gmroi", self._safe("gmroi", lambda: metrics.gmroi(trace), context), "ratio")
        return rows

    def metrics_report(self, logs: Logs, model: str = "uamdp") -> pd.DataFrame:
        """
        Отчёт: строка на модель × горизонт × метрику, среднее по сидам

        :param logs: Журнал или журналы по сидам
        :param model: Метка модели
        """
        if isinstance(logs, EpisodeLog):
            logs = [logs]
        elif isinstance(logs, Mapping):
            logs = list(logs.values())

        collected: Dict[str, List[float]] = {}
        meta: Dict[str, Dict[str, Any]] = {}
        for log in logs:
            for metric, row in self.log_metrics(log).items():
                collected.setdefault(metric, []).append(row["value"])
                meta.setdefault(metric, row)

        data = []
        for metric, values in collected.items():
            arr = np.asarray(values, dtype=float)
            value = float(np.nanmean(arr)) if np.any(np.isfinite(arr)) else float("nan")
            data.append({
                "model": model,
                "horizon": meta[metric]["horizon"],
                "metric": metric,
                "value": value,
                "units": meta[metric]["units"],
            })
        return pd.DataFrame(data, columns=REPORT_COLUMNS)

    def fan_chart(self, log: EpisodeLog, quantiles: Sequence[float] = FAN_QUANTILES) -> pd.DataFrame:
        """Квантили одношаговых прогнозов (первая компонента) и факт"""
        columns = ["t"] + [f"q{int(round(q * 100)):02d}" for q in quantiles] + ["actual"]
        rows = []
        for rec in log.records:
            if rec.forecast is None:
                continue
            mu, var = rec.forecast["means"][0], rec.forecast["variances"][0]
            qs = norm.ppf(quantiles, loc=mu, scale=np.sqrt(var))
            rows.append([rec.t] + [float(q) for q in qs] + [float(rec.observation[0])])
        return pd.DataFrame(rows, columns=columns)

    def reliability(self, log: EpisodeLog, levels: Sequence[float] = RELIABILITY_LEVELS) -> pd.DataFrame:
        records = log.forecast_records()
        if not records:
            return pd.DataFrame(columns=["nominal", "observed"])
        return pd.DataFrame(metrics.reliability_points(records, levels), columns=["nominal", "observed"])

    def entropy_trace(self, log: EpisodeLog) -> pd.DataFrame:
        return pd.DataFrame(
            [(rec.t, rec.episode, rec.entropy) for rec in log.records],
            columns=["t", "episode", "entropy"],
        )

    def plot_bundle(self, log: EpisodeLog) -> Dict[str, pd.DataFrame]:
        """Данные для веерной диаграммы, диаграммы надёжности и энтропии"""
        return {
            "fan_chart": self.fan_chart(log),
            "reliability": self.reliability(log),
            "entropy": self.entropy_trace(log),
        }


# Глобальный экземпляр аналитики
analytics = Analytics()
