"""
Таблица байесовского сожаления по числу частиц N и глубине L
"""
import logging
from typing import Any, Dict, Iterable, List, Optional, Sequence

import pandas as pd

from uamdp.oracle.agents import BaseAgent, make_agent
from uamdp.oracle.bamdp import TinyBAMDP, list_instances, load_instance
from uamdp.oracle.regret import bayes_regret, error_bound, instrument_seeds
from uamdp.utils.profiler import profiler

logger = logging.getLogger(__name__)

N_LIST = (4, 16, 64)
L_LIST = (1, 2, None)
FILTER_INITS = 64

SUITE_COLUMNS = [
    "instance", "agent", "kind", "n_particles", "depth", "seed", "episodes",
    "regret_mean", "ci_low", "ci_high", "gap", "eps_f", "eps_p", "inits", "bound", "bound_ok",
]


def suite_agents(p: TinyBAMDP, n_list: Sequence[int], l_list: Sequence[Optional[int]]) -> List[Dict[str, Any]]:
    """Строки набора: точный, случайный, PSRL, сетка по N и по L"""
    rows = [
        {"kind": "exact", "n_particles": None, "depth": None},
        {"kind": "random", "n_particles": None, "depth": None},
        {"kind": "psrl", "n_particles": None, "depth": None},
    ]
    rows += [{"kind": "particle", "n_particles": n, "depth": None} for n in n_list]
    rows += [{"kind": "depth", "n_particles": None, "depth": L} for L in l_list if L is not None]
    return rows


def evaluate_agent(p: TinyBAMDP, agent: BaseAgent, episodes: int, seed: int,
                   filter_inits: int = FILTER_INITS) -> Dict[str, Any]:
    """
    Сожаление, инструментирование и проверка границы для одного агента

    Агент с частицами инструментируется по filter_inits облакам (сиды [seed, k]);
    gap, eps_f и eps_p - средние, bound_ok требует границы в каждом облаке.
    """
    estimate = bayes_regret(p, agent, episodes, seed)
    inits = filter_inits if getattr(agent, "n_particles", None) else 1
    inst = instrument_seeds(p, agent, [[seed, k] for k in range(inits)])
    budget = inst.budget(p)
    lo, hi = estimate.ci
    return {
        "agent": agent.name,
        "seed": seed,
        "episodes": episodes,
        "regret_mean": estimate.mean,
        "ci_low": lo,
        "ci_high": hi,
        "gap": inst.gap,
        "eps_f": inst.eps_f,
        "eps_p": inst.eps_p,
        "inits": inits,
        "bound": error_bound(budget, p.discount),
        "bound_ok": inst.bound_ok(p),
    }


@profiler.profile(name="run_regret_suite")
def run_regret_suite(
    instances: Optional[Iterable[str]] = None,
    n_list: Sequence[int] = N_LIST,
    l_list: Sequence[Optional[int]] = L_LIST,
    episodes: int = 2000,
    seeds: Sequence[int] = (0,),
) -> pd.DataFrame:
    """
    Сожаление ± 95% интервал по сетке (N, L) на малых BAMDP

    Глубина None означает полный горизонт H и совпадает со строкой exact.

    :param instances: Имена или пути задач (по умолчанию все поставляемые)
    :param n_list: Числа частиц
    :param l_list: Глубины планирования
    :param episodes: Эпизодов на оценку
    :param seeds: Сиды
    :return: Таблица с колонками SUITE_COLUMNS
    """
    names = list(instances) if instances else list_instances()
    rows = []
    for name in names:
        p = load_instance(name)
        for entry in suite_agents(p, n_list, l_list):
            if entry["kind"] == "depth" and entry["depth"] >= p.horizon:
                continue
            for seed in seeds:
                agent = make_agent(p, entry["kind"], entry["n_particles"], entry["depth"])
                row = {"instance": p.name, **entry, **evaluate_agent(p, agent, episodes, seed)}
                rows.append(row)
                logger.info(
                    f"{p.name} / {row['agent']}: сожаление {row['regret_mean']:.4f} "
                    f"[{row['ci_low']:.4f}, {row['ci_high']:.4f}], Δ0={row['gap']:.4f} ≤ {row['bound']:.4f}"
                )
    return pd.DataFrame(rows, columns=SUITE_COLUMNS)


def bound_violations(table: pd.DataFrame) -> int:
    """Число строк, где Δ0 превышает границу ошибки"""
    if table.empty:
        return 0
    return int((~table["bound_ok"].astype(bool)).sum())
