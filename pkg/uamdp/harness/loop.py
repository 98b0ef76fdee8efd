"""
Онлайн-управление с байесовским обновлением убеждения

Внешний цикл - эпизоды длины H с розыгрышем θ_k в начале каждого,
внутренний - план/исполнение/обновление до исчерпания T шагов.
Убеждение переносится через границы эпизодов.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from uamdp.core.belief import entropy, maybe_resample, sample_particles
from uamdp.core.config import RunConfig
from uamdp.core.errors import AllZeroLikelihood, ConfigError, NoFeasibleAction
from uamdp.core.models import EpisodeLog, HyperState, LatentParam, StepRecord
from uamdp.core.planner import PlanDiagnostics, plan
from uamdp.envs.base import Scenario
from uamdp.envs.demo import DemoScenario
from uamdp.envs.hyperstate import extend_history, hyperstate_transition
from uamdp.envs.inventory import InventoryScenario
from uamdp.envs.tiny import TinyBAMDPScenario
from uamdp.envs.trading import TradingScenario
from uamdp.utils.analytics import analytics
from uamdp.utils.logger import log_manager
from uamdp.utils.profiler import profiler

logger = logging.getLogger(__name__)

SCENARIOS: Dict[str, Callable[[RunConfig, int], Scenario]] = {
    "demo": DemoScenario,
    "trading": TradingScenario,
    "inventory": InventoryScenario,
    "tiny-bamdp": TinyBAMDPScenario,
}

EXIT_OK = 0
EXIT_INFEASIBLE = 3


def build_scenario(cfg: RunConfig, seed: int) -> Scenario:
    """Сценарий среды по конфигурации"""
    try:
        factory = SCENARIOS[cfg.env]
    except KeyError:
        raise ConfigError(f"Неизвестная среда: {cfg.env}")
    return factory(cfg, seed)


def step_seed(seed: int, n: int) -> int:
    """Сид планировщика для глобального шага n"""
    return int(np.random.SeedSequence([seed, n]).generate_state(1)[0])


def model_label(cfg: RunConfig) -> str:
    if not cfg.ablations:
        return "uamdp"
    return "uamdp-" + "-".join(sorted(cfg.ablations))


def _action_index(actions: List[Any], action: Any) -> int:
    for i, candidate in enumerate(actions):
        if candidate == action:
            return i
    return -1


@dataclass
class RunResult:
    """Журналы по сидам и сводный отчёт"""
    logs: Dict[int, EpisodeLog]
    report: pd.DataFrame = field(default_factory=pd.DataFrame)

    @property
    def log(self) -> EpisodeLog:
        """Журнал первого сида"""
        return next(iter(self.logs.values()))

    @property
    def infeasible_events(self) -> int:
        return sum(log.event_count("no_feasible_action") for log in self.logs.values())

    @property
    def exit_code(self) -> int:
        return EXIT_INFEASIBLE if self.infeasible_events else EXIT_OK


def _draw_theta(cfg: RunConfig, scenario: Scenario, hyper: HyperState, seed: int, episode: int) -> LatentParam:
    if "no-thompson" in cfg.ablations:
        return hyper.belief.mode()
    return scenario.sample_theta(hyper.belief, [seed, episode], episode)


def run_seed(cfg: RunConfig, seed: int, scenario: Optional[Scenario] = None) -> EpisodeLog:
    """
    Один прогон управляющего цикла

    :param cfg: Конфигурация
    :param seed: Сид (среда, розыгрыши θ, планировщик)
    :param scenario: Готовый сценарий (по умолчанию строится по cfg.env)
    :return: Журнал шагов
    """
    log = EpisodeLog(config={**cfg.dict(), "seed": seed})
    if cfg.T == 0:
        return log

    scenario = scenario or build_scenario(cfg, seed)
    particle = cfg.belief_filter == "particle"
    filter_cfg = cfg.filter_config(seed)
    prior = scenario.prior()
    belief0 = sample_particles(prior, filter_cfg) if particle else prior
    risk = cfg.risk_config()
    frozen = "no-belief" in cfg.ablations

    hyper = HyperState.initial(belief0, scenario.reset(seed))
    n, episode = 0, 0
    while n < cfg.T:
        theta = _draw_theta(cfg, scenario, hyper, seed, episode)
        start_belief = hyper.belief
        hyper = replace(hyper, env_state=scenario.episode_reset(hyper.env_state))
        log.draws.append({"episode": episode, "t": n, "theta_id": theta.id})
        logger.debug(f"Сид {seed}, эпизод {episode}: θ = {theta.id}")

        for _ in range(cfg.H):
            if n >= cfg.T:
                break
            events: List[Dict[str, Any]] = []
            model = scenario.planning_model(hyper)
            actions = list(model.actions(hyper.env_state))
            try:
                forecast = scenario.one_step_forecast(hyper)
            except NotImplementedError:
                forecast = None

            try:
                action, diag = plan(hyper, theta, model, cfg.planner_config(step_seed(seed, n)), risk)
            except NoFeasibleAction as e:
                action = e.fallback_action
                diag = PlanDiagnostics(chosen=model.action_label(action), excluded=dict(e.violations))
                events.append(log_manager.log_event(
                    "no_feasible_action", n, episode, fallback=diag.chosen, violations=diag.excluded
                ))
                logger.warning(f"Шаг {n}: нет допустимых действий, выбрано {diag.chosen}")

            next_state, reward, x = scenario.execute(hyper.env_state, action)

            if frozen:
                hyper = extend_history(hyper, action, x, env_state=next_state)
            else:
                ll = scenario.log_likelihoods(hyper, action, x)
                try:
                    hyper = hyperstate_transition(hyper, action, x, ll, env_state=next_state, log_space=True)
                except AllZeroLikelihood:
                    events.append(log_manager.log_event("all_zero_likelihood", n, episode))
                    logger.warning(f"Шаг {n}: нулевое правдоподобие всех гипотез, сброс убеждения")
                    hyper = extend_history(hyper, action, x, belief=start_belief, env_state=next_state)
                if particle:
                    belief, resampled = maybe_resample(hyper.belief, filter_cfg, n)
                    if resampled:
                        hyper = replace(hyper, belief=belief)
                        events.append(log_manager.log_event("resampled", n, episode))

            summary = dict(scenario.summary(next_state))
            hidden = scenario.hidden_label(next_state)
            if hidden:
                summary["hidden"] = hidden
            log.records.append(StepRecord(
                t=n,
                episode=episode,
                theta_id=theta.id,
                action=diag.chosen,
                action_index=_action_index(actions, action),
                reward=float(reward),
                entropy=entropy(hyper.belief),
                observation=[float(v) for v in np.atleast_1d(x)],
                state=summary,
                forecast=forecast.to_dict() if forecast is not None else None,
                root_values=diag.root_values,
                cvar_values=diag.cvar_values,
                visit_counts=diag.visit_counts,
                excluded=diag.excluded,
                events=[e["kind"] for e in events],
            ))
            log.events.extend(events)
            n += 1
        episode += 1

    logger.info(
        f"Сид {seed}: {len(log)} шагов, {episode} эпизодов, "
        f"суммарная награда {float(log.rewards.sum()):.6f}"
    )
    return log


@profiler.profile(name="run_uamdp")
def run_uamdp(cfg: RunConfig) -> RunResult:
    """
    Управляющий цикл по всем сидам конфигурации

    :param cfg: Конфигурация
    :return: Журналы и отчёт по метрикам
    """
    logs = {seed: run_seed(cfg, seed) for seed in cfg.seeds}
    report = analytics.metrics_report(logs, model=model_label(cfg))
    return RunResult(logs=logs, report=report)
