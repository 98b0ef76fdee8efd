import numpy as np
import pytest

from uamdp.core.config import RunConfig
from uamdp.core.models import EpisodeLog
from uamdp.harness.loop import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    RunResult,
    build_scenario,
    model_label,
    run_seed,
    run_uamdp,
    step_seed,
)


def _actions(log: EpisodeLog):
    return [rec.action for rec in log.records]


def test_zero_horizon_gives_empty_log(tiny_config):
    """T = 0: пустой журнал с конфигурацией и сидом"""
    log = run_seed(tiny_config.with_overrides(T=0), seed=4)
    assert len(log) == 0
    assert log.config["seed"] == 4
    assert log.draws == []


def test_run_seed_structure(tiny_config):
    """Эпизоды длины H, по розыгрышу θ на эпизод"""
    log = run_seed(tiny_config, seed=0)

    assert len(log) == tiny_config.T
    assert [rec.t for rec in log.records] == list(range(tiny_config.T))
    assert [rec.episode for rec in log.records] == [0, 0, 0, 1, 1, 1]
    assert [d["t"] for d in log.draws] == [0, 3]
    assert all(rec.theta_id in ("left_works", "right_works") for rec in log.records)
    assert all(rec.entropy >= 0 for rec in log.records)
    assert all(rec.forecast is not None for rec in log.records)


def test_partial_final_episode(tiny_config):
    log = run_seed(tiny_config.with_overrides(T=7), seed=0)
    assert len(log) == 7
    assert len(log.draws) == 3
    assert log.records[-1].episode == 2


def test_run_is_deterministic(tiny_config):
    """Один сид - один журнал"""
    first = run_seed(tiny_config, seed=3)
    second = run_seed(tiny_config, seed=3)
    assert first.to_jsonl() == second.to_jsonl()


def test_belief_concentrates(tiny_config):
    """Энтропия убеждения не растёт по сравнению с априорной"""
    log = run_seed(tiny_config.with_overrides(T=9), seed=1)
    assert log.records[-1].entropy <= np.log(2) + 1e-12


def test_no_belief_ablation_keeps_prior(tiny_config):
    log = run_seed(tiny_config.with_overrides(ablations=["no-belief"]), seed=0)
    assert all(rec.entropy == pytest.approx(np.log(2)) for rec in log.records)


def test_no_thompson_uses_mode(tiny_config):
    """Без розыгрыша θ берётся мода убеждения (при равенстве - первая гипотеза)"""
    log = run_seed(tiny_config.with_overrides(ablations=["no-thompson"]), seed=0)
    assert log.draws[0]["theta_id"] == "left_works"


def test_risk_disabled_matches_zero_eta(tiny_config):
    """При η = 0 и без ограничения риск-планировщик совпадает с планировщиком по среднему"""
    neutral = run_seed(tiny_config.with_overrides(risk_enabled=True, eta=0.0), seed=2)
    plain = run_seed(tiny_config.with_overrides(risk_enabled=False), seed=2)
    assert _actions(neutral) == _actions(plain)


def test_particle_filter_logs_resampling(tiny_config):
    cfg = tiny_config.with_overrides(belief_filter="particle", n_particles=64, resample_threshold=1.0)
    log = run_seed(cfg, seed=0)
    assert log.event_count("resampled") >= 1
    assert any("resampled" in rec.events for rec in log.records)


def test_infeasible_constraint_falls_back(tiny_config):
    """Недостижимая коробка: резервное действие и событие no_feasible_action"""
    cfg = tiny_config.with_overrides(risk_enabled=True, safe_low=[5.0], safe_high=[6.0], delta=0.1)
    result = RunResult(logs={0: run_seed(cfg, seed=0)})

    assert result.infeasible_events == cfg.T
    assert result.exit_code == EXIT_INFEASIBLE
    assert all(rec.excluded for rec in result.log.records)
    assert all("no_feasible_action" in rec.events for rec in result.log.records)


def test_run_uamdp_report(tiny_config):
    result = run_uamdp(tiny_config.with_overrides(seeds=[0, 1]))
    assert set(result.logs) == {0, 1}
    assert result.exit_code == EXIT_OK
    assert not result.report.empty
    assert set(result.report["model"]) == {"uamdp"}


def test_helpers(tiny_config):
    assert step_seed(0, 1) == step_seed(0, 1)
    assert step_seed(0, 1) != step_seed(0, 2)
    assert model_label(tiny_config) == "uamdp"
    assert model_label(tiny_config.with_overrides(ablations=["no-cvar", "no-belief"])) == "uamdp-no-belief-no-cvar"
    assert build_scenario(tiny_config, 0).name == "tiny-bamdp"


@pytest.mark.slow
def test_trading_run_smoke():
    cfg = RunConfig(env="trading", forecaster="regime", T=10, H=5, depth_limit=2, rollout_budget=8,
                    leaf_samples=2, allocation_step=0.5, n_particles=32, seeds=[0])
    log = run_seed(cfg, seed=0)
    assert len(log) == 10
    assert all(np.isfinite(rec.reward) for rec in log.records)
    assert log.records[0].state["portfolio_value"] > 0
