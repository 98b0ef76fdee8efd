import math

import pytest

from uamdp.envs.demo import DEMO_PRICES, DemoScenario, action_kind, buy_and_hold_value, trace_rows
from uamdp.harness.demo import demo_config, run_demo


@pytest.fixture(scope="module")
def demo():
    """Результат демонстрации с настройками по умолчанию"""
    return run_demo()


def test_demo_actions(demo):
    """Выборка θ_0, покупка до 80% акций, затем удержание"""
    assert demo.actions == ["Sample θ_0", "Buy", "Hold"]
    assert list(demo.trace["equity_weight"]) == pytest.approx([0.5, 0.8, 0.8])


def test_demo_final_values(demo):
    """Валовая стоимость 101.2, издержки только на одной ребалансировке"""
    assert demo.gross_value == pytest.approx(101.2)
    assert demo.net_value == pytest.approx(101.2 * (1 - 0.0002 * 0.3))
    assert demo.net_value < demo.gross_value
    assert demo.dollar_value == pytest.approx(demo.net_value * 10)


def test_demo_buy_and_hold(demo):
    assert demo.buy_and_hold == pytest.approx(100.75)
    assert buy_and_hold_value(DEMO_PRICES, equity=0.0) == pytest.approx(100.0)
    assert demo.net_value > demo.buy_and_hold


def test_demo_conjugate_trace(demo):
    """Сопряжённое обновление после первого шага: μ = ⅔·r, σ² = σ0²/3"""
    trace = demo.trace
    r1 = math.log(102 / 100)
    assert math.isnan(trace.loc[0, "log_return"])
    assert trace.loc[1, "log_return"] == pytest.approx(r1)
    assert trace.loc[1, "mu"] == pytest.approx(2 / 3 * r1)
    assert trace.loc[1, "var"] == pytest.approx(5e-4 / 3)
    assert trace.loc[2, "var"] < trace.loc[1, "var"]


def test_demo_log_draws(demo):
    """Сценарии θ берутся из заданного списка по эпизодам"""
    assert [d["theta_id"] for d in demo.log.draws] == ["draw_0", "draw_1"]
    assert len(demo.log) == 2
    assert demo.log.event_count("no_feasible_action") == 0


def test_demo_cost_override():
    cfg = demo_config()
    scenario = DemoScenario(cfg, cost_rate=0.0)
    assert scenario.reset().trading.cost_rate == 0.0
    assert DemoScenario(cfg).reset().trading.cost_rate == cfg.cost_rate


def test_action_kind():
    assert action_kind(0.5, 0.8) == "Buy"
    assert action_kind(0.8, 0.8) == "Hold"
    assert action_kind(0.8, 0.2) == "Sell"


def test_trace_rows_minimal():
    rows = trace_rows([
        {"price": 100.0, "mu": 0.0, "var": 5e-4, "equity_weight": 0.5},
        {"price": 99.0, "mu": -0.001, "var": 2e-4, "equity_weight": 0.2},
    ])
    assert [r["action"] for r in rows] == ["Sample θ_0", "Sell"]
    assert rows[1]["log_return"] == pytest.approx(math.log(0.99))
