import math
from dataclasses import replace

import numpy as np
import pytest

from uamdp.core.config import RunConfig
from uamdp.core.errors import AllZeroLikelihood, ConfigError, WarmupInsufficient
from uamdp.core.models import Belief, HyperState, LatentParam
from uamdp.envs.features import (
    FeatureNoise,
    INVENTORY_WARMUP,
    TRADING_WARMUP,
    feature_schema,
    features_inventory,
    features_trading,
)
from uamdp.envs.generators import (
    RegimeModel,
    demand_preset,
    generate_demand,
    generate_market,
    market_preset,
    save_path,
)
from uamdp.envs.hyperstate import extend_history, hyperstate_transition
from uamdp.envs.inventory import InventoryScenario, InventoryState, inventory_step, order_grid, trace_from_states
from uamdp.envs.trading import TradingScenario, TradingState, allocation_grid, allocation_label, trading_step


@pytest.fixture
def portfolio():
    """Портфель 50/50 деньги/индекс стоимостью 100"""
    return TradingState(
        prices=(100.0, 1.0),
        position=(0.5, 0.5, 0.0),
        portfolio_value=100.0,
        cost_rate=0.0002,
        target=(0.5, 0.5, 0.0),
    )


@pytest.fixture
def market():
    return generate_market(market_preset("two_regime"), 120, rng_seed=3)


def test_allocation_grid():
    grid = allocation_grid(0.5)
    assert grid[0] == (1.0, 0.0, 0.0)
    assert len(grid) == 6
    assert all(abs(sum(a) - 1.0) < 1e-12 for a in grid)
    assert len(allocation_grid(0.1)) == 66
    assert allocation_label((0.2, 0.8, 0.0)) == "c20/i80/b0"


def test_trading_step_rebalance_costs(portfolio):
    """Ребалансировка списывает cost_rate·(L1/2)·V"""
    r = math.log(1.02)
    state, reward = trading_step(portfolio, (0.2, 0.8, 0.0), (r, 0.0))

    expected = (100.0 - 0.0002 * 0.3 * 100.0) * (0.2 + 0.8 * 1.02)
    assert state.portfolio_value == pytest.approx(expected)
    assert reward == pytest.approx(math.log(expected / 100.0))
    assert state.last_turnover == pytest.approx(0.3)
    assert state.target == (0.2, 0.8, 0.0)
    assert state.position[1] == pytest.approx(0.816 / 1.016)


def test_trading_step_hold_drifts_without_cost(portfolio):
    """Повтор текущей цели - удержание без сделки"""
    state, _ = trading_step(portfolio, (0.5, 0.5, 0.0), (math.log(1.1), 0.0))
    assert state.last_turnover == 0.0
    assert state.portfolio_value == pytest.approx(100.0 * (0.5 + 0.5 * 1.1))
    assert state.position[1] == pytest.approx(0.55 / 1.05)


def test_trading_state_validation():
    with pytest.raises(ValueError):
        TradingState(prices=(1.0, 1.0), position=(0.5, 0.6, 0.0), portfolio_value=1.0)
    with pytest.raises(ValueError):
        TradingState(prices=(1.0, 1.0), position=(1.0, 0.0, 0.0), portfolio_value=0.0)


def test_inventory_step():
    """Продажи ограничены запасом, неудовлетворённый спрос штрафуется"""
    st = InventoryState(on_hand=5)
    nxt, reward = inventory_step(st, order_qty=10, demand=20)

    assert nxt.on_hand == 0
    assert nxt.last_sold == 15
    assert nxt.last_unmet == 5
    assert nxt.backorders == 5
    assert reward == pytest.approx(15 * 4.0 - 50.0 * 5)

    calm, reward = inventory_step(st, order_qty=0, demand=2)
    assert calm.on_hand == 3
    assert reward == pytest.approx(2 * 4.0 - 0.1 * 3)

    with pytest.raises(ValueError):
        inventory_step(st, order_qty=-1, demand=0)


def test_order_grid():
    assert order_grid(5, 20) == [0, 5, 10, 15, 20]


def test_trace_from_states():
    trace = trace_from_states([
        {"demand": 10, "sold": 8, "on_hand": 0},
        {"demand": 5, "sold": 5, "on_hand": 3},
    ])
    assert trace.demand.tolist() == [10.0, 5.0]
    assert trace.end_on_hand.tolist() == [0.0, 3.0]


def test_feature_vectors_match_schema(market):
    """Длины векторов признаков совпадают со схемой"""
    schema = feature_schema()
    u = features_trading(market.prices[:, 0], market.highs, market.lows, market.volumes, TRADING_WARMUP)
    assert u.shape == (len(schema["trading"]),)
    assert np.all(np.isfinite(u))
    assert u[0] == pytest.approx(math.log(market.prices[60, 0] / market.prices[59, 0]))

    demand = generate_demand(demand_preset("seasonal"), 40, rng_seed=1)
    v = features_inventory(demand.demand, demand.prices, INVENTORY_WARMUP)
    assert v.shape == (len(schema["inventory"]),)


def test_features_require_warmup(market):
    with pytest.raises(WarmupInsufficient):
        features_trading(market.prices[:, 0], market.highs, market.lows, market.volumes, TRADING_WARMUP - 1)
    demand = generate_demand(demand_preset("seasonal"), 40, rng_seed=1)
    with pytest.raises(WarmupInsufficient):
        features_inventory(demand.demand, demand.prices, INVENTORY_WARMUP - 1)


def test_features_ignore_future_prices(market):
    """Признаки в момент t не зависят от цен после t"""
    prices = market.prices[:, 0].copy()
    u = features_trading(prices, market.highs, market.lows, market.volumes, 70)
    prices[71:] *= 3.0
    assert np.array_equal(u, features_trading(prices, market.highs, market.lows, market.volumes, 70))


def test_feature_noise():
    noise = FeatureNoise(n_features=10, frac=0.3, sigma=1.0, rng_seed=4)
    u = np.zeros(10)
    noisy = noise.apply(u, step=0)

    assert noise.dims.size == 3
    assert np.count_nonzero(noisy) == 3
    assert np.array_equal(noisy, noise.apply(u, step=0))
    assert np.array_equal(FeatureNoise(10, 0.0, 1.0, 4).apply(u, 0), u)
    with pytest.raises(ValueError):
        FeatureNoise(10, 1.5, 1.0, 4)


def test_generators_reproducible(tmp_path):
    first = generate_market(market_preset("heavy_tail"), 50, rng_seed=9)
    second = generate_market(market_preset("heavy_tail"), 50, rng_seed=9)
    assert np.array_equal(first.prices, second.prices)
    assert len(first) == 50
    assert first.prices.shape == (51, 2)

    path = save_path(first, tmp_path / "market.csv")
    assert path.read_text(encoding="utf-8").startswith("t,price")


def test_generator_validation():
    with pytest.raises(ConfigError):
        market_preset("unknown")
    with pytest.raises(ValueError):
        RegimeModel("market", [LatentParam("x", (0.0, -1.0, 0.0, 0.0))])
    with pytest.raises(ValueError):
        generate_demand(market_preset("two_regime"), 10, rng_seed=0)


def test_hyperstate_transition(two_hypotheses):
    """История дополняется, убеждение обновляется"""
    hyper = HyperState.initial(two_hypotheses, env_state="s0")
    nxt = hyperstate_transition(hyper, "buy", [0.01], [1.0, 3.0], env_state="s1")

    assert nxt.t == 1
    assert nxt.history == ((0.01,),)
    assert nxt.past_actions == ("buy",)
    assert nxt.belief.weights == pytest.approx([0.25, 0.75])
    assert nxt.env_state == "s1"

    frozen = extend_history(nxt, "hold", [0.02])
    assert frozen.belief == nxt.belief
    assert frozen.t == 2

    with pytest.raises(ValueError):
        extend_history(nxt, "hold", [0.01, 0.02])
    with pytest.raises(AllZeroLikelihood):
        hyperstate_transition(hyper, "buy", [0.01], [0.0, 0.0])


def test_hyperstate_consistency():
    with pytest.raises(ValueError):
        HyperState(history=((0.0,),), past_actions=(), belief=Belief.uniform([LatentParam("a")]), t=1)


def test_trading_scenario_step():
    """Торговый сценарий: прогноз по режимам и правдоподобия для каждой гипотезы"""
    cfg = RunConfig(env="trading", forecaster="regime", T=5, H=5, allocation_step=0.5)
    scenario = TradingScenario(cfg, rng_seed=0)
    hyper = HyperState.initial(scenario.prior(), scenario.reset(0))

    model = scenario.planning_model(hyper)
    assert len(model.actions(hyper.env_state)) == 6

    state, reward, x = scenario.execute(hyper.env_state, (0.0, 1.0, 0.0))
    assert x.shape == (2,)
    assert reward == pytest.approx(math.log(state.portfolio_value))
    ll = scenario.log_likelihoods(hyper, (0.0, 1.0, 0.0), x)
    assert ll.shape == (2,)
    assert scenario.one_step_forecast(hyper).dim == 2
    assert scenario.hidden_label(state) in ("bull", "bear")


def test_scenarios_require_warmup():
    with pytest.raises(ConfigError):
        TradingScenario(RunConfig(env="trading", warmup=10, T=5, H=5), rng_seed=0)
    with pytest.raises(ConfigError):
        InventoryScenario(RunConfig(env="inventory", warmup=10, T=5, H=5), rng_seed=0)


def test_inventory_scenario_step():
    cfg = RunConfig(env="inventory", forecaster="regime", T=5, H=5, order_step=10, max_order=30)
    scenario = InventoryScenario(cfg, rng_seed=1)
    hyper = HyperState.initial(scenario.prior(), scenario.reset(1))

    assert scenario.planning_model(hyper).actions(hyper.env_state) == [0, 10, 20, 30]
    state, _, x = scenario.execute(hyper.env_state, 10)
    assert state.step == cfg.warmup + 1
    assert x[0] == scenario.path.demand[cfg.warmup + 1]
    assert set(scenario.summary(state)) >= {"demand", "sold", "on_hand"}


def test_stockout_flag_tracks_last_day():
    """Флаг дефицита смотрит только на неудовлетворённый спрос последнего дня"""
    demand = generate_demand(demand_preset("seasonal"), 40, rng_seed=1)
    t = INVENTORY_WARMUP
    unmet = np.zeros(t + 1)
    assert features_inventory(demand.demand, demand.prices, t, unmet)[-1] == 0.0

    unmet[t] = 3
    assert features_inventory(demand.demand, demand.prices, t, unmet)[-1] == 1.0

    unmet[t], unmet[t - 1] = 0, 3
    assert features_inventory(demand.demand, demand.prices, t, unmet)[-1] == 0.0


def test_inventory_stockout_flag_clears_after_refill():
    """Старый дефицит в накопленном счётчике не держит флаг после пополнения"""
    cfg = RunConfig(env="inventory", forecaster="persistence", T=5, H=5)
    scenario = InventoryScenario(cfg, rng_seed=1)
    start = scenario.reset(1)

    short = replace(start, on_hand=0, backorders=4, last_unmet=4)
    refilled = replace(start, on_hand=20, backorders=4, last_unmet=0)

    assert scenario.inputs(HyperState.initial(scenario.prior(), short))[-1] == 1.0
    assert scenario.inputs(HyperState.initial(scenario.prior(), refilled))[-1] == 0.0
