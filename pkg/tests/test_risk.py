import math
from fractions import Fraction

import numpy as np
import pytest

from uamdp.core.config import RiskConfig
from uamdp.core.models import ReturnDistribution
from uamdp.core.risk import (
    blended_objective,
    chance_constraint_ok,
    cvar,
    inside_fraction,
    tail_size,
    value_at_risk,
    violation,
)


def test_tail_size():
    assert tail_size(100, 0.05) == 5
    assert tail_size(10, 0.05) == 1
    assert tail_size(3, 0.5) == 2
    # Погрешность α·M не должна давать лишний элемент
    assert tail_size(100, 0.07) == 7


def test_cvar_mean_of_worst_outcomes():
    """CVaR - среднее нижних ⌈αM⌉ доходностей"""
    z = np.arange(1.0, 21.0)
    assert cvar(z, 0.1) == pytest.approx(1.5)
    assert cvar(z, 0.05) == pytest.approx(1.0)
    assert value_at_risk(z, 0.1) == pytest.approx(2.0)


def test_cvar_order_independent():
    z = np.random.default_rng(0).normal(size=200)
    assert cvar(z, 0.05) == pytest.approx(cvar(z[::-1], 0.05))
    assert cvar(z, 0.05) <= z.mean()


def test_cvar_validation():
    with pytest.raises(ValueError):
        cvar([1.0, 2.0], 0.0)
    with pytest.raises(ValueError):
        cvar([], 0.05)
    with pytest.raises(ValueError):
        ReturnDistribution(np.array([1.0, np.inf]))


def test_blended_objective():
    """(1−η)·среднее + η·CVaR, при η = 0 - чистое среднее"""
    z = [0.0, 1.0, 2.0, 3.0]
    cfg = RiskConfig(alpha=0.25, eta=0.5)
    assert blended_objective(z, cfg) == pytest.approx(0.5 * 1.5 + 0.5 * 0.0)
    assert blended_objective(z, RiskConfig(alpha=0.25, eta=0.0)) == pytest.approx(1.5)
    assert blended_objective(ReturnDistribution(np.array(z)), RiskConfig(alpha=0.25, eta=1.0)) == 0.0


def test_inside_fraction_and_constraint():
    """Доля траекторий в коробке по каждому шагу горизонта"""
    paths = np.array([
        [[0.5], [0.5]],
        [[0.5], [2.0]],
        [[0.5], [0.5]],
        [[0.5], [0.5]],
    ])
    cfg = RiskConfig(delta=0.2, safe_low=[0.0], safe_high=[1.0])

    assert inside_fraction(paths, cfg) == pytest.approx([1.0, 0.75])
    assert list(chance_constraint_ok(paths, cfg)) == [True, False]
    assert violation(paths, cfg) == pytest.approx(0.05)


def test_constraint_inactive_without_box():
    paths = np.full((3, 2, 1), 100.0)
    cfg = RiskConfig()
    assert not cfg.constraint_active
    assert chance_constraint_ok(paths, cfg).all()
    assert violation(paths, cfg) == 0.0


def test_one_sided_box():
    cfg = RiskConfig(delta=0.1, safe_low=[1.0])
    paths = np.array([[[5.0]], [[2.0]]])
    assert chance_constraint_ok(paths, cfg).all()
    assert inside_fraction(np.array([[[0.0]], [[2.0]]]), cfg) == pytest.approx([0.5])


def test_risk_config_box_validation():
    with pytest.raises(ValueError):
        RiskConfig(safe_low=[2.0], safe_high=[1.0])
    with pytest.raises(ValueError):
        RiskConfig(safe_low=[0.0, 0.0], safe_high=[1.0])


ALPHAS = (0.01, 0.05, 0.1, 0.25, 0.5)


def _sorted_tail_mean(z, alpha):
    """Перебор: сортировка и среднее первых ⌈αM⌉ значений в точной арифметике"""
    ordered = sorted(float(v) for v in z)
    k = max(1, math.ceil(Fraction(str(alpha)) * len(ordered)))
    return float(np.mean(ordered[:k]))


@pytest.fixture
def random_sets():
    """1000 выборок случайного размера"""
    rng = np.random.default_rng(2024)
    return [rng.standard_t(df=3, size=int(rng.integers(1, 400))) for _ in range(1000)]


def test_cvar_matches_sorted_tail_mean(random_sets):
    for z in random_sets:
        for alpha in ALPHAS:
            assert cvar(z, alpha) == pytest.approx(_sorted_tail_mean(z, alpha), rel=1e-12, abs=1e-12)


def test_cvar_hand_examples():
    assert cvar([-3.0, -1.0, 0.0, 2.0], 0.25) == -3.0
    assert cvar(np.arange(1.0, 11.0), 0.2) == pytest.approx(1.5)


def test_cvar_translation_and_scaling(random_sets):
    """CVaR(z + c) = CVaR(z) + c, CVaR(λz) = λ·CVaR(z) при λ > 0"""
    for z in random_sets[:200]:
        for alpha in ALPHAS:
            base = cvar(z, alpha)
            assert cvar(z + 3.5, alpha) == pytest.approx(base + 3.5, rel=1e-12, abs=1e-12)
            assert cvar(2.5 * z, alpha) == pytest.approx(2.5 * base, rel=1e-12, abs=1e-12)


def test_cvar_monotone_in_alpha(random_sets):
    """Более широкий хвост не уменьшает CVaR"""
    for z in random_sets[:200]:
        values = [cvar(z, alpha) for alpha in ALPHAS]
        assert all(a <= b + 1e-12 for a, b in zip(values, values[1:]))


def test_blended_objective_decreases_with_eta():
    """CVaR не больше среднего, поэтому смесь не растёт с η"""
    z = np.random.default_rng(7).normal(size=300)
    values = [blended_objective(z, RiskConfig(alpha=0.05, eta=eta)) for eta in (0.0, 0.25, 0.5, 0.75, 1.0)]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    assert values[0] == pytest.approx(z.mean())
    assert values[-1] == pytest.approx(cvar(z, 0.05))
