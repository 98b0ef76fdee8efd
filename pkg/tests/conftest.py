import os
import tempfile

import pytest

# Журналы и экспорт глобальных менеджеров не должны попадать в рабочую директорию
_TMP_ROOT = tempfile.mkdtemp(prefix="uamdp_tests_")
os.environ.setdefault("UAMDP_LOG_DIR", os.path.join(_TMP_ROOT, "logs"))
os.environ.setdefault("UAMDP_EXPORT_DIR", os.path.join(_TMP_ROOT, "results"))
os.environ.setdefault("PROFILING_DIR", os.path.join(_TMP_ROOT, "profiling"))

from uamdp.core.config import RunConfig  # noqa: E402
from uamdp.core.models import Belief, LatentParam  # noqa: E402


@pytest.fixture
def two_hypotheses():
    """Две гипотезы с равным априорным весом"""
    return Belief.uniform([LatentParam("calm", (0.001,)), LatentParam("storm", (-0.002,))])


@pytest.fixture
def tiny_config():
    """Быстрая конфигурация на малом BAMDP"""
    return RunConfig(
        env="tiny-bamdp",
        instance="switch_chain",
        T=6,
        H=3,
        depth_limit=2,
        rollout_budget=16,
        leaf_samples=2,
        belief_filter="exact",
        risk_enabled=False,
        seeds=[0],
    )
