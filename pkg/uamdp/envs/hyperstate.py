from typing import Any, Optional, Sequence

import numpy as np

from uamdp.core.belief import bayes_update, bayes_update_log
from uamdp.core.models import Belief, HyperState


def _extend(hyper: HyperState, action: Any, x_next: Sequence[float], belief: Belief, env_state: Any) -> HyperState:
    x = tuple(float(v) for v in np.atleast_1d(np.asarray(x_next, dtype=float)))
    if hyper.history and len(hyper.history[-1]) != len(x):
        raise ValueError("Размерность наблюдения изменилась")
    return HyperState(
        history=hyper.history + (x,),
        past_actions=hyper.past_actions + (action,),
        belief=belief,
        t=hyper.t + 1,
        env_state=env_state,
    )


def hyperstate_transition(
    hyper: HyperState,
    action: Any,
    x_next: Sequence[float],
    likelihoods: Sequence[float],
    env_state: Any = None,
    log_space: bool = False,
) -> HyperState:
    """
    Переход гиперсостояния: история дополняется (a, x), убеждение обновляется

    :param likelihoods: p(x_next | θ_i) либо логарифмы при log_space=True
    :raises AllZeroLikelihood: Если обновление невозможно
    """
    update = bayes_update_log if log_space else bayes_update
    return _extend(hyper, action, x_next, update(hyper.belief, likelihoods), env_state)


def extend_history(hyper: HyperState, action: Any, x_next: Sequence[float],
                   belief: Optional[Belief] = None, env_state: Any = None) -> HyperState:
    """Продление истории без байесовского обновления"""
    return _extend(hyper, action, x_next, hyper.belief if belief is None else belief, env_state)
