from argparse import ArgumentParser, Namespace
from typing import Any, Dict, Literal, Optional, get_args, get_origin

import pandas as pd

from uamdp.core.config import ABLATIONS, RunConfig, load_config

# Поля со своей формой флага
_SPECIAL_FIELDS = {"seeds", "ablations", "risk_enabled", "safe_low", "safe_high"}


def add_config_arguments(parser: ArgumentParser):
    """
    Флаги, повторяющие поля RunConfig

    --gamma, --T, --depth-limit и т.д.; --seed и --ablation повторяемые.
    """
    parser.add_argument("--config", help="Файл конфигурации (key = value)")
    for name, fld in RunConfig.__fields__.items():
        if name in _SPECIAL_FIELDS:
            continue
        flag = f"--{name.replace('_', '-')}"
        if get_origin(fld.type_) is Literal:
            parser.add_argument(flag, dest=name, choices=get_args(fld.type_), default=None)
        else:
            parser.add_argument(flag, dest=name, type=fld.type_, default=None)

    parser.add_argument("--seed", dest="seeds", type=int, action="append", help="Сид (можно повторять)")
    parser.add_argument("--ablation", dest="ablations", action="append", choices=ABLATIONS)
    parser.add_argument("--no-risk", dest="risk_enabled", action="store_const", const=False, default=None)
    parser.add_argument("--safe-low", dest="safe_low", type=float, nargs="+")
    parser.add_argument("--safe-high", dest="safe_high", type=float, nargs="+")


def config_from_args(args: Namespace, defaults: Optional[Dict[str, Any]] = None) -> RunConfig:
    """RunConfig из флагов поверх файла, окружения и умолчаний подкоманды"""
    overrides = {name: getattr(args, name, None) for name in RunConfig.__fields__}
    return load_config(getattr(args, "config", None), overrides=overrides, defaults=defaults)


def print_frame(frame: pd.DataFrame, title: Optional[str] = None):
    if title:
        print(f"\n{title}")
    if frame.empty:
        print("(пусто)")
    else:
        print(frame.to_string(index=False))
