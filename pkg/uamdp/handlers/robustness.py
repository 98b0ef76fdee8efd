import time
from argparse import Namespace

from uamdp.handlers.common import add_config_arguments, config_from_args, print_frame
from uamdp.harness.robustness import NOISE_FRACS, run_noise_robustness
from uamdp.utils.export import export_manager
from uamdp.utils.logger import log_manager

ROBUSTNESS_DEFAULTS = {"env": "trading", "forecaster": "gp", "T": 60, "H": 5, "rollout_budget": 32,
                       "depth_limit": 2, "allocation_step": 0.5}


async def robustness_handler(args: Namespace) -> int:
    """Обработчик подкоманды robustness"""
    cfg = config_from_args(args, defaults=ROBUSTNESS_DEFAULTS)
    started = time.time()
    table = run_noise_robustness(cfg, args.fracs or list(NOISE_FRACS), sigma=cfg.noise_sigma)
    path = await export_manager.export_frame(table, "robustness.csv", target_dir=cfg.output_dir)

    print_frame(table, "Деградация при шуме в признаках")
    print(f"\nТаблица: {path}")
    log_manager.log_run("robustness", cfg.dict(), time.time() - started)
    return 0


def register_handlers(subparsers):
    """Регистрация подкоманды robustness"""
    parser = subparsers.add_parser("robustness", help="Кривая деградации при шуме в признаках")
    add_config_arguments(parser)
    parser.add_argument("--frac", dest="fracs", type=float, action="append", help="Доля зашумлённых признаков")
    parser.set_defaults(handler=robustness_handler)
