import time
from argparse import Namespace

from uamdp.core.config import ABLATIONS
from uamdp.handlers.common import add_config_arguments, config_from_args, print_frame
from uamdp.harness.ablation import ABLATION_DEFAULTS, run_ablation
from uamdp.utils.export import export_manager
from uamdp.utils.logger import log_manager


async def ablate_handler(args: Namespace) -> int:
    """Обработчик подкоманды ablate"""
    cfg = config_from_args(args, defaults=ABLATION_DEFAULTS)
    started = time.time()
    report = run_ablation(cfg, args.which)

    await export_manager.export_frame(report.per_seed, f"ablation_{report.which}_per_seed.csv",
                                      target_dir=cfg.output_dir)
    await export_manager.export_frame(report.summary(), f"ablation_{report.which}.csv", target_dir=cfg.output_dir)

    print_frame(report.summary(), f"Абляция {report.which} на {len(cfg.seeds)} сидах")
    log_manager.log_run("ablate", cfg.dict(), time.time() - started)
    return 0


def register_handlers(subparsers):
    """Регистрация подкоманды ablate"""
    parser = subparsers.add_parser("ablate", help="Полный агент против абляции на общих сидах")
    add_config_arguments(parser)
    parser.add_argument("--which", choices=("none",) + ABLATIONS, default="no-belief")
    parser.set_defaults(handler=ablate_handler)
