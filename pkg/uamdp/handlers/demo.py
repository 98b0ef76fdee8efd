import time
from argparse import Namespace

from uamdp.handlers.common import add_config_arguments, config_from_args, print_frame
from uamdp.harness.demo import DEMO_DEFAULTS, run_demo
from uamdp.harness.loop import EXIT_INFEASIBLE, EXIT_OK
from uamdp.utils.export import export_manager
from uamdp.utils.logger import log_manager


async def demo_handler(args: Namespace) -> int:
    """Обработчик подкоманды demo"""
    cfg = config_from_args(args, defaults=DEMO_DEFAULTS)
    started = time.time()
    result = run_demo(cfg)

    path = await export_manager.export_frame(result.trace, "demo_trace.csv", target_dir=cfg.output_dir)
    await export_manager.export_results(result.log, "jsonl", name="demo", target_dir=cfg.output_dir)

    print_frame(result.trace, "Демонстрация")
    print(
        f"\nИтог: {result.net_value:.4f} (без издержек {result.gross_value:.4f}), "
        f"купить и держать {result.buy_and_hold:.4f}, ${result.dollar_value:,.2f}"
    )
    print(f"Трасса: {path}")
    log_manager.log_run("demo", cfg.dict(), time.time() - started)
    return EXIT_INFEASIBLE if result.log.event_count("no_feasible_action") else EXIT_OK


def register_handlers(subparsers):
    """Регистрация подкоманды demo"""
    parser = subparsers.add_parser("demo", help="Двухшаговая демонстрация на заданных ценах")
    add_config_arguments(parser)
    parser.set_defaults(handler=demo_handler)
