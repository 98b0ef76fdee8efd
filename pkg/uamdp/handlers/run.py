import time
import logging
from argparse import Namespace

from uamdp.handlers.common import add_config_arguments, config_from_args, print_frame
from uamdp.harness.loop import model_label, run_uamdp
from uamdp.utils.export import export_manager
from uamdp.utils.logger import log_manager

logger = logging.getLogger(__name__)

DEFAULT_FORMATS = ["csv", "jsonl", "bundle"]


async def run_handler(args: Namespace) -> int:
    """Обработчик подкоманды run"""
    cfg = config_from_args(args)
    started = time.time()
    result = run_uamdp(cfg)

    for export_format in args.formats or DEFAULT_FORMATS:
        paths = await export_manager.export_results(
            result.logs, export_format, name=args.name, target_dir=cfg.output_dir, model=model_label(cfg)
        )
        logger.info(f"{export_format}: {', '.join(str(p) for p in paths)}")

    print_frame(result.report, f"Метрики ({model_label(cfg)}, сиды {cfg.seeds})")
    log_manager.log_run("run", cfg.dict(), time.time() - started)
    if result.exit_code:
        print(f"⚠️ Событий недопустимости: {result.infeasible_events}")
    return result.exit_code


def register_handlers(subparsers):
    """Регистрация подкоманды run"""
    parser = subparsers.add_parser("run", help="Управляющий цикл по сидам")
    add_config_arguments(parser)
    parser.add_argument("--format", dest="formats", action="append", choices=DEFAULT_FORMATS)
    parser.add_argument("--name", default="run", help="Префикс файлов результата")
    parser.set_defaults(handler=run_handler)
