from argparse import Namespace
from pathlib import Path

from uamdp.handlers.common import print_frame
from uamdp.utils.analytics import analytics
from uamdp.utils.export import export_manager
from uamdp.utils.logger import log_manager

FORMATS = ["csv", "bundle"]


async def _export_service_logs(output_dir: str, tail: int) -> bool:
    """Архив журналов запусков, событий и ошибок плюс сводка по ним"""
    archive = log_manager.export_logs(Path(output_dir))
    if archive is None:
        return False

    stats = log_manager.get_statistics()
    print(f"\nАрхив журналов: {archive}")
    print(f"Запусков: {stats['runs']}, ошибок: {stats['error_count']}, предупреждений: {stats['warning_count']}")
    if stats["error_count"]:
        for line in await log_manager.get_logs("error", limit=tail):
            print(line.rstrip())
    return True


async def export_handler(args: Namespace) -> int:
    """Обработчик подкоманды export: повторный экспорт сохранённых журналов"""
    logs = {}
    for path in args.logs:
        log = await export_manager.load_episode_log(path)
        logs[int(log.config.get("seed", len(logs)))] = log

    for export_format in args.formats or FORMATS:
        await export_manager.export_results(logs, export_format, name=args.name, target_dir=args.output_dir,
                                            model=args.model)
    print_frame(analytics.metrics_report(logs, model=args.model), f"Метрики по {len(logs)} журналам")

    if args.with_service_logs and not await _export_service_logs(args.output_dir, args.tail):
        return 1
    return 0


def register_handlers(subparsers):
    """Регистрация подкоманды export"""
    parser = subparsers.add_parser("export", help="Метрики и данные графиков из журналов JSON lines")
    parser.add_argument("logs", nargs="+", help="Файлы журналов .jsonl")
    parser.add_argument("--format", dest="formats", action="append", choices=FORMATS)
    parser.add_argument("--name", default="export")
    parser.add_argument("--model", default="uamdp")
    parser.add_argument("--output-dir", default="results")
    parser.add_argument("--with-service-logs", action="store_true",
                        help="Добавить zip-архив служебных журналов (run, events, error)")
    parser.add_argument("--tail", type=int, default=5, help="Сколько последних строк ошибок показать")
    parser.set_defaults(handler=export_handler)
