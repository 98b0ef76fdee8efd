#!/usr/bin/env python3
import os
import sys
import logging
import asyncio
import argparse
from typing import List, Optional

from dotenv import load_dotenv

# Импорт обработчиков
from uamdp.handlers import (
    demo,
    run,
    ablate,
    regret,
    robustness,
    export
)

# Импорт middleware
from uamdp.middlewares.error_handler import ErrorHandlerMiddleware

# Загрузка переменных окружения
load_dotenv()

# Настройка логирования
logging.basicConfig(
    level=getattr(logging, os.getenv('LOG_LEVEL', 'INFO').upper(), logging.INFO),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)


def register_handlers(subparsers):
    """
    Регистрация всех подкоманд
    """
    demo.register_handlers(subparsers)
    run.register_handlers(subparsers)
    ablate.register_handlers(subparsers)
    regret.register_handlers(subparsers)
    robustness.register_handlers(subparsers)
    export.register_handlers(subparsers)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uamdp",
        description="Управление с учётом неопределённости: байесовское убеждение, "
                    "выборка Томпсона, риск-чувствительное планирование"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_handlers(subparsers)
    return parser


async def main(argv: Optional[List[str]] = None) -> int:
    """
    Разбор аргументов и запуск подкоманды

    :return: Код возврата (0, 1 - ошибка, 2 - конфигурация, 3 - события недопустимости)
    """
    args = build_parser().parse_args(argv)
    middleware = ErrorHandlerMiddleware()
    logger.debug(f"Подкоманда {args.command}")
    return await middleware(args.handler, args)


def cli(argv: Optional[List[str]] = None):
    try:
        code = asyncio.run(main(argv))
    except KeyboardInterrupt:
        logger.info("Остановлено по команде пользователя")
        code = 130
    sys.exit(code)


if __name__ == '__main__':
    cli()
