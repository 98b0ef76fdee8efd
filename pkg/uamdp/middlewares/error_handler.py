import sys
import logging
from argparse import Namespace
from typing import Awaitable, Callable

from pydantic import ValidationError

from uamdp.core.errors import ConfigError
from uamdp.utils.logger import log_manager

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_FAILURE = 1

Handler = Callable[[Namespace], Awaitable[int]]


def exit_code_for(error: Exception) -> int:
    """Код возврата по типу исключения"""
    if isinstance(error, (ConfigError, ValidationError)):
        return EXIT_CONFIG
    return EXIT_FAILURE


class ErrorHandlerMiddleware:
    """Обёртка обработчиков подкоманд: журнал ошибки и код возврата"""

    def __init__(self, stream=None):
        self.stream = stream

    async def __call__(self, handler: Handler, args: Namespace) -> int:
        """
        Вызов обработчика с перехватом ошибок

        :param handler: Обработчик подкоманды
        :param args: Аргументы командной строки
        :return: Код возврата
        """
        try:
            return await handler(args)
        except Exception as e:
            context = {
                "handler": getattr(handler, "__name__", str(handler)),
                "command": getattr(args, "command", None),
                "args": {k: str(v) for k, v in vars(args).items() if k != "handler"},
            }
            await log_manager.log_error(e, context=context)
            code = exit_code_for(e)
            logger.debug(f"Ошибка в {context['handler']}: {type(e).__name__}, код {code}")

            print(f"❌ {type(e).__name__}: {e}", file=self.stream or sys.stderr)
            return code
