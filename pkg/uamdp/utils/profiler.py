import os
import time
import logging
import functools
import cProfile
import pstats
import asyncio
from typing import Optional, Callable, Any, Dict
from datetime import datetime
from collections import defaultdict

logger = logging.getLogger(__name__)


class Profiler:
    """Профилирование планировщика и экспериментальных прогонов"""

    def __init__(self):
        self.stats_dir = os.getenv("PROFILING_DIR", "profiling")

        # Время выполнения и счётчики операций
        self.execution_times: Dict[str, list] = defaultdict(list)
        self.counters: Dict[str, int] = defaultdict(int)

        self.enabled = os.getenv("ENABLE_PROFILING", "false").lower() == "true"
        self.slow_threshold = float(os.getenv("SLOW_THRESHOLD", "1.0"))  # секунды

    def _finish(self, profile_name: str, started: float, prof: cProfile.Profile):
        """Учёт времени и сохранение профиля"""
        execution_time = time.time() - started
        self.execution_times[profile_name].append(execution_time)

        if execution_time > self.slow_threshold:
            logger.warning(
                f"Медленная операция: {profile_name} "
                f"выполнялась {execution_time:.2f} секунд"
            )

        os.makedirs(self.stats_dir, exist_ok=True)
        stats_file = os.path.join(
            self.stats_dir,
            f"{profile_name}_{datetime.now().strftime('%Y%m%d_%H%M%S_%f')}.prof"
        )
        prof.dump_stats(stats_file)
        with open(f"{stats_file}.txt", "w") as f:
            stats = pstats.Stats(prof, stream=f)
            stats.sort_stats("cumulative")
            stats.print_stats(20)

    def profile(self, func: Optional[Callable] = None, *, name: Optional[str] = None):
        """
        Декоратор для профилирования функций

        Включается переменной ENABLE_PROFILING при импорте модуля;
        выключенный профилировщик возвращает функцию без обёртки.

        :param func: Функция для профилирования
        :param name: Имя для профиля (если не указано, используется имя функции)
        :return: Обернутая функция
        """
        def decorator(fn):
            if not self.enabled:
                return fn

            profile_name = name or fn.__name__

            @functools.wraps(fn)
            async def async_wrapper(*args, **kwargs):
                started = time.time()
                prof = cProfile.Profile()
                prof.enable()
                try:
                    result = await fn(*args, **kwargs)
                except Exception as e:
                    logger.error(f"Ошибка при профилировании {profile_name}: {e}")
                    raise
                finally:
                    prof.disable()
                self._finish(profile_name, started, prof)
                return result

            @functools.wraps(fn)
            def sync_wrapper(*args, **kwargs):
                started = time.time()
                prof = cProfile.Profile()
                prof.enable()
                try:
                    result = fn(*args, **kwargs)
                except Exception as e:
                    logger.error(f"Ошибка при профилировании {profile_name}: {e}")
                    raise
                finally:
                    prof.disable()
                self._finish(profile_name, started, prof)
                return result

            return async_wrapper if asyncio.iscoroutinefunction(fn) else sync_wrapper

        return decorator(func) if func else decorator

    def count(self, kind: str, amount: int = 1):
        """
        Счётчик операций (роллауты, решения Беллмана)

        :param kind: Тип операции
        :param amount: Приращение
        """
        if not self.enabled:
            return
        self.counters[kind] += amount

    def get_stats(self) -> Dict[str, Any]:
        """
        Получение статистики профилирования

        :return: Словарь со статистикой
        """
        stats = {
            "execution_times": {},
            "counters": dict(self.counters),
        }
        for name, times in self.execution_times.items():
            if times:
                stats["execution_times"][name] = {
                    "min": min(times),
                    "max": max(times),
                    "avg": sum(times) / len(times),
                    "count": len(times)
                }
        return stats

    def reset_stats(self):
        self.execution_times.clear()
        self.counters.clear()

    def analyze_slow_calls(self) -> Dict[str, Any]:
        """Вызовы дольше порога SLOW_THRESHOLD"""
        slow = {}
        for name, times in self.execution_times.items():
            slow_times = [t for t in times if t > self.slow_threshold]
            if slow_times:
                slow[name] = {
                    "count": len(slow_times),
                    "avg_time": sum(slow_times) / len(slow_times),
                    "max_time": max(slow_times)
                }
        return slow


# Глобальный экземпляр профилировщика
profiler = Profiler()
