import os
import json
import logging
import shutil
import traceback
from collections import Counter
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional, Dict, Any, List

import aiofiles

EVENT_KINDS = ("all_zero_likelihood", "no_feasible_action", "resampled")


class LogManager:
    """Журналы запусков, ошибок и событий управляющего цикла"""

    def __init__(self, logs_dir: Optional[str] = None):
        self.logs_dir = Path(logs_dir or os.getenv("UAMDP_LOG_DIR", "logs"))
        self.logs_dir.mkdir(parents=True, exist_ok=True)

        self.settings = {
            "run_log_file": self.logs_dir / "run.log",
            "error_log_file": self.logs_dir / "error.log",
            "events_log_file": self.logs_dir / "events.log",
            "max_file_size": 10 * 1024 * 1024,  # 10 MB
            "backup_count": 5,
            "log_format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
            "date_format": "%Y-%m-%d %H:%M:%S"
        }

        self._setup_loggers()

        self.stats = {
            "runs": 0,
            "error_count": 0,
            "warning_count": 0,
            "events": Counter(),
            "last_errors": []
        }

    def _handler(self, key: str, fmt: str, level: int = logging.NOTSET) -> RotatingFileHandler:
        handler = RotatingFileHandler(
            self.settings[key],
            maxBytes=self.settings["max_file_size"],
            backupCount=self.settings["backup_count"],
            encoding="utf-8"
        )
        handler.setFormatter(logging.Formatter(fmt, self.settings["date_format"]))
        handler.setLevel(level)
        return handler

    def _make_logger(self, name: str, handler: RotatingFileHandler, level: int) -> logging.Logger:
        log = logging.getLogger(name)
        log.setLevel(level)
        # Повторная инициализация не должна дублировать обработчики
        for old in list(log.handlers):
            log.removeHandler(old)
            old.close()
        log.addHandler(handler)
        return log

    def _setup_loggers(self):
        """Настройка логгеров run, error и events"""
        fmt = self.settings["log_format"]
        self.run_logger = self._make_logger(
            "uamdp.run", self._handler("run_log_file", fmt), logging.INFO
        )
        self.error_logger = self._make_logger(
            "uamdp.error", self._handler("error_log_file", fmt, logging.ERROR), logging.ERROR
        )
        self.events_logger = self._make_logger(
            "uamdp.events", self._handler("events_log_file", "%(message)s"), logging.INFO
        )

    def log_run(self, command: str, config: Dict[str, Any], elapsed: float):
        """
        Запись о завершённом запуске

        :param command: Подкоманда
        :param config: Конфигурация запуска
        :param elapsed: Длительность в секундах
        """
        self.stats["runs"] += 1
        self.run_logger.info(
            f"Command: {command}, env: {config.get('env')}, seeds: {config.get('seeds')}, "
            f"Processing Time: {elapsed:.3f}s"
        )

    def log_event(self, kind: str, t: int, episode: int, **details: Any) -> Dict[str, Any]:
        """
        Событие управляющего цикла

        :param kind: Тип события (см. EVENT_KINDS)
        :param t: Глобальный шаг
        :param episode: Номер эпизода
        :return: Запись события
        """
        if kind not in EVENT_KINDS:
            raise ValueError(f"Неизвестный тип события: {kind}")
        self.stats["events"][kind] += 1
        record = {"kind": kind, "t": t, "episode": episode, **details}
        self.events_logger.info(json.dumps(record, ensure_ascii=False, default=str))
        return record

    async def log_error(self, error: Exception, context: Optional[Dict[str, Any]] = None):
        """
        Логирование ошибки

        :param error: Объект ошибки
        :param context: Контекст ошибки (опционально)
        """
        self.stats["error_count"] += 1

        error_info = {
            "timestamp": datetime.now().isoformat(),
            "error_type": type(error).__name__,
            "error_message": str(error),
            "traceback": traceback.format_exc(),
            "context": context
        }

        self.stats["last_errors"].append(error_info)
        if len(self.stats["last_errors"]) > 10:
            self.stats["last_errors"].pop(0)

        self.error_logger.error(json.dumps(error_info, indent=2, ensure_ascii=False, default=str))

    def log_warning(self, message: str, context: Optional[Dict[str, Any]] = None):
        self.stats["warning_count"] += 1
        warning_info = {
            "timestamp": datetime.now().isoformat(),
            "message": message,
            "context": context
        }
        self.run_logger.warning(json.dumps(warning_info, ensure_ascii=False, default=str))

    async def get_logs(self, log_type: str = "run", limit: int = 100, level: Optional[str] = None) -> List[str]:
        """
        Последние строки журнала

        :param log_type: run, error или events
        :param limit: Максимальное количество строк
        :param level: Уровень логирования (опционально)
        """
        log_file = self.settings.get(f"{log_type}_log_file")
        if not log_file or not log_file.exists():
            return []

        try:
            async with aiofiles.open(log_file, "r", encoding="utf-8") as f:
                lines = await f.readlines()
        except OSError as e:
            self.error_logger.error(f"Ошибка при чтении логов: {e}")
            return []

        if level:
            lines = [line for line in lines if f" - {level.upper()} - " in line]
        return lines[-limit:]

    def get_statistics(self) -> Dict[str, Any]:
        log_sizes = {}
        for log_type in ("run", "error", "events"):
            log_file = self.settings[f"{log_type}_log_file"]
            if log_file.exists():
                log_sizes[log_type] = log_file.stat().st_size

        return {
            "runs": self.stats["runs"],
            "error_count": self.stats["error_count"],
            "warning_count": self.stats["warning_count"],
            "events": dict(self.stats["events"]),
            "last_errors": self.stats["last_errors"][-5:],
            "log_files": {
                name: {
                    "size_mb": size / (1024 * 1024),
                    "path": str(self.settings[f"{name}_log_file"])
                }
                for name, size in log_sizes.items()
            }
        }

    def export_logs(self, export_dir: Path) -> Optional[Path]:
        """
        Экспорт всех журналов в zip-архив

        :param export_dir: Директория для экспорта
        :return: Путь к архиву или None в случае ошибки
        """
        try:
            timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
            temp_dir = Path(export_dir) / f"logs_export_{timestamp}"
            temp_dir.mkdir(parents=True, exist_ok=True)

            for log_type in ("run", "error", "events"):
                log_file = self.settings[f"{log_type}_log_file"]
                if log_file.exists():
                    shutil.copy2(log_file, temp_dir)

            archive_path = Path(export_dir) / f"logs_export_{timestamp}.zip"
            shutil.make_archive(str(archive_path.with_suffix("")), "zip", temp_dir)
            shutil.rmtree(temp_dir)
            return archive_path

        except OSError as e:
            self.error_logger.error(f"Ошибка при экспорте логов: {e}")
            return None


# Глобальный экземпляр менеджера логирования
log_manager = LogManager()
