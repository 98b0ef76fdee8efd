import os
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Union

import aiofiles
import pandas as pd

from uamdp.core.errors import IoFailure
from uamdp.core.models import EpisodeLog
from uamdp.utils.analytics import analytics
from uamdp.utils.profiler import profiler

logger = logging.getLogger(__name__)

STEP_COLUMNS = ["seed", "t", "episode", "theta_id", "action", "action_index", "reward", "entropy", "events"]

LogsArg = Union[EpisodeLog, Mapping[int, EpisodeLog]]


def _by_seed(logs: LogsArg) -> Dict[int, EpisodeLog]:
    if isinstance(logs, EpisodeLog):
        return {int(logs.config.get("seed", 0)): logs}
    return dict(logs)


class ExportManager:
    """Экспорт журналов, отчётов и данных для графиков"""

    def __init__(self, export_dir: Optional[str] = None):
        self.export_dir = Path(export_dir or os.getenv("UAMDP_EXPORT_DIR", "results"))

        # Поддерживаемые форматы
        self.formats = {
            "csv": self._export_to_csv,
            "jsonl": self._export_to_jsonl,
            "bundle": self._export_bundle,
        }

    def _target(self, target_dir: Optional[Union[str, Path]]) -> Path:
        path = Path(target_dir) if target_dir is not None else self.export_dir
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise IoFailure("Не удалось создать директорию", path) from e
        return path

    async def write_text(self, path: Union[str, Path], text: str) -> Path:
        """
        Запись текста в файл

        :raises IoFailure: При ошибке файловой системы
        """
        path = Path(path)
        try:
            async with aiofiles.open(path, "w", encoding="utf-8", newline="") as f:
                await f.write(text)
        except OSError as e:
            raise IoFailure("Не удалось записать файл", path) from e
        return path

    async def write_frame(self, frame: pd.DataFrame, path: Union[str, Path]) -> Path:
        return await self.write_text(path, frame.to_csv(index=False))

    @profiler.profile(name="export_results")
    async def export_results(
        self,
        logs: LogsArg,
        export_format: str = "csv",
        name: str = "run",
        target_dir: Optional[Union[str, Path]] = None,
        model: str = "uamdp",
    ) -> List[Path]:
        """
        Экспорт результатов запуска

        :param logs: Журнал или журналы по сидам
        :param export_format: csv, jsonl или bundle
        :param name: Префикс файлов
        :param target_dir: Директория (по умолчанию export_dir)
        :param model: Метка модели в отчёте
        :return: Пути созданных файлов
        :raises ValueError: Неподдерживаемый формат
        :raises IoFailure: Ошибка записи
        """
        if export_format not in self.formats:
            raise ValueError(f"Неподдерживаемый формат: {export_format}")
        target = self._target(target_dir)
        paths = await self.formats[export_format](_by_seed(logs), name, target, model)
        logger.info(f"Экспорт {export_format}: {len(paths)} файлов в {target}")
        return paths

    async def _export_to_csv(self, logs: Dict[int, EpisodeLog], name: str, target: Path, model: str) -> List[Path]:
        """Отчёт по метрикам и таблица шагов"""
        report = analytics.metrics_report(logs, model=model)
        steps = pd.DataFrame(
            [
                {
                    "seed": seed,
                    "t": rec.t,
                    "episode": rec.episode,
                    "theta_id": rec.theta_id,
                    "action": rec.action,
                    "action_index": rec.action_index,
                    "reward": rec.reward,
                    "entropy": rec.entropy,
                    "events": ";".join(rec.events),
                }
                for seed, log in logs.items()
                for rec in log.records
            ],
            columns=STEP_COLUMNS,
        )
        return [
            await self.write_frame(report, target / f"{name}_metrics.csv"),
            await self.write_frame(steps, target / f"{name}_steps.csv"),
        ]

    async def _export_to_jsonl(self, logs: Dict[int, EpisodeLog], name: str, target: Path, model: str) -> List[Path]:
        """Журнал каждого сида в JSON lines"""
        return [
            await self.write_text(target / f"{name}_seed{seed}.jsonl", log.to_jsonl())
            for seed, log in logs.items()
        ]

    async def _export_bundle(self, logs: Dict[int, EpisodeLog], name: str, target: Path, model: str) -> List[Path]:
        """Веерная диаграмма, надёжность и энтропия для каждого сида"""
        paths = []
        for seed, log in logs.items():
            bundle_dir = self._target(target / f"{name}_bundle" / f"seed{seed}")
            for part, frame in analytics.plot_bundle(log).items():
                paths.append(await self.write_frame(frame, bundle_dir / f"{part}.csv"))
        return paths

    async def export_frame(self, frame: pd.DataFrame, filename: str,
                           target_dir: Optional[Union[str, Path]] = None) -> Path:
        """Произвольная таблица (трасса демонстрации, таблица сожаления, кривая шума)"""
        return await self.write_frame(frame, self._target(target_dir) / filename)

    async def load_episode_log(self, path: Union[str, Path]) -> EpisodeLog:
        """
        Чтение журнала из JSON lines

        :raises IoFailure: Файл не читается или повреждён
        """
        path = Path(path)
        try:
            async with aiofiles.open(path, "r", encoding="utf-8") as f:
                text = await f.read()
        except OSError as e:
            raise IoFailure("Не удалось прочитать журнал", path) from e
        try:
            return EpisodeLog.from_jsonl(text)
        except (ValueError, TypeError, KeyError) as e:
            raise IoFailure(f"Повреждённый журнал ({e})", path) from e


# Глобальный экземпляр менеджера экспорта
export_manager = ExportManager()
