import json
import shutil
import zipfile
from pathlib import Path
from unittest.mock import patch

import aiofiles
import pytest

from uamdp.utils.logger import LogManager, log_manager as global_log_manager


@pytest.fixture
def log_manager(tmp_path):
    """Менеджер логирования во временной директории"""
    test_logs_dir = tmp_path / "test_logs"
    manager = LogManager(str(test_logs_dir))

    yield manager

    # Возвращаем глобальному менеджеру его обработчики
    global_log_manager._setup_loggers()
    shutil.rmtree(test_logs_dir, ignore_errors=True)


async def _read(path: Path) -> str:
    async with aiofiles.open(path, "r", encoding="utf-8") as f:
        return await f.read()


@pytest.mark.asyncio
async def test_log_run(log_manager):
    """Запись о запуске в run.log"""
    log_manager.log_run("run", {"env": "trading", "seeds": [0, 1]}, 0.5)

    assert log_manager.stats["runs"] == 1
    content = await _read(log_manager.settings["run_log_file"])
    assert "Command: run" in content
    assert "env: trading" in content
    assert "Processing Time: 0.500s" in content


@pytest.mark.asyncio
async def test_log_event(log_manager):
    """События цикла пишутся одной JSON-строкой"""
    record = log_manager.log_event("no_feasible_action", t=3, episode=0, fallback=0.5)
    assert record == {"kind": "no_feasible_action", "t": 3, "episode": 0, "fallback": 0.5}
    assert log_manager.stats["events"]["no_feasible_action"] == 1

    lines = (await _read(log_manager.settings["events_log_file"])).splitlines()
    assert json.loads(lines[-1]) == record


def test_log_event_unknown_kind(log_manager):
    with pytest.raises(ValueError):
        log_manager.log_event("planner_crashed", t=0, episode=0)


@pytest.mark.asyncio
async def test_log_error(log_manager):
    """Ошибка попадает в статистику и в error.log"""
    await log_manager.log_error(ValueError("Test error"), context={"seed": 1})

    assert log_manager.stats["error_count"] == 1
    error_info = log_manager.stats["last_errors"][0]
    assert error_info["error_type"] == "ValueError"
    assert error_info["error_message"] == "Test error"
    assert error_info["context"] == {"seed": 1}

    content = await _read(log_manager.settings["error_log_file"])
    assert '"error_type": "ValueError"' in content


@pytest.mark.asyncio
async def test_last_errors_bounded(log_manager):
    for i in range(12):
        await log_manager.log_error(RuntimeError(f"Error {i}"))
    assert len(log_manager.stats["last_errors"]) == 10
    assert log_manager.stats["last_errors"][-1]["error_message"] == "Error 11"


@pytest.mark.asyncio
async def test_get_logs(log_manager):
    """Последние строки журнала с фильтром по уровню"""
    for i in range(5):
        log_manager.log_run(f"cmd_{i}", {}, 0.1)
        log_manager.log_warning(f"Warning {i}")

    run_logs = await log_manager.get_logs("run", limit=3)
    assert len(run_logs) == 3
    assert "Warning 4" in run_logs[-1]

    warnings = await log_manager.get_logs("run", limit=10, level="warning")
    assert len(warnings) == 5
    assert all(" - WARNING - " in line for line in warnings)


@pytest.mark.asyncio
async def test_get_logs_errors(log_manager):
    assert await log_manager.get_logs("invalid_type") == []

    log_manager.log_run("run", {}, 0.1)
    with patch("aiofiles.open", side_effect=OSError("Test error")):
        assert await log_manager.get_logs("run") == []


@pytest.mark.asyncio
async def test_get_statistics(log_manager):
    log_manager.log_run("run", {}, 0.1)
    log_manager.log_warning("Test warning")
    log_manager.log_event("resampled", t=1, episode=0)
    await log_manager.log_error(ValueError("Test error"))

    stats = log_manager.get_statistics()
    assert stats["runs"] == 1
    assert stats["error_count"] == 1
    assert stats["warning_count"] == 1
    assert stats["events"] == {"resampled": 1}
    for log_type in ("run", "error", "events"):
        assert stats["log_files"][log_type]["size_mb"] > 0


@pytest.mark.asyncio
async def test_export_logs(log_manager, tmp_path):
    """Экспорт журналов в zip"""
    log_manager.log_run("run", {}, 0.1)
    log_manager.log_event("resampled", t=0, episode=0)
    await log_manager.log_error(ValueError("Test error"))

    archive_path = log_manager.export_logs(tmp_path / "test_export")

    assert archive_path is not None
    assert archive_path.exists()
    assert archive_path.suffix == ".zip"
    with zipfile.ZipFile(archive_path) as zf:
        assert {"run.log", "error.log", "events.log"} <= set(zf.namelist())


def test_export_logs_failure(log_manager, tmp_path):
    with patch("shutil.make_archive", side_effect=OSError("Test error")):
        assert log_manager.export_logs(tmp_path / "test_export") is None
