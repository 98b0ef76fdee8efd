from typing import Any, Dict, Optional


class UamdpError(Exception):
    """Базовое исключение библиотеки"""


class AllZeroLikelihood(UamdpError):
    """Все произведения вес·правдоподобие равны нулю"""


class IllConditioned(UamdpError):
    """Матрица Грама не раскладывается даже после наращивания jitter"""


class NoFeasibleAction(UamdpError):
    """Все действия в корне исключены вероятностным ограничением"""

    def __init__(self, message: str, fallback_action: Any, violations: Optional[Dict[str, float]] = None):
        super().__init__(message)
        self.fallback_action = fallback_action
        self.violations = violations or {}


class WarmupInsufficient(UamdpError):
    """Окно истории короче, чем нужно для признаков"""


class DegenerateSeries(UamdpError):
    """Ряд с нулевым стандартным отклонением"""


class BudgetExceeded(UamdpError):
    """Дерево убеждений превысило лимит узлов"""


class IoFailure(UamdpError):
    """Ошибка ввода-вывода с указанием пути"""

    def __init__(self, message: str, path: Any):
        super().__init__(f"{message}: {path}")
        self.path = path


class ConfigError(UamdpError):
    """Некорректная конфигурация запуска"""
