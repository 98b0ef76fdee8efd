"""
Управление в условиях неопределённости: байесовское убеждение о скрытых
параметрах, эпизодическая выборка Томпсона и риск-чувствительное
планирование с прогнозистом в контуре.
"""
__version__ = "1.0.0"
