"""
Вероятностные одношаговые прогнозы p(x_{t+1} | s_t, a_t, θ).

Точный GP-регрессор, сопряжённая скалярная модель, наивная
персистентность и аналитический прогноз по параметрам режима.
Все прогнозисты реализуют один интерфейс predict(u, theta, history).
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.stats import gaussian_kde, norm

from uamdp.core.errors import IllConditioned, IoFailure
from uamdp.core.models import LatentParam, PredictiveDist, ScalarGaussianBelief

logger = logging.getLogger(__name__)

VAR_FLOOR = 1e-12
JITTER_START = 1e-10
JITTER_MAX = 1e-4


@dataclass
class GPModel:
    """
    Точный GP с квадратично-экспоненциальным ядром (ARD)

    Выходы независимы и разделяют ядро; шум у каждого выхода свой.
    Разложение Холецкого считается при создании.
    """
    inputs: np.ndarray
    targets: np.ndarray
    length_scales: np.ndarray
    signal_variance: float
    noise_variance: np.ndarray
    mean: np.ndarray
    _factors: List[Tuple[np.ndarray, bool]] = field(default_factory=list, init=False, repr=False)
    _alphas: List[np.ndarray] = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.targets = np.asarray(self.targets, dtype=float)
        if self.targets.ndim == 1:
            self.targets = self.targets.reshape(-1, 1)
        n, p = self.inputs.shape
        d = self.targets.shape[1] if self.targets.size else np.atleast_1d(self.mean).size
        self.length_scales = np.broadcast_to(np.asarray(self.length_scales, dtype=float), (p,)).copy()
        self.noise_variance = np.broadcast_to(np.asarray(self.noise_variance, dtype=float), (d,)).copy()
        self.mean = np.broadcast_to(np.asarray(self.mean, dtype=float), (d,)).copy()

        if self.targets.shape[0] != n:
            raise ValueError("Число строк входов и целей не совпадает")
        if np.any(self.length_scales <= 0):
            raise ValueError("Длины масштаба должны быть положительными")
        if np.any(self.noise_variance <= 0):
            raise ValueError("Дисперсия шума должна быть положительной")
        if self.signal_variance <= 0:
            raise ValueError("Дисперсия сигнала должна быть положительной")

        if n > 0:
            self._factorize()

    @property
    def n_outputs(self) -> int:
        return int(self.mean.size)

    def kernel(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.atleast_2d(a) / self.length_scales
        b = np.atleast_2d(b) / self.length_scales
        sq = np.sum(a ** 2, axis=1)[:, None] + np.sum(b ** 2, axis=1)[None, :] - 2.0 * a @ b.T
        return self.signal_variance * np.exp(-0.5 * np.maximum(sq, 0.0))

    def _factorize(self):
        gram = self.kernel(self.inputs, self.inputs)
        eye = np.eye(gram.shape[0])
        for j in range(self.n_outputs):
            jitter = JITTER_START * self.signal_variance
            while True:
                try:
                    factor = linalg.cho_factor(gram + (self.noise_variance[j] + jitter) * eye, lower=True)
                    break
                except linalg.LinAlgError:
                    jitter *= 10.0
                    if jitter > JITTER_MAX * self.signal_variance:
                        raise IllConditioned(
                            f"Матрица Грама не раскладывается (выход {j}, jitter до {jitter / 10:.1e})"
                        )
                    logger.debug(f"Увеличиваем jitter до {jitter:.1e} для выхода {j}")
            self._factors.append(factor)
            self._alphas.append(linalg.cho_solve(factor, self.targets[:, j] - self.mean[j]))


def gp_predict(m: GPModel, z: Sequence[float]) -> PredictiveDist:
    """
    Апостериорный прогноз GP в точке z

    :param m: Модель
    :param z: Вход (признаки + кодировка θ)
    :return: Диагональное гауссово распределение
    """
    z = np.asarray(z, dtype=float).reshape(1, -1)
    if z.shape[1] != m.inputs.shape[1]:
        raise ValueError(f"Размерность входа {z.shape[1]} не совпадает с обучающей {m.inputs.shape[1]}")

    if m.inputs.shape[0] == 0:
        return PredictiveDist.gaussian(m.mean.copy(), np.full(m.n_outputs, m.signal_variance) + m.noise_variance)

    k_star = m.kernel(m.inputs, z)[:, 0]
    means = np.empty(m.n_outputs)
    variances = np.empty(m.n_outputs)
    for j, (factor, alpha) in enumerate(zip(m._factors, m._alphas)):
        means[j] = m.mean[j] + k_star @ alpha
        v = linalg.solve_triangular(factor[0], k_star, lower=True)
        latent = max(m.signal_variance - v @ v, 0.0)
        variances[j] = latent + m.noise_variance[j]
    return PredictiveDist.gaussian(means, variances)


def log_likelihood(p: PredictiveDist, x: Sequence[float]) -> float:
    """
    Лог-правдоподобие наблюдения

    Для эмпирического распределения - ядерная оценка (Сильверман)
    по каждому измерению; вырожденная выборка сводится к гауссиане.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != p.dim:
        raise ValueError(f"Размерность наблюдения {x.size} не совпадает с прогнозом {p.dim}")

    if p.kind == "diagonal-gaussian":
        return float(np.sum(norm.logpdf(x, loc=p.means, scale=np.sqrt(p.variances))))

    total = 0.0
    for j in range(p.dim):
        column = p.samples[:, j]
        if column.size < 2 or np.ptp(column) == 0:
            total += float(norm.logpdf(x[j], loc=p.means[j], scale=np.sqrt(p.variances[j])))
            continue
        kde = gaussian_kde(column, bw_method="silverman")
        total += float(kde.logpdf(x[j])[0])
    return total


def sample_next(p: PredictiveDist, rng_seed: Union[int, Sequence[int], np.random.Generator]) -> np.ndarray:
    """Розыгрыш следующего наблюдения"""
    rng = np.random.default_rng(rng_seed)
    if p.kind == "empirical":
        return p.samples[int(rng.integers(p.samples.shape[0]))].copy()
    return rng.normal(p.means, np.sqrt(p.variances))


def conjugate_update(s: ScalarGaussianBelief, r_obs: float) -> ScalarGaussianBelief:
    """
    Сопряжённое обновление нормального среднего

    μ1 = μ0 + σ0²/(σ0²+σε²)(r − μ0),  σ1² = σ0²σε²/(σ0²+σε²)
    """
    total = s.var + s.noise_var
    mu = s.mu + s.var / total * (r_obs - s.mu)
    var = s.var * s.noise_var / total
    return ScalarGaussianBelief(mu=mu, var=var, noise_var=s.noise_var)


def persistence_forecast(history: Sequence[Sequence[float]], var_window: int) -> PredictiveDist:
    """
    Наивный прогноз: последнее наблюдение

    :param history: Непустая история наблюдений
    :param var_window: Окно для выборочной дисперсии
    """
    if len(history) == 0:
        raise ValueError("История пуста")
    if var_window < 1:
        raise ValueError("Окно должно быть положительным")
    arr = np.asarray(history, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    window = arr[-var_window:]
    if window.shape[0] > 1:
        variances = window.var(axis=0, ddof=1)
    else:
        variances = np.zeros(arr.shape[1])
    return PredictiveDist.gaussian(arr[-1].copy(), np.maximum(variances, VAR_FLOOR))


def mixture_moments(preds: Sequence[PredictiveDist], weights: Sequence[float]) -> PredictiveDist:
    """Сведение взвешенной смеси к одной диагональной гауссиане"""
    w = np.asarray(weights, dtype=float)
    means = np.array([p.means for p in preds])
    second = np.array([p.variances + p.means ** 2 for p in preds])
    mean = w @ means
    var = np.maximum(w @ second - mean ** 2, VAR_FLOOR)
    return PredictiveDist.gaussian(mean, var)


def load_training_table(path: Union[str, Path]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Загрузка обучающей таблицы GP из CSV (колонки z_1..z_p, y_1..y_d)

    :raises IoFailure: Если файл не читается
    """
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError) as e:
        raise IoFailure(f"Не удалось прочитать обучающую таблицу ({e})", path) from e

    z_cols = sorted((c for c in frame.columns if c.startswith("z_")), key=lambda c: int(c[2:]))
    y_cols = sorted((c for c in frame.columns if c.startswith("y_")), key=lambda c: int(c[2:]))
    if not z_cols or not y_cols:
        raise ValueError(f"В таблице {path} нет колонок z_* или y_*")
    return frame[z_cols].to_numpy(dtype=float), frame[y_cols].to_numpy(dtype=float)


def save_training_table(path: Union[str, Path], inputs: np.ndarray, targets: np.ndarray) -> Path:
    """Сохранение обучающей таблицы в том же формате"""
    inputs = np.atleast_2d(inputs)
    targets = np.asarray(targets).reshape(inputs.shape[0], -1)
    frame = pd.DataFrame(inputs, columns=[f"z_{i + 1}" for i in range(inputs.shape[1])])
    for j in range(targets.shape[1]):
        frame[f"y_{j + 1}"] = targets[:, j]
    path = Path(path)
    try:
        frame.to_csv(path, index=False)
    except OSError as e:
        raise IoFailure(f"Не удалось сохранить обучающую таблицу ({e})", path) from e
    return path


class FeatureScaler:
    """z-нормировка по статистикам обучающего окна"""

    def __init__(self, mean: np.ndarray, scale: np.ndarray):
        self.mean = np.asarray(mean, dtype=float)
        self.scale = np.asarray(scale, dtype=float)

    @classmethod
    def fit(cls, rows: np.ndarray, floor: float = 1e-8) -> "FeatureScaler":
        rows = np.atleast_2d(rows)
        return cls(rows.mean(axis=0), np.maximum(rows.std(axis=0, ddof=1) if rows.shape[0] > 1 else 0.0, floor))

    def transform(self, u: np.ndarray) -> np.ndarray:
        return (np.asarray(u, dtype=float) - self.mean) / self.scale


class BaseForecaster:
    """Интерфейс прогнозиста"""

    name = "base"

    def predict(self, u: np.ndarray, theta: LatentParam, history: Sequence[Sequence[float]] = ()) -> PredictiveDist:
        raise NotImplementedError

    def log_likelihood(self, pred: PredictiveDist, x: Sequence[float]) -> float:
        return log_likelihood(pred, x)


class RegimeForecaster(BaseForecaster):
    """
    Аналитический прогноз по параметрам гипотезы

    :param moments: Функция (u, theta) -> (средние, дисперсии)
    """

    name = "regime"

    def __init__(self, moments: Callable[[np.ndarray, LatentParam], Tuple[np.ndarray, np.ndarray]]):
        self.moments = moments

    def predict(self, u, theta, history=()):
        means, variances = self.moments(np.asarray(u, dtype=float), theta)
        return PredictiveDist.gaussian(means, np.maximum(variances, VAR_FLOOR))


class ConjugateForecaster(BaseForecaster):
    """Фиксированный шум наблюдения вокруг средних гипотезы"""

    name = "conjugate"

    def __init__(self, noise_var: float, mean_of: Callable[[LatentParam], np.ndarray]):
        self.noise_var = noise_var
        self.mean_of = mean_of

    def predict(self, u, theta, history=()):
        means = np.atleast_1d(self.mean_of(theta))
        return PredictiveDist.gaussian(means, np.full(means.size, self.noise_var))


class PersistenceForecaster(BaseForecaster):
    """Наивная персистентность; от θ не зависит"""

    name = "persistence"

    def __init__(self, var_window: int = 20):
        self.var_window = var_window

    def predict(self, u, theta, history=()):
        return persistence_forecast(history, self.var_window)


class GPForecaster(BaseForecaster):
    """
    GP по входу z = concat(u, η(θ))

    η(θ) - one-hot по списку гипотез (дискретный Θ) либо сами параметры.
    """

    name = "gp"

    def __init__(self, model: GPModel, hypotheses: Optional[Sequence[LatentParam]] = None,
                 scaler: Optional[FeatureScaler] = None, noise=None):
        self.model = model
        self.noise = noise
        self.hypotheses = list(hypotheses) if hypotheses is not None else None
        self.scaler = scaler
        self._index: Dict[str, int] = {h.id: i for i, h in enumerate(self.hypotheses or [])}

    def encode(self, theta: LatentParam) -> np.ndarray:
        """Кодировка гипотезы η(θ)"""
        if self.hypotheses is None:
            return theta.vector
        code = np.zeros(len(self.hypotheses))
        code[self._index[theta.id]] = 1.0
        return code

    def predict(self, u, theta, history=()):
        u = np.asarray(u, dtype=float)
        if self.scaler is not None:
            u = self.scaler.transform(u)
        if self.noise is not None:
            u = self.noise.apply(u, len(history))
        return gp_predict(self.model, np.concatenate([u, self.encode(theta)]))

    @classmethod
    def fit(
        cls,
        features: np.ndarray,
        labels: Sequence[int],
        targets: np.ndarray,
        hypotheses: Sequence[LatentParam],
        train_size: int,
        noise_share: float = 0.9,
    ) -> "GPForecaster":
        """
        Построение GP по обучающей таблице без оптимизации гиперпараметров

        Признаки нормируются, длины масштаба берутся по эвристике √p,
        дисперсия целей делится между сигналом и шумом.

        :param features: Сырые признаки (n × p)
        :param labels: Индексы режимов для каждой строки
        :param targets: Следующие наблюдения (n × d)
        :param hypotheses: Список гипотез для one-hot кодировки
        :param train_size: Сколько строк оставить (равномерное прореживание)
        """
        features = np.atleast_2d(features)
        targets = np.asarray(targets, dtype=float).reshape(features.shape[0], -1)
        scaler = FeatureScaler.fit(features)
        scaled = scaler.transform(features)

        n = features.shape[0]
        keep = np.unique(np.linspace(0, n - 1, num=min(train_size, n)).astype(int))
        onehot = np.eye(len(hypotheses))[np.asarray(labels)[keep]]
        inputs = np.hstack([scaled[keep], onehot])
        kept_targets = targets[keep]

        p = features.shape[1]
        length_scales = np.concatenate([np.full(p, np.sqrt(p)), np.ones(len(hypotheses))])
        target_var = np.maximum(kept_targets.var(axis=0, ddof=1), VAR_FLOOR)
        model = GPModel(
            inputs=inputs,
            targets=kept_targets,
            length_scales=length_scales,
            signal_variance=float((1.0 - noise_share) * target_var.mean()),
            noise_variance=noise_share * target_var,
            mean=kept_targets.mean(axis=0),
        )
        logger.info(f"GP-прогнозист построен: {inputs.shape[0]} строк, {inputs.shape[1]} входов")
        return cls(model, hypotheses, scaler)
