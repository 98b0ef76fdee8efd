import math

import numpy as np
import pytest
from scipy.stats import norm

from uamdp.core.errors import IoFailure
from uamdp.core.forecaster import (
    ConjugateForecaster,
    GPForecaster,
    GPModel,
    PersistenceForecaster,
    RegimeForecaster,
    conjugate_update,
    gp_predict,
    load_training_table,
    log_likelihood,
    mixture_moments,
    persistence_forecast,
    sample_next,
    save_training_table,
)
from uamdp.core.models import LatentParam, PredictiveDist, ScalarGaussianBelief

THETA = LatentParam("calm", (0.01,))


@pytest.fixture
def gp_model():
    """GP на двух точках с малым шумом"""
    return GPModel(
        inputs=np.array([[0.0], [1.0]]),
        targets=np.array([[1.0], [2.0]]),
        length_scales=np.array([1.0]),
        signal_variance=1.0,
        noise_variance=np.array([1e-6]),
        mean=np.array([0.0]),
    )


def test_conjugate_update_demo_numbers():
    """
    Первый шаг демонстрации: r = ln(102/100), σ0² = 5e-4, σε² = 2.5e-4

    Опубликованные в таблице демонстрации значения μ1 = 0.0090 и σ1² = 4.0e-4
    не следуют из формул обновления; проверяются сами формулы.
    """
    prior = ScalarGaussianBelief(mu=0.0, var=5e-4, noise_var=2.5e-4)
    r = math.log(102 / 100)

    posterior = conjugate_update(prior, r)

    assert posterior.mu == pytest.approx(r * 2 / 3)
    assert posterior.mu == pytest.approx(0.0132, abs=1e-4)
    assert posterior.var == pytest.approx(5e-4 / 3)
    assert posterior.noise_var == prior.noise_var


def test_conjugate_update_shrinks_variance():
    belief = ScalarGaussianBelief(mu=0.0, var=1.0, noise_var=1.0)
    for r in (0.5, -0.2, 0.1):
        updated = conjugate_update(belief, r)
        assert updated.var < belief.var
        belief = updated


def test_scalar_belief_rejects_nonpositive_variance():
    with pytest.raises(ValueError):
        ScalarGaussianBelief(mu=0.0, var=0.0, noise_var=1.0)


def test_gp_interpolates_training_points(gp_model):
    """При малом шуме среднее в обучающей точке близко к цели"""
    pred = gp_predict(gp_model, [0.0])

    assert pred.kind == "diagonal-gaussian"
    assert pred.means[0] == pytest.approx(1.0, abs=1e-3)
    assert pred.variances[0] >= 1e-6


def test_gp_reverts_to_prior_far_away(gp_model):
    pred = gp_predict(gp_model, [100.0])
    assert pred.means[0] == pytest.approx(0.0, abs=1e-8)
    assert pred.variances[0] == pytest.approx(1.0 + 1e-6)


def test_gp_without_training_data():
    model = GPModel(
        inputs=np.zeros((0, 2)),
        targets=np.zeros((0, 1)),
        length_scales=1.0,
        signal_variance=2.0,
        noise_variance=0.5,
        mean=0.3,
    )
    pred = gp_predict(model, [0.0, 0.0])
    assert pred.means == pytest.approx([0.3])
    assert pred.variances == pytest.approx([2.5])


def test_gp_validation(gp_model):
    with pytest.raises(ValueError):
        gp_predict(gp_model, [0.0, 1.0])
    with pytest.raises(ValueError):
        GPModel(
            inputs=np.array([[0.0]]),
            targets=np.array([[1.0]]),
            length_scales=np.array([-1.0]),
            signal_variance=1.0,
            noise_variance=np.array([0.1]),
            mean=np.array([0.0]),
        )


def test_gp_duplicate_inputs_factorize():
    """Совпадающие точки раскладываются благодаря шуму и jitter"""
    model = GPModel(
        inputs=np.zeros((5, 1)),
        targets=np.ones((5, 1)),
        length_scales=1.0,
        signal_variance=1.0,
        noise_variance=1e-12,
        mean=0.0,
    )
    assert gp_predict(model, [0.0]).means[0] == pytest.approx(1.0, abs=1e-3)


def test_log_likelihood_gaussian():
    pred = PredictiveDist.gaussian([0.0, 1.0], [1.0, 4.0])
    expected = norm.logpdf(0.5, 0.0, 1.0) + norm.logpdf(2.0, 1.0, 2.0)
    assert log_likelihood(pred, [0.5, 2.0]) == pytest.approx(expected)

    with pytest.raises(ValueError):
        log_likelihood(pred, [0.5])


def test_log_likelihood_empirical():
    """Ядерная оценка плотности для выборочного прогноза"""
    samples = np.random.default_rng(0).normal(size=(400, 1))
    pred = PredictiveDist.empirical(samples)
    assert log_likelihood(pred, [0.0]) > log_likelihood(pred, [3.0])

    degenerate = PredictiveDist.empirical(np.ones((3, 1)))
    assert np.isfinite(log_likelihood(degenerate, [1.0]))


def test_persistence_forecast():
    pred = persistence_forecast([[1.0], [2.0], [4.0]], var_window=3)
    assert pred.means == pytest.approx([4.0])
    assert pred.variances == pytest.approx([np.var([1.0, 2.0, 4.0], ddof=1)])

    single = persistence_forecast([[5.0]], var_window=3)
    assert single.variances[0] > 0

    with pytest.raises(ValueError):
        persistence_forecast([], var_window=3)


def test_mixture_moments():
    """Смесь двух гауссиан сводится по моментам"""
    preds = [PredictiveDist.gaussian([0.0], [1.0]), PredictiveDist.gaussian([2.0], [1.0])]
    mixed = mixture_moments(preds, [0.5, 0.5])
    assert mixed.means == pytest.approx([1.0])
    assert mixed.variances == pytest.approx([2.0])


def test_sample_next_reproducible():
    pred = PredictiveDist.gaussian([0.0, 1.0], [1.0, 1.0])
    assert np.array_equal(sample_next(pred, 5), sample_next(pred, 5))


def test_forecasters_share_interface():
    """Все прогнозисты отвечают на predict(u, theta, history)"""
    regime = RegimeForecaster(lambda u, th: (np.array([th.params[0]]), np.array([1e-4])))
    conjugate = ConjugateForecaster(2.5e-4, lambda th: np.array([th.params[0]]))
    persistence = PersistenceForecaster(var_window=2)

    assert regime.predict(np.zeros(2), THETA).means == pytest.approx([0.01])
    assert conjugate.predict(np.zeros(2), THETA).variances == pytest.approx([2.5e-4])
    assert persistence.predict(np.zeros(2), THETA, [[0.0], [0.02]]).means == pytest.approx([0.02])


def test_gp_forecaster_fit_and_encode():
    rng = np.random.default_rng(1)
    hypotheses = [LatentParam("low"), LatentParam("high")]
    features = rng.normal(size=(60, 3))
    labels = np.repeat([0, 1], 30)
    targets = np.where(labels == 0, -1.0, 1.0)[:, None] + 0.01 * rng.normal(size=(60, 1))

    forecaster = GPForecaster.fit(features, labels, targets, hypotheses, train_size=40)

    assert forecaster.encode(hypotheses[1]) == pytest.approx([0.0, 1.0])
    low = forecaster.predict(features[0], hypotheses[0])
    high = forecaster.predict(features[0], hypotheses[1])
    assert low.means[0] < high.means[0]


def test_training_table_roundtrip(tmp_path):
    inputs = np.arange(6, dtype=float).reshape(3, 2)
    targets = np.array([1.0, 2.0, 3.0])
    path = save_training_table(tmp_path / "train.csv", inputs, targets)

    z, y = load_training_table(path)

    assert np.array_equal(z, inputs)
    assert np.array_equal(y[:, 0], targets)


def test_training_table_missing_file(tmp_path):
    with pytest.raises(IoFailure):
        load_training_table(tmp_path / "missing.csv")


def test_gp_single_point_by_hand():
    """Одна точка, σ_f² = 1, σ_ε² = 0.1: среднее и дисперсия по формулам 1×1"""
    model = GPModel(
        inputs=np.array([[0.5]]),
        targets=np.array([[2.0]]),
        length_scales=1.0,
        signal_variance=1.0,
        noise_variance=0.1,
        mean=0.4,
    )
    pred = gp_predict(model, [0.5])

    assert pred.means[0] == pytest.approx(0.4 + (2.0 - 0.4) / 1.1, rel=1e-8)
    assert pred.variances[0] == pytest.approx(1.0 - 1.0 / 1.1 + 0.1, rel=1e-8)
    assert pred.variances[0] == pytest.approx(0.1909, abs=1e-4)


def test_gp_variance_shrinks_with_data():
    """Каждая добавленная обучающая точка не увеличивает дисперсию прогноза"""
    rng = np.random.default_rng(3)
    inputs = rng.uniform(-2.0, 2.0, size=(12, 2))
    targets = rng.normal(size=(12, 1))
    query = np.array([0.3, -0.1])

    variances = []
    for n in range(13):
        model = GPModel(
            inputs=inputs[:n].reshape(n, 2),
            targets=targets[:n].reshape(n, 1),
            length_scales=np.array([1.0, 0.7]),
            signal_variance=1.5,
            noise_variance=0.1,
            mean=0.0,
        )
        variances.append(gp_predict(model, query).variances[0])

    assert all(later <= earlier + 1e-12 for earlier, later in zip(variances, variances[1:]))
    assert variances[0] == pytest.approx(1.6)


def test_sample_next_moments():
    """10⁵ розыгрышей из N(0, 1): выборочные среднее и дисперсия"""
    pred = PredictiveDist.gaussian([0.0], [1.0])
    rng = np.random.default_rng(0)

    draws = np.array([sample_next(pred, rng)[0] for _ in range(100_000)])

    assert draws.mean() == pytest.approx(0.0, abs=0.01)
    assert draws.var() == pytest.approx(1.0, abs=0.02)


def test_sample_next_degenerate_and_empirical():
    tight = PredictiveDist.gaussian([0.7], [1e-18])
    assert sample_next(tight, 1)[0] == pytest.approx(0.7, abs=1e-6)

    single = PredictiveDist.empirical(np.array([[1.0, 2.0]]))
    assert np.array_equal(sample_next(single, 9), [1.0, 2.0])


def test_log_likelihood_peaks_at_mean():
    """Диагональная гауссиана: максимум лог-правдоподобия в средних"""
    pred = PredictiveDist.gaussian([0.01, -0.3], [5e-4, 0.2])
    peak = log_likelihood(pred, pred.means)
    rng = np.random.default_rng(2)

    for _ in range(50):
        assert log_likelihood(pred, pred.means + rng.normal(scale=0.05, size=2)) < peak
    assert log_likelihood(PredictiveDist.gaussian([0.0], [1.0]), [0.0]) == pytest.approx(-0.5 * math.log(2 * math.pi))
