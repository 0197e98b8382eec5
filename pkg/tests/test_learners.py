import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feddc.datagen import Dataset
from feddc.errors import ConfigError, ContractViolation
from feddc.learners import (
    LearnerSpec,
    Model,
    accuracy,
    batch_loss,
    empirical_risk,
    gradient,
    init_model,
    local_step,
    predict,
)
from feddc.rng import stream

from .gradcheck import check_instance, kink_free, numeric_gradient, random_instance

LIN = LearnerSpec(family="linear", learning_rate=0.5, batch_size=4)
MLP = LearnerSpec(family="mlp", hidden=(6, 4), learning_rate=0.05, batch_size=4)


def _data(rng, n=12, dim=3):
    return Dataset(rng.normal(size=(n, dim)), rng.integers(0, 2, size=n))


def test_zero_linear_model_scores_half():
    m = Model(np.zeros(3), "linear", (2, 1))
    cls, score = predict(m, [5.0, -3.0])
    assert score == 0.5 and cls == 1


def test_saturated_linear_prediction():
    m = Model(np.array([1.0, 0.0, 0.0]), "linear", (2, 1))
    cls, score = predict(m, [100.0, 0.0])
    assert cls == 1 and score == pytest.approx(1.0)


def test_zero_mlp_is_constant():
    spec = LearnerSpec(family="mlp", hidden=(5, 3))
    m = init_model(spec, 4, stream(0, "t"))
    m = m.with_params(np.zeros_like(m.params))
    _, scores = predict(m, np.random.default_rng(1).normal(size=(20, 4)))
    assert np.all(scores == scores[0])


def test_predict_dim_mismatch():
    m = Model(np.zeros(3), "linear", (2, 1))
    with pytest.raises(ContractViolation):
        predict(m, [1.0, 2.0, 3.0])


def test_mlp_layout_and_init():
    spec = LearnerSpec(family="mlp", hidden=(100, 50, 20))
    m = init_model(spec, 100, stream(0, "t"))
    assert m.layer_sizes == (100, 100, 50, 20, 1)
    assert m.params.size == 100 * 100 + 100 + 100 * 50 + 50 + 50 * 20 + 20 + 20 + 1
    lin = init_model(LearnerSpec(), 7, stream(0, "t"))
    assert lin.params.size == 8 and not lin.params.any()
    assert init_model(LearnerSpec(bias=False), 7, stream(0, "t")).params.size == 7


def test_prox_zero_matches_plain_step():
    rng = np.random.default_rng(0)
    data = _data(rng)
    for spec in (LIN, MLP):
        m = init_model(spec, 3, stream(1, "t"))
        anchor = m.with_params(rng.normal(size=m.params.size))
        a = local_step(m, data, spec, anchor, stream(5, "c"))
        b = local_step(m, data, spec, None, stream(5, "c"))
        assert np.array_equal(a.params, b.params)


def test_prox_term_pulls_toward_anchor():
    rng = np.random.default_rng(0)
    data = _data(rng)
    spec = LearnerSpec(family="linear", learning_rate=0.1, prox_mu=1.0)
    m = Model(np.zeros(4), "linear", (3, 1))
    anchor = np.full(4, 10.0)
    with_anchor = local_step(m, data, spec, anchor, stream(5, "c"))
    without = local_step(m, data, spec, None, stream(5, "c"))
    assert np.allclose(with_anchor.params - without.params, 0.1 * 1.0 * anchor)


def test_zero_learning_rate_is_identity():
    rng = np.random.default_rng(0)
    spec = LearnerSpec(family="linear", learning_rate=0.0)
    m = Model(rng.normal(size=4), "linear", (3, 1))
    assert local_step(m, _data(rng), spec, None, stream(0, "c")) is m


def test_step_moves_against_finite_difference_gradient():
    x = np.array([[0.7, -1.2]])
    y = np.array([1])
    m = Model(np.array([0.3, 0.1, -0.2]), "linear", (2, 1))
    spec = LearnerSpec(family="linear", learning_rate=0.25, batch_size=1)
    g_fd = numeric_gradient(m, x, y)
    new = local_step(m, Dataset(x, y), spec, None, stream(0, "c"))
    assert np.allclose(new.params, m.params - 0.25 * g_fd, atol=1e-9)


def test_step_is_deterministic_and_keeps_dim():
    rng = np.random.default_rng(2)
    data = _data(rng)
    m = init_model(MLP, 3, stream(0, "i"))
    a = local_step(m, data, MLP, None, stream(9, "c"))
    b = local_step(m, data, MLP, None, stream(9, "c"))
    assert np.array_equal(a.params, b.params) and a.params.size == m.params.size


def test_batch_drawn_without_replacement():
    # batch larger than the shard: every sample used exactly once
    data = Dataset(np.array([[1.0], [2.0], [3.0]]), [1, 0, 1])
    spec = LearnerSpec(family="linear", learning_rate=1.0, batch_size=10)
    m = Model(np.zeros(2), "linear", (1, 1))
    out = local_step(m, data, spec, None, stream(0, "c"))
    assert np.allclose(out.params, -gradient(m, data))


def test_empty_shard_and_batch():
    m = Model(np.zeros(2), "linear", (1, 1))
    empty = Dataset(np.zeros((0, 1)), np.zeros(0))
    with pytest.raises(ContractViolation):
        local_step(m, empty, LIN, None, stream(0, "c"))
    with pytest.raises(ContractViolation):
        gradient(m, empty)
    with pytest.raises(ContractViolation):
        accuracy(m, empty)
    with pytest.raises(ContractViolation):
        empirical_risk(m, empty)


def test_duplicated_batch_same_gradient():
    rng = np.random.default_rng(3)
    m = init_model(MLP, 3, stream(0, "i"))
    x, y = rng.normal(size=(1, 3)), np.array([1])
    assert np.allclose(gradient(m, (x, y)), gradient(m, (np.vstack([x, x]), np.array([1, 1]))), rtol=1e-13, atol=0)


def test_saturated_gradient_is_tiny():
    X = np.array([[3.0, 0.0], [-3.0, 0.0], [4.0, 1.0]])
    y = np.array([1, 0, 1])
    m = Model(np.array([10.0, 0.0, 0.0]), "linear", (2, 1))
    assert accuracy(m, Dataset(X, y)) == 1.0
    assert np.linalg.norm(gradient(m, (X, y))) < 1e-3


def test_empirical_risk_examples():
    X = np.array([[1.0], [-1.0], [2.0]])
    y = np.array([1, 0, 1])
    perfect = Model(np.array([1.0, 0.0]), "linear", (1, 1))
    assert empirical_risk(perfect, Dataset(X, y)) == 0.0
    zero = Model(np.zeros(2), "linear", (1, 1))
    assert empirical_risk(zero, Dataset(X, y), "logistic") == pytest.approx(math.log(2), abs=1e-15)


def test_accuracy_examples():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(200, 3))
    w = np.array([1.0, -2.0, 0.5, 0.0])
    m = Model(w, "linear", (3, 1))
    y = (X @ w[:3] >= 0).astype(int)
    assert accuracy(m, Dataset(X, y)) == 1.0
    noisy = Dataset(X, rng.integers(0, 2, 200))
    flipped = m.with_params(-w)
    # no sample sits exactly on the boundary, so the complement is exact
    assert accuracy(flipped, noisy) == 1.0 - accuracy(m, noisy)
    balanced = Dataset(X, np.arange(200) % 2)
    assert abs(accuracy(Model(np.zeros(4), "linear", (3, 1)), balanced) - 0.5) <= 1 / 200


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_accuracy_plus_risk_is_one(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 40))
    data = Dataset(rng.normal(size=(n, 3)), rng.integers(0, 2, n))
    m = Model(rng.normal(size=4), "linear", (3, 1))
    assert accuracy(m, data) + empirical_risk(m, data) == 1.0
    assert 0.0 <= empirical_risk(m, data) <= 1.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["linear", "mlp"]))
def test_gradient_matches_finite_differences(seed, family):
    rng = np.random.default_rng(seed)
    model, X, y, spec, anchor = random_instance(rng, family)
    if not kink_free(model, X):
        return
    assert check_instance(model, X, y, spec, anchor) < 1e-4


def test_spec_validation():
    for bad in (
        LearnerSpec(family="tree"),
        LearnerSpec(learning_rate=-1),
        LearnerSpec(batch_size=0),
        LearnerSpec(prox_mu=-0.1),
        LearnerSpec(family="mlp", hidden=()),
        LearnerSpec(decay_factor=0.0),
    ):
        with pytest.raises(ConfigError):
            bad.validate()


def test_step_decay():
    spec = LearnerSpec(learning_rate=0.1, decay_factor=0.5, decay_every=2500)
    assert spec.learning_rate_at(0) == 0.1
    assert spec.learning_rate_at(2499) == 0.1
    assert spec.learning_rate_at(2500) == 0.05
    assert spec.learning_rate_at(7500) == 0.0125


def test_loss_with_model_anchor():
    m = Model(np.array([1.0, 2.0]), "linear", (1, 1))
    spec = LearnerSpec(prox_mu=2.0)
    X, y = np.array([[0.0]]), np.array([1])
    base = batch_loss(m, X, y)
    assert batch_loss(m, X, y, spec, m.with_params(np.zeros(2))) == pytest.approx(base + 5.0)
