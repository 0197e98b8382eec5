import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from feddc.aggregation import (
    RadonConfig,
    aggregate,
    geometric_median,
    iterated_radon,
    radon_number,
    radon_point,
    radon_points,
)
from feddc.errors import ConfigError, ContractViolation
from feddc.learners import Model
from feddc.params import linear_combine

from .geometry import tukey_depth_upper

seeds = st.integers(0, 2**32 - 1)


def general_position(rng, d):
    return rng.normal(size=(radon_number(d), d))


def test_hand_solved_1d():
    point, cert = radon_point([[0.0], [1.0], [10.0]])
    # sum(lam) = 0 and sum(lam * p) = 0 give lam = (-0.9, 1, -0.1) up to scale
    assert np.allclose(cert.lam, [-0.9, 1.0, -0.1], atol=1e-12)
    assert abs(point[0] - 1.0) <= 1e-9
    idx, w = cert.part_weights("negative")
    assert abs(w @ np.array([0.0, 1.0, 10.0])[idx] - 1.0) <= 1e-9


def test_square_corners():
    point, _ = radon_point([[0, 0], [2, 0], [0, 2], [2, 2]])
    assert np.allclose(point, [1, 1], atol=1e-12)


def test_identical_points():
    p = np.array([0.3, -1.7, 2.0])
    point, cert = radon_point([p] * 5)
    assert np.array_equal(point, p)
    assert len(cert.positive_part) and len(cert.negative_part)


def test_wrong_count():
    with pytest.raises(ContractViolation):
        radon_point(np.zeros((3, 2)))
    with pytest.raises(ContractViolation):
        iterated_radon(np.zeros((10, 1)), 2)
    with pytest.raises(ContractViolation):
        radon_point([[0.0], [np.inf], [1.0]])


def test_degenerate_configurations_are_resolved():
    # collinear points in 2-D and a duplicate pair: nullspace dimension > 1
    for pts in ([[0, 0], [1, 1], [2, 2], [3, 3]], [[0, 0], [0, 0], [1, 0], [0, 1]]):
        point, cert = radon_point(pts)
        P = np.array(pts, dtype=float)
        assert abs(cert.lam.sum()) < 1e-9 and np.linalg.norm(cert.lam @ P) < 1e-9
        for part in ("positive", "negative"):
            idx, w = cert.part_weights(part)
            assert np.allclose(w @ P[idx], point, atol=1e-9)


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 6))
def test_certificate(seed, d):
    rng = np.random.default_rng(seed)
    P = general_position(rng, d)
    point, cert = radon_point(P)
    assert np.max(np.abs(cert.lam)) == pytest.approx(1.0)
    assert abs(cert.lam.sum()) <= 1e-8
    assert np.linalg.norm(cert.lam @ P) <= 1e-8
    combos = []
    for part in ("positive", "negative"):
        idx, w = cert.part_weights(part)
        assert len(idx) and np.all(w >= 0) and w.sum() == pytest.approx(1.0)
        combos.append(w @ P[idx])
    assert np.max(np.abs(combos[0] - combos[1])) <= 1e-6
    assert np.max(np.abs(combos[0] - point)) <= 1e-6


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 5))
def test_affine_equivariance(seed, d):
    rng = np.random.default_rng(seed)
    P = general_position(rng, d)
    A = rng.normal(size=(d, d)) + 3 * np.eye(d)
    b = rng.normal(size=d)
    lhs, _ = radon_point(P @ A.T + b)
    rhs = A @ radon_point(P)[0] + b
    assert np.max(np.abs(lhs - rhs)) <= 1e-6


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 6))
def test_permutation_invariance(seed, d):
    rng = np.random.default_rng(seed)
    P = general_position(rng, d)
    perm = rng.permutation(len(P))
    assert np.max(np.abs(radon_point(P)[0] - radon_point(P[perm])[0])) <= 1e-8


@pytest.mark.parametrize("d", [1, 2, 3])
def test_tukey_depth_at_least_two(d):
    rng = np.random.default_rng(100 + d)
    violations = 0
    for _ in range(200):
        P = general_position(rng, d)
        q, _ = radon_point(P)
        violations += tukey_depth_upper(P, q, rng) < 2
    assert violations == 0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3, unique=True))
def test_1d_radon_point_is_median(vals):
    point, _ = radon_point(np.array(vals)[:, None])
    # near-coincident pairs push a coefficient under the zero tolerance, which
    # moves the answer by about tolerance * spread
    spread = max(vals) - min(vals)
    assert abs(point[0] - np.median(vals)) <= 1e-8 * spread


def test_iterated_h2_composes_hand_case():
    triples = [[0.0, 1.0, 10.0], [5.0, -2.0, 3.0], [7.0, 8.0, 6.5]]
    pts = np.array([v for t in triples for v in t])[:, None]
    # each inner Radon point of 3 reals is its middle value: 1, 3, 7 -> outer 3
    assert iterated_radon(pts, 2)[0] == pytest.approx(3.0, abs=1e-9)


def test_iterated_h1_equals_radon_point():
    rng = np.random.default_rng(0)
    P = general_position(rng, 4)
    assert np.array_equal(iterated_radon(P, 1), radon_point(P)[0])


def test_iterated_copies():
    p = np.array([1.5, -2.0])
    assert np.array_equal(iterated_radon(np.tile(p, (16, 1)), 2), p)


def test_batched_matches_single():
    rng = np.random.default_rng(5)
    blocks = rng.normal(size=(20, 5, 3))
    batched = radon_points(blocks)
    for b, out in zip(blocks, batched):
        assert np.array_equal(out, radon_point(b)[0])


def test_geometric_median_examples():
    p = np.array([2.0, -1.0])
    assert np.array_equal(geometric_median([p]).point, p)
    sq = geometric_median([[0, 0], [1, 0], [0, 1], [1, 1]])
    assert np.allclose(sq.point, [0.5, 0.5], atol=1e-9) and sq.converged


def test_geometric_median_grid_oracle():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    g = np.arange(0.0, 1.0 + 1e-9, 1e-3)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    obj = sum(np.hypot(gx - a, gy - b) for a, b in pts)
    i, j = np.unravel_index(np.argmin(obj), obj.shape)
    res = geometric_median(pts)
    assert res.converged
    assert np.all(np.abs(res.point - [g[i], g[j]]) <= 2e-3)


def test_geometric_median_at_input_point():
    # the median is the input point (0,0); iterates approach it and need the nudge
    pts = [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
    res = geometric_median(pts, max_iter=5000)
    assert np.allclose(res.point, [0, 0], atol=1e-6)


def test_geometric_median_reports_non_convergence():
    rng = np.random.default_rng(0)
    res = geometric_median(rng.normal(size=(30, 4)), tol=0.0, max_iter=3)
    assert not res.converged and res.iterations == 3


def _model(p):
    return Model(np.asarray(p, dtype=float), "linear", (len(p) - 1, 1))


@pytest.mark.parametrize("method", ["mean", "iterated_radon", "geometric_median"])
def test_aggregate_identical_models(method):
    m = _model([0.25, -1.0, 3.0])
    out = aggregate([m] * 25, method, RadonConfig(h=2) if method == "iterated_radon" else None)
    assert np.array_equal(out.params, m.params) and out.shape_key == m.shape_key


def test_aggregate_counts_and_shapes():
    rng = np.random.default_rng(0)
    models = [_model(rng.normal(size=2)) for _ in range(17)]
    assert aggregate(models[:16], "iterated_radon", RadonConfig(h=2)).params.shape == (2,)
    with pytest.raises(ContractViolation):
        aggregate(models, "iterated_radon", RadonConfig(h=2))
    with pytest.raises(ContractViolation):
        aggregate([models[0], _model([1.0, 2.0, 3.0])], "mean")
    with pytest.raises(ContractViolation):
        aggregate([], "mean")
    with pytest.raises(ContractViolation):
        aggregate(models, "median-of-means")


def test_aggregate_mean_is_uniform_linear_combine():
    rng = np.random.default_rng(1)
    models = [_model(rng.normal(size=5)) for _ in range(7)]
    expect = linear_combine([m.params for m in models], [1 / 7] * 7)
    assert np.array_equal(aggregate(models, "mean").params, expect)


def test_radon_config_validation():
    for bad in (RadonConfig(h=0), RadonConfig(zero_tolerance=0.0), RadonConfig(zero_tolerance=0.01)):
        with pytest.raises(ConfigError):
            bad.validate()
