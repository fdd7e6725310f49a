import numpy as np
import pytest

from pauckit.model import (
    KINDS, ModelParams, ShapeError, backward, forward, init_params, load_checkpoint,
    n_params, save_checkpoint,
)
from pauckit.verify import backward_error


def test_zero_linear_scores_half():
    p = ModelParams("linear", np.zeros(4), (3,))
    np.testing.assert_array_equal(forward(p, np.random.default_rng(0).normal(size=(5, 3))), 0.5)


def test_linear_saturates_monotonically():
    p = ModelParams("linear", np.array([1.0, 0.0]), (1,))
    s = forward(p, np.linspace(0, 1e3, 200)[:, None])
    assert np.all(np.diff(s) >= 0) and s[-1] < 1.0 and s[-1] > 1 - 1e-12


def test_scores_strictly_inside_unit_interval():
    rng = np.random.default_rng(1)
    for kind in KINDS:
        p = init_params(kind, 4, hidden=5, seed=2)
        p.weights[:] = rng.normal(0, 50, p.weights.size)
        s = forward(p, rng.uniform(-1e3, 1e3, (500, 4)))
        assert np.all((s > 0) & (s < 1))


def test_forward_pure():
    p = init_params("mlp1", 3, seed=4)
    X = np.random.default_rng(0).normal(size=(6, 3))
    w = p.weights.copy()
    assert forward(p, X).tobytes() == forward(p, X).tobytes()
    backward(p, X, np.ones(6))
    np.testing.assert_array_equal(p.weights, w)


def test_mlp_formula():
    p = init_params("mlp1", 2, hidden=3, seed=9)
    p.weights[:] = np.random.default_rng(3).normal(size=p.weights.size)
    W1, c1, W2, c2 = p.weights[:6].reshape(3, 2), p.weights[6:9], p.weights[9:12], p.weights[12]
    x = np.array([0.3, -1.2])
    expected = 1.0 / (1.0 + np.exp(-(W2 @ np.tanh(W1 @ x + c1) + c2)))
    assert forward(p, x[None])[0] == pytest.approx(expected, rel=1e-14)


def test_zero_upstream_gives_zero_gradient():
    for kind in KINDS:
        p = init_params(kind, 3, seed=1)
        np.testing.assert_array_equal(backward(p, np.ones((2, 3)), np.zeros(2)), 0.0)


def test_bias_gradient_is_logistic_derivative():
    p = ModelParams("linear", np.array([0.7, -0.2]), (1,))
    x = np.array([[1.3]])
    s = forward(p, x)[0]
    assert backward(p, x, np.ones(1))[-1] == pytest.approx(s * (1 - s), rel=1e-15)


@pytest.mark.parametrize("kind", KINDS)
def test_backward_matches_finite_differences(kind):
    rng = np.random.default_rng(12)
    for _ in range(20):
        d = int(rng.integers(1, 11))
        p = init_params(kind, d, hidden=4, seed=int(rng.integers(1000)))
        p.weights[:] = rng.normal(0, 0.5, p.weights.size)
        X = rng.normal(size=(5, d))
        assert backward_error(p, X, rng.normal(size=5)) <= 1e-6


def test_shape_errors():
    p = init_params("linear", 3)
    with pytest.raises(ShapeError):
        forward(p, np.zeros((2, 4)))
    with pytest.raises(ShapeError):
        backward(p, np.zeros((2, 3)), np.zeros(3))
    with pytest.raises(ShapeError):
        ModelParams("linear", np.zeros(3), (3,))


def test_init_convention():
    p = init_params("mlp1", 4, hidden=6, seed=0)
    assert p.weights.size == n_params("mlp1", (4, 6))
    assert np.all(np.abs(p.weights[:24]) <= 0.5)
    np.testing.assert_array_equal(p.weights[24:30], 0.0)
    assert p.weights[-1] == 0.0
    assert init_params("mlp1", 4, hidden=6, seed=0).weights.tobytes() == p.weights.tobytes()


@pytest.mark.parametrize("kind", KINDS)
def test_checkpoint_roundtrip(tmp_path, kind):
    p = init_params(kind, 3, hidden=2, seed=5)
    p.weights[:] = np.random.default_rng(0).normal(size=p.weights.size) / 3.0
    save_checkpoint(p, tmp_path / "m.json")
    q = load_checkpoint(tmp_path / "m.json")
    assert q.kind == p.kind and q.layout == p.layout
    assert q.weights.tobytes() == p.weights.tobytes()
