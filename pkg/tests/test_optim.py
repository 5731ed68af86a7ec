import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kgddi.optim import (
    OPTIMIZERS,
    GradCheckError,
    Optimizer,
    derive_seed,
    grad_check,
    make_optimizer,
    rng_stream,
)


@pytest.mark.parametrize("kind", OPTIMIZERS)
def test_zero_gradient_leaves_parameters(kind, rng):
    params = {"w": rng.normal(size=(3, 2))}
    before = params["w"].copy()
    opt = make_optimizer(kind, lr=0.1)
    for _ in range(5):
        opt.step(params, {"w": np.zeros((3, 2))})
    assert np.array_equal(params["w"], before)
    assert opt.t == 5


def test_sgd_hand_value():
    params = {"w": np.array([1.0])}
    Optimizer("sgd", lr=0.1).step(params, {"w": np.array([2.0])})
    assert params["w"][0] == pytest.approx(0.8)


@given(st.floats(-100, 100).filter(lambda g: abs(g) > 1e-3), st.floats(1e-4, 1.0))
def test_first_adam_step_has_magnitude_lr(g, lr):
    params = {"w": np.array([0.0])}
    Optimizer("adam", lr=lr).step(params, {"w": np.array([g])})
    assert params["w"][0] == pytest.approx(-lr * np.sign(g), rel=1e-5)


@pytest.mark.parametrize("kind", OPTIMIZERS)
def test_every_kind_minimises_a_quadratic(kind):
    params = {"w": np.array([3.0, -2.0])}
    # adagrad's accumulated denominator needs a larger base rate
    opt = Optimizer(kind, lr=1.0 if kind == "adagrad" else 0.05)
    for _ in range(2000):
        opt.step(params, {"w": 2 * params["w"]})
    assert np.abs(params["w"]).max() < 0.1


def test_buffers_match_parameter_shapes(rng):
    opt = Optimizer("adam")
    opt.step({"a": rng.normal(size=(4, 3))}, {"a": rng.normal(size=(4, 3))})
    assert all(b.shape == (4, 3) for b in opt.state["a"])


def test_shape_mismatch():
    with pytest.raises(ValueError):
        Optimizer("sgd").step({"w": np.zeros(3)}, {"w": np.zeros(2)})


def test_unknown_kind():
    with pytest.raises(ValueError):
        Optimizer("lbfgs")


def test_rng_stream_reproducible_million_draws():
    assert np.array_equal(rng_stream(7, 3).random(1_000_000), rng_stream(7, 3).random(1_000_000))


def test_rng_streams_are_distinct():
    assert not np.array_equal(rng_stream(7, 3).random(8), rng_stream(7, 4).random(8))
    assert not np.array_equal(rng_stream(7, 3).random(8), rng_stream(8, 3).random(8))


def test_derive_seed_is_stable():
    assert derive_seed(0, "synth") == derive_seed(0, "synth")
    assert derive_seed(0, "synth") != derive_seed(0, "folds")
    assert 0 <= derive_seed(2**40, "x") < 2**63


class TestGradCheck:
    def test_quadratic_exact(self):
        w = {"w": np.array([1.0, 2.0])}
        report = grad_check(lambda: float(w["w"] @ w["w"]), w, {"w": np.array([2.0, 4.0])})
        assert report.passed and report.max_rel_error < 1e-8
        assert report.n_checked == 2

    def test_negative_control(self):
        w = {"w": np.array([1.0, 2.0])}
        report = grad_check(lambda: float(w["w"] @ w["w"]), w, {"w": np.array([2.0, 0.0])})
        assert not report.passed
        assert report.max_rel_error == pytest.approx(1.0, abs=1e-6)
        assert report.worst_param == "w" and report.worst_index == (1,)

    def test_parameters_restored(self, rng):
        w = {"w": rng.normal(size=5)}
        before = w["w"].copy()
        grad_check(lambda: float((w["w"] ** 3).sum()), w, {"w": 3 * w["w"] ** 2})
        assert np.array_equal(w["w"], before)

    def test_non_finite_loss(self):
        w = {"w": np.array([0.0])}
        with pytest.raises(GradCheckError):
            grad_check(lambda: w["w"][0] if w["w"][0] > 0 else float("nan"), w, {"w": np.array([1.0])})

    def test_sampled_coordinates(self, rng):
        w = {"w": rng.normal(size=(10, 10))}
        report = grad_check(lambda: float((w["w"] ** 2).sum()), w, {"w": 2 * w["w"]}, max_per_param=7)
        assert report.n_checked == 7 and report.passed
