"""Adam update rule, checkpoint container, and the gradient-check harness."""

import numpy as np
import pytest

from swingkit.errors import FormatError, NumericError, ShapeError
from swingkit.nn import (Adam, ParameterStore, Tensor, adam_step, grad_check,
                         load_checkpoint, save_checkpoint)


def store_with(w):
    return ParameterStore({"w": Tensor(np.asarray(w, dtype=np.float64), requires_grad=True)})


def test_zero_gradient_leaves_parameters_unchanged():
    store = store_with([1.0, -2.0, 3.0])
    before = store["w"].data.copy()
    adam_step(store, {"w": np.zeros(3)}, lr=0.1)
    np.testing.assert_array_equal(store["w"].data, before)


def test_first_step_is_signed_lr():
    # with |g| >> eps, the bias-corrected first update is -lr * sign(g)
    store = store_with([0.0, 0.0])
    adam_step(store, {"w": np.array([250.0, -3.0])}, lr=0.01)
    np.testing.assert_allclose(store["w"].data, [-0.01, 0.01], rtol=1e-6)


def test_two_steps_descend_quadratic():
    # f(w) = w^2 from w=1: two updates strictly decrease f
    store = store_with([1.0])
    values = [1.0]
    for _ in range(2):
        w = store["w"].data[0]
        adam_step(store, {"w": np.array([2.0 * w])}, lr=0.05)
        values.append(float(store["w"].data[0] ** 2))
    assert values[1] < values[0]
    assert values[2] < values[1]


def test_decoupled_weight_decay_shrinks_without_gradient_path():
    store = store_with([4.0])
    adam_step(store, {"w": np.zeros(1)}, lr=0.1, weight_decay=0.5)
    # moments stay zero, so only the decay term acts: w -= lr*wd*w
    np.testing.assert_allclose(store["w"].data, [4.0 - 0.1 * 0.5 * 4.0])


def test_nonfinite_gradient_names_parameter():
    store = store_with([1.0])
    with pytest.raises(NumericError, match="w"):
        adam_step(store, {"w": np.array([np.nan])}, lr=0.1)


def test_gradient_shape_mismatch():
    store = store_with([1.0, 2.0])
    with pytest.raises(ShapeError, match="w"):
        adam_step(store, {"w": np.zeros(3)}, lr=0.1)


def test_adam_class_converges_on_quadratic():
    w = Tensor(np.array([3.0]), requires_grad=True)
    opt = Adam({"w": w}, lr=0.1)
    for _ in range(200):
        opt.zero_grad()
        loss = (w * w).sum()
        loss.backward()
        opt.step()
    assert abs(w.data[0]) < 0.05


def test_adam_lr_scales_groups():
    w1 = Tensor(np.array([1.0]), requires_grad=True)
    w2 = Tensor(np.array([1.0]), requires_grad=True)
    opt = Adam({"head": w1, "backbone": w2}, lr=0.1, lr_scales={"backbone": 0.1})
    w1.grad = np.array([100.0])
    w2.grad = np.array([100.0])
    opt.step()
    assert abs(1.0 - w1.data[0]) == pytest.approx(0.1, rel=1e-5)
    assert abs(1.0 - w2.data[0]) == pytest.approx(0.01, rel=1e-5)


def test_grad_check_quadratic_tiny_error():
    x = Tensor(np.array([3.0]), requires_grad=True)
    report = grad_check(lambda: (x * x).sum(), {"x": x})
    assert report.per_param["x"] < 1e-8
    assert report.worst.analytic == pytest.approx(6.0)


def test_grad_check_linear_mse_under_1e6():
    rng = np.random.default_rng(8)
    w = Tensor(rng.normal(size=(6, 3)), requires_grad=True)
    b = Tensor(rng.normal(size=(3,)), requires_grad=True)
    x = rng.normal(size=(10, 6))
    y = rng.normal(size=(10, 3))

    def loss():
        pred = Tensor(x) @ w + b
        d = pred - y
        return (d * d).mean()

    report = grad_check(loss, {"w": w, "b": b}, h=1e-5)
    assert report.max_rel_error < 1e-6, report.summary()


def test_grad_check_marks_unverifiable_on_nan():
    x = Tensor(np.array([1e-6]), requires_grad=True)

    def loss():
        return x.log()  # perturbing below zero makes log produce nan

    report = grad_check(loss, {"x": x}, h=1e-5)
    assert ("x", 0) in report.unverifiable


def test_checkpoint_round_trip(tmp_path):
    arrays = {
        "enc.weight": np.random.default_rng(0).normal(size=(4, 5)).astype(np.float32),
        "enc.bias": np.arange(5, dtype=np.float64),
        "codes": np.arange(12, dtype=np.uint16).reshape(3, 4),
    }
    save_checkpoint(tmp_path / "ckpt", arrays, meta={"kind": "test"})
    loaded, meta = load_checkpoint(tmp_path / "ckpt")
    assert meta == {"kind": "test"}
    assert set(loaded) == set(arrays)
    for name in arrays:
        np.testing.assert_array_equal(loaded[name], arrays[name])
        assert loaded[name].dtype == arrays[name].dtype


def test_checkpoint_missing_blob_is_format_error(tmp_path):
    save_checkpoint(tmp_path / "c", {"w": np.zeros(3, dtype=np.float32)})
    (tmp_path / "c" / "p0000.bin").unlink()
    with pytest.raises(FormatError, match="p0000.bin"):
        load_checkpoint(tmp_path / "c")
