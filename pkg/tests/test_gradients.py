"""Finite-difference checks of the hand-written backward passes."""

import unittest
from typing import Callable, Dict

import numpy as np

from lstm_trading_lab.anomaly import LstmAutoencoder
from lstm_trading_lab.neural import (
    DropoutSpec,
    LstmLayer,
    LstmParams,
    LstmRegressor,
    Network,
    loss_and_gradient,
    lstm_cell_backward,
    lstm_cell_forward,
)

STEP = 1e-5
REL_TOL = 1e-4
ABS_TOL = 1e-8


def numeric_gradient(loss: Callable[[], float], value: np.ndarray) -> np.ndarray:
    grad = np.zeros_like(value)
    for index in np.ndindex(value.shape):
        original = value[index]
        value[index] = original + STEP
        upper = loss()
        value[index] = original - STEP
        lower = loss()
        value[index] = original
        grad[index] = (upper - lower) / (2.0 * STEP)
    return grad


class GradientCheckMixin:
    def check_network(self, model: Network, inputs: np.ndarray, targets: np.ndarray) -> None:
        def loss() -> float:
            output, _ = model.forward(inputs)
            return loss_and_gradient("mse", output, targets)[0]

        output, cache = model.forward(inputs)
        _, upstream = loss_and_gradient("mse", output, targets)
        analytic: Dict[str, np.ndarray] = model.backward(cache, upstream)
        params = model.parameters()
        self.assertEqual(sorted(analytic), sorted(params))  # type: ignore[attr-defined]
        for name, value in params.items():
            numeric = numeric_gradient(loss, value)
            diff = np.abs(analytic[name] - numeric)
            bound = REL_TOL * np.maximum(np.abs(analytic[name]), np.abs(numeric)) + ABS_TOL
            worst = float(np.max(diff - bound))
            self.assertLessEqual(worst, 0.0, msg=f"gradient mismatch in {name}")  # type: ignore[attr-defined]


class RegressorGradientTests(GradientCheckMixin, unittest.TestCase):
    def test_two_layer_regressor(self) -> None:
        rng = np.random.default_rng(0)
        model = LstmRegressor(5, (4, 4), DropoutSpec(0.0), rng)
        inputs = rng.random((3, 5))
        targets = rng.random(3)
        self.check_network(model, inputs, targets)

    def test_zero_upstream_gives_zero_gradients(self) -> None:
        model = LstmRegressor(5, (4, 4), DropoutSpec(0.0), np.random.default_rng(1))
        _, cache = model.forward(np.random.default_rng(2).random((3, 5)))
        for grad in model.backward(cache, np.zeros(3)).values():
            np.testing.assert_array_equal(grad, np.zeros_like(grad))


class AutoencoderGradientTests(GradientCheckMixin, unittest.TestCase):
    def test_encoder_decoder_stack(self) -> None:
        rng = np.random.default_rng(3)
        model = LstmAutoencoder(5, (4, 3), DropoutSpec(0.0), rng)
        inputs = rng.random((3, 5))
        self.check_network(model, inputs, inputs.copy())


class LayerLocalityTests(unittest.TestCase):
    def test_untouched_sample_gets_no_gradient(self) -> None:
        rng = np.random.default_rng(4)
        layer = LstmLayer(LstmParams.initialize(1, 4, rng))
        inputs = rng.random((2, 6, 1))
        _, cache = layer.forward(inputs)
        upstream = np.zeros((2, 6, 4))
        upstream[0] = rng.normal(size=(6, 4))
        d_inputs, _ = layer.backward(cache, upstream)
        np.testing.assert_array_equal(d_inputs[1], np.zeros((6, 1)))
        self.assertTrue(np.any(d_inputs[0] != 0.0))

    def test_later_steps_do_not_affect_earlier_inputs(self) -> None:
        rng = np.random.default_rng(5)
        layer = LstmLayer(LstmParams.initialize(1, 3, rng))
        _, cache = layer.forward(rng.random((1, 5, 1)))
        upstream = np.zeros((1, 5, 3))
        upstream[0, 1] = 1.0
        d_inputs, _ = layer.backward(cache, upstream)
        np.testing.assert_array_equal(d_inputs[0, 2:], np.zeros((3, 1)))


class CellGradientTests(unittest.TestCase):
    def test_single_step_matches_finite_differences(self) -> None:
        rng = np.random.default_rng(6)
        params = LstmParams.initialize(2, 3, rng)
        x = rng.normal(size=(2, 2))
        h_prev = rng.normal(size=(2, 3))
        c_prev = rng.normal(size=(2, 3))
        dh = rng.normal(size=(2, 3))
        dc = rng.normal(size=(2, 3))

        def loss() -> float:
            h, c, _ = lstm_cell_forward(params, x, h_prev, c_prev)
            return float(np.sum(h * dh) + np.sum(c * dc))

        _, _, cache = lstm_cell_forward(params, x, h_prev, c_prev)
        dx, dh_prev, dc_prev, grads = lstm_cell_backward(params, cache, dh, dc)
        analytic = {
            "x": (dx, x),
            "h_prev": (dh_prev, h_prev),
            "c_prev": (dc_prev, c_prev),
            "W": (grads.W, params.W),
            "U": (grads.U, params.U),
            "b": (grads.b, params.b),
        }
        for name, (grad, value) in analytic.items():
            numeric = numeric_gradient(loss, value)
            np.testing.assert_allclose(grad, numeric, rtol=REL_TOL, atol=1e-7, err_msg=name)
