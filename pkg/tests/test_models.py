"""Layer stacks, baselines, losses, optimizers."""

import numpy as np
import pytest

from quadenhance import autograd as ag
from quadenhance.enhancer import BandLambda, QELayer, qe_forward
from quadenhance.errors import ConfigError, DimensionError, NumericError
from quadenhance.models import (MLP, MLPConfig, Adam, QuadraNetLayer, SGD,
                                SwiGLULayer, matched_hidden_width, mse)
from quadenhance.rng import Rng


class TestMLPConfig:
    def test_needs_two_dims(self):
        with pytest.raises(ConfigError):
            MLPConfig(layer_dims=(4,))

    def test_mask_length_checked(self):
        with pytest.raises(ConfigError):
            MLPConfig(layer_dims=(4, 3, 2), enhancer=(True,))

    def test_unknown_activation(self):
        with pytest.raises(ConfigError):
            MLPConfig(layer_dims=(4, 2), activation="tanh")

    def test_exempt_final(self):
        cfg = MLPConfig(layer_dims=(4, 3, 2), exempt_final=True)
        assert cfg.mask() == (True, False)

    def test_default_mask_all_on(self):
        assert MLPConfig(layer_dims=(4, 3, 2)).mask() == (True, True)

    def test_plain_variant(self):
        assert MLPConfig(layer_dims=(4, 3, 2)).plain().mask() == (False, False)


class TestMLPForward:
    def test_single_layer_identity_is_linear(self):
        cfg = MLPConfig(layer_dims=(3, 2), activation="identity", seed=4)
        model = MLP(cfg)
        x = Rng(5).uniform(3, -1, 1)
        layer = model.layers[0]
        np.testing.assert_allclose(model.forward(x), layer.W @ x + layer.b, atol=1e-14)

    def test_zero_input_zero_bias_relu_gives_zero_logits(self):
        cfg = MLPConfig(layer_dims=(4, 5, 3), activation="relu", seed=1)
        model = MLP(cfg)
        out = model.forward(np.zeros((2, 4)))
        np.testing.assert_array_equal(out, np.zeros((2, 3)))

    def test_two_hidden_layer_gradcheck(self):
        cfg = MLPConfig(layer_dims=(3, 4, 4, 2), activation="gelu", seed=9)
        model = MLP(cfg)
        params = model.parameters()
        rng = Rng(10)
        for j, name in enumerate(sorted(params)):
            if "lam[" in name:
                params[name][:] = rng.split(j).uniform(params[name].size, -0.5, 0.5)
        x = rng.split(50).uniform(6, -1, 1).reshape(2, 3)
        labels = np.array([0, 1])

        def f(tape, bound):
            return ag.cross_entropy(model.apply(tape, bound, tape.const(x)), labels)

        report = ag.gradcheck(f, params, step=1e-6, tol=1e-4)
        assert report.passed, report.lines()

    def test_parameter_roundtrip(self):
        model = MLP(MLPConfig(layer_dims=(3, 4, 2), seed=0))
        params = {k: v + 1.0 for k, v in model.parameters().items()}
        model.load_parameters(params)
        for k, v in model.parameters().items():
            np.testing.assert_array_equal(v, params[k])


class TestZeroLambdaEquivalence:
    """Enhanced stack with zero couplings == plain stack, bit for bit."""

    def _pair(self, seed=23):
        cfg = MLPConfig(layer_dims=(4, 6, 3), activation="gelu", seed=seed)
        return MLP(cfg), MLP(cfg.plain())

    def test_outputs_bitwise(self):
        qe, plain = self._pair()
        x = Rng(24).uniform(12, -1, 1).reshape(3, 4)
        assert qe.forward(x).tobytes() == plain.forward(x).tobytes()

    def test_loss_and_wb_gradients_bitwise(self):
        qe, plain = self._pair()
        x = Rng(25).uniform(12, -1, 1).reshape(3, 4)
        labels = np.array([0, 2, 1])

        def loss_and_grads(model):
            tape = ag.Tape()
            bound = model.bind(tape)
            loss = ag.cross_entropy(model.apply(tape, bound, tape.const(x)), labels)
            grads = tape.backward(loss)
            return loss.value, {k: grads[v.node_id] for k, v in bound.items()}

        l1, g1 = loss_and_grads(qe)
        l2, g2 = loss_and_grads(plain)
        assert l1.tobytes() == l2.tobytes()
        for name, g in g2.items():
            assert g1[name].tobytes() == g.tobytes(), name


class TestBaselines:
    def test_quadranet_wa_zero_reduces_to_linear(self):
        layer = QuadraNetLayer(3, 2, seed=5)
        layer.Wa = np.zeros_like(layer.Wa)
        x = Rng(6).uniform(3, -1, 1)
        np.testing.assert_allclose(layer.forward(x), layer.Wc @ x, atol=1e-14)

    def test_swiglu_zero_at_origin(self):
        layer = SwiGLULayer(4, 3, seed=7)
        np.testing.assert_array_equal(layer.forward(np.zeros(4)), np.zeros(3))

    @pytest.mark.parametrize("kind", ["quadranet", "swiglu"])
    def test_gradcheck(self, kind):
        layer = (QuadraNetLayer(3, 4, seed=8, bias=True) if kind == "quadranet"
                 else SwiGLULayer(3, 4, seed=8))
        rng = Rng(9)
        x = rng.uniform(3, 0.3, 1.0)
        u = rng.split(1).uniform(4, 0.5, 1.0)

        def f(tape, bound):
            out = layer.apply(tape, bound, tape.const(x))
            return ag.reduce_sum(ag.hadamard(out, tape.const(u)))

        report = ag.gradcheck(f, layer.parameters(), step=1e-6, tol=1e-4)
        assert report.passed, report.lines()

    def test_quadranet_param_count(self):
        layer = QuadraNetLayer(5, 3, seed=0, bias=True)
        assert sum(v.size for v in layer.parameters().values()) == 3 * 5 * 3 + 3
        no_bias = QuadraNetLayer(5, 3, seed=0, bias=False)
        assert sum(v.size for v in no_bias.parameters().values()) == 3 * 5 * 3

    def test_batch_forward(self):
        layer = SwiGLULayer(3, 2, seed=1)
        xb = Rng(2).uniform(6, -1, 1).reshape(2, 3)
        out = layer.forward(xb)
        for i in range(2):
            np.testing.assert_array_equal(out[i], layer.forward(xb[i]))


class TestLossesAndOptimizers:
    def test_mse_of_identical_is_zero(self):
        tape = ag.Tape()
        x = tape.const(np.array([1.0, 2.0]))
        assert float(mse(x, np.array([1.0, 2.0])).value) == 0.0

    def test_mse_hand_value(self):
        tape = ag.Tape()
        pred = tape.const(np.array([1.0, 3.0]))
        # squared errors 1 and 1 -> mean 1
        assert float(mse(pred, np.array([0.0, 4.0])).value) == 1.0

    def test_mse_shape_mismatch(self):
        tape = ag.Tape()
        with pytest.raises(DimensionError):
            mse(tape.const(np.zeros(2)), np.zeros(3))

    def test_sgd_hand_step(self):
        opt = SGD(lr=0.1)
        out = opt.step({"w": np.array([1.0])}, {"w": np.array([2.0])})
        np.testing.assert_allclose(out["w"], [0.8])

    def test_sgd_rejects_nonpositive_lr(self):
        with pytest.raises(ConfigError):
            SGD(lr=0.0)

    def test_adam_first_step_is_unit_normalized(self):
        opt = Adam(lr=1e-3)
        out = opt.step({"w": np.array([1.0])}, {"w": np.array([1.0])})
        assert abs(float(out["w"][0]) - (1.0 - 1e-3)) < 1e-9

    def test_adam_state_carries(self):
        opt = Adam(lr=0.1)
        params = {"w": np.array([1.0])}
        for _ in range(3):
            params = opt.step(params, {"w": np.array([1.0])})
        assert opt._t == 3
        assert params["w"][0] < 1.0 - 2 * 0.09

    def test_nonfinite_gradient_names_parameter(self):
        opt = SGD(lr=0.1)
        with pytest.raises(NumericError, match="spikes"):
            opt.step({"spikes": np.ones(2)}, {"spikes": np.array([1.0, np.nan])})

    def test_adam_hyperparameter_validation(self):
        with pytest.raises(ConfigError):
            Adam(lr=0.1, beta1=1.0)
        with pytest.raises(ConfigError):
            Adam(lr=0.1, eps=0.0)


class TestParameterCounts:
    def test_counts_match_structure(self):
        cfg = MLPConfig(layer_dims=(4, 8, 8, 2), shifts=(1,), seed=0)
        model = MLP(cfg)
        plain = MLP(cfg.plain())
        n_model = sum(v.size for v in model.parameters().values())
        n_plain = sum(v.size for v in plain.parameters().values())
        # per layer: n*d + d, plus k*d for each enhanced layer
        assert n_plain == (4 * 8 + 8) + (8 * 8 + 8) + (8 * 2 + 2)
        assert n_model - n_plain == 8 + 8 + 2

    def test_matched_hidden_width(self):
        count = lambda w: 3 * 4 * w          # quadranet-style layer over n=4
        assert matched_hidden_width(count, target=3 * 4 * 7 + 5) == 7
        assert matched_hidden_width(count, target=3 * 4 * 7) == 7
        with pytest.raises(ConfigError):
            matched_hidden_width(count, target=1)


class TestExpressiveness:
    def test_explicit_cross_term_solves_xor_signs(self):
        """A hand-built enhanced layer separates the XOR corners, which no
        affine map can do (checked exhaustively elsewhere)."""
        lam = BandLambda(d=2, shifts=(1,), values={1: np.array([0.0, 4.0])})
        layer = QELayer(W=np.eye(2), b=np.zeros(2), lam=lam)
        pts = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
        want = (pts[:, 0] * pts[:, 1] > 0).astype(int)
        z = np.array([qe_forward(layer, p) for p in pts])
        got = (z[:, 1] > z[:, 0]).astype(int)
        np.testing.assert_array_equal(got, want)
