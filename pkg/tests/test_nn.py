"""Numerical kernels: hand-computed oracles, gradient checks, training loop."""

import math

import numpy as np
import pytest

from mirank import Item, ModelConfig, QueryRecord, TrainConfig
from mirank.core import MirankError, make_rng
from mirank.nn.common import PROB_EPS, cross_entropy, cross_entropy_batch, glorot_uniform, relu, sigmoid
from mirank.nn.gradcheck import gradient_check, relative_error
from mirank.nn.lstm import lstm_step, lstm_step_batch
from mirank.nn.mlp import mlp_forward, mlp_forward_batch
from mirank.nn.optim import AdamState, adam_step
from mirank.nn.recurrent import sequence_forward
from mirank.nn.train import TrainingDiverged, init_blocks, train


def _sig(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


class TestActivationsAndLoss:
    def test_sigmoid_values(self):
        assert sigmoid(0.0) == 0.5
        assert abs(sigmoid(2.0) - _sig(2.0)) < 1e-15

    def test_relu(self):
        assert np.array_equal(relu(np.array([-1.0, 0.0, 2.0])), [0.0, 0.0, 2.0])

    def test_cross_entropy_half_is_ln2(self):
        assert abs(cross_entropy(0.5, 1) - math.log(2.0)) < 1e-12
        assert abs(cross_entropy(0.5, 0) - math.log(2.0)) < 1e-12

    def test_cross_entropy_clamps_extremes(self):
        assert math.isfinite(cross_entropy(0.0, 1))
        assert math.isfinite(cross_entropy(1.0, 0))
        assert abs(cross_entropy(0.0, 1) + math.log(PROB_EPS)) < 1e-9

    def test_batch_matches_sum_of_singles(self, rng):
        preds = rng.uniform(0.01, 0.99, size=10)
        labels = rng.integers(0, 2, size=10)
        total = sum(cross_entropy(p, y) for p, y in zip(preds, labels))
        assert abs(cross_entropy_batch(preds, labels) - total) < 1e-12


def test_glorot_bounds():
    w = glorot_uniform(make_rng(0), (30, 20))
    limit = math.sqrt(6.0 / 50.0)
    assert np.all(np.abs(w) <= limit)
    assert w.std() > 0


class TestMlp:
    def _tiny_params(self):
        return {
            "W1": np.array([[1.0, 0.0], [0.0, 1.0]]),
            "b1": np.array([0.5, -0.5]),
            "W_out": np.array([[2.0, -1.0]]),
            "b_out": np.array([0.25]),
        }

    def test_forward_hand_computed(self):
        # h = relu([2 + 0.5, -3 - 0.5]) = [2.5, 0]; logit = 2 * 2.5 + 0.25
        prob = mlp_forward(self._tiny_params(), np.array([2.0, -3.0]))
        assert abs(prob - _sig(5.25)) < 1e-12

    def test_batch_matches_single(self, rng):
        params = init_blocks("midnn", ModelConfig(d=3, hidden_sizes=(4, 3)), rng)
        x = rng.standard_normal((6, 6))
        probs, _ = mlp_forward_batch(params, x)
        for row, expected in zip(x, probs):
            assert abs(mlp_forward(params, row) - expected) < 1e-12

    def test_rejects_wrong_input_dim(self):
        with pytest.raises(ValueError, match="input dimension"):
            mlp_forward_batch(self._tiny_params(), np.zeros((2, 3)))


class TestLstm:
    def _tiny_params(self):
        return {
            "Wx": np.array([[0.5], [-0.3], [0.8], [1.2]]),
            "Wh": np.array([[0.1], [0.2], [-0.1], [0.4]]),
            "b": np.array([0.05, 1.0, -0.2, 0.3]),
            "w_out": np.array([0.7]),
        }

    def test_step_hand_computed(self):
        x, h0, c0 = 0.7, 0.2, -0.4
        i = _sig(0.5 * x + 0.1 * h0 + 0.05)
        f = _sig(-0.3 * x + 0.2 * h0 + 1.0)
        o = _sig(0.8 * x - 0.1 * h0 - 0.2)
        g = math.tanh(1.2 * x + 0.4 * h0 + 0.3)
        c1 = f * c0 + i * g
        h1 = o * math.tanh(c1)
        h_new, c_new = lstm_step(self._tiny_params(), np.array([h0]), np.array([c0]), np.array([x]))
        assert abs(h_new[0] - h1) < 1e-12
        assert abs(c_new[0] - c1) < 1e-12

    def test_batch_broadcasts_shared_state(self, rng):
        params = self._tiny_params()
        xs = rng.standard_normal((4, 1))
        h0, c0 = np.array([0.3]), np.array([-0.1])
        h_batch, c_batch, _ = lstm_step_batch(params, h0, c0, xs)
        for row in range(4):
            h_one, c_one = lstm_step(params, h0, c0, xs[row])
            assert np.allclose(h_batch[row], h_one, atol=1e-14)
            assert np.allclose(c_batch[row], c_one, atol=1e-14)


class TestAdam:
    def test_two_steps_hand_computed(self):
        blocks = {"w": np.array([1.0])}
        state = AdamState()
        lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8

        w, m, v = 1.0, 0.0, 0.0
        for grad in (0.5, -0.25):
            adam_step(blocks, {"w": np.array([grad])}, state, lr, b1, b2)
            m = b1 * m + (1 - b1) * grad
            v = b2 * v + (1 - b2) * grad**2
            m_hat = m / (1 - b1**state.t)
            v_hat = v / (1 - b2**state.t)
            w -= lr * m_hat / (math.sqrt(v_hat) + eps)
            assert abs(blocks["w"][0] - w) < 1e-12


class TestGradientCheck:
    def test_midnn_gradients(self, rng):
        config = ModelConfig(d=2, hidden_sizes=(3, 2))
        x = rng.standard_normal((5, 4))
        labels = rng.integers(0, 2, size=5)
        report = gradient_check("midnn", config, x, labels, seed=0)
        assert report.passes(1e-4), report.block_errors

    def test_mirnn_gradients(self, rng):
        config = ModelConfig(d=2, lstm_hidden=4)
        x = rng.standard_normal((2, 5, 4))
        labels = rng.integers(0, 2, size=(2, 5))
        report = gradient_check("mirnn", config, x, labels, seed=1)
        assert report.passes(1e-4), report.block_errors

    def test_attention_gradients(self, rng):
        config = ModelConfig(d=2, lstm_hidden=3, attn_size=3, pos_size=2, max_positions=6)
        x = rng.standard_normal((2, 4, 4))
        labels = rng.integers(0, 2, size=(2, 4))
        report = gradient_check("mirnn_attention", config, x, labels, seed=2)
        assert report.passes(1e-4), report.block_errors

    def test_relative_error_symmetry(self):
        assert relative_error(1.0, 1.0) == 0.0
        assert relative_error(0.0, 0.0) == 0.0
        assert relative_error(2.0, 1.0) == 0.5


class TestSequenceForward:
    def test_zero_score_weights_give_uniform_attention(self, rng):
        config = ModelConfig(d=2, lstm_hidden=4, attn_size=3, pos_size=2, max_positions=8)
        blocks = init_blocks("mirnn_attention", config, rng)
        blocks["w_g"][:] = 0.0
        _, caches = sequence_forward(blocks, rng.standard_normal((2, 5, 4)))
        for t in range(1, 5):
            assert np.allclose(caches["alphas"][t], 1.0 / t)

    def test_attention_rows_sum_to_one(self, rng):
        config = ModelConfig(d=2, lstm_hidden=4, attn_size=3, pos_size=2, max_positions=8)
        blocks = init_blocks("mirnn_attention", config, rng)
        _, caches = sequence_forward(blocks, rng.standard_normal((3, 6, 4)))
        for t in range(1, 6):
            assert np.allclose(caches["alphas"][t].sum(axis=1), 1.0)

    def test_positions_beyond_embedding_table_clamp(self, rng):
        config = ModelConfig(d=2, lstm_hidden=3, attn_size=3, pos_size=2, max_positions=3)
        blocks = init_blocks("mirnn_attention", config, rng)
        probs, _ = sequence_forward(blocks, rng.standard_normal((1, 7, 4)))
        assert np.all(np.isfinite(probs))


def _tiny_records(n_records, length, d, seed):
    rng = make_rng(seed)
    records = []
    for q in range(n_records):
        items = tuple(
            Item(id=i, price=float(rng.uniform(1, 10)), local_features=rng.standard_normal(d))
            for i in range(length)
        )
        labels = tuple(int(b) for b in rng.integers(0, 2, size=length))
        if not any(labels):
            labels = (1,) + labels[1:]
        records.append(QueryRecord(f"q{q}", items, labels))
    return records


class TestTrain:
    def test_loss_decreases_and_is_deterministic(self):
        records = _tiny_records(30, 6, 3, seed=5)
        config = ModelConfig(d=3, hidden_sizes=(8, 4))
        params_a, curve_a = train("midnn", records, config, TrainConfig(epochs=4), seed=9)
        params_b, curve_b = train("midnn", records, config, TrainConfig(epochs=4), seed=9)
        assert curve_a[-1] < curve_a[0]
        assert curve_a == curve_b
        for name in params_a.blocks:
            assert np.array_equal(params_a.blocks[name], params_b.blocks[name])

    def test_recurrent_variants_train(self):
        records = _tiny_records(20, 5, 3, seed=6)
        config = ModelConfig(d=3, lstm_hidden=6, attn_size=4, pos_size=2, max_positions=8)
        for variant in ("mirnn", "mirnn_attention"):
            params, curve = train(variant, records, config, TrainConfig(epochs=3), seed=4)
            assert params.variant == variant
            assert curve[-1] < curve[0]

    def test_empty_dataset_rejected(self):
        with pytest.raises(MirankError):
            train("midnn", [], ModelConfig(d=3), TrainConfig(), seed=0)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_non_finite_input_raises_diverged(self):
        bad = QueryRecord(
            "q0",
            (
                Item(0, 1.0, np.array([np.inf, -np.inf])),
                Item(1, 1.0, np.array([0.0, 1.0])),
            ),
            (1, 0),
        )
        with pytest.raises(TrainingDiverged):
            train("midnn", [bad], ModelConfig(d=2, hidden_sizes=(3,)), TrainConfig(epochs=1), seed=0)
