import numpy as np
import pytest
from scipy.special import softmax
from lemmanamer.errors import DimensionMismatch, EmptySequence
from lemmanamer.nnet import (
    AffineLayer,
    AttentionCopyLayer,
    AttentionLayer,
    BiLstmLayer,
    CopyGateLayer,
    EmbeddingLayer,
    FusionLayer,
    LstmCellLayer,
    _reversal_index,
    attend,
    bilstm_encode,
    copy_distribution,
    dot_score_matrix,
    fuse,
    grad_check,
    init_params,
)

TOLERANCE = 1e-4


@pytest.fixture
def rng():
    return np.random.default_rng(5)


class TestInit:
    def test_seeded_uniform(self):
        shapes = {"a": (3, 4), "b": (5,)}
        first = init_params(shapes, seed=9)
        second = init_params(shapes, seed=9)
        for name in shapes:
            np.testing.assert_array_equal(first[name], second[name])
            assert first[name].dtype == np.float32
            assert np.all(np.abs(first[name]) <= 0.1)


class TestGradients:
    def test_embedding(self, rng):
        layer = EmbeddingLayer(vocab_size=7, dim=4)
        ids = np.array([[1, 3, 3], [6, 0, 1]])
        assert grad_check(layer, {"ids": ids}) < TOLERANCE

    def test_affine(self, rng):
        layer = AffineLayer(in_dim=5, out_dim=3)
        assert grad_check(layer, {"x": rng.standard_normal((4, 5))}) < TOLERANCE

    def test_lstm_cell(self, rng):
        layer = LstmCellLayer(in_dim=4, hidden=3)
        inputs = {
            "x": rng.standard_normal((2, 4)),
            "h": rng.standard_normal((2, 3)),
            "c": rng.standard_normal((2, 3)),
            "mask": np.array([1.0, 0.0]),
        }
        assert grad_check(layer, inputs) < TOLERANCE

    def test_bilstm(self, rng):
        layer = BiLstmLayer(in_dim=3, hidden=2, num_layers=2, dropout=0.3)
        mask = np.array([[1.0, 1.0, 1.0, 1.0], [1.0, 1.0, 0.0, 0.0]])
        inputs = {"xs": rng.standard_normal((2, 4, 3)), "mask": mask}
        assert grad_check(layer, inputs) < TOLERANCE

    def test_fusion(self, rng):
        layer = FusionLayer(widths=[4, 6], hidden=3)
        inputs = {
            "h0": rng.standard_normal((2, 4)),
            "c0": rng.standard_normal((2, 4)),
            "h1": rng.standard_normal((2, 6)),
            "c1": rng.standard_normal((2, 6)),
        }
        assert grad_check(layer, inputs) < TOLERANCE

    def test_attention(self, rng):
        layer = AttentionLayer(hidden=3, enc_dim=6)
        mask = np.ones((2, 5))
        mask[1, 3:] = 0
        inputs = {
            "h": rng.standard_normal((2, 3)),
            "enc": rng.standard_normal((2, 5, 6)),
            "mask": mask,
        }
        assert grad_check(layer, inputs) < TOLERANCE

    def test_copy_gate(self, rng):
        layer = CopyGateLayer(enc_dim=6, hidden=3, emb_dim=4)
        inputs = {
            "ctx": rng.standard_normal((2, 6)),
            "h": rng.standard_normal((2, 3)),
            "x": rng.standard_normal((2, 4)),
        }
        assert grad_check(layer, inputs) < TOLERANCE

    def test_decoder_output_step(self, rng):
        layer = AttentionCopyLayer(
            hidden=3, enc_dim=6, emb_dim=4, vocab=5, ext_size=7
        )
        mask = np.ones((2, 4))
        mask[0, 3] = 0
        inputs = {
            "h": rng.standard_normal((2, 3)),
            "x": rng.standard_normal((2, 4)),
            "enc": rng.standard_normal((2, 4, 6)),
            "mask": mask,
            "src_ids": np.array([[4, 5, 5, 0], [6, 2, 4, 5]]),
        }
        assert grad_check(layer, inputs) < TOLERANCE


class TestEncoder:
    def test_reversal_index(self):
        mask = np.array([[1, 1, 1, 0], [1, 0, 0, 0]])
        index = _reversal_index(mask)
        np.testing.assert_array_equal(index, [[2, 1, 0, 3], [0, 1, 2, 3]])

    def test_padding_does_not_change_states(self, rng):
        params = BiLstmLayer(in_dim=3, hidden=2).params
        xs = rng.standard_normal((1, 3, 3))
        padded = np.concatenate([xs, rng.standard_normal((1, 2, 3))], axis=1)
        mask = np.array([[1.0, 1.0, 1.0, 0.0, 0.0]])
        out, (h, c) = bilstm_encode(xs, params, "enc.l0")
        out_padded, (h_padded, c_padded) = bilstm_encode(
            padded, params, "enc.l0", mask
        )
        np.testing.assert_allclose(out_padded[:, :3], out)
        np.testing.assert_allclose(h_padded, h)
        np.testing.assert_allclose(c_padded, c)

    def test_empty_sequence(self):
        params = BiLstmLayer(in_dim=3, hidden=2).params
        with pytest.raises(EmptySequence):
            bilstm_encode(np.zeros((1, 0, 3)), params, "enc.l0")


class TestFusion:
    def test_batch_mismatch(self):
        params = FusionLayer(widths=[2, 2], hidden=2).params
        finals = [
            (np.zeros((1, 2)), np.zeros((1, 2))),
            (np.zeros((2, 2)), np.zeros((2, 2))),
        ]
        with pytest.raises(DimensionMismatch):
            fuse(finals, params, "fuse")

    def test_no_encoder(self):
        params = FusionLayer(widths=[2], hidden=2).params
        with pytest.raises(DimensionMismatch):
            fuse([], params, "fuse")


class TestAttention:
    def test_masked_positions_get_no_weight(self, rng):
        mask = np.array([[1.0, 1.0, 0.0]])
        context, weights = attend(
            rng.standard_normal((1, 2)), rng.standard_normal((1, 3, 4)),
            rng.standard_normal((2, 4)), mask,
        )  # fmt: skip
        assert weights[0, 2] == 0.0
        assert weights.sum() == pytest.approx(1.0)

    def test_dot_score_matrix(self):
        np.testing.assert_array_equal(
            dot_score_matrix(2, 4, np.float64), [[1, 0, 1, 0], [0, 1, 0, 1]]
        )
        with pytest.raises(DimensionMismatch):
            dot_score_matrix(2, 3, np.float64)


class TestCopyDistribution:
    def test_without_gate_is_padded_softmax(self, rng):
        logits = rng.standard_normal((2, 4))
        probs, _ = copy_distribution(logits, None, None, None, ext_size=6)
        np.testing.assert_allclose(probs[:, :4], softmax(logits, axis=1))
        assert np.all(probs[:, 4:] == 0)

    def test_mixture_puts_copy_mass_on_inputs(self, rng):
        logits = rng.standard_normal((1, 4))
        attention = np.array([[0.5, 0.25, 0.25]])
        probs, _ = copy_distribution(
            logits, np.array([0.6]), attention, np.array([[5, 2, 5]]), ext_size=6
        )
        assert probs.sum() == pytest.approx(1.0)
        assert probs[0, 5] == pytest.approx(0.4 * 0.75)
        assert probs[0, 4] == 0.0
        expected = 0.6 * softmax(logits, axis=1)[0, 2] + 0.4 * 0.25
        assert probs[0, 2] == pytest.approx(expected)
