import math
import numpy as np
import pytest
from conftest import make_record
from lemmanamer.constants import BOS, EOS, PAD, SPECIAL_TOKENS, UNDERSCORE, UNK
from lemmanamer.errors import ConfigError, ReferenceTooLong
from lemmanamer.model import ModelLossLayer, NamingModel, model_shapes
from lemmanamer.nnet import grad_check
from lemmanamer.vocab import Vocab, build_vocab


def commutativity(name, op, ty="nat"):
    return make_record(
        name, ["forall", "m", "n", ":", ty, ",", "m", op, "n", "=", "n", op, "m"]
    )


def unit_law(name, op, unit):
    return make_record(
        name, ["forall", "n", ":", "nat", ",", "n", op, unit, "=", "n"]
    )


@pytest.fixture
def records():
    return [
        commutativity("addnC", "+"),
        commutativity("mulnC", "*"),
        unit_law("addn0", "+", "0"),
        unit_law("muln_eq", "*", "1"),
    ]


def greedy(model, record):
    """Greedy decoding under the same bans as the beam."""
    prefix = []
    emitted = set()
    for _ in range(model.config.max_decode_len):
        probs, texts = model.next_token_distribution(record, prefix)
        scores = np.log(np.maximum(probs, 1e-300))
        scores[[PAD, BOS, UNK]] = -np.inf
        for i, text in enumerate(texts):
            if text in emitted:
                scores[i] = -np.inf
        best = int(np.argmax(scores))
        if best == EOS:
            break
        prefix.append(texts[best])
        if texts[best] != UNDERSCORE:
            emitted.add(texts[best])
    return prefix


class TestParameters:
    def test_shapes(self, tiny_config):
        shapes = model_shapes(tiny_config("ln-s+bsexpl1+attn+copy"), 11, 9)
        assert shapes["src_embedding"] == (11, 8)
        assert shapes["tgt_embedding"] == (9, 8)
        assert shapes["enc.s.l0.fwd.W_x"] == (24, 8)
        assert shapes["fuse.l0.W_h"] == (6, 24)
        assert shapes["attn.W_a"] == (6, 12)
        assert shapes["attn.W_c"] == (6, 18)
        assert shapes["copy.w_ctx"] == (12,)
        assert shapes["out.W"] == (9, 6)

    def test_optional_parameters(self, tiny_config):
        assert "copy.b" not in model_shapes(tiny_config("ln-s+attn"), 5, 5)
        assert "attn.W_c" not in model_shapes(tiny_config("ln-s"), 5, 5)
        dot = model_shapes(tiny_config("ln-s+attn", attention_score="dot"), 5, 5)
        assert "attn.W_a" not in dot
        deep = model_shapes(tiny_config("ln-s", num_layers=2), 5, 5)
        assert deep["dec.l1.W_x"] == (24, 6)
        assert deep["enc.s.l1.fwd.W_x"] == (24, 12)

    def test_mismatched_parameters(self, records, tiny_model):
        model = tiny_model(records)
        params = dict(model.params)
        del params["copy.b"]
        with pytest.raises(ConfigError):
            NamingModel(model.config, params, model.name_vocab, model.input_vocab)


class TestLoss:
    def test_uniform_output_gives_log_vocab(self, records, tiny_model):
        model = tiny_model(records, name="ln-s")
        model.params["out.W"][:] = 0
        model.params["out.b"][:] = 0
        loss = model.forward_loss(records[0])
        assert loss == pytest.approx(math.log(len(model.name_vocab)))

    def test_gradients_cover_parameters(self, records, tiny_model):
        model = tiny_model(records)
        result = model.loss_and_grads(records[:2])
        assert set(result.grads) == set(model.params)
        for name, grad in result.grads.items():
            assert grad.shape == model.params[name].shape
        assert result.decoder_inputs[0, 0] == BOS

    def test_decoder_reads_the_shifted_reference(self, records, tiny_model):
        model = tiny_model(records, name="ln-s")
        result = model.loss_and_grads([records[0]])
        expected = model.name_vocab.encode(["add", "n"])
        assert list(result.decoder_inputs[0]) == [BOS, *expected]

    @pytest.mark.parametrize(
        "name, overrides",
        [
            ("ln-s+bsexpl1+attn+copy", {}),
            ("ln-s+attn", {"attention_score": "dot"}),
            ("ln-s+bsexpl1", {"num_layers": 2}),
        ],
    )
    def test_gradient_check(self, records, tiny_model, name, overrides):
        model = tiny_model(records, name=name, **overrides)
        layer = ModelLossLayer(model, [model.example(r) for r in records[:2]])
        assert grad_check(layer, {}, sample_size=15) < 1e-4

    def test_reference_too_long(self, records, tiny_model):
        model = tiny_model(records, max_decode_len=4)
        with pytest.raises(ReferenceTooLong):
            model.forward_loss(records[3])
        assert not model.fits(model.example(records[3]))
        assert model.fits(model.example(records[0]))


class TestCopy:
    def test_unseen_input_subtoken_is_reachable(self, records, tiny_model):
        model = tiny_model(records)
        unseen = commutativity("qwxC", "+", ty="qwx")
        assert "qwx" not in model.name_vocab
        probs, texts = model.next_token_distribution(unseen)
        assert "qwx" in texts
        assert texts.index("qwx") >= len(model.name_vocab)
        assert probs[texts.index("qwx")] > 0
        assert probs.sum() == pytest.approx(1.0)

    def test_without_copy_only_vocabulary(self, records, tiny_model):
        model = tiny_model(records, name="ln-s+bsexpl1+attn")
        probs, texts = model.next_token_distribution(
            commutativity("qwxC", "+", ty="qwx")
        )
        assert "qwx" not in texts
        assert len(texts) == len(probs) == len(model.name_vocab)

    def test_oov_target_is_scored_through_copy(self, records, tiny_model):
        model = tiny_model(records)
        unseen = commutativity("qwxC", "+", ty="qwx")
        assert np.isfinite(model.forward_loss(unseen))


class TestDecoding:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_beam_of_one_is_greedy(self, records, tiny_model, seed):
        model = tiny_model(records, seed=seed)
        for record in records:
            (best,) = model.beam_search(record, beam_size=1)
            assert list(best.subtokens) == greedy(model, record)

    @pytest.mark.parametrize("seed", range(5))
    def test_no_repeated_subtokens(self, records, tiny_model, seed):
        model = tiny_model(records, seed=seed)
        for record in records:
            for hypothesis in model.beam_search(record):
                words = [t for t in hypothesis.subtokens if t != UNDERSCORE]
                assert len(words) == len(set(words))
                assert not set(hypothesis.subtokens) & set(SPECIAL_TOKENS)

    def test_ranking(self, records, tiny_model):
        model = tiny_model(records, seed=3)
        hypotheses = model.beam_search(records[0], beam_size=5)
        assert 1 <= len(hypotheses) <= 5
        scores = [h.log_prob for h in hypotheses]
        assert scores == sorted(scores, reverse=True)
        finished = [h for h in hypotheses if h.finished]
        assert all(h.token_ids[-1] == EOS for h in finished)

    def test_suggest(self, records, tiny_model):
        model = tiny_model(records, seed=4)
        suggestions = model.suggest(records[1], k=3)
        names = [name for name, _ in suggestions]
        assert len(names) == len(set(names))
        assert suggestions == model.suggest(records[1], k=3)

    def test_eos_first_gives_empty_name(self, records, tiny_model):
        model = tiny_model(records, name="ln-s+bsexpl1+attn", seed=0)
        model.params["out.b"][EOS] = 50.0
        (best,) = model.beam_search(records[0], beam_size=1)
        assert best.finished
        assert best.token_ids == (EOS,)
        assert best.name == ""
        assert model.suggest(records[0], k=1)[0][0] == ""

    def test_specials_only_vocabulary(self, records, tiny_config):
        config = tiny_config("ln-s+bsexpl1+attn")
        _, input_vocab = build_vocab(records, config.inputs)
        model = NamingModel.create(config, Vocab(), input_vocab, seed=0)
        hypotheses = model.beam_search(records[0])
        assert hypotheses
        assert hypotheses[0].name == ""
