from collections import Counter
import pytest
from lemmanamer.constants import BOS, EOS, PAD, SPECIAL_TOKENS, UNK
from lemmanamer.errors import EmptyTrainSet
from lemmanamer.features import InputKind
from lemmanamer.vocab import Vocab, build_vocab


class TestVocab:
    def test_specials_come_first(self):
        vocab = Vocab(["add", "n", "<s>", "add"])
        assert [vocab.token_of(i) for i in (PAD, BOS, EOS, UNK)] == list(SPECIAL_TOKENS)
        assert vocab.tokens == ["add", "n"]
        assert vocab.texts == [*SPECIAL_TOKENS, "add", "n"]
        assert len(vocab) == 6

    def test_unknown_tokens(self):
        vocab = Vocab(["add"])
        assert vocab.encode(["add", "mul"]) == [4, UNK]
        assert "mul" not in vocab

    def test_frequency_order(self):
        counts = Counter({"n": 3, "add": 3, "C": 5, "r": 1})
        assert Vocab.from_counts(counts).tokens == ["C", "add", "n", "r"]
        assert Vocab.from_counts(counts, max_size=2).tokens == ["C", "add"]

    def test_json_form(self):
        vocab = Vocab(["add", "n", "C"])
        assert Vocab.from_json(vocab.to_json()) == vocab


class TestBuildVocab:
    def test_shared_input_vocabulary(self, synthetic_records):
        kinds = [InputKind.STMT, InputKind.TRIMMED_KTREE]
        name_vocab, input_vocab = build_vocab(synthetic_records, kinds)
        assert "C" in name_vocab
        assert "+" in input_vocab
        assert "Prod" in input_vocab
        assert "Prod" not in name_vocab

    def test_empty(self):
        with pytest.raises(EmptyTrainSet):
            build_vocab([], [InputKind.STMT])
