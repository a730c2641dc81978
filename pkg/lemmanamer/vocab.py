from collections import Counter
from typing import Dict, Iterable, List, Optional, Sequence, Tuple
from .constants import SPECIAL_TOKENS, UNK
from .corpus import LemmaRecord
from .errors import EmptyTrainSet
from .features import InputKind, Preprocessor


class Vocab:
    """Bidirectional sub-token to id map.

    Ids 0 to 3 are the special tokens PAD, BOS, EOS and UNK; corpus tokens
    follow in the given order. Tokens spelled like a special are dropped.

    Args:
        tokens (iterable of str): Corpus tokens in id order.
    """

    def __init__(self, tokens: Iterable[str] = ()) -> None:
        self._tokens = list(SPECIAL_TOKENS)  # type: List[str]
        self._ids = {token: i for i, token in enumerate(self._tokens)}
        for token in tokens:
            if token not in self._ids:
                self._ids[token] = len(self._tokens)
                self._tokens.append(token)

    @classmethod
    def from_counts(cls, counts: Counter, max_size: Optional[int] = None) -> "Vocab":
        """Most frequent first, ties in text order."""
        ranked = sorted(
            (token for token in counts if token not in SPECIAL_TOKENS),
            key=lambda token: (-counts[token], token),
        )
        if max_size is not None:
            ranked = ranked[:max_size]
        return cls(ranked)

    def __len__(self) -> int:
        return len(self._tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self._tokens == other._tokens

    def id_of(self, token: str) -> int:
        return self._ids.get(token, UNK)

    def token_of(self, index: int) -> str:
        return self._tokens[index]

    def encode(self, tokens: Sequence[str]) -> List[int]:
        return [self.id_of(token) for token in tokens]

    @property
    def tokens(self) -> List[str]:
        """Corpus tokens in id order, specials excluded."""
        return self._tokens[len(SPECIAL_TOKENS) :]

    @property
    def texts(self) -> List[str]:
        """Text of every id, specials included."""
        return list(self._tokens)

    def to_json(self) -> List[str]:
        return self.tokens

    @classmethod
    def from_json(cls, tokens: Sequence[str]) -> "Vocab":
        return cls(tokens)


def build_vocab(
    train_records: Sequence[LemmaRecord],
    input_kinds: Sequence[InputKind],
    preprocessor: Optional[Preprocessor] = None,
) -> Tuple[Vocab, Vocab]:
    """Name and input vocabularies over the training records.

    The input vocabulary is shared by every configured input kind.

    Raises:
        EmptyTrainSet: No training records.
    """
    if not train_records:
        raise EmptyTrainSet("cannot build a vocabulary without training records")
    preprocessor = preprocessor or Preprocessor()

    names = Counter()  # type: Dict[str, int]
    inputs = Counter()  # type: Dict[str, int]
    for record in train_records:
        names.update(preprocessor.target(record))
        for kind in input_kinds:
            inputs.update(preprocessor.input_sequence(record, kind))
    return Vocab.from_counts(names), Vocab.from_counts(inputs)
