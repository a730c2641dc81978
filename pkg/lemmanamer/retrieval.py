"""Nearest-neighbour name retrieval over tf-idf vectors of lemma statements.

Names are only ever copied from training lemmas: the retriever cannot
invent a name it has not seen.
"""

import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
import numpy as np
from scipy.sparse import csr_matrix
from sklearn.feature_extraction.text import TfidfVectorizer
from sklearn.preprocessing import normalize
from .constants import TOP_K
from .corpus import LemmaRecord
from .errors import EmptyTrainSet
from .subtokenizer import Lexicon, default_lexicon, subtokenize_statement
from .utils import _read_text


def _identity(tokens: List[str]) -> List[str]:
    return tokens


def statement_terms(
    record: LemmaRecord, subtokenized: bool = True, lexicon: Optional[Lexicon] = None
) -> List[str]:
    """Terms indexed for a record: its statement tokens, split into
    sub-tokens unless ``subtokenized`` is off."""
    if subtokenized:
        return subtokenize_statement(record.statement, lexicon or default_lexicon())
    return [token.text for token in record.statement]


@dataclass
class TfIdfIndex:
    """Row-normalized tf-idf vectors of the training statements.

    Args:
        vocabulary (dict): Term to column.
        idf (ndarray): ``ln((1 + N) / (1 + df)) + 1`` per column.
        matrix (csr_matrix): One L2-normalized row per training lemma.
        names (list of str): Lemma names aligned with the rows.
        subtokenized (bool): Whether terms are sub-tokens.
    """

    vocabulary: Dict[str, int]
    idf: np.ndarray
    matrix: csr_matrix
    names: List[str]
    subtokenized: bool = True
    lexicon: Optional[Lexicon] = None

    def vectorize(self, terms: Sequence[str]) -> csr_matrix:
        counts = Counter(term for term in terms if term in self.vocabulary)
        columns = [self.vocabulary[term] for term in counts]
        values = [counts[term] * self.idf[self.vocabulary[term]] for term in counts]
        row = csr_matrix(
            (values, ([0] * len(columns), columns)), shape=(1, len(self.vocabulary))
        )
        return normalize(row, norm="l2")

    def similarities(self, record: LemmaRecord) -> np.ndarray:
        """Cosine similarity of the record to every training lemma."""
        query = self.vectorize(statement_terms(record, self.subtokenized, self.lexicon))
        return np.asarray((self.matrix @ query.T).todense()).ravel()

    def retrieve(self, record: LemmaRecord, k: int = TOP_K) -> List[Tuple[str, float]]:
        """Names and similarities of the ``k`` nearest training lemmas.

        Ties keep training order.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        scores = self.similarities(record)
        order = np.argsort(-scores, kind="stable")[:k]
        return [(self.names[i], float(scores[i])) for i in order]

    def to_json(self) -> dict:
        coo = self.matrix.tocoo()
        return {
            "vocabulary": sorted(self.vocabulary, key=self.vocabulary.get),
            "idf": self.idf.tolist(),
            "names": self.names,
            "subtokenized": self.subtokenized,
            "lexicon": self.lexicon.to_dict() if self.lexicon else None,
            "rows": coo.row.tolist(),
            "cols": coo.col.tolist(),
            "values": coo.data.tolist(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "TfIdfIndex":
        vocabulary = {term: i for i, term in enumerate(data["vocabulary"])}
        matrix = csr_matrix(
            (data["values"], (data["rows"], data["cols"])),
            shape=(len(data["names"]), len(vocabulary)),
        )
        lexicon = Lexicon.from_dict(data["lexicon"]) if data.get("lexicon") else None
        return cls(
            vocabulary,
            np.asarray(data["idf"], dtype=np.float64),
            matrix,
            list(data["names"]),
            data["subtokenized"],
            lexicon,
        )

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as file:
            json.dump(self.to_json(), file)

    @classmethod
    def load(cls, source: Union[str, Path]) -> "TfIdfIndex":
        return cls.from_json(json.loads(_read_text(source)))


def build_index(
    train_records: Sequence[LemmaRecord],
    subtokenized: bool = True,
    lexicon: Optional[Lexicon] = None,
) -> TfIdfIndex:
    """Fit raw-count, smoothed-idf, L2-normalized vectors on the training
    statements.

    Raises:
        EmptyTrainSet: No training records, or no statement term at all.
    """
    if not train_records:
        raise EmptyTrainSet("cannot build an index without training records")
    lexicon = lexicon or default_lexicon()
    documents = [statement_terms(r, subtokenized, lexicon) for r in train_records]

    vectorizer = TfidfVectorizer(
        analyzer=_identity, lowercase=False, norm="l2", smooth_idf=True
    )
    try:
        matrix = vectorizer.fit_transform(documents)
    except ValueError as e:
        raise EmptyTrainSet(f"training statements have no terms: {e}")
    return TfIdfIndex(
        vocabulary={term: int(col) for term, col in vectorizer.vocabulary_.items()},
        idf=np.asarray(vectorizer.idf_, dtype=np.float64),
        matrix=csr_matrix(matrix),
        names=[record.name for record in train_records],
        subtokenized=subtokenized,
        lexicon=lexicon if subtokenized else None,
    )


def retrieve(index: TfIdfIndex, record: LemmaRecord, k: int = TOP_K) -> List[str]:
    """Names of the ``k`` nearest training lemmas."""
    return [name for name, _ in index.retrieve(record, k)]
