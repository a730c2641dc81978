"""Lemma datasets: loading, outlier filtering, document splits and reports."""

import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union
import numpy as np
from .constants import OUTLIER_QUANTILE, SPLIT_FRACTIONS, UNDERSCORE
from .errors import (
    ConfigError,
    LeakageError,
    SchemaError,
    SexpError,
    SexpParseError,
    UnknownTier,
)
from .sexp import (
    Sexp,
    SourceToken,
    TokenKind,
    depth,
    parse_sentence_tokens,
    parse_sexp,
    print_sexp,
)
from .subtokenizer import (
    Lexicon,
    default_lexicon,
    subtokenize_statement,
    subtokenize_texts,
)
from .trimming import TrimConfig, stats, trim
from .utils import _default_seed, _read_text

logger = logging.getLogger(__name__)

_REQUIRED_FIELDS = ("doc", "name", "qname", "stmt", "stree", "ktree")
_TREE_FIELDS = ("stree", "ktree", "stree_trimmed", "ktree_trimmed")
_TOKEN_KINDS = {kind.value: kind for kind in TokenKind}


@dataclass(frozen=True)
class LemmaRecord:
    """One lemma and its three serialized views.

    Args:
        doc_id (str): Document the lemma is defined in.
        name (str): Lemma name, the final component of ``qualified_name``.
        qualified_name (str): Kernel name, e.g. ``RegLang.myhill_nerode.mg_eq_proof``.
        stmt_tokens (tuple of SourceToken): Lexer tokens of the whole sentence.
        stree (Sexp): Parse tree.
        ktree (Sexp): Elaborated kernel tree.
        stree_trimmed (Sexp): Precomputed trimmed parse tree, if any.
        ktree_trimmed (Sexp): Precomputed trimmed kernel tree, if any.
    """

    doc_id: str
    name: str
    qualified_name: str
    stmt_tokens: Tuple[SourceToken, ...]
    stree: Sexp
    ktree: Sexp
    stree_trimmed: Optional[Sexp] = None
    ktree_trimmed: Optional[Sexp] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "stmt_tokens", tuple(self.stmt_tokens))
        if not self.name:
            raise ValueError("lemma name is empty")
        if self.qualified_name.rsplit(".", 1)[-1] != self.name:
            raise ValueError(
                f"name {self.name!r} is not the last component of "
                f"{self.qualified_name!r}"
            )

    @property
    def statement(self) -> List[SourceToken]:
        """Tokens after the lemma name, without the closing period."""
        tokens = list(self.stmt_tokens)
        for index, token in enumerate(tokens):
            if token.kind is TokenKind.IDENTIFIER and token.text == self.name:
                tokens = tokens[index + 1 :]
                break
        if tokens and tokens[-1].kind is TokenKind.KEYWORD and tokens[-1].text == ".":
            tokens.pop()
        return tokens

    def to_json(self, lexicon: Optional[Lexicon] = None) -> dict:
        data = {
            "doc": self.doc_id,
            "name": self.name,
            "qname": self.qualified_name,
            "stmt": [{"t": t.text, "k": t.kind.value} for t in self.stmt_tokens],
            "stree": print_sexp(self.stree),
            "ktree": print_sexp(self.ktree),
        }
        if self.stree_trimmed is not None:
            data["stree_trimmed"] = print_sexp(self.stree_trimmed)
        if self.ktree_trimmed is not None:
            data["ktree_trimmed"] = print_sexp(self.ktree_trimmed)
        if lexicon is not None:
            data["name_subtokens"] = subtokenize_texts(self.name, lexicon)
        return data


def trim_record(record: LemmaRecord, config: TrimConfig) -> LemmaRecord:
    """Copy of record carrying its trimmed s-tree and k-tree."""
    return replace(
        record,
        stree_trimmed=trim(record.stree, config),
        ktree_trimmed=trim(record.ktree, config),
    )


def _parse_stmt(value, line: int) -> List[SourceToken]:
    if isinstance(value, str):
        try:
            return parse_sentence_tokens(parse_sexp(value))
        except SexpError as e:
            raise SexpParseError(line, "stmt", e)

    if not isinstance(value, list):
        raise SchemaError(line, "'stmt' must be a list of tokens or an s-expression")
    tokens = []
    for item in value:
        if (
            not isinstance(item, dict)
            or not isinstance(item.get("t"), str)
            or item.get("k") not in _TOKEN_KINDS
        ):
            raise SchemaError(line, f"malformed statement token {item!r}")
        tokens.append(SourceToken(item["t"], _TOKEN_KINDS[item["k"]]))
    return tokens


def parse_record(data: dict, line: int = 0) -> LemmaRecord:
    """Build a record from one decoded JSON object."""
    if not isinstance(data, dict):
        raise SchemaError(line, "expected a JSON object")
    for key in _REQUIRED_FIELDS:
        if key not in data:
            raise SchemaError(line, f"missing field {key!r}")
    for key in ("doc", "name", "qname", "stree", "ktree"):
        if not isinstance(data[key], str):
            raise SchemaError(line, f"field {key!r} must be a string")

    trees = {}
    for key in _TREE_FIELDS:
        if data.get(key) is None:
            continue
        try:
            trees[key] = parse_sexp(data[key])
        except SexpError as e:
            raise SexpParseError(line, key, e)

    try:
        return LemmaRecord(
            doc_id=data["doc"],
            name=data["name"],
            qualified_name=data["qname"],
            stmt_tokens=_parse_stmt(data["stmt"], line),
            stree=trees["stree"],
            ktree=trees["ktree"],
            stree_trimmed=trees.get("stree_trimmed"),
            ktree_trimmed=trees.get("ktree_trimmed"),
        )
    except ValueError as e:
        raise SchemaError(line, str(e))


def load_dataset(source: Union[str, Path]) -> List[LemmaRecord]:
    """Read a JSON-lines dataset from a path or URL.

    Args:
        source (str): File path or http(s) URL.

    Returns:
        list of LemmaRecord: Records in file order.

    Raises:
        SchemaError: A line is not a valid record.
        SexpParseError: An s-expression field does not parse.
    """
    records = []
    for number, line in enumerate(_read_text(source).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as e:
            raise SchemaError(number, f"invalid JSON: {e.msg}")
        records.append(parse_record(data, number))
    logger.debug("loaded %d records from %s", len(records), source)
    return records


def save_dataset(
    records: Iterable[LemmaRecord],
    path: Union[str, Path],
    lexicon: Optional[Lexicon] = None,
) -> None:
    with open(path, "w", encoding="utf-8") as file:
        for record in records:
            file.write(json.dumps(record.to_json(lexicon), ensure_ascii=False))
            file.write("\n")


def filter_outliers(
    records: Sequence[LemmaRecord], quantile: float = OUTLIER_QUANTILE
) -> List[LemmaRecord]:
    """Drop the ``ceil(quantile * N)`` records with the deepest k-trees.

    Among equally deep k-trees the later records are dropped first; the
    surviving records keep their input order.
    """
    if not 0 <= quantile <= 1:
        raise ConfigError(f"quantile must be in [0, 1], got {quantile}")
    total = len(records)
    n_drop = math.ceil(round(quantile * total, 9))
    if n_drop == 0:
        return list(records)

    depths = [depth(record.ktree) for record in records]
    ranked = sorted(range(total), key=lambda i: (depths[i], i))
    dropped = set(ranked[total - n_drop :])
    logger.info("dropping %d of %d lemmas with the deepest k-trees", n_drop, total)
    return [record for i, record in enumerate(records) if i not in dropped]


@dataclass(frozen=True)
class DatasetSplit:
    """Document-level split with optional extra named tiers.

    Args:
        train (tuple of str): Training documents.
        val (tuple of str): Validation documents.
        test (tuple of str): Test documents.
        seed (int): Shuffle seed used to produce the split.
        tiers (dict): Extra tiers, name to documents, for cross-set runs.
    """

    train: Tuple[str, ...]
    val: Tuple[str, ...]
    test: Tuple[str, ...]
    seed: int
    tiers: Dict[str, Tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("train", "val", "test"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(
            self, "tiers", {name: tuple(docs) for name, docs in self.tiers.items()}
        )
        seen = {}  # type: Dict[str, str]
        for name in ("train", "val", "test"):
            for doc in getattr(self, name):
                if doc in seen and seen[doc] != name:
                    raise LeakageError(
                        f"document {doc!r} in both {seen[doc]} and {name}"
                    )
                seen[doc] = name

    @property
    def tier_names(self) -> List[str]:
        return ["train", "val", "test", *self.tiers]

    def docs_for(self, tier: str) -> FrozenSet[str]:
        """Documents of a tier; ``a+b`` names the union of tiers a and b."""
        docs = set()
        for part in tier.split("+"):
            if part in ("train", "val", "test"):
                docs.update(getattr(self, part))
            elif part in self.tiers:
                docs.update(self.tiers[part])
            else:
                raise UnknownTier(part)
        return frozenset(docs)

    def select(self, records: Iterable[LemmaRecord], tier: str) -> List[LemmaRecord]:
        docs = self.docs_for(tier)
        return [record for record in records if record.doc_id in docs]

    def to_json(self) -> dict:
        data = {
            "seed": self.seed,
            "train": list(self.train),
            "val": list(self.val),
            "test": list(self.test),
        }
        if self.tiers:
            data["tiers"] = {name: list(docs) for name, docs in self.tiers.items()}
        return data

    @classmethod
    def from_json(cls, data: dict) -> "DatasetSplit":
        try:
            return cls(
                train=data["train"],
                val=data["val"],
                test=data["test"],
                seed=int(data["seed"]),
                tiers=data.get("tiers", {}),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(0, f"invalid split manifest: {e}")

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as file:
            json.dump(self.to_json(), file, indent=2)
            file.write("\n")

    @classmethod
    def load(cls, source: Union[str, Path]) -> "DatasetSplit":
        try:
            data = json.loads(_read_text(source))
        except json.JSONDecodeError as e:
            raise SchemaError(e.lineno, f"invalid split manifest: {e.msg}")
        return cls.from_json(data)


def split_by_document(
    records: Iterable[LemmaRecord],
    fractions: Sequence[float] = SPLIT_FRACTIONS,
    seed: Optional[int] = None,
) -> DatasetSplit:
    """Shuffle documents with the seed and cut them into train, val and test.

    Validation and test sizes are rounded down; the remainder goes to train.
    """
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise ConfigError(f"expected three non-negative fractions, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {sum(fractions)}")

    seed = _default_seed(seed)
    docs = sorted({record.doc_id for record in records})
    order = np.random.default_rng(seed).permutation(len(docs))
    shuffled = [docs[i] for i in order]

    n_val = math.floor(round(fractions[1] * len(docs), 9))
    n_test = math.floor(round(fractions[2] * len(docs), 9))
    n_train = len(docs) - n_val - n_test
    split = DatasetSplit(
        train=shuffled[:n_train],
        val=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val :],
        seed=seed,
    )
    logger.info(
        "split %d documents into %d/%d/%d", len(docs), n_train, n_val, n_test
    )
    return split


def has_repeated_subtoken(subtokens: Sequence[str]) -> bool:
    words = [token for token in subtokens if token != UNDERSCORE]
    return len(words) != len(set(words))


_REPORT_COLUMNS = (
    "lemmas",
    "name_chars",
    "name_subtokens",
    "stmt_chars",
    "stmt_subtokens",
    "repetition_rate",
)
_TREE_COLUMNS = ("depth", "nodes", "subtokens")


def _mean(values: Sequence[float]) -> float:
    return float(np.mean(values)) if len(values) else 0.0


def _reduction(raw: float, trimmed: float) -> float:
    return 1.0 - trimmed / raw if raw else 0.0


def _summarize(
    records: Sequence[LemmaRecord], trim_config: TrimConfig, lexicon: Lexicon
) -> Dict[str, float]:
    names = [subtokenize_texts(record.name, lexicon) for record in records]
    statements = [record.statement for record in records]
    row = {
        "lemmas": len(records),
        "name_chars": _mean([len(record.name) for record in records]),
        "name_subtokens": _mean([len(tokens) for tokens in names]),
        "stmt_chars": _mean([len(" ".join(t.text for t in s)) for s in statements]),
        "stmt_subtokens": _mean(
            [len(subtokenize_statement(s, lexicon)) for s in statements]
        ),
        "repetition_rate": _mean([float(has_repeated_subtoken(n)) for n in names]),
    }  # type: Dict[str, float]

    for kind in ("stree", "ktree"):
        raw = [stats(getattr(record, kind), lexicon) for record in records]
        trimmed = []
        for record in records:
            tree = getattr(record, f"{kind}_trimmed")
            if tree is None:
                tree = trim(getattr(record, kind), trim_config)
            trimmed.append(stats(tree, lexicon))
        for column, attribute in zip(
            _TREE_COLUMNS, ("depth", "node_count", "flat_subtoken_count")
        ):
            raw_mean = _mean([getattr(s, attribute) for s in raw])
            trimmed_mean = _mean([getattr(s, attribute) for s in trimmed])
            row[f"{kind}_{column}"] = raw_mean
            row[f"{kind}_trimmed_{column}"] = trimmed_mean
            row[f"{kind}_{column}_reduction"] = _reduction(raw_mean, trimmed_mean)
    return row


@dataclass
class CorpusReport:
    documents: Dict[str, Dict[str, float]]
    aggregate: Dict[str, float]

    def to_json(self) -> dict:
        return {"documents": self.documents, "aggregate": self.aggregate}

    def format_table(self) -> str:
        columns = [
            "lemmas",
            "name_chars",
            "name_subtokens",
            "stmt_subtokens",
            "ktree_depth",
            "ktree_trimmed_depth",
            "ktree_nodes",
            "ktree_trimmed_nodes",
        ]
        rows = [("doc", *columns)]
        for doc, row in [*self.documents.items(), ("ALL", self.aggregate)]:
            cells = [str(row["lemmas"])]
            cells.extend(f"{row[column]:.1f}" for column in columns[1:])
            rows.append((doc, *cells))
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        return "\n".join(
            "  ".join(cell.rjust(width) for cell, width in zip(row, widths))
            for row in rows
        )


def corpus_report(
    records: Sequence[LemmaRecord],
    trim_config: Optional[TrimConfig] = None,
    lexicon: Optional[Lexicon] = None,
) -> CorpusReport:
    """Per-document and aggregate statistics of a corpus.

    Tree columns are means over lemmas, before and after trimming;
    ``*_reduction`` is ``1 - trimmed / raw``. Precomputed trimmed trees are
    used when records carry them.
    """
    trim_config = trim_config or TrimConfig()
    lexicon = lexicon or default_lexicon()

    by_doc = defaultdict(list)  # type: Dict[str, List[LemmaRecord]]
    for record in records:
        by_doc[record.doc_id].append(record)

    documents = {
        doc: _summarize(doc_records, trim_config, lexicon)
        for doc, doc_records in sorted(by_doc.items())
    }
    aggregate = _summarize(list(records), trim_config, lexicon)
    aggregate["documents"] = len(by_doc)
    return CorpusReport(documents, aggregate)
