"""Deterministic synthetic lemma corpora.

Lemmas state commutativity, associativity or left commutativity of a
binary operator. The statement shows only the operator's notation
(``x + y``); the kernel tree names the operator of one of two dialects
(``addn`` on naturals or ``addr`` on rings). With the ``ktree`` naming rule
the dialect letter is part of the name, so it can only be recovered from
the kernel tree. Some lemmas are about a function defined in their own
document; those names appear nowhere else in the corpus.

Trees carry location subtrees, qualified references and singleton
wrappers so that every trimming rule has something to do.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union
import numpy as np
from .corpus import LemmaRecord, save_dataset
from .errors import ConfigError
from .sexp import Sexp, SourceToken, TokenKind, slist
from .utils import _default_seed

OPERATOR_SYMBOLS = {"add": "+", "mul": "*", "sub": "-"}
DIALECT_PATHS = {
    "n": ("ssrnat", "ssr", "mathcomp"),
    "r": ("GRing", "ssralg", "mathcomp"),
}
PROPERTY_ARITY = {"C": 2, "A": 3, "CA": 3}
PROPERTY_WORDS = {"C": "comm", "A": "assoc", "CA": "lcomm"}
NAMING_RULES = ("ktree", "stmt")
CONVENTIONS = ("suffix", "prefix")

_VARIABLES = ("x", "y", "z", "a", "b", "c", "u", "v", "w")
_ONSETS = ("b", "d", "f", "g", "k", "p", "qu", "t", "v", "z")
_VOWELS = ("a", "e", "i", "o", "u")
_CODAS = ("b", "g", "k", "p", "rb", "x", "zz")
_EQ_PATH = ("Logic", "Init", "Coq")


@dataclass(frozen=True)
class GeneratorSpec:
    """What to generate.

    Args:
        n_docs (int): Documents.
        lemmas_per_doc (int): Lemmas per document, names unique per document.
        operators (tuple of str): Operators out of ``add``, ``mul``, ``sub``.
        dialects (tuple of str): Kernel dialects out of ``n`` and ``r``.
        properties (tuple of str): Stated properties out of ``C``, ``A``, ``CA``.
        naming_rule (str): ``ktree`` puts the dialect letter in the name,
            ``stmt`` keeps names derivable from the statement.
        convention (str): ``suffix`` (``addnC``) or ``prefix`` (``comm_addn``).
        local_fraction (float): Share of lemmas about a document-local function.
        doc_prefix (str): Document names are ``doc_prefix`` plus an index.
        seed (int): Generator seed, resolved from the environment when None.
    """

    n_docs: int = 5
    lemmas_per_doc: int = 10
    operators: Tuple[str, ...] = ("add", "mul", "sub")
    dialects: Tuple[str, ...] = ("n", "r")
    properties: Tuple[str, ...] = ("C", "A", "CA")
    naming_rule: str = "ktree"
    convention: str = "suffix"
    local_fraction: float = 0.2
    doc_prefix: str = "Doc"
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        for name in ("operators", "dialects", "properties"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        object.__setattr__(self, "seed", _default_seed(self.seed))
        if self.n_docs < 0 or self.lemmas_per_doc < 0:
            raise ConfigError("n_docs and lemmas_per_doc must be >= 0")
        for values, known, label in (
            (self.operators, OPERATOR_SYMBOLS, "operator"),
            (self.dialects, DIALECT_PATHS, "dialect"),
            (self.properties, PROPERTY_ARITY, "property"),
        ):
            if not values:
                raise ConfigError(f"at least one {label} is needed")
            unknown = set(values) - set(known)
            if unknown:
                raise ConfigError(f"unknown {label}s: {sorted(unknown)}")
        if self.naming_rule not in NAMING_RULES:
            raise ConfigError(f"unknown naming rule {self.naming_rule!r}")
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"unknown naming convention {self.convention!r}")
        if not 0 <= self.local_fraction <= 1:
            raise ConfigError("local_fraction must be in [0, 1]")
        if not self.doc_prefix.isidentifier():
            raise ConfigError(f"doc_prefix {self.doc_prefix!r} is not an identifier")
        if self.lemmas_per_doc > self.capacity:
            raise ConfigError(
                f"lemmas_per_doc {self.lemmas_per_doc} exceeds the "
                f"{self.capacity} distinct names of a document"
            )

    @property
    def capacity(self) -> int:
        """Distinct lemma names available in one document."""
        dialects = len(self.dialects) if self.naming_rule == "ktree" else 1
        operator_names = len(self.operators) * dialects * len(self.properties)
        local_names = len(self.properties) if self.local_fraction > 0 else 0
        return operator_names + local_names

    def to_dict(self) -> dict:
        return {
            "n_docs": self.n_docs,
            "lemmas_per_doc": self.lemmas_per_doc,
            "operators": list(self.operators),
            "dialects": list(self.dialects),
            "properties": list(self.properties),
            "naming_rule": self.naming_rule,
            "convention": self.convention,
            "local_fraction": self.local_fraction,
            "doc_prefix": self.doc_prefix,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratorSpec":
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(f"invalid generator spec: {e}")


# Expressions are ("var", name) or ("app", function, left, right).


def _property_expressions(prop: str, function: str, names: Sequence[str]):
    x, y = ("var", names[0]), ("var", names[1])
    if prop == "C":
        return ("app", function, x, y), ("app", function, y, x)
    z = ("var", names[2])
    if prop == "A":
        left = ("app", function, x, ("app", function, y, z))
        return left, ("app", function, ("app", function, x, y), z)
    left = ("app", function, x, ("app", function, y, z))
    return left, ("app", function, y, ("app", function, x, z))


def _kw(text: str) -> SourceToken:
    return SourceToken(text, TokenKind.KEYWORD)


def _ident(text: str) -> SourceToken:
    return SourceToken(text, TokenKind.IDENTIFIER)


class _DocumentBuilder:
    """Builds the three views of lemmas in one document."""

    def __init__(self, doc: str, local_function: str) -> None:
        self.doc = doc
        self.local_function = local_function
        self.position = 0

    def _loc(self, width: int = 1) -> Sexp:
        start = self.position
        self.position += width + 1
        return slist("loc", slist("bp", str(start)), slist("ep", str(start + width)))

    # statement tokens

    def tokens(
        self, expr, symbol: Optional[str], nested: bool = False
    ) -> List[SourceToken]:
        if expr[0] == "var":
            return [_ident(expr[1])]
        _, _, left, right = expr
        if symbol is None:
            inner = [_ident(self.local_function)]
            inner += self.tokens(left, symbol, True) + self.tokens(right, symbol, True)
        else:
            inner = self.tokens(left, symbol) + [_kw(symbol)]
            inner += self.tokens(right, symbol, right[0] == "app")
        return [_kw("(")] + inner + [_kw(")")] if nested else inner

    # parse tree

    def _qualid(self, name: str) -> Sexp:
        return slist(
            "CRef",
            slist("Ser_Qualid", slist("DirPath", slist()), slist("Id", name)),
            self._loc(),
        )

    def stree_expr(self, expr, symbol: Optional[str]) -> Sexp:
        if expr[0] == "var":
            return self._qualid(expr[1])
        _, _, left, right = expr
        args = (self.stree_expr(left, symbol), self.stree_expr(right, symbol))
        if symbol is None:
            return slist("CApp", self._qualid(self.local_function), *args)
        notation = slist("InConstrEntrySomeLevel", f"_ {symbol} _")
        return slist("CNotation", notation, slist("CNotationArgs", *args), self._loc(3))

    def stree(self, name: str, binders: Sequence[str], lhs, rhs, symbol) -> Sexp:
        equation = slist(
            "CNotation",
            slist("InConstrEntrySomeLevel", "_ = _"),
            slist(
                "CNotationArgs",
                self.stree_expr(lhs, symbol),
                self.stree_expr(rhs, symbol),
            ),
            self._loc(5),
        )
        assumptions = slist(
            *(
                slist("CLocalAssum", slist("Name", slist("Id", b)), self._loc())
                for b in binders
            )
        )
        theorem = slist(
            "VernacStartTheoremProof", "Lemma", slist("Id", name), assumptions, equation
        )
        return slist("VernacExpr", slist(), theorem, self._loc(len(name)))

    # kernel tree

    @staticmethod
    def _ref(path: Sequence[str], name: str) -> Sexp:
        path_ids = slist(*(slist("Id", p) for p in path))
        return slist("Ref", slist("DirPath", path_ids), slist("Id", name))

    def carrier(self, dialect: str) -> Sexp:
        if dialect == "r":
            sort = slist("Const", self._ref(DIALECT_PATHS["r"], "sort"))
            return slist("App", sort, slist("Var", slist("Id", "R")))
        return slist("Ind", self._ref(DIALECT_PATHS["n"], "nat"))

    def ktree_expr(self, expr, kernel_name: str, dialect: str) -> Sexp:
        if expr[0] == "var":
            return slist(slist("Var", slist("Id", expr[1])))
        _, _, left, right = expr
        if kernel_name == self.local_function:
            head = slist("Const", self._ref((self.doc,), kernel_name))
        else:
            head = slist("Const", self._ref(DIALECT_PATHS[dialect], kernel_name))
        args = [
            self.ktree_expr(left, kernel_name, dialect),
            self.ktree_expr(right, kernel_name, dialect),
        ]
        if dialect == "r" and kernel_name != self.local_function:
            args.insert(0, slist("Var", slist("Id", "R")))
        return slist("App", head, *args)

    def ktree(self, binders, lhs, rhs, kernel_name: str, dialect: str) -> Sexp:
        carrier = self.carrier(dialect)
        body = slist(
            "App",
            slist("Ind", self._ref(_EQ_PATH, "eq")),
            carrier,
            self.ktree_expr(lhs, kernel_name, dialect),
            self.ktree_expr(rhs, kernel_name, dialect),
        )
        for binder in reversed(binders):
            body = slist("Prod", slist("Name", slist("Id", binder)), carrier, body)
        return body


def _local_function(rng: np.random.Generator, taken: set) -> str:
    while True:
        word = "".join(
            options[int(rng.integers(len(options)))]
            for options in (_ONSETS, _VOWELS, _CODAS)
        )
        if word not in taken and word not in OPERATOR_SYMBOLS:
            taken.add(word)
            return word


def _lemma_name(stem: str, prop: str, convention: str) -> str:
    if convention == "suffix":
        return stem + prop
    return f"{PROPERTY_WORDS[prop]}_{stem}"


def generate(spec: GeneratorSpec) -> List[LemmaRecord]:
    """Generate the corpus described by ``spec``; equal specs give equal corpora."""
    rng = np.random.default_rng(spec.seed)
    records = []
    functions = set()  # type: set
    for doc_index in range(spec.n_docs):
        doc = f"{spec.doc_prefix}{doc_index}"
        local = _local_function(rng, functions)
        builder = _DocumentBuilder(doc, local)

        operator_pool = [
            (op, dialect, prop)
            for op in spec.operators
            for dialect in spec.dialects
            for prop in spec.properties
        ]
        local_pool = list(spec.properties) if spec.local_fraction > 0 else []
        names = set()
        while len(names) < spec.lemmas_per_doc:
            use_local = local_pool and (
                not operator_pool or rng.random() < spec.local_fraction
            )
            if use_local:
                prop = local_pool.pop(int(rng.integers(len(local_pool))))
                dialect, symbol, kernel_name = "n", None, local
                stem = local
            else:
                index = int(rng.integers(len(operator_pool)))
                op, dialect, prop = operator_pool.pop(index)
                symbol, kernel_name = OPERATOR_SYMBOLS[op], op + dialect
                stem = kernel_name if spec.naming_rule == "ktree" else op
            name = _lemma_name(stem, prop, spec.convention)
            if name in names:
                continue
            names.add(name)

            arity = PROPERTY_ARITY[prop]
            chosen = rng.choice(len(_VARIABLES), size=arity, replace=False)
            binders = [_VARIABLES[int(i)] for i in chosen]
            lhs, rhs = _property_expressions(prop, kernel_name, binders)
            stmt = [_kw("Lemma"), _ident(name)] + [_ident(b) for b in binders]
            stmt += [_kw(":")] + builder.tokens(lhs, symbol) + [_kw("=")]
            stmt += builder.tokens(rhs, symbol) + [_kw(".")]
            records.append(
                LemmaRecord(
                    doc_id=doc,
                    name=name,
                    qualified_name=f"{doc}.{name}",
                    stmt_tokens=tuple(stmt),
                    stree=builder.stree(name, binders, lhs, rhs, symbol),
                    ktree=builder.ktree(binders, lhs, rhs, kernel_name, dialect),
                )
            )
    return records


def write_corpus(spec: GeneratorSpec, path: Union[str, Path]) -> List[LemmaRecord]:
    """Generate and save as a JSON-lines dataset."""
    records = generate(spec)
    save_dataset(records, path)
    return records
