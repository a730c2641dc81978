"""Model input sequences derived from a lemma record."""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence
from .constants import ID_HEAD, MAX_INPUT_LEN, UNK_TOKEN
from .corpus import LemmaRecord
from .sexp import Atom, Sexp, SexpList
from .subtokenizer import (
    Lexicon,
    default_lexicon,
    subtokenize_atoms,
    subtokenize_statement,
    subtokenize_texts,
)
from .trimming import TrimConfig, flatten, rebuild, trim

logger = logging.getLogger(__name__)


class InputKind(Enum):
    """Model inputs, valued by their short names in model names."""

    STMT = "s"
    STREE = "fsexp"
    TRIMMED_STREE = "fsexpl1"
    KTREE = "bsexp"
    TRIMMED_KTREE = "bsexpl1"


def strip_name(tree: Sexp, name: str) -> Sexp:
    """Remove every ``(Id name)`` subtree and every ``name`` atom."""

    def enter(node: Sexp, level: int) -> bool:
        if isinstance(node, Atom):
            return node.text != name
        return not (
            len(node.children) == 2
            and node.head == ID_HEAD
            and node.children[1] == Atom(name)
        )

    def leave(node, children, level, is_root):
        return node if isinstance(node, Atom) else SexpList(children)

    return rebuild(tree, enter, leave)


@dataclass
class Example:
    """A record turned into sub-token sequences.

    Args:
        record (LemmaRecord): Source record.
        inputs (dict): Input kind to sub-token sequence, never empty.
        target (list of str): Sub-tokens of the lemma name.
    """

    record: LemmaRecord
    inputs: Dict[InputKind, List[str]]
    target: List[str]


class Preprocessor:
    """Turns records into sub-token sequences for a set of input kinds.

    Args:
        lexicon (Lexicon): Sub-tokenizer lexicon.
        trim_config (TrimConfig): Trimming used when a record carries no
            precomputed trimmed tree.
        max_input_len (int): Longer input sequences are truncated.
    """

    def __init__(
        self,
        lexicon: Optional[Lexicon] = None,
        trim_config: Optional[TrimConfig] = None,
        max_input_len: int = MAX_INPUT_LEN,
    ) -> None:
        self.lexicon = lexicon or default_lexicon()
        self.trim_config = trim_config or TrimConfig()
        self.max_input_len = max_input_len

    def _tree(self, record: LemmaRecord, kind: InputKind) -> Sexp:
        if kind is InputKind.STREE:
            return strip_name(record.stree, record.name)
        if kind is InputKind.KTREE:
            return record.ktree
        if kind is InputKind.TRIMMED_STREE:
            tree = record.stree_trimmed
            if tree is None:
                tree = trim(record.stree, self.trim_config)
            return strip_name(tree, record.name)
        tree = record.ktree_trimmed
        if tree is None:
            tree = trim(record.ktree, self.trim_config)
        return tree

    def input_sequence(self, record: LemmaRecord, kind: InputKind) -> List[str]:
        if kind is InputKind.STMT:
            items = subtokenize_statement(record.statement, self.lexicon)
        else:
            items = subtokenize_atoms(flatten(self._tree(record, kind)), self.lexicon)

        if len(items) > self.max_input_len:
            logger.warning(
                "truncating %s input of %s from %d to %d items",
                kind.value,
                record.qualified_name,
                len(items),
                self.max_input_len,
            )
            items = items[: self.max_input_len]
        return items or [UNK_TOKEN]

    def target(self, record: LemmaRecord) -> List[str]:
        return subtokenize_texts(record.name, self.lexicon)

    def example(self, record: LemmaRecord, kinds: Sequence[InputKind]) -> Example:
        inputs = {kind: self.input_sequence(record, kind) for kind in kinds}
        return Example(record, inputs, self.target(record))
