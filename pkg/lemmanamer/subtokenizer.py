"""Convention-aware splitting of lemma names and identifiers.

Names mix snake_case, CamelCase and short prefixes and suffixes, as in
``extprod_mulgA``: a user-defined word, an underscore, the ``mul``
operator, the ``g`` (group) infix and the ``A`` (associativity) suffix.
"""

import re
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from importlib.resources import files
from pathlib import Path
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union
from .constants import UNDERSCORE
from .errors import ConfigError, EmptyName, EmptySequence
from .sexp import SourceToken, TokenKind
from .utils import _read_text

_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")
_UNDERSCORES = re.compile(r"(_)")
_CAMEL_BOUNDARY = re.compile(r"(?<=[a-z0-9'])(?=[A-Z])")
_LOWER_PIECE = re.compile(r"[a-z][a-z0-9']*")
_LETTER_RUNS = re.compile(r"[a-z]+[0-9']*|[0-9']+")

_SECTIONS = ("components", "suffixes", "single_letter_infixes")


class SubTokenKind(Enum):
    WORD = "word"
    UNDERSCORE = "underscore"
    SUFFIX = "suffix"


@dataclass(frozen=True)
class SubToken:
    text: str
    kind: SubTokenKind = SubTokenKind.WORD


@dataclass(frozen=True)
class Lexicon:
    """Known name components, suffixes and one-letter infixes.

    Args:
        components (tuple of str): Words matched inside lowercase runs.
        suffixes (frozenset of str): Capital markers such as ``A`` or ``P``.
        single_letter_infixes (frozenset of str): One-letter words such as ``g``.
    """

    components: Tuple[str, ...]
    suffixes: FrozenSet[str]
    single_letter_infixes: FrozenSet[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "suffixes", frozenset(self.suffixes))
        object.__setattr__(
            self, "single_letter_infixes", frozenset(self.single_letter_infixes)
        )
        for entry in (*self.components, *self.suffixes, *self.single_letter_infixes):
            if not entry or UNDERSCORE in entry:
                raise ConfigError(f"invalid lexicon entry {entry!r}")

    @cached_property
    def _words(self) -> FrozenSet[str]:
        return frozenset(self.components) | self.single_letter_infixes

    @cached_property
    def _longest(self) -> int:
        return max((len(word) for word in self._words), default=0)

    def to_dict(self) -> dict:
        return {
            "components": list(self.components),
            "suffixes": sorted(self.suffixes),
            "single_letter_infixes": sorted(self.single_letter_infixes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Lexicon":
        return cls(
            data.get("components", ()),
            data.get("suffixes", ()),
            data.get("single_letter_infixes", ()),
        )


def parse_lexicon(text: str) -> Lexicon:
    entries = {section: [] for section in _SECTIONS}
    section = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in entries:
                raise ConfigError(f"lexicon line {number}: unknown section {line}")
            continue
        if section is None:
            raise ConfigError(f"lexicon line {number}: entry outside a section")
        if line not in entries[section]:
            entries[section].append(line)
    return Lexicon(
        tuple(entries["components"]),
        frozenset(entries["suffixes"]),
        frozenset(entries["single_letter_infixes"]),
    )


def load_lexicon(source: Union[str, Path]) -> Lexicon:
    """Read a lexicon file from a path or URL."""
    return parse_lexicon(_read_text(source))


@lru_cache(maxsize=1)
def default_lexicon() -> Lexicon:
    text = files("lemmanamer").joinpath("data/default_lexicon.txt").read_text("utf-8")
    return parse_lexicon(text)


def _segment_run(run: str, lexicon: Lexicon) -> List[str]:
    """Greedy longest match; the whole run when some position has no match."""
    words = lexicon._words
    pieces = []
    i = 0
    while i < len(run):
        for length in range(min(lexicon._longest, len(run) - i), 0, -1):
            if run[i : i + length] in words:
                pieces.append(run[i : i + length])
                i += length
                break
        else:
            return [run]
    return pieces


def _split_lower(piece: str, lexicon: Lexicon) -> List[str]:
    parts = []
    for run in _LETTER_RUNS.findall(piece):
        letters = run.rstrip("0123456789'")
        tail = run[len(letters) :]
        if not letters:
            if parts:
                parts[-1] += tail
            else:
                parts.append(tail)
            continue
        words = _segment_run(letters, lexicon)
        words[-1] += tail
        parts.extend(words)
    return parts


@lru_cache(maxsize=65536)
def _split_name(name: str, lexicon: Lexicon) -> Tuple[SubToken, ...]:
    tokens = []
    for segment in _UNDERSCORES.split(name):
        if not segment:
            continue
        if segment == UNDERSCORE:
            tokens.append(SubToken(UNDERSCORE, SubTokenKind.UNDERSCORE))
            continue

        pieces = [p for p in _CAMEL_BOUNDARY.split(segment) if p]
        for index, piece in enumerate(pieces):
            if index > 0 and index == len(pieces) - 1 and piece in lexicon.suffixes:
                tokens.append(SubToken(piece, SubTokenKind.SUFFIX))
            elif _LOWER_PIECE.fullmatch(piece):
                tokens.extend(SubToken(word) for word in _split_lower(piece, lexicon))
            else:
                tokens.append(SubToken(piece))
    return tuple(tokens)


def subtokenize_name(name: str, lexicon: Optional[Lexicon] = None) -> List[SubToken]:
    """Split a lemma name into sub-tokens.

    Args:
        name (str): Identifier made of letters, digits, underscores and primes.
        lexicon (Lexicon): Known components, the default lexicon when omitted.

    Returns:
        list of SubToken: Pieces whose texts concatenate back to ``name``.

    Raises:
        EmptyName: ``name`` is empty.
    """
    if not name:
        raise EmptyName("cannot sub-tokenize an empty name")
    return list(_split_name(name, lexicon or default_lexicon()))


def subtokenize_texts(name: str, lexicon: Optional[Lexicon] = None) -> List[str]:
    return [token.text for token in subtokenize_name(name, lexicon)]


def detokenize(tokens: Sequence[Union[SubToken, str]]) -> str:
    if not tokens:
        raise EmptySequence("cannot detokenize an empty sequence")
    return "".join(t.text if isinstance(t, SubToken) else t for t in tokens)


def is_identifier(text: str) -> bool:
    return _IDENTIFIER.fullmatch(text) is not None


def subtokenize_statement(
    tokens: Iterable[SourceToken], lexicon: Optional[Lexicon] = None
) -> List[str]:
    """Split identifier tokens; keywords and operators pass through whole."""
    lexicon = lexicon or default_lexicon()
    items = []
    for token in tokens:
        if token.kind is TokenKind.IDENTIFIER and is_identifier(token.text):
            items.extend(subtokenize_texts(token.text, lexicon))
        else:
            items.append(token.text)
    return items


def subtokenize_atoms(
    atoms: Iterable[str], lexicon: Optional[Lexicon] = None
) -> List[str]:
    """Split the identifier-like items of a flattened tree."""
    lexicon = lexicon or default_lexicon()
    items = []
    for atom in atoms:
        if is_identifier(atom):
            items.extend(subtokenize_texts(atom, lexicon))
        else:
            items.append(atom)
    return items
