"""S-expression values, parser and printer.

The text format is the one produced by the proof assistant serializer:
bare atoms, double-quoted atoms with ``\\"`` and ``\\\\`` escapes, and
parenthesized lists. Parsing and printing are iterative, so trees up to
``MAX_SEXP_DEPTH`` levels deep are handled without touching the Python
recursion limit.
"""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, List, Optional, Sequence, Tuple, Union
from .constants import MAX_SEXP_DEPTH
from .errors import (
    EmptyAtom,
    MalformedToken,
    NestingTooDeep,
    SexpError,
    UnbalancedParen,
    UnexpectedTrailingInput,
    UnterminatedString,
)

_BARE_ATOM = re.compile(r'[^\s()"]+')


@dataclass(frozen=True)
class Atom:
    """A leaf of an s-expression.

    Args:
        text (str): Unescaped atom text, never empty.
    """

    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("atom text must be non-empty")


@dataclass(frozen=True)
class SexpList:
    """A parenthesized, possibly empty, list of s-expressions.

    Args:
        children (tuple of Sexp): Ordered children.
    """

    children: Tuple["Sexp", ...] = ()

    @property
    def head(self) -> Optional[str]:
        """Text of the first child when it is an atom."""
        if self.children and isinstance(self.children[0], Atom):
            return self.children[0].text
        return None


Sexp = Union[Atom, SexpList]


def slist(*children: Union[Sexp, str]) -> SexpList:
    """List builder; plain strings become atoms."""
    return SexpList(tuple(Atom(c) if isinstance(c, str) else c for c in children))


class TokenKind(Enum):
    IDENTIFIER = "ident"
    KEYWORD = "keyword"


_TOKEN_HEADS = {"IDENT": TokenKind.IDENTIFIER, "KEYWORD": TokenKind.KEYWORD}


@dataclass(frozen=True)
class SourceToken:
    """A lexer token of a sentence.

    Args:
        text (str): Token text.
        kind (TokenKind): Identifier or keyword.
    """

    text: str
    kind: TokenKind


def parse_sexp(text: str, max_depth: int = MAX_SEXP_DEPTH) -> Sexp:
    """Parse exactly one s-expression.

    Args:
        text (str): Source text; whitespace between siblings is ignored.
        max_depth (int): Maximum list nesting accepted.

    Returns:
        Sexp: The parsed tree.

    Raises:
        UnbalancedParen: A list is never closed or a ``)`` has no opener.
        UnexpectedTrailingInput: Text follows the first complete value.
        UnterminatedString: A quoted atom runs to the end of the input.
    """
    stack = []  # type: List[List[Sexp]]
    opened_at = []  # type: List[int]
    result = None  # type: Optional[Sexp]
    i = 0
    n = len(text)

    while i < n:
        char = text[i]
        if char.isspace():
            i += 1
            continue
        if result is not None:
            raise UnexpectedTrailingInput(i)

        if char == "(":
            if len(stack) >= max_depth:
                raise NestingTooDeep(i, max_depth)
            stack.append([])
            opened_at.append(i)
            i += 1
            continue

        if char == ")":
            if not stack:
                raise UnbalancedParen(i)
            node = SexpList(tuple(stack.pop()))  # type: Sexp
            opened_at.pop()
            i += 1
        elif char == '"':
            node, i = _read_quoted(text, i)
        else:
            match = _BARE_ATOM.match(text, i)
            node = Atom(match.group())
            i = match.end()

        if stack:
            stack[-1].append(node)
        else:
            result = node

    if stack:
        raise UnbalancedParen(opened_at[-1])
    if result is None:
        raise SexpError("no s-expression in input", 0)
    return result


def _read_quoted(text: str, start: int) -> Tuple[Atom, int]:
    chars = []
    i = start + 1
    n = len(text)
    while i < n:
        char = text[i]
        if char == "\\" and i + 1 < n:
            following = text[i + 1]
            if following in ('"', "\\"):
                chars.append(following)
            else:
                chars.append(char)
                chars.append(following)
            i += 2
        elif char == '"':
            if not chars:
                raise EmptyAtom(start)
            return Atom("".join(chars)), i + 1
        else:
            chars.append(char)
            i += 1
    raise UnterminatedString(start)


def _needs_quotes(text: str) -> bool:
    return any(char.isspace() or char in '()"' for char in text)


def _quote(text: str) -> str:
    if not _needs_quotes(text):
        return text
    escaped = text.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def walk(tree: Sexp) -> Iterator[Tuple[str, Optional[str]]]:
    """Yield ``("open", None)``, ``("atom", text)`` and ``("close", None)``
    events in pre-order."""
    stack = [tree]  # type: List[Union[Sexp, None]]
    while stack:
        node = stack.pop()
        if node is None:
            yield "close", None
        elif isinstance(node, Atom):
            yield "atom", node.text
        else:
            yield "open", None
            stack.append(None)
            stack.extend(reversed(node.children))


def print_sexp(tree: Sexp) -> str:
    """Canonical text: one space between siblings, none next to parentheses."""
    parts = []  # type: List[str]
    previous = None
    for event, text in walk(tree):
        if previous is not None and previous != "open" and event != "close":
            parts.append(" ")
        if event == "open":
            parts.append("(")
        elif event == "close":
            parts.append(")")
        else:
            parts.append(_quote(text))
        previous = event
    return "".join(parts)


def depth(tree: Sexp) -> int:
    """Atoms have depth 1; a list is one deeper than its deepest child."""
    best = 0
    current = 0
    for event, _ in walk(tree):
        if event == "open":
            current += 1
            best = max(best, current)
        elif event == "close":
            current -= 1
        else:
            best = max(best, current + 1)
    return best


def node_count(tree: Sexp) -> int:
    """Number of atoms plus number of lists."""
    return sum(1 for event, _ in walk(tree) if event != "close")


def parse_sentence_tokens(tree: Sexp) -> List[SourceToken]:
    """Read the tokens of a ``(Sentence (...))`` s-expression.

    Args:
        tree (Sexp): Parsed token s-expression.

    Returns:
        list of SourceToken: Tokens in source order, name and period included.

    Raises:
        MalformedToken: A child is not a two-element IDENT/KEYWORD list.
    """
    if (
        not isinstance(tree, SexpList)
        or tree.head != "Sentence"
        or len(tree.children) != 2
        or not isinstance(tree.children[1], SexpList)
    ):
        raise SexpError("expected (Sentence (...))", 0)

    tokens = []
    for index, child in enumerate(tree.children[1].children):
        if (
            not isinstance(child, SexpList)
            or len(child.children) != 2
            or child.head not in _TOKEN_HEADS
            or not isinstance(child.children[1], Atom)
        ):
            raise MalformedToken(index)
        tokens.append(SourceToken(child.children[1].text, _TOKEN_HEADS[child.head]))
    return tokens


def sentence_sexp(tokens: Sequence[SourceToken]) -> SexpList:
    """Inverse of :func:`parse_sentence_tokens`."""
    heads = {kind: head for head, kind in _TOKEN_HEADS.items()}
    return slist(
        Atom("Sentence"),
        SexpList(tuple(slist(Atom(heads[t.kind]), Atom(t.text)) for t in tokens)),
    )
