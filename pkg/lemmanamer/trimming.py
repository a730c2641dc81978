"""Tree trimming, flattening and tree statistics.

Standard trimming rewrites every node bottom-up: location subtrees are
deleted, fully qualified name subtrees collapse to their final identifier
and lists with a single child are replaced by that child. The result is a
fixpoint of the three rules. The other variants are ablations of it.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Tuple
import numpy as np
from .constants import (
    CLOSE_PAREN,
    DEFAULT_LOCATION_HEADS,
    DEFAULT_QUALIFIED_NAME_HEADS,
    DIRPATH_HEAD,
    ID_HEAD,
    OPEN_PAREN,
)
from .errors import ConfigError
from .sexp import Atom, Sexp, SexpList, depth, node_count, walk
from .subtokenizer import Lexicon, default_lexicon, subtokenize_atoms


class TrimVariant(Enum):
    STANDARD = "standard"
    KEEP_CATEGORY = "keep-category"
    DEPTH_LIMIT = "depth"
    RANDOM = "random"


@dataclass(frozen=True)
class TrimConfig:
    """Which trimming heuristics to apply.

    Args:
        variant (TrimVariant): Heuristic set.
        max_depth (int): Deepest level kept by ``DEPTH_LIMIT``; the root is level 1.
        target_node_count (int): Node budget for ``RANDOM``.
        keep_fraction (float): Alternative ``RANDOM`` budget as a fraction of
            each tree's own node count, used when ``target_node_count`` is None.
        seed (int): Seed of the ``RANDOM`` variant.
        location_heads (frozenset of str): Heads of location subtrees.
        qualified_name_heads (frozenset of str): Heads wrapping a
            ``(DirPath ...) (Id X)`` qualified name.
    """

    variant: TrimVariant = TrimVariant.STANDARD
    max_depth: int = 10
    target_node_count: Optional[int] = None
    keep_fraction: Optional[float] = None
    seed: int = 0
    location_heads: FrozenSet[str] = field(
        default_factory=lambda: frozenset(DEFAULT_LOCATION_HEADS)
    )
    qualified_name_heads: FrozenSet[str] = field(
        default_factory=lambda: frozenset(DEFAULT_QUALIFIED_NAME_HEADS)
    )

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", TrimVariant(self.variant))
        object.__setattr__(self, "location_heads", frozenset(self.location_heads))
        object.__setattr__(
            self, "qualified_name_heads", frozenset(self.qualified_name_heads)
        )
        if self.max_depth < 1:
            raise ConfigError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.variant is TrimVariant.RANDOM:
            if self.target_node_count is None and self.keep_fraction is None:
                raise ConfigError(
                    "random trimming needs target_node_count or keep_fraction"
                )
            if self.target_node_count is not None and self.target_node_count < 1:
                raise ConfigError(
                    f"target_node_count must be >= 1, got {self.target_node_count}"
                )
            if self.keep_fraction is not None and not 0 < self.keep_fraction <= 1:
                raise ConfigError(
                    f"keep_fraction must be in (0, 1], got {self.keep_fraction}"
                )

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "max_depth": self.max_depth,
            "target_node_count": self.target_node_count,
            "keep_fraction": self.keep_fraction,
            "seed": self.seed,
            "location_heads": sorted(self.location_heads),
            "qualified_name_heads": sorted(self.qualified_name_heads),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrimConfig":
        known = {
            "variant",
            "max_depth",
            "target_node_count",
            "keep_fraction",
            "seed",
            "location_heads",
            "qualified_name_heads",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown trim options: {sorted(unknown)}")
        values = dict(data)
        if "variant" in values:
            try:
                values["variant"] = TrimVariant(values["variant"])
            except ValueError:
                raise ConfigError(f"unknown trim variant {values['variant']!r}")
        return cls(**values)


@dataclass(frozen=True)
class TreeStats:
    depth: int
    node_count: int
    flat_subtoken_count: int


# (node, depth) -> keep the node and descend into it?
Enter = Callable[[Sexp, int], bool]
# (original node, rebuilt children, depth, is_root) -> replacement or None to delete
Leave = Callable[[Sexp, Tuple[Sexp, ...], int, bool], Optional[Sexp]]


def rebuild(tree: Sexp, enter: Enter, leave: Leave) -> Sexp:
    """Iterative post-order rebuild. The root is always entered."""
    stack = [[tree, 1, 0, []]]
    result = tree
    while stack:
        frame = stack[-1]
        node, level, index, built = frame
        if isinstance(node, SexpList) and index < len(node.children):
            frame[2] = index + 1
            child = node.children[index]
            if not enter(child, level + 1):
                continue
            if isinstance(child, Atom):
                replacement = leave(child, (), level + 1, False)
                if replacement is not None:
                    built.append(replacement)
            else:
                stack.append([child, level + 1, 0, []])
            continue

        stack.pop()
        replacement = leave(node, tuple(built), level, not stack)
        if stack:
            if replacement is not None:
                stack[-1][3].append(replacement)
        else:
            result = replacement if replacement is not None else node
    return result


def _is_headed(node: Sexp, heads: FrozenSet[str]) -> bool:
    return isinstance(node, SexpList) and node.head in heads


def _qualified_identifier(node: SexpList, heads: FrozenSet[str]) -> Optional[str]:
    """``X`` when node is ``(Head (DirPath ...) (Id X))`` with Head in heads."""
    children = node.children
    if len(children) != 3 or node.head not in heads:
        return None
    dirpath, ident = children[1], children[2]
    if not _is_headed(dirpath, frozenset((DIRPATH_HEAD,))):
        return None
    if (
        not isinstance(ident, SexpList)
        or len(ident.children) != 2
        or ident.head != ID_HEAD
        or not isinstance(ident.children[1], Atom)
    ):
        return None
    return ident.children[1].text


def _heuristic_trim(tree: Sexp, config: TrimConfig) -> Sexp:
    keep_category = config.variant is TrimVariant.KEEP_CATEGORY

    def enter(node: Sexp, level: int) -> bool:
        return not _is_headed(node, config.location_heads)

    def leave(node, children, level, is_root):
        if isinstance(node, Atom):
            return node
        kept = tuple(c for c in children if not _is_headed(c, config.location_heads))
        rebuilt = SexpList(kept)
        identifier = _qualified_identifier(rebuilt, config.qualified_name_heads)
        if identifier is not None:
            if keep_category:
                return SexpList((kept[0], Atom(identifier)))
            return Atom(identifier)
        if len(kept) == 1:
            return kept[0]
        return rebuilt

    return rebuild(tree, enter, leave)


def _depth_limit(tree: Sexp, max_depth: int) -> Sexp:
    def enter(node: Sexp, level: int) -> bool:
        return level <= max_depth

    def leave(node, children, level, is_root):
        return node if isinstance(node, Atom) else SexpList(children)

    return rebuild(tree, enter, leave)


class _Node:
    __slots__ = ("text", "children", "parent", "alive", "removed")

    def __init__(self, text: Optional[str], parent: Optional["_Node"]) -> None:
        self.text = text
        self.children = []  # type: List[_Node]
        self.parent = parent
        self.alive = 0
        self.removed = False


def _to_nodes(tree: Sexp) -> Tuple[_Node, List[_Node]]:
    """Mutable copy of tree plus its leaves (atoms and empty lists) in pre-order."""
    root = None
    leaves = []
    stack = [(tree, None)]
    while stack:
        sexp, parent = stack.pop()
        node = _Node(sexp.text if isinstance(sexp, Atom) else None, parent)
        if parent is None:
            root = node
        else:
            parent.children.append(node)
            parent.alive += 1
        if isinstance(sexp, Atom) or not sexp.children:
            if parent is not None:
                leaves.append(node)
        else:
            stack.extend((child, node) for child in reversed(sexp.children))
    return root, leaves


def _from_nodes(root: _Node) -> Sexp:
    built = {}  # type: Dict[int, Sexp]
    order = []
    stack = [root]
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(c for c in node.children if not c.removed)
    for node in reversed(order):
        if node.text is not None:
            built[id(node)] = Atom(node.text)
        else:
            kept = (c for c in node.children if not c.removed)
            built[id(node)] = SexpList(tuple(built.pop(id(c)) for c in kept))
    return built[id(root)]


def _random_trim(tree: Sexp, config: TrimConfig) -> Sexp:
    total = node_count(tree)
    if config.target_node_count is not None:
        target = config.target_node_count
    else:
        target = max(1, int(round(config.keep_fraction * total)))
    if total <= target:
        return tree

    rng = np.random.default_rng(config.seed)
    root, leaves = _to_nodes(tree)
    while total > target and leaves:
        index = int(rng.integers(len(leaves)))
        leaf = leaves[index]
        leaves[index] = leaves[-1]
        leaves.pop()

        leaf.removed = True
        parent = leaf.parent
        parent.alive -= 1
        total -= 1
        if not parent.alive and parent.parent is not None:
            leaves.append(parent)
    return _from_nodes(root)


def trim(tree: Sexp, config: Optional[TrimConfig] = None) -> Sexp:
    """Simplify an s-tree or k-tree.

    Args:
        tree (Sexp): Parsed tree.
        config (TrimConfig): Heuristics to apply, standard when omitted.

    Returns:
        Sexp: The trimmed tree; atoms come back unchanged.
    """
    config = config or TrimConfig()
    if isinstance(tree, Atom):
        return tree
    if config.variant in (TrimVariant.STANDARD, TrimVariant.KEEP_CATEGORY):
        return _heuristic_trim(tree, config)
    if config.variant is TrimVariant.DEPTH_LIMIT:
        return _depth_limit(tree, config.max_depth)
    return _random_trim(tree, config)


def standard_keep_fraction(
    trees: Iterable[Sexp], config: Optional[TrimConfig] = None
) -> float:
    """Share of nodes standard trimming keeps across ``trees``.

    Random trimming with this ``keep_fraction`` keeps as many nodes on
    average as standard trimming under the heads of ``config``.

    Raises:
        ConfigError: No trees to measure.
    """
    standard = TrimConfig()
    if config is not None:
        standard = TrimConfig(
            location_heads=config.location_heads,
            qualified_name_heads=config.qualified_name_heads,
        )
    before = after = 0
    for tree in trees:
        before += node_count(tree)
        after += node_count(trim(tree, standard))
    if not before:
        raise ConfigError("no trees to measure the standard trimming ratio on")
    return after / before


def flatten(tree: Sexp) -> List[str]:
    """Pre-order token sequence with "(" and ")" marking list boundaries."""
    tokens = []
    for event, text in walk(tree):
        if event == "open":
            tokens.append(OPEN_PAREN)
        elif event == "close":
            tokens.append(CLOSE_PAREN)
        else:
            tokens.append(text)
    return tokens


def stats(tree: Sexp, lexicon: Optional[Lexicon] = None) -> TreeStats:
    lexicon = lexicon or default_lexicon()
    flat = subtokenize_atoms(flatten(tree), lexicon)
    return TreeStats(depth(tree), node_count(tree), len(flat))
