"""Words, blocks, truncated trees and the operations shared by every module.

Nodes of the full ``arity``-ary tree are words over ``range(arity)``.  A block
of height ``h`` labels every word of length ``< h``; labels are stored as a
flat tuple of small ints in canonical order (by level, then lexicographically
inside a level), so word ``w`` of length ``k`` sits at index
``node_count(arity, k) + int(w, base=arity)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterator, Sequence

Word = tuple[int, ...]

EMPTY: Word = ()


class DepthError(ValueError):
    """A window or shift reads below the visible depth of a block."""


@dataclass(frozen=True)
class Alphabets:
    """Directions ``0..arity-1`` and the label symbol table."""

    arity: int
    labels: tuple[str, ...]

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError(f"arity must be >= 1, got {self.arity}")
        if not self.labels:
            raise ValueError("label alphabet must be non-empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError(f"duplicate label symbols in {self.labels}")

    @classmethod
    def binary(cls) -> Alphabets:
        return cls(2, ("0", "1"))

    @property
    def size(self) -> int:
        return len(self.labels)

    def symbol(self, label: int) -> str:
        return self.labels[label]

    def code(self, symbol: str) -> int:
        try:
            return self.labels.index(symbol)
        except ValueError:
            raise ValueError(f"unknown label {symbol!r}; expected one of {self.labels}") from None

    def check(self, block: Block) -> None:
        if block.arity != self.arity:
            raise ValueError(f"block arity {block.arity} != alphabet arity {self.arity}")
        bad = [x for x in block.labels if not 0 <= x < self.size]
        if bad:
            raise ValueError(f"labels {bad} outside 0..{self.size - 1}")


def node_count(arity: int, height: int) -> int:
    """Number of words of length < height."""
    if height <= 0:
        return 0
    if arity == 1:
        return height
    return (arity**height - 1) // (arity - 1)


@lru_cache(maxsize=None)
def words(arity: int, height: int) -> tuple[Word, ...]:
    """All words of length < height in canonical order."""
    out: list[Word] = []
    for k in range(height):
        out.extend(product(range(arity), repeat=k))
    return tuple(out)


def level_words(arity: int, k: int) -> Iterator[Word]:
    return product(range(arity), repeat=k)


def bfs_index(w: Sequence[int], arity: int) -> int:
    value = 0
    for letter in w:
        if not 0 <= letter < arity:
            raise ValueError(f"letter {letter} out of range for arity {arity}")
        value = value * arity + letter
    return node_count(arity, len(w)) + value


@lru_cache(maxsize=None)
def window_indices(arity: int, at: Word, k: int) -> tuple[int, ...]:
    """Indices (into any block containing them) of the nodes ``at·u``, ``|u| < k``."""
    return tuple(bfs_index(at + u, arity) for u in words(arity, k))


@lru_cache(maxsize=None)
def _level_of(arity: int, height: int) -> tuple[int, ...]:
    return tuple(len(w) for w in words(arity, height))


@dataclass(frozen=True, slots=True)
class Block:
    """A complete labeling of the words of length < height."""

    arity: int
    height: int
    labels: tuple[int, ...]

    def __post_init__(self):
        if self.height < 1:
            raise ValueError(f"block height must be >= 1, got {self.height}")
        if len(self.labels) != node_count(self.arity, self.height):
            raise ValueError(
                f"height-{self.height} block over arity {self.arity} needs "
                f"{node_count(self.arity, self.height)} labels, got {len(self.labels)}"
            )

    def __getitem__(self, w: Sequence[int]) -> int:
        if len(w) >= self.height:
            raise DepthError(f"node {format_word(w)} is below height {self.height}")
        return self.labels[bfs_index(w, self.arity)]

    def level(self, k: int) -> tuple[int, ...]:
        start = node_count(self.arity, k)
        return self.labels[start : start + self.arity**k]

    @classmethod
    def constant(cls, arity: int, height: int, label: int) -> Block:
        return cls(arity, height, (label,) * node_count(arity, height))

    @classmethod
    def from_function(cls, arity: int, height: int, f) -> Block:
        return cls(arity, height, tuple(f(w) for w in words(arity, height)))

    @classmethod
    def graft(cls, root: int, children: Sequence[Block]) -> Block:
        """Block with the given root label and one subtree per direction."""
        arity = len(children)
        h = children[0].height
        labels = [root]
        for k in range(h):
            for c in children:
                labels.extend(c.level(k))
        return cls(arity, h + 1, tuple(labels))


@dataclass(frozen=True, slots=True)
class TruncatedTree:
    """The first ``depth`` levels of an infinite tree.

    Only ``body`` is known; nothing below ``depth`` may be read or invented.
    """

    body: Block

    @property
    def depth(self) -> int:
        return self.body.height

    @property
    def arity(self) -> int:
        return self.body.arity

    @property
    def labels(self) -> tuple[int, ...]:
        return self.body.labels

    def __getitem__(self, w: Sequence[int]) -> int:
        return self.body[w]

    @classmethod
    def of(cls, arity: int, labels: Sequence[int]) -> TruncatedTree:
        labels = tuple(labels)
        return cls(Block(arity, height_of(arity, len(labels)), labels))


def height_of(arity: int, size: int) -> int:
    h = 0
    while node_count(arity, h) < size:
        h += 1
    if node_count(arity, h) != size:
        raise ValueError(f"{size} labels do not form a complete block over arity {arity}")
    return h


def restrict(b: Block, at: Sequence[int], k: int) -> Block:
    """The height-``k`` block ``c`` with ``c_u = b_{at·u}``."""
    at = tuple(at)
    if k < 1:
        raise ValueError(f"window height must be >= 1, got {k}")
    if len(at) + k > b.height:
        raise DepthError(
            f"window of height {k} at {format_word(at)} exceeds block height {b.height}"
        )
    labels = b.labels
    return Block(b.arity, k, tuple(labels[j] for j in window_indices(b.arity, at, k)))


def prefix(t: TruncatedTree | Block, k: int) -> Block:
    body = t.body if isinstance(t, TruncatedTree) else t
    return restrict(body, EMPTY, k)


def truncate(t: TruncatedTree, depth: int) -> TruncatedTree:
    return TruncatedTree(restrict(t.body, EMPTY, depth))


def shift(t: TruncatedTree, i: int) -> TruncatedTree:
    """sigma^i of t, one level shallower."""
    if not 0 <= i < t.arity:
        raise ValueError(f"direction {i} out of range for arity {t.arity}")
    if t.depth < 2:
        raise DepthError("cannot shift a depth-1 truncation")
    return TruncatedTree(restrict(t.body, (i,), t.depth - 1))


def shift_word(t: TruncatedTree, w: Sequence[int]) -> TruncatedTree:
    """sigma^w = sigma^{w_{n-1}} o ... o sigma^{w_0}: apply w_0 first."""
    for i in w:
        t = shift(t, i)
    return t


def distance_level(s: TruncatedTree, t: TruncatedTree) -> int | None:
    """Level ``n`` of the first disagreement, so ``d(s, t) = 2**-(n+1)``.

    ``None`` means the truncations agree everywhere they are visible.
    """
    if s.depth != t.depth or s.arity != t.arity:
        raise ValueError(f"depth mismatch: {s.depth} vs {t.depth}")
    levels = _level_of(s.arity, s.depth)
    for j, (x, y) in enumerate(zip(s.labels, t.labels)):
        if x != y:
            return levels[j]
    return None


def first_difference(a: Block, b: Block) -> Word | None:
    """Canonically first node where two equal-shape blocks differ."""
    for j, (x, y) in enumerate(zip(a.labels, b.labels)):
        if x != y:
            return words(a.arity, a.height)[j]
    return None


def cylinder_match(t: TruncatedTree, b: Block) -> bool:
    if t.depth < b.height:
        raise DepthError(f"truncation depth {t.depth} shallower than block height {b.height}")
    return restrict(t.body, EMPTY, b.height) == b


def all_blocks(arity: int, n_labels: int, height: int) -> Iterator[Block]:
    """Every height-``height`` block, in canonical (lexicographic) order."""
    for labels in product(range(n_labels), repeat=node_count(arity, height)):
        yield Block(arity, height, labels)


def format_word(w: Sequence[int]) -> str:
    if not w:
        return "e"
    if all(x < 10 for x in w):
        return "".join(str(x) for x in w)
    return ".".join(str(x) for x in w)


def parse_word(text: str, arity: int) -> Word:
    text = text.strip()
    if text in ("e", "ε", ""):
        return EMPTY
    parts = text.split(".") if "." in text else list(text)
    w = tuple(int(x) for x in parts)
    for x in w:
        if not 0 <= x < arity:
            raise ValueError(f"letter {x} out of range for arity {arity} in word {text!r}")
    return w


def format_block(b: Block, alphabets: Alphabets | None = None) -> str:
    if alphabets is None:
        return " ".join(str(x) for x in b.labels)
    return " ".join(alphabets.symbol(x) for x in b.labels)


def parse_block(text: str, alphabets: Alphabets) -> Block:
    labels = tuple(alphabets.code(tok) for tok in text.split())
    return Block(alphabets.arity, height_of(alphabets.arity, len(labels)), labels)
