"""Tree-shifts of finite type: forbidden sets, the viability fixpoint, languages.

The engine reduces everything to height-``p`` windows.  A tree belongs to the
shift exactly when every height-``p`` window of it lies in ``B_p(X)``, and
``B_p(X)`` is the greatest set of locally admissible height-``p`` blocks in
which every block has, in every direction, a member overlapping it on the
shared ``p - 1`` levels.

Rigid blocks
------------
``rigidity_fixpoint`` keeps the viable blocks that have exactly one
consistent child per direction, repeatedly, until nothing changes.  A viable
``b`` has a singleton cylinder ``[b]`` if and only if it survives:

* If ``b`` survives, it had exactly one viable child per direction from the
  first round on (counts only shrink, and a count of 0 or >= 2 removes it),
  and that child survives too.  Every level of every tree in ``[b]`` is then
  forced, so ``[b]`` has one point.
* If ``[b]`` is a singleton, ``b`` has exactly one viable child ``c`` per
  direction: given two, grafting a tree of ``[c']`` into the ``i``-subtree of
  the point of ``[b]`` gives a second point (every window is either the root
  window ``b``, or lies wholly inside a subtree that belongs to ``X``).  The
  same grafting shows ``[c]`` is a singleton, so by induction singleton
  blocks are never removed.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from math import prod
from random import Random
from typing import Iterable, Iterator

from .trees import (
    EMPTY,
    Alphabets,
    Block,
    DepthError,
    TruncatedTree,
    Word,
    all_blocks,
    bfs_index,
    format_word,
    node_count,
    restrict,
    window_indices,
    words,
)

DEFAULT_BUDGET = 2**24


class BudgetExceeded(RuntimeError):
    pass


class NotInLanguage(ValueError):
    pass


class Membership(enum.Enum):
    IN_X = "InX-certified"
    NOT_IN_X = "NotInX"
    UNDETERMINED = "Undetermined"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Pattern:
    """A labeling of a finite prefix-closed set of words."""

    cells: tuple[tuple[Word, int], ...]

    def __post_init__(self):
        if not self.cells:
            raise ValueError("pattern domain must be non-empty")
        domain = {w for w, _ in self.cells}
        if len(domain) != len(self.cells):
            raise ValueError("pattern assigns a word twice")
        for w in domain:
            if w and w[:-1] not in domain:
                raise ValueError(f"pattern domain not prefix-closed: {format_word(w)} without its parent")

    @classmethod
    def of(cls, mapping: dict[Word, int]) -> Pattern:
        return cls(tuple(sorted(mapping.items(), key=lambda kv: (len(kv[0]), kv[0]))))

    @classmethod
    def from_block(cls, b: Block) -> Pattern:
        return cls(tuple(zip(words(b.arity, b.height), b.labels)))

    @property
    def height(self) -> int:
        return 1 + max(len(w) for w, _ in self.cells)


@dataclass(frozen=True)
class ForbiddenSet:
    alphabets: Alphabets
    patterns: tuple[Pattern, ...] = ()

    @property
    def min_height(self) -> int:
        return max((p.height for p in self.patterns), default=1)


class NormalizedSft:
    """Forbidden blocks of one common height ``p``.

    Built either from the forbidden blocks or, for approximations by a known
    language, from the allowed ones (the complement is then never stored).
    """

    def __init__(
        self,
        alphabets: Alphabets,
        height: int,
        forbidden: Iterable[Block] = (),
        *,
        allowed: Iterable[Block] | None = None,
    ):
        if height < 1:
            raise ValueError("forbidden height must be >= 1")
        self.alphabets = alphabets
        self.height = height
        self._allowed = None
        if allowed is not None:
            self._allowed = frozenset(b.labels for b in allowed)
        self._forbidden = frozenset(b.labels for b in forbidden)
        for labels in self._forbidden | (self._allowed or frozenset()):
            b = Block(alphabets.arity, height, labels)
            alphabets.check(b)

    @property
    def arity(self) -> int:
        return self.alphabets.arity

    def is_forbidden(self, labels: tuple[int, ...]) -> bool:
        if self._allowed is not None:
            return labels not in self._allowed
        return labels in self._forbidden

    @cached_property
    def forbidden(self) -> tuple[Block, ...]:
        if self._allowed is None:
            return tuple(Block(self.arity, self.height, x) for x in sorted(self._forbidden))
        return tuple(
            b for b in all_blocks(self.arity, self.alphabets.size, self.height)
            if b.labels not in self._allowed
        )

    def admissible(self, budget: int = DEFAULT_BUDGET) -> list[tuple[int, ...]]:
        """Label tuples of all height-p blocks not forbidden, in canonical order."""
        if self._allowed is not None:
            return sorted(self._allowed)
        _guard(self.alphabets, self.height, budget)
        return [
            labels
            for labels in product(range(self.alphabets.size), repeat=node_count(self.arity, self.height))
            if labels not in self._forbidden
        ]

    def __eq__(self, other):
        if not isinstance(other, NormalizedSft):
            return NotImplemented
        return (
            self.alphabets == other.alphabets
            and self.height == other.height
            and set(self.forbidden) == set(other.forbidden)
        )

    def __hash__(self):
        return hash((self.alphabets, self.height, frozenset(self.forbidden)))

    def __repr__(self):
        return f"NormalizedSft(arity={self.arity}, labels={self.alphabets.labels}, height={self.height}, forbidden={len(self.forbidden)})"


def _guard(alphabets: Alphabets, height: int, budget: int) -> None:
    size = alphabets.size ** node_count(alphabets.arity, height)
    if size > budget:
        raise BudgetExceeded(
            f"{size} candidate blocks of height {height} exceeds the enumeration budget {budget}"
        )


def normalize(f: ForbiddenSet, p: int, budget: int = DEFAULT_BUDGET) -> NormalizedSft:
    """Extend every pattern to all height-``p`` blocks that contain it at the root."""
    if p < f.min_height:
        raise ValueError(f"height {p} too small for a pattern of height {f.min_height}")
    arity = f.alphabets.arity
    forbidden: set[tuple[int, ...]] = set()
    all_words = words(arity, p)
    for pat in f.patterns:
        fixed = {bfs_index(w, arity): x for w, x in pat.cells}
        for x in fixed.values():
            if not 0 <= x < f.alphabets.size:
                raise ValueError(f"label {x} outside the alphabet")
        free = [j for j in range(len(all_words)) if j not in fixed]
        if f.alphabets.size ** len(free) > budget:
            raise BudgetExceeded(f"normalizing a pattern to height {p} exceeds the budget {budget}")
        for fill in product(range(f.alphabets.size), repeat=len(free)):
            labels = [0] * len(all_words)
            for j, x in fixed.items():
                labels[j] = x
            for j, x in zip(free, fill):
                labels[j] = x
            forbidden.add(tuple(labels))
    return NormalizedSft(f.alphabets, p, (Block(arity, p, x) for x in forbidden))


def locally_admissible(b: Block, sft: NormalizedSft) -> bool:
    """No forbidden window lies wholly inside ``b``."""
    p = sft.height
    if b.height < p:
        raise DepthError(f"block height {b.height} below forbidden height {p}")
    for k in range(b.height - p + 1):
        for w in product(range(b.arity), repeat=k):
            idx = window_indices(b.arity, w, p)
            if sft.is_forbidden(tuple(b.labels[j] for j in idx)):
                return False
    return True


class SftEngine:
    """Viable height-``p`` blocks and the child relation between them."""

    def __init__(self, sft: NormalizedSft, viable: Iterable[tuple[int, ...]], budget: int = DEFAULT_BUDGET):
        self.sft = sft
        self.alphabets = sft.alphabets
        self.arity = sft.arity
        self.p = sft.height
        self.budget = budget
        self._viable = frozenset(viable)
        self.viable = tuple(Block(self.arity, self.p, x) for x in sorted(self._viable))
        self._children = _child_table(self._viable, self.arity, self.p)
        self._counts: list[dict[tuple[int, ...], int]] = []
        self._prefix_lang: dict[int, frozenset[tuple[int, ...]]] = {}
        self._checks: dict[int, list[list[tuple[tuple[int, ...], frozenset]]]] = {}

    @property
    def n_labels(self) -> int:
        return self.alphabets.size

    def child_rel(self, b: Block, i: int) -> tuple[Block, ...]:
        return tuple(Block(self.arity, self.p, c) for c in self._children[b.labels, i])

    def is_viable(self, b: Block) -> bool:
        return b.labels in self._viable

    # ---- languages ---------------------------------------------------

    def prefix_language(self, h: int) -> frozenset[tuple[int, ...]]:
        """Label tuples of ``B_h(X)`` for ``h <= p``."""
        if h > self.p:
            raise ValueError("prefix_language only covers heights up to p")
        if h not in self._prefix_lang:
            idx = window_indices(self.arity, EMPTY, h)
            self._prefix_lang[h] = frozenset(tuple(v[j] for j in idx) for v in self._viable)
        return self._prefix_lang[h]

    def _count_table(self, h: int) -> dict[tuple[int, ...], int]:
        """Number of height-``h`` language blocks with each viable root window."""
        if not self._counts:
            self._counts.append({v: 1 for v in self._viable})
        while len(self._counts) <= h - self.p:
            last = self._counts[-1]
            self._counts.append({
                v: prod(sum(last[c] for c in self._children[v, i]) for i in range(self.arity))
                for v in self._viable
            })
        return self._counts[h - self.p]

    def in_language(self, b: Block) -> bool:
        if b.height <= self.p:
            return b.labels in self.prefix_language(b.height)
        return self.certify(TruncatedTree(b)) is Membership.IN_X

    def certify(self, t: TruncatedTree) -> Membership:
        if t.depth < self.p:
            raise DepthError(f"truncation depth {t.depth} below forbidden height {self.p}")
        labels = t.labels
        for k in range(t.depth - self.p + 1):
            for w in product(range(self.arity), repeat=k):
                idx = window_indices(self.arity, w, self.p)
                if tuple(labels[j] for j in idx) not in self._viable:
                    return Membership.NOT_IN_X
        return Membership.IN_X

    def first_bad_window(self, t: TruncatedTree) -> Word | None:
        labels = t.labels
        for k in range(t.depth - self.p + 1):
            for w in product(range(self.arity), repeat=k):
                idx = window_indices(self.arity, w, self.p)
                if tuple(labels[j] for j in idx) not in self._viable:
                    return w
        return None

    # ---- extension search --------------------------------------------

    def _check_table(self, height: int):
        if height in self._checks:
            return self._checks[height]
        size = node_count(self.arity, height)
        checks: list[list] = [[] for _ in range(size)]
        for lev in range(min(height, self.p)):
            last = node_count(self.arity, lev + 1) - 1
            checks[last].append((tuple(range(last + 1)), self.prefix_language(lev + 1)))
        for k in range(1, height - self.p + 1):
            for w in product(range(self.arity), repeat=k):
                idx = window_indices(self.arity, w, self.p)
                checks[max(idx)].append((idx, self._viable))
        self._checks[height] = checks
        return checks

    def iter_extensions(
        self, start: Block | None, height: int, rng: Random | None = None
    ) -> Iterator[Block]:
        """Language blocks of ``height`` whose top levels equal ``start``.

        Deterministic calls yield in canonical order; with ``rng`` the label
        order at each node is shuffled.
        """
        fixed = () if start is None else start.labels
        size = node_count(self.arity, height)
        if len(fixed) > size:
            raise ValueError("start block is taller than the requested height")
        checks = self._check_table(height)
        labels: list[int] = list(fixed) + [0] * (size - len(fixed))

        def ok(j):
            for idx, allowed in checks[j]:
                if tuple(labels[k] for k in idx) not in allowed:
                    return False
            return True

        for j in range(len(fixed)):
            if not ok(j):
                return
        if len(fixed) == size:
            yield Block(self.arity, height, tuple(labels))
            return

        L = self.n_labels

        def order():
            if rng is None:
                return list(range(L - 1, -1, -1))
            out = list(range(L))
            rng.shuffle(out)
            return out

        begin = len(fixed)
        cands: list[list[int]] = [[] for _ in range(size)]
        j = begin
        cands[j] = order()
        while True:
            if not cands[j]:
                j -= 1
                if j < begin:
                    return
                continue
            labels[j] = cands[j].pop()
            if not ok(j):
                continue
            if j == size - 1:
                yield Block(self.arity, height, tuple(labels))
                continue
            j += 1
            cands[j] = order()

    def random_extension(self, start: Block | None, height: int, rng: Random) -> Block:
        for b in self.iter_extensions(start, height, rng):
            return b
        raise NotInLanguage("start block does not extend to a tree of the shift")

    def random_tree(self, depth: int, rng: Random) -> TruncatedTree:
        return TruncatedTree(self.random_extension(None, depth, rng))


def _child_table(viable: frozenset, arity: int, p: int) -> dict:
    table = {}
    if p == 1:
        everything = tuple(sorted(viable))
        for v in viable:
            for i in range(arity):
                table[v, i] = everything
        return table
    top = window_indices(arity, EMPTY, p - 1)
    by_top = defaultdict(list)
    for c in sorted(viable):
        by_top[tuple(c[j] for j in top)].append(c)
    subs = [window_indices(arity, (i,), p - 1) for i in range(arity)]
    for v in viable:
        for i in range(arity):
            table[v, i] = tuple(by_top.get(tuple(v[j] for j in subs[i]), ()))
    return table


def viable_fixpoint(sft: NormalizedSft, budget: int = DEFAULT_BUDGET) -> SftEngine:
    """Greatest set of admissible height-p blocks closed under having children."""
    alive = set(sft.admissible(budget))
    arity, p = sft.arity, sft.height
    if p == 1:
        return SftEngine(sft, alive, budget)
    top = window_indices(arity, EMPTY, p - 1)
    subs = [window_indices(arity, (i,), p - 1) for i in range(arity)]
    while True:
        tops = {tuple(c[j] for j in top) for c in alive}
        dead = {
            v for v in alive
            if any(tuple(v[j] for j in sub) not in tops for sub in subs)
        }
        if not dead:
            break
        alive -= dead
    return SftEngine(sft, alive, budget)


def block_count(e: SftEngine, n: int) -> int:
    if n < 1:
        raise ValueError("block height must be >= 1")
    if n <= e.p:
        return len(e.prefix_language(n))
    return sum(e._count_table(n).values())


def block_language(e: SftEngine, n: int, budget: int | None = None) -> list[Block]:
    """``B_n(X)`` in canonical order."""
    if n < 1:
        raise ValueError("block height must be >= 1")
    _guard(e.alphabets, n, e.budget if budget is None else budget)
    if n <= e.p:
        return [Block(e.arity, n, x) for x in sorted(e.prefix_language(n))]
    return list(e.iter_extensions(None, n))


def certify_membership(t: TruncatedTree, e: SftEngine) -> Membership:
    return e.certify(t)


def extension_count(e: SftEngine, b: Block, extra: int) -> int:
    """Number of blocks of ``B_{h+extra}(X)`` restricting to ``b``."""
    if extra < 1:
        raise ValueError("extra must be >= 1")
    if not e.in_language(b):
        raise NotInLanguage("block is not in the language of the shift")
    h, p, H = b.height, e.p, b.height + extra
    if h >= p:
        k = h - p
        table = e._count_table(H - k)
        return prod(
            table[tuple(b.labels[j] for j in window_indices(e.arity, w, p))]
            for w in product(range(e.arity), repeat=k)
        )
    top = window_indices(e.arity, EMPTY, h)
    above = [v for v in sorted(e._viable) if tuple(v[j] for j in top) == b.labels]
    if H <= p:
        idx = window_indices(e.arity, EMPTY, H)
        return len({tuple(v[j] for j in idx) for v in above})
    table = e._count_table(H)
    return sum(table[v] for v in above)


def rigidity_fixpoint(e: SftEngine) -> list[Block]:
    """Viable blocks whose cylinder is a single tree (see module notes)."""
    alive = set(e._viable)
    while True:
        dead = {
            v for v in alive
            if any(sum(1 for c in e._children[v, i] if c in alive) != 1 for i in range(e.arity))
        }
        if not dead:
            break
        alive -= dead
    return [Block(e.arity, e.p, x) for x in sorted(alive)]


def is_empty(e: SftEngine) -> bool:
    return not e.viable


def is_perfect(e: SftEngine) -> bool:
    return bool(e.viable) and not rigidity_fixpoint(e)


def build_engine(f: ForbiddenSet | NormalizedSft, p: int | None = None, budget: int = DEFAULT_BUDGET) -> SftEngine:
    """Normalize (if needed) and run the viability fixpoint."""
    if isinstance(f, ForbiddenSet):
        f = normalize(f, f.min_height if p is None else p, budget)
    return viable_fixpoint(f, budget)


def first_extension(e: SftEngine, start: Block | None, depth: int) -> TruncatedTree:
    """Canonically first language block of ``depth`` extending ``start``."""
    for b in e.iter_extensions(start, depth):
        return TruncatedTree(b)
    raise NotInLanguage("block does not extend to a tree of the shift")
