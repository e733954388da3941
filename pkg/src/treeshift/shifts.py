"""Built-in tree-shifts and the presentation wrapper used by the analyses.

A shift is presented either by a normalized forbidden set (finite type) or by
an oracle that decides membership of truncations and enumerates language
blocks.  Oracle presentations are self-tested for shift invariance when
built.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from math import prod
from random import Random
from typing import Callable, Iterator

from .sft import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    Membership,
    NormalizedSft,
    SftEngine,
    block_count,
    block_language,
    viable_fixpoint,
    _guard,
)
from .trees import Alphabets, Block, TruncatedTree, node_count, shift

ZERO, ONE = 0, 1


@dataclass(frozen=True)
class Oracle:
    name: str
    alphabets: Alphabets
    member: Callable[[Block], bool]
    extensions: Callable[[Block | None, int], Iterator[Block]]
    sample: Callable[[int, Random], Block]
    count: Callable[[int], int] | None = None
    gap_witness: Callable[[int], TruncatedTree] | None = None


class ShiftInvarianceError(AssertionError):
    pass


class ShiftSpec:
    """A tree-shift, either of finite type or oracle-presented."""

    def __init__(self, name: str, alphabets: Alphabets, *, sft: NormalizedSft | None = None,
                 oracle: Oracle | None = None, budget: int = DEFAULT_BUDGET):
        if (sft is None) == (oracle is None):
            raise ValueError("give exactly one of sft= or oracle=")
        self.name = name
        self.alphabets = alphabets
        self.sft = sft
        self.oracle = oracle
        self.budget = budget

    def __repr__(self):
        kind = "finite-type" if self.sft is not None else "oracle"
        return f"ShiftSpec({self.name!r}, {kind})"

    @property
    def arity(self) -> int:
        return self.alphabets.arity

    @property
    def is_finite_type(self) -> bool:
        return self.sft is not None

    @cached_property
    def engine(self) -> SftEngine:
        if self.sft is None:
            raise TypeError(f"{self.name} is not presented by a forbidden set")
        return viable_fixpoint(self.sft, self.budget)

    def certify(self, t: TruncatedTree) -> Membership:
        if self.sft is not None:
            return self.engine.certify(t)
        return Membership.IN_X if self.oracle.member(t.body) else Membership.NOT_IN_X

    def in_language(self, b: Block) -> bool:
        if self.sft is not None:
            return self.engine.in_language(b)
        return self.oracle.member(b)

    def extensions(self, start: Block | None, height: int) -> Iterator[Block]:
        if self.sft is not None:
            return self.engine.iter_extensions(start, height)
        return self.oracle.extensions(start, height)

    def language(self, n: int) -> list[Block]:
        if self.sft is not None:
            return block_language(self.engine, n, self.budget)
        if self.oracle.count is not None:
            if self.oracle.count(n) > self.budget:
                raise BudgetExceeded(f"{self.oracle.count(n)} blocks of height {n} exceed the budget {self.budget}")
        else:
            _guard(self.alphabets, n, self.budget)
        return list(self.oracle.extensions(None, n))

    def count(self, n: int) -> int:
        if self.sft is not None:
            return block_count(self.engine, n)
        if self.oracle.count is not None:
            return self.oracle.count(n)
        return sum(1 for _ in self.oracle.extensions(None, n))

    def sample(self, depth: int, rng: Random) -> TruncatedTree:
        if self.sft is not None:
            return self.engine.random_tree(depth, rng)
        return TruncatedTree(self.oracle.sample(depth, rng))


def shift_invariance_self_test(spec: ShiftSpec, trials: int = 1000, depth: int = 5, seed: int = 0) -> None:
    """Sample certified trees; every shifted truncation must stay certified."""
    rng = Random(seed)
    for _ in range(trials):
        t = spec.sample(depth, rng)
        if spec.certify(t) is not Membership.IN_X:
            raise ShiftInvarianceError(f"{spec.name}: sampler produced a non-member {t.labels}")
        for i in range(spec.arity):
            if spec.certify(shift(t, i)) is not Membership.IN_X:
                raise ShiftInvarianceError(
                    f"{spec.name}: sigma^{i} of {t.labels} leaves the shift"
                )


def from_oracle(oracle: Oracle, self_test: bool = True, trials: int = 1000) -> ShiftSpec:
    spec = ShiftSpec(oracle.name, oracle.alphabets, oracle=oracle)
    if self_test:
        shift_invariance_self_test(spec, trials)
    return spec


# ---- finite-type fixtures ------------------------------------------------

def full_shift(arity: int = 2, n_labels: int = 2, p: int = 2) -> ShiftSpec:
    alphabets = Alphabets(arity, tuple(str(x) for x in range(n_labels)))
    return ShiftSpec("full", alphabets, sft=NormalizedSft(alphabets, p, ()))


def golden_mean_tree_sft() -> ShiftSpec:
    """A node labeled 1 may not have a child labeled 1."""
    alphabets = Alphabets.binary()
    forbidden = [
        Block(2, 2, (ONE, a, b)) for a, b in product((ZERO, ONE), repeat=2) if ONE in (a, b)
    ]
    return ShiftSpec("golden-mean", alphabets, sft=NormalizedSft(alphabets, 2, forbidden))


def singleton_shift() -> ShiftSpec:
    """Forbid the label 1 outright: only the all-zero tree remains."""
    alphabets = Alphabets.binary()
    return ShiftSpec("singleton", alphabets, sft=NormalizedSft(alphabets, 1, [Block(2, 1, (ONE,))]))


def golden_mean_string_sft() -> ShiftSpec:
    """Arity 1: the classical one-sided golden-mean shift (no ``11``)."""
    alphabets = Alphabets(1, ("0", "1"))
    return ShiftSpec(
        "golden-mean-string", alphabets, sft=NormalizedSft(alphabets, 2, [Block(1, 2, (ONE, ONE))])
    )


# ---- the row example -------------------------------------------------------

def _row_options(k: int) -> list[tuple[int, ...]]:
    """Level-k label rows with at most one zero, in lexicographic order."""
    width = 2**k
    rows = [tuple(ZERO if j == z else ONE for j in range(width)) for z in range(width)]
    rows.append((ONE,) * width)
    return rows


def _rows_ok(b: Block) -> bool:
    return all(b.level(k).count(ZERO) <= 1 for k in range(b.height))


def _row_extensions(start: Block | None, height: int) -> Iterator[Block]:
    have = 0 if start is None else start.height
    if have > height:
        raise ValueError("start block is taller than the requested height")
    if start is not None and not _rows_ok(start):
        return
    head = () if start is None else start.labels
    for rows in product(*(_row_options(k) for k in range(have, height))):
        labels = head + tuple(x for row in rows for x in row)
        yield Block(2, height, labels)


def _row_sample(depth: int, rng: Random) -> Block:
    labels: list[int] = []
    for k in range(depth):
        width = 2**k
        z = rng.randrange(width + 1)
        labels.extend(ZERO if j == z else ONE for j in range(width))
    return Block(2, depth, tuple(labels))


def non_sft_witness(n: int, depth: int | None = None) -> TruncatedTree:
    """Zeros exactly at ``0^{n+1}`` and ``1^{n+1}``, ones elsewhere.

    Every height-``n`` window has at most one zero, yet level ``n+1`` has two.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    depth = n + 2 if depth is None else depth
    zeros = {(0,) * (n + 1), (1,) * (n + 1)}
    return TruncatedTree(Block.from_function(2, depth, lambda w: ZERO if w in zeros else ONE))


@lru_cache(maxsize=None)
def one_zero_row_shift(self_test: bool = True) -> ShiftSpec:
    """Binary trees with no two zeros on the same level (not of finite type)."""
    oracle = Oracle(
        name="one-zero-row",
        alphabets=Alphabets.binary(),
        member=_rows_ok,
        extensions=_row_extensions,
        sample=_row_sample,
        count=lambda n: prod(2**k + 1 for k in range(n)),
        gap_witness=non_sft_witness,
    )
    return from_oracle(oracle, self_test)


# ---- a shift whose shift maps are not open ---------------------------------

def _one_zero_ok(b: Block) -> bool:
    return b.labels.count(ZERO) <= 1


def _one_zero_extensions(start: Block | None, height: int) -> Iterator[Block]:
    head = () if start is None else start.labels
    if start is not None and start.height > height:
        raise ValueError("start block is taller than the requested height")
    if head.count(ZERO) > 1:
        return
    free = node_count(2, height) - len(head)
    if ZERO not in head:
        for z in range(free):
            yield Block(2, height, head + tuple(ZERO if j == z else ONE for j in range(free)))
    yield Block(2, height, head + (ONE,) * free)


def _one_zero_sample(depth: int, rng: Random) -> Block:
    size = node_count(2, depth)
    z = rng.randrange(size + 1)
    return Block(2, depth, tuple(ZERO if j == z else ONE for j in range(size)))


@lru_cache(maxsize=None)
def at_most_one_zero_shift(self_test: bool = True) -> ShiftSpec:
    """Binary trees with at most one zero anywhere.

    ``sigma^0`` maps the cylinder of ``(0, 1, 1)`` onto the all-ones tree
    alone, which is not isolated, so the image is not open.
    """
    oracle = Oracle(
        name="at-most-one-zero",
        alphabets=Alphabets.binary(),
        member=_one_zero_ok,
        extensions=_one_zero_extensions,
        sample=_one_zero_sample,
        count=lambda n: node_count(2, n) + 1,
    )
    return from_oracle(oracle, self_test)


BUILTINS: dict[str, Callable[[], ShiftSpec]] = {
    "full": full_shift,
    "golden-mean": golden_mean_tree_sft,
    "singleton": singleton_shift,
    "golden-mean-string": golden_mean_string_sft,
    "one-zero-row": one_zero_row_shift,
    "at-most-one-zero": at_most_one_zero_shift,
}


def builtin(name: str) -> ShiftSpec:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin shift {name!r}; choose from {sorted(BUILTINS)}") from None


# ---- finite-type approximation ---------------------------------------------

@dataclass(frozen=True)
class GapReport:
    """Outcome of comparing a shift with the SFT allowing exactly ``B_n(X)``.

    ``gap`` is True when ``witness`` is accepted by the approximation but
    rejected by the shift, False when the two provably coincide, and None
    when the bounded search gave up.
    """

    shift: str
    n: int
    gap: bool | None
    witness: TruncatedTree | None = None
    note: str = ""


def approximating_engine(spec: ShiftSpec, n: int) -> SftEngine:
    allowed = spec.language(n)
    return viable_fixpoint(NormalizedSft(spec.alphabets, n, allowed=allowed), spec.budget)


def sft_approximation_gap(spec: ShiftSpec, n: int, search_depth: int = 3) -> GapReport:
    if n < 1:
        raise ValueError("n must be >= 1")
    if spec.is_finite_type and n >= spec.engine.p:
        return GapReport(spec.name, n, False, note=f"no gap at n >= p = {spec.engine.p}")
    approx = approximating_engine(spec, n)
    if spec.oracle is not None and spec.oracle.gap_witness is not None:
        t = spec.oracle.gap_witness(n)
        if approx.certify(t) is Membership.IN_X and spec.certify(t) is Membership.NOT_IN_X:
            return GapReport(spec.name, n, True, t, note="built-in witness")
    if spec.is_finite_type:
        depths = [spec.engine.p]
    else:
        depths = list(range(n + 1, n + 1 + search_depth))
    try:
        for depth in depths:
            _guard(spec.alphabets, depth, spec.budget)
            for b in approx.iter_extensions(None, depth):
                t = TruncatedTree(b)
                if spec.certify(t) is Membership.NOT_IN_X:
                    return GapReport(spec.name, n, True, t, note="found by search")
    except BudgetExceeded as exc:
        return GapReport(spec.name, n, None, note=str(exc))
    if spec.is_finite_type:
        return GapReport(spec.name, n, False, note="approximation agrees on height-p windows")
    return GapReport(spec.name, n, None, note=f"no witness up to depth {depths[-1]}")
