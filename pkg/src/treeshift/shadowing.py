"""Finite pseudo-orbits, the traced tree, and tracing checks.

A pseudo-orbit of order ``N`` assigns a truncated tree ``t^(w)`` to every
index word ``w`` of length ``< N``.  At resolution ``n`` it requires
``sigma^i(t^(w))`` and ``t^(wi)`` to agree on their first ``n`` levels, which
is the prefix form of ``d < 2^-n``; no floating-point distances are used.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from random import Random
from typing import Mapping

from .sft import Membership, NotInLanguage, SftEngine, is_empty
from .trees import (
    EMPTY,
    Alphabets,
    Block,
    DepthError,
    TruncatedTree,
    Word,
    first_difference,
    format_word,
    restrict,
    words,
)


class UnverifiedFamily(ValueError):
    pass


@dataclass(frozen=True)
class TraceReport:
    passed: bool
    checked_depth: int
    first_violation: tuple[Word, Word] | None = None
    direction: int | None = None
    detail: str = ""

    def __bool__(self):
        return self.passed

    def describe(self) -> str:
        if self.passed:
            return f"pass (checked depth {self.checked_depth})"
        w, u = self.first_violation
        where = f"index {format_word(w)}, node {format_word(u)}"
        if self.direction is not None:
            where += f", direction {self.direction}"
        return f"fail at {where}" + (f": {self.detail}" if self.detail else "")


@dataclass(frozen=True, eq=False)
class PseudoOrbitFamily:
    """Truncated trees indexed by the words of length < ``order``.

    ``resolution`` is only a claim; call :func:`verify_pseudo_orbit`.
    """

    alphabets: Alphabets
    order: int
    depth: int
    entries: Mapping[Word, TruncatedTree] = field(repr=False)
    resolution: int = 0

    def __post_init__(self):
        if self.order < 1 or self.depth < 1:
            raise ValueError("order and entry depth must be >= 1")
        if self.resolution < 0:
            raise ValueError("resolution must be >= 0")
        expected = set(words(self.alphabets.arity, self.order))
        if set(self.entries) != expected:
            missing = expected - set(self.entries)
            extra = set(self.entries) - expected
            raise ValueError(
                f"entries must be indexed by all words of length < {self.order}; "
                f"missing {sorted(map(format_word, missing))}, unexpected {sorted(map(format_word, extra))}"
            )
        for w, t in self.entries.items():
            if t.depth != self.depth:
                raise ValueError(f"entry {format_word(w)} has depth {t.depth}, expected {self.depth}")
            self.alphabets.check(t.body)

    @property
    def arity(self) -> int:
        return self.alphabets.arity

    def __getitem__(self, w: Word) -> TruncatedTree:
        return self.entries[tuple(w)]

    def index_words(self) -> tuple[Word, ...]:
        return words(self.arity, self.order)

    def __eq__(self, other):
        if not isinstance(other, PseudoOrbitFamily):
            return NotImplemented
        return (
            self.alphabets == other.alphabets
            and self.order == other.order
            and self.depth == other.depth
            and self.resolution == other.resolution
            and dict(self.entries) == dict(other.entries)
        )

    def with_entries(self, entries: Mapping[Word, TruncatedTree], **changes) -> PseudoOrbitFamily:
        depth = next(iter(entries.values())).depth
        return replace(self, entries=dict(entries), depth=depth, **changes)


def verify_pseudo_orbit(f: PseudoOrbitFamily, n: int | None = None) -> TraceReport:
    n = f.resolution if n is None else n
    if n == 0:
        return TraceReport(True, 0)
    if f.depth < n + 1:
        raise DepthError(f"entry depth {f.depth} cannot show resolution {n} (needs {n + 1})")
    for w in words(f.arity, f.order - 1):
        parent = f[w].body
        for i in range(f.arity):
            seen = restrict(parent, (i,), n)
            claimed = restrict(f[w + (i,)].body, EMPTY, n)
            if seen != claimed:
                return TraceReport(False, n, (w, first_difference(seen, claimed)), i)
    return TraceReport(True, n)


def trace_construct(f: PseudoOrbitFamily, extend: bool = False) -> TruncatedTree:
    """The tree with ``t_w = t^(w)_e``.

    With ``extend`` the tree continues below the index range with the labels
    of the leaf entries (``t_{wu} = t^(w)_u`` for ``|w| = N - 1``), giving depth
    ``N - 1 + D`` so tracing can be checked at every index word.
    """
    if f.resolution < 1:
        raise UnverifiedFamily("a family must claim resolution >= 1 to be traced")
    report = verify_pseudo_orbit(f)
    if not report:
        raise UnverifiedFamily(f"not a [{f.resolution}]-pseudo-orbit: {report.describe()}")
    N = f.order
    if not extend:
        return TruncatedTree(Block.from_function(f.arity, N, lambda w: f[w][EMPTY]))

    def label(w):
        if len(w) < N:
            return f[w][EMPTY]
        return f[w[: N - 1]][w[N - 1 :]]

    return TruncatedTree(Block.from_function(f.arity, N - 1 + f.depth, label))


def verify_tracing(t: TruncatedTree, f: PseudoOrbitFamily, m: int) -> TraceReport:
    """Does ``sigma^w(t)`` agree with ``t^(w)`` on ``m`` levels for every index word?"""
    if m < 1:
        raise ValueError("m must be >= 1")
    if t.depth < f.order - 1 + m:
        raise DepthError(f"tree depth {t.depth} too shallow to check [{m}]-tracing of order {f.order}")
    if f.depth < m:
        raise DepthError(f"entry depth {f.depth} below m = {m}")
    for w in f.index_words():
        mine = restrict(t.body, w, m)
        theirs = restrict(f[w].body, EMPTY, m)
        if mine != theirs:
            return TraceReport(False, m, (w, first_difference(mine, theirs)))
    return TraceReport(True, m)


def _po_triples(f: PseudoOrbitFamily, n: int):
    N, a = f.order, f.arity
    for w in words(a, N):
        for u in words(a, min(N - len(w), n)):
            for v in words(a, n - len(u)):
                yield w, u, v


def _random_triple(f: PseudoOrbitFamily, n: int, rng: Random):
    a = f.arity
    lw = rng.randrange(f.order)
    lu = rng.randrange(min(f.order - lw, n))
    lv = rng.randrange(n - lu)
    draw = lambda k: tuple(rng.randrange(a) for _ in range(k))
    return draw(lw), draw(lu), draw(lv)


def lemma_po_check(
    f: PseudoOrbitFamily, n: int | None = None, samples: int | None = None, rng: Random | None = None
) -> TraceReport:
    """Check ``t^(w)_{uv} = t^(wu)_v`` whenever ``wu`` indexes and ``|uv| < n``.

    Exhaustive unless ``samples`` is given.  Verification of ``f`` is the
    caller's business: corrupted families are meant to fail here.
    """
    n = f.resolution if n is None else n
    if n < 1:
        return TraceReport(True, 0)
    if f.depth < n:
        raise DepthError("entries shallower than the resolution")
    if samples is None:
        triples = _po_triples(f, n)
    else:
        rng = rng or Random(0)
        triples = (_random_triple(f, n, rng) for _ in range(samples))
    for w, u, v in triples:
        if f[w][u + v] != f[w + u][v]:
            return TraceReport(
                False, n, (w, u + v),
                detail=f"t^({format_word(w)})_{format_word(u + v)} != t^({format_word(w + u)})_{format_word(v)}",
            )
    return TraceReport(True, n)


def uniqueness_check(f: PseudoOrbitFamily, m: int, candidates=None) -> bool:
    """Every tree that ``[m]``-traces ``f`` equals the constructed one.

    Any tracer ``r`` satisfies ``r_w = sigma^w(r)_e = t^(w)_e``, so it is pinned
    node by node; ``candidates`` lets tests confirm this by brute force.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if candidates is None:
        return True
    pinned = {w: f[w][EMPTY] for w in f.index_words()}
    for c in candidates:
        if verify_tracing(c, f, m):
            if any(c[w] != x for w, x in pinned.items()):
                return False
    return True


def shadowing_bound(e: SftEngine, m: int) -> int:
    """Resolution at which every pseudo-orbit is ``[m]``-traced inside the shift."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if is_empty(e):
        raise ValueError("the shift is empty")
    return max(e.p, m)


# ---- generators ------------------------------------------------------------

def true_orbit(s: TruncatedTree, order: int, depth: int, alphabets: Alphabets, resolution: int = 0) -> PseudoOrbitFamily:
    """Entries ``sigma^w(s)`` truncated to ``depth``."""
    if s.depth < order - 1 + depth:
        raise DepthError(f"seed depth {s.depth} too shallow for order {order} and entry depth {depth}")
    entries = {w: TruncatedTree(restrict(s.body, w, depth)) for w in words(s.arity, order)}
    return PseudoOrbitFamily(alphabets, order, depth, entries, resolution)


def random_pseudo_orbit(e: SftEngine, order: int, depth: int, n: int, rng: Random) -> PseudoOrbitFamily:
    """Random ``[n]``-pseudo-orbit with certified entries.

    Each ``t^(wi)`` is a random language block whose top ``n`` levels copy the
    ``i``-subtree of ``t^(w)``.
    """
    if depth < n + 1:
        raise DepthError("entry depth must exceed the resolution")
    entries: dict[Word, TruncatedTree] = {EMPTY: e.random_tree(depth, rng)}
    for w in words(e.arity, order)[1:]:
        parent = entries[w[:-1]]
        start = restrict(parent.body, w[-1:], n) if n >= 1 else None
        entries[w] = TruncatedTree(e.random_extension(start, depth, rng))
    return PseudoOrbitFamily(e.alphabets, order, depth, entries, n)


def perturb_orbit(
    seed: TruncatedTree, e: SftEngine, order: int, depth: int, n: int, rng: Random, tries: int = 20
) -> PseudoOrbitFamily:
    """A true orbit of ``seed`` with every entry resampled below level ``n``.

    Levels ``0..n`` of each entry are kept, so the family stays an
    ``[n]``-pseudo-orbit; the rest is redrawn inside the shift.
    """
    if e.certify(seed) is not Membership.IN_X:
        raise NotInLanguage("seed tree is not certified in the shift")
    base = true_orbit(seed, order, depth, e.alphabets, n)
    keep = min(n + 1, depth)
    for _ in range(tries):
        entries = {
            w: TruncatedTree(e.random_extension(restrict(t.body, EMPTY, keep), depth, rng))
            for w, t in base.entries.items()
        }
        if entries != dict(base.entries):
            break
    return base.with_entries(entries)


def converse_witness_family(n: int) -> PseudoOrbitFamily:
    """A verified ``[n]``-pseudo-orbit of the row shift whose traced tree leaves it.

    Entry ``t^(w)`` copies the height-``(n+1)`` window at ``w`` of the tree with
    zeros only at ``0^{n+2}`` and ``1^{n+2}`` and adds a level of ones.  Each
    window has one zero at most, so every entry is in the shift, but the
    traced tree has two zeros on level ``n + 2``.
    """
    from .shifts import non_sft_witness

    order = n + 3
    big = non_sft_witness(n + 1, depth=order - 1 + n + 1)
    depth = n + 2
    alphabets = Alphabets.binary()
    entries = {}
    for w in words(2, order):
        top = restrict(big.body, w, n + 1)
        entries[w] = TruncatedTree(
            Block.from_function(2, depth, lambda u, top=top: top[u] if len(u) <= n else 1)
        )
    return PseudoOrbitFamily(alphabets, order, depth, entries, n)
