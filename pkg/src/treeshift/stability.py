"""Perturbed shift maps built from a pseudo-orbit, and the conjugacy to the shift.

Pipeline: make the entries of a finite pseudo-orbit pairwise distinct without
touching their top ``n + 1`` levels, find a depth ``M`` that tells them apart,
define ``tau^i`` to jump from ``s^(w)`` to ``s^(wi)`` (and act as ``sigma^i``
elsewhere), then evaluate ``phi(t)_w = tau^w(t)_e`` to a finite depth.

Every ``tau`` application costs one level of the input truncation, including
on the matched branch, so depth bookkeeping stays uniform.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from random import Random
from typing import Iterable, Sequence

from .sft import Membership, NotInLanguage, SftEngine, extension_count, first_extension, is_perfect
from .shadowing import PseudoOrbitFamily, TraceReport, verify_pseudo_orbit, verify_tracing
from .trees import (
    EMPTY,
    Block,
    DepthError,
    TruncatedTree,
    Word,
    first_difference,
    format_word,
    restrict,
    shift,
    truncate,
    words,
)


class NotPerfectError(ValueError):
    """The shift has an isolated point, so entries cannot be separated."""


class InsufficientDepth(DepthError):
    def __init__(self, message: str, required_depth: int | None = None):
        super().__init__(message)
        self.required_depth = required_depth


def separation_depth(entries: Iterable[TruncatedTree]) -> int | None:
    """Smallest ``M`` at which the truncations are pairwise distinct."""
    entries = list(entries)
    depth = min(t.depth for t in entries)
    for M in range(1, depth + 1):
        if len({restrict(t.body, EMPTY, M) for t in entries}) == len(entries):
            return M
    return None


@dataclass(frozen=True)
class InjectiveFamily:
    base: PseudoOrbitFamily
    separation_depth: int
    replaced: tuple[Word, ...] = ()

    def __getitem__(self, w: Word) -> TruncatedTree:
        return self.base[w]


def _required_depth(e: SftEngine, head: Block, needed: int, limit: int = 12) -> int | None:
    for extra in range(1, limit):
        if extension_count(e, head, extra) >= needed:
            return head.height + extra
    return None


def injectivize(
    f: PseudoOrbitFamily, e: SftEngine, m: int = 1, extend_to: int | None = None, slack: int = 3
) -> InjectiveFamily:
    """Replace repeated entries by fresh trees agreeing with them on ``n + 1`` levels.

    Entries shallower than ``n + 1 + slack`` are first extended to that depth
    (canonically first extension), leaving room below level ``n`` for fresh
    trees.  Words are then scanned in canonical order; a repeat of an earlier
    entry is replaced by the canonically first extension of its top ``n + 1``
    levels that equals no current entry.
    """
    if not is_perfect(e):
        raise NotPerfectError("the shift has isolated points (rigid blocks); injectivization needs a perfect shift")
    n, D = f.resolution, f.depth
    if D < n + 1:
        raise DepthError(f"entry depth {D} must be at least n + 1 = {n + 1}")
    for w in f.index_words():
        if e.certify(f[w]) is not Membership.IN_X:
            raise NotInLanguage(f"entry {format_word(w)} is not certified in the shift")

    if slack < 0:
        raise ValueError("slack must be >= 0")
    entries = dict(f.entries)
    if D < n + 1 + slack:
        D = n + 1 + slack
        entries = {w: first_extension(e, t.body, D) for w, t in entries.items()}
    current = {t.labels for t in entries.values()}
    seen: set[tuple[int, ...]] = set()
    replaced = []
    for v in f.index_words():
        t = entries[v]
        if t.labels not in seen:
            seen.add(t.labels)
            continue
        head = restrict(t.body, EMPTY, n + 1)
        for cand in e.iter_extensions(head, D):
            if cand.labels not in current:
                break
        else:
            sharing = sum(1 for x in entries.values() if restrict(x.body, EMPTY, n + 1) == head)
            need = _required_depth(e, head, sharing)
            raise InsufficientDepth(
                f"entry depth {D} leaves too few extensions of the top {n + 1} levels at "
                f"{format_word(v)}; depth {need} would do (slack {None if need is None else need - n - 1})",
                need,
            )
        entries[v] = TruncatedTree(cand)
        current.add(cand.labels)
        seen.add(cand.labels)
        replaced.append(v)

    M = separation_depth(entries.values())
    M = max(M, max(m, n) + 1)
    target = max(D, M, extend_to or 0)
    if target > D:
        entries = {w: first_extension(e, t.body, target) for w, t in entries.items()}
    base = f.with_entries(entries)
    return InjectiveFamily(base, M, tuple(replaced))


def extend_family(inj: InjectiveFamily, e: SftEngine, depth: int) -> InjectiveFamily:
    if depth <= inj.base.depth:
        return inj
    entries = {w: first_extension(e, t.body, depth) for w, t in inj.base.entries.items()}
    return InjectiveFamily(inj.base.with_entries(entries), inj.separation_depth, inj.replaced)


@dataclass(frozen=True)
class TauFamily:
    injective: InjectiveFamily
    engine: SftEngine

    @property
    def M(self) -> int:
        return self.injective.separation_depth

    @cached_property
    def _match(self) -> dict[tuple[int, ...], Word]:
        fam = self.injective.base
        return {
            restrict(fam[w].body, EMPTY, self.M).labels: w
            for w in words(fam.arity, fam.order - 1)
        }

    def matched_word(self, t: TruncatedTree) -> Word | None:
        """The ``w`` of length < N - 1 with ``s^(w)`` equal to ``t`` on M levels."""
        return self._match.get(restrict(t.body, EMPTY, self.M).labels)


def tau_apply(tf: TauFamily, i: int, t: TruncatedTree) -> TruncatedTree:
    if t.depth < tf.M + 1:
        raise DepthError(f"tau needs depth >= M + 1 = {tf.M + 1}, got {t.depth}")
    w = tf.matched_word(t)
    if w is None:
        return shift(t, i)
    target = tf.injective[w + (i,)]
    if target.depth < t.depth - 1:
        raise DepthError(
            f"entry s^({format_word(w + (i,))}) has depth {target.depth}; need {t.depth - 1}"
        )
    return truncate(target, t.depth - 1)


def tau_word(tf: TauFamily, w: Sequence[int], t: TruncatedTree) -> TruncatedTree:
    """``tau^w = tau^{w_{n-1}} o ... o tau^{w_0}``."""
    for i in w:
        t = tau_apply(tf, i, t)
    return t


def phi_construct(tf: TauFamily, t: TruncatedTree, out_depth: int) -> TruncatedTree:
    K = out_depth
    if K < 1:
        raise ValueError("output depth must be >= 1")
    if t.depth < tf.M + K:
        raise DepthError(f"phi to depth {K} needs input depth >= M + K = {tf.M + K}")
    arity = t.arity
    level = {EMPTY: t}
    labels = {EMPTY: t[EMPTY]}
    for _ in range(K - 1):
        nxt = {}
        for w, x in level.items():
            for i in range(arity):
                y = tau_apply(tf, i, x)
                nxt[w + (i,)] = y
                labels[w + (i,)] = y[EMPTY]
        level = nxt
    return TruncatedTree(Block.from_function(arity, K, labels.__getitem__))


def tau_closeness_check(tf: TauFamily, n: int, samples: Iterable[TruncatedTree]) -> TraceReport:
    """``tau^i`` agrees with ``sigma^i`` on the first ``n`` levels of every sample."""
    for t in samples:
        for i in range(t.arity):
            a = restrict(tau_apply(tf, i, t).body, EMPTY, n)
            b = restrict(shift(t, i).body, EMPTY, n)
            if a != b:
                return TraceReport(False, n, (EMPTY, first_difference(a, b)), i, detail=f"sample {t.labels}")
    return TraceReport(True, n)


def conjugacy_check(tf: TauFamily, samples: Iterable[TruncatedTree], K: int) -> TraceReport:
    """``sigma^i(phi(t)) = phi(tau^i(t))`` at output depth ``K - 1``."""
    if K < 2:
        raise ValueError("K must be >= 2")
    for t in samples:
        left_full = phi_construct(tf, t, K)
        for i in range(t.arity):
            left = shift(left_full, i)
            right = phi_construct(tf, tau_apply(tf, i, t), K - 1)
            if left != right:
                return TraceReport(False, K - 1, (EMPTY, first_difference(left.body, right.body)), i,
                                   detail=f"sample {t.labels}")
    return TraceReport(True, K - 1)


def phi_closeness_check(tf: TauFamily, samples: Iterable[TruncatedTree], m: int, K: int | None = None) -> TraceReport:
    """``phi(t)`` agrees with ``t`` on the first ``m`` levels."""
    K = m if K is None else K
    if K < m:
        raise ValueError("K must be >= m")
    for t in samples:
        a = restrict(phi_construct(tf, t, K).body, EMPTY, m)
        b = restrict(t.body, EMPTY, m)
        if a != b:
            return TraceReport(False, m, (EMPTY, first_difference(a, b)), detail=f"sample {t.labels}")
    return TraceReport(True, m)


def tau_samples(tf: TauFamily, depth: int, count: int, rng: Random) -> list[TruncatedTree]:
    """Certified trees of ``depth``: the entries, near-misses of them, and random trees.

    Near-misses agree with some ``s^(w)`` on ``M`` levels, so they hit the
    matched branch while differing below it.
    """
    fam = tf.injective.base
    e = tf.engine
    out = []
    for w in fam.index_words():
        s = fam[w]
        if s.depth >= depth:
            out.append(truncate(s, depth))
        out.append(TruncatedTree(e.random_extension(restrict(s.body, EMPTY, tf.M), depth, rng)))
    while len(out) < count:
        out.append(e.random_tree(depth, rng))
    return out


@dataclass(frozen=True)
class StabilityReport:
    M: int
    replaced: tuple[Word, ...]
    tau_close: TraceReport
    tau_in_shift: bool
    conjugacy: TraceReport
    phi_close: TraceReport
    traces_original: TraceReport

    @property
    def passed(self) -> bool:
        return all([self.tau_close, self.tau_in_shift, self.conjugacy, self.phi_close, self.traces_original])


def run_pipeline(
    f: PseudoOrbitFamily, e: SftEngine, m: int, K: int = 3, n_samples: int = 20, rng: Random | None = None
) -> StabilityReport:
    """Injectivize, build tau and phi, and run every check on one family."""
    rng = rng or Random(0)
    report = verify_pseudo_orbit(f)
    if not report:
        raise ValueError(f"not a [{f.resolution}]-pseudo-orbit: {report.describe()}")
    n = f.resolution
    inj = injectivize(f, e, m)
    K_trace = f.order - 1 + m
    sample_depth = inj.separation_depth + max(K, K_trace, m)
    inj = extend_family(inj, e, sample_depth)
    tf = TauFamily(inj, e)

    samples = tau_samples(tf, sample_depth, n_samples, rng)
    tau_close = tau_closeness_check(tf, n, samples)
    tau_in = all(
        e.certify(tau_apply(tf, i, t)) is Membership.IN_X for t in samples for i in range(t.arity)
    )
    conj = conjugacy_check(tf, samples, K)
    phi_close = phi_closeness_check(tf, samples, m, max(K, m))
    traced = phi_construct(tf, inj[EMPTY], K_trace)
    traces = verify_tracing(traced, f, m)
    return StabilityReport(inj.separation_depth, inj.replaced, tau_close, tau_in, conj, phi_close, traces)
