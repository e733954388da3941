"""Images of cylinders under the shift maps and bounded openness checks.

For a cylinder ``[b]`` and a direction ``i``, every point of ``sigma^i([b])``
starts with ``restrict(b, i, m - 1)``.  Two gluing rules produce preimages
inside ``[b]`` for points of that cylinder: one for shifts of finite type when
``b`` is taller than the forbidden height, one for the no-two-zeros-per-row
shift.  Other shifts fall back to exhaustive search at the probe depth.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .sft import BudgetExceeded, Membership, NotInLanguage, SftEngine, first_extension
from .shifts import ShiftSpec
from .trees import (
    EMPTY,
    Block,
    DepthError,
    TruncatedTree,
    cylinder_match,
    restrict,
    shift,
    truncate,
)


class WitnessFailure(AssertionError):
    """A gluing construction produced a tree outside the shift.

    The gluing rules guarantee this cannot happen, so it is never
    caught inside the package.
    """


class OpenVerdict(enum.Enum):
    OPEN_CERTIFIED = "OpenCertified"
    NOT_OPEN_WITNESS = "NotOpenWitness"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class WitnessReport:
    """Verdict for ``sigma^i([block])`` probed to ``probe_depth``.

    OpenCertified ships one preimage per language block of height
    ``probe_depth`` extending ``target_prefix``.  NotOpenWitness ships a
    ``center`` block that is an image prefix, an ``inside`` extension with its
    preimage ``witness``, and an ``outside`` extension with no preimage.
    """

    verdict: OpenVerdict
    direction: int
    block: Block
    target_prefix: Block
    probe_depth: int
    witness: TruncatedTree | None = None
    preimages: tuple[tuple[Block, TruncatedTree], ...] = ()
    center: Block | None = None
    inside: Block | None = None
    outside: Block | None = None
    note: str = ""


def _glue(i: int, r: TruncatedTree, s: TruncatedTree, depth: int, fill=None) -> TruncatedTree:
    def label(w):
        if w and w[0] == i:
            return s[w[1:]]
        if fill is not None:
            return fill(w)
        return r[w]

    return TruncatedTree(Block.from_function(r.arity, depth, label))


def sft_preimage_witness(
    e: SftEngine, i: int, b: Block, r: TruncatedTree, s: TruncatedTree
) -> TruncatedTree:
    """Graft ``s`` into the ``i``-subtree of ``r``.

    ``q_{iw} = s_w`` and ``q_w = r_w`` off the ``i``-subtree.  Needs ``b``
    taller than the forbidden height, ``r`` in ``[b]`` and ``s`` agreeing with
    ``sigma^i(r)`` on ``m - 1`` levels; then ``q`` lies in ``[b]`` and
    ``sigma^i(q)`` extends ``s``.
    """
    m = b.height
    if m <= e.p:
        raise ValueError(f"block height {m} must exceed the forbidden height {e.p}")
    if e.certify(r) is not Membership.IN_X or not cylinder_match(r, b):
        raise ValueError("r must be a certified tree in the cylinder of b")
    if e.certify(s) is not Membership.IN_X:
        raise ValueError("s must be certified in the shift")
    if s.depth < m - 1 or restrict(s.body, EMPTY, m - 1) != restrict(r.body, (i,), m - 1):
        raise ValueError(f"s must agree with sigma^{i}(r) on {m - 1} levels")
    depth = min(r.depth, s.depth + 1)
    q = _glue(i, r, s, depth)
    if e.certify(q) is not Membership.IN_X:
        raise WitnessFailure(f"glued tree {q.labels} is not in the shift")
    if not cylinder_match(q, b) or shift(q, i) != truncate(s, depth - 1):
        raise WitnessFailure("glued tree does not sit in [b] over s")
    return q


def _rows_ok(b: Block) -> bool:
    return all(b.level(k).count(0) <= 1 for k in range(b.height))


def one_zero_row_witness(
    i: int, b: Block, s: TruncatedTree, t_tilde: TruncatedTree, depth: int | None = None
) -> TruncatedTree:
    """Preimage of ``s`` in ``[b]`` for the no-two-zeros-per-row shift.

    ``r_{iw} = s_w``; off the ``i``-subtree ``r`` copies ``b`` above height
    ``n`` and is 1 below it.
    """
    n = b.height
    if b.arity != 2 or not _rows_ok(b):
        raise ValueError("b must be a language block of the row shift")
    if not _rows_ok(t_tilde.body) or not cylinder_match(t_tilde, b):
        raise ValueError("t_tilde must be a member of [b]")
    if not _rows_ok(s.body):
        raise ValueError("s must be a member of the row shift")
    if n > 1:
        if s.depth < n - 1 or restrict(s.body, EMPTY, n - 1) != restrict(t_tilde.body, (i,), n - 1):
            raise ValueError(f"s must agree with the {i}-subtree of t_tilde on {n - 1} levels")
    depth = s.depth + 1 if depth is None else depth
    if depth > s.depth + 1 or depth < n:
        raise DepthError(f"witness depth must lie in [{n}, {s.depth + 1}]")
    r = _glue(i, t_tilde, s, depth, fill=lambda w: b[w] if len(w) < n else 1)
    if not _rows_ok(r.body):
        raise WitnessFailure(f"glued tree {r.labels} has two zeros in a row")
    if not cylinder_match(r, b) or shift(r, i) != truncate(s, depth - 1):
        raise WitnessFailure("glued tree does not sit in [b] over s")
    return r


def image_prefix(spec: ShiftSpec, i: int, b: Block) -> Block:
    """The prefix shared by every point of ``sigma^i([b])``."""
    if b.height < 2:
        raise ValueError("block height must be >= 2")
    if not spec.in_language(b):
        raise NotInLanguage("block is not in the language of the shift")
    return restrict(b, (i,), b.height - 1)


class _Preimages:
    """Finds ``q`` in ``B_{P+1}(X)`` with ``q`` in ``[b]`` and ``restrict(q, i, P) = e``."""

    def __init__(self, spec: ShiftSpec, i: int, b: Block, P: int, budget: int):
        self.spec, self.i, self.b, self.P, self.budget = spec, i, b, P, budget
        self.rule = None
        if spec.is_finite_type:
            e = spec.engine
            lift = max(b.height, e.p + 1)
            if P + 1 >= lift:
                self.rule = "sft"
                self.lifted = {}
                for c in e.iter_extensions(b, lift):
                    key = restrict(c, (i,), lift - 1)
                    self.lifted.setdefault(key, c)
                self.lift = lift
                self.base = {k: first_extension(e, c, P + 1) for k, c in self.lifted.items()}
        elif spec.name == "one-zero-row":
            self.rule = "row"
            self.t_tilde = TruncatedTree(next(spec.extensions(b, P + 1)))

    def find(self, target: Block) -> TruncatedTree | None:
        s = TruncatedTree(target)
        if self.rule == "sft":
            e = self.spec.engine
            key = restrict(target, EMPTY, self.lift - 1)
            if key not in self.lifted:
                return None
            return sft_preimage_witness(e, self.i, self.lifted[key], self.base[key], s)
        if self.rule == "row":
            return one_zero_row_witness(self.i, self.b, s, self.t_tilde)
        tried = 0
        for q in self.spec.extensions(self.b, self.P + 1):
            tried += 1
            if tried > self.budget:
                raise BudgetExceeded(f"preimage search exceeded {self.budget} candidates")
            if restrict(q, (self.i,), self.P) == target:
                return TruncatedTree(q)
        return None


def bounded_openness_check(
    spec: ShiftSpec, i: int, b: Block, probe_depth: int, budget: int = 2**20
) -> WitnessReport:
    """Is ``sigma^i([b])`` the full cylinder of its forced prefix, up to ``probe_depth``?

    Every language block of height ``probe_depth`` extending the image prefix
    gets a preimage in ``[b]`` (OpenCertified), or the check locates an image
    prefix of height ``probe_depth - 1`` with extensions both inside and
    outside the image (NotOpenWitness).  Anything else is Inconclusive.
    """
    P = probe_depth
    c0 = image_prefix(spec, i, b)
    if P < c0.height:
        raise ValueError(f"probe depth must be at least {c0.height}")
    finder = _Preimages(spec, i, b, P, budget)
    found: list[tuple[Block, TruncatedTree]] = []
    missing: list[Block] = []
    try:
        for target in spec.extensions(c0, P):
            q = finder.find(target)
            if q is None:
                missing.append(target)
            else:
                found.append((target, q))
    except BudgetExceeded as exc:
        return WitnessReport(OpenVerdict.INCONCLUSIVE, i, b, c0, P, note=str(exc))

    if not missing:
        return WitnessReport(OpenVerdict.OPEN_CERTIFIED, i, b, c0, P, preimages=tuple(found))

    if P >= 2:
        h = P - 1
        for inside, q in found:
            center = restrict(inside, EMPTY, h)
            for out in missing:
                if restrict(out, EMPTY, h) == center:
                    return WitnessReport(
                        OpenVerdict.NOT_OPEN_WITNESS, i, b, c0, P, witness=q,
                        center=center, inside=inside, outside=out,
                        note=f"image point prefix of height {h} has extensions outside the image",
                    )
    return WitnessReport(
        OpenVerdict.INCONCLUSIVE, i, b, c0, P,
        note=f"{len(missing)} blocks miss the image but no image prefix of height {P - 1} mixes",
    )


def recheck(spec: ShiftSpec, report: WitnessReport, budget: int = 2**20) -> bool:
    """Re-verify a report from the witnesses it ships."""
    i, b, P = report.direction, report.block, report.probe_depth

    def good_preimage(target: Block, q: TruncatedTree) -> bool:
        return (
            spec.certify(q) is Membership.IN_X
            and cylinder_match(q, b)
            and restrict(q.body, (i,), P) == target
        )

    if report.verdict is OpenVerdict.OPEN_CERTIFIED:
        targets = set(spec.extensions(report.target_prefix, P))
        shipped = {t for t, _ in report.preimages}
        return shipped == targets and all(good_preimage(t, q) for t, q in report.preimages)
    if report.verdict is OpenVerdict.NOT_OPEN_WITNESS:
        h = report.center.height
        if not good_preimage(report.inside, report.witness):
            return False
        if restrict(report.inside, EMPTY, h) != report.center or restrict(report.outside, EMPTY, h) != report.center:
            return False
        if not spec.in_language(report.outside):
            return False
        return _Preimages(spec, i, b, P, budget).find(report.outside) is None
    return False
