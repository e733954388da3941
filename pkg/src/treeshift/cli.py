"""Command-line front end.

Exit codes: 0 pass or certified, 1 property violated (a witness is printed),
2 inconclusive or over budget, 3 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from random import Random

from . import formats
from .openness import OpenVerdict, bounded_openness_check, image_prefix
from .sft import (
    DEFAULT_BUDGET,
    BudgetExceeded,
    Membership,
    NotInLanguage,
    is_empty,
    is_perfect,
    rigidity_fixpoint,
)
from .shadowing import (
    PseudoOrbitFamily,
    converse_witness_family,
    random_pseudo_orbit,
    shadowing_bound,
    trace_construct,
    verify_pseudo_orbit,
    verify_tracing,
)
from .shifts import BUILTINS, ShiftSpec, builtin, sft_approximation_gap
from .stability import InsufficientDepth, NotPerfectError, run_pipeline
from .trees import Block, DepthError, TruncatedTree, format_block, format_word, parse_block

PASS, VIOLATED, INCONCLUSIVE, USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


class Report:
    """Ordered key/value lines, rendered as text or JSON."""

    def __init__(self, command: str):
        self.data: dict = {"command": command}
        self.lines: list[str] = []

    def put(self, key: str, value, show: bool = True):
        self.data[key] = value
        if show:
            self.lines.append(f"{key}={_text(value)}")

    def say(self, line: str):
        self.lines.append(line)

    def render(self, fmt: str) -> str:
        if fmt == "structured":
            return json.dumps(self.data, sort_keys=True, indent=2)
        return "\n".join(self.lines)


def _text(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "none"
    if isinstance(value, list):
        return "[" + ", ".join(_text(x) for x in value) + "]"
    return str(value)


# ---- argument helpers ----------------------------------------------------------

def _load_shift(args) -> ShiftSpec:
    budget = args.budget
    if args.builtin:
        try:
            spec = builtin(args.builtin)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    elif args.shift:
        sft = _read(formats.load_forbidden, args.shift)
        spec = ShiftSpec(Path(args.shift).stem, sft.alphabets, sft=sft)
    else:
        raise UsageError("give --builtin <name> or --shift <file>")
    return ShiftSpec(spec.name, spec.alphabets, sft=spec.sft, oracle=spec.oracle, budget=budget)


def _read(loader, path):
    try:
        return loader(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _engine(spec: ShiftSpec, what: str):
    if not spec.is_finite_type:
        raise UsageError(f"{what} needs a shift of finite type; {spec.name} is oracle-presented")
    return spec.engine


def _parse_block_arg(text: str, spec: ShiftSpec) -> Block:
    text = text.replace(",", " ").strip()
    a = spec.alphabets
    if " " not in text and all(len(x) == 1 for x in a.labels):
        text = " ".join(text)
    try:
        return parse_block(text, a)
    except ValueError as exc:
        raise UsageError(f"bad block {text!r}: {exc}") from None


def _blk(b: Block | TruncatedTree | None, spec: ShiftSpec) -> str | None:
    if b is None:
        return None
    body = b.body if isinstance(b, TruncatedTree) else b
    return format_block(body, spec.alphabets)


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            flag = f"-{name}" if len(name) == 1 else f"--{name.replace('_', '-')}"
            raise UsageError(f"{flag} is required for {args.command}")


# ---- commands -----------------------------------------------------------------

def cmd_blocks(args, r: Report) -> int:
    spec = _load_shift(args)
    _need(args, "n")
    if args.n < 1:
        raise UsageError("-n must be >= 1")
    r.put("shift", spec.name)
    r.put("n", args.n)
    if args.list:
        blocks = spec.language(args.n)
        r.put("count", len(blocks))
        r.put("blocks", [_blk(b, spec) for b in blocks], show=False)
        for b in blocks:
            r.say(_blk(b, spec))
    else:
        r.put("count", spec.count(args.n))
    return PASS


def _membership_witness(spec: ShiftSpec, t: TruncatedTree):
    if spec.is_finite_type:
        w = spec.engine.first_bad_window(t)
        return None if w is None else format_word(w)
    for k in range(t.depth):
        if t.body.level(k).count(0) > 1:
            return f"level {k}"
    return None


def cmd_shadow(args, r: Report) -> int:
    spec = _load_shift(args)
    m = args.m or 1
    f = _orbit(args, spec, m)
    r.put("shift", spec.name)
    r.put("order", f.order)
    r.put("depth", f.depth)
    r.put("resolution", f.resolution)
    r.put("m", m)
    bound = shadowing_bound(spec.engine, m) if spec.is_finite_type else None
    r.put("bound", bound)
    if bound is not None and f.resolution < bound:
        r.say(f"warning: resolution {f.resolution} is below the bound {bound}; tracing is not guaranteed")
    bad = [w for w in f.index_words() if spec.certify(f[w]) is not Membership.IN_X]
    if bad:
        r.put("entries_in_shift", False)
        r.put("bad_entry", format_word(bad[0]))
        return VIOLATED
    r.put("entries_in_shift", True)
    report = verify_pseudo_orbit(f)
    r.put("pseudo_orbit", report.passed)
    if not report:
        r.put("violation", report.describe())
        return VIOLATED
    t = trace_construct(f, extend=True)
    r.put("traced", _blk(t, spec))
    membership = spec.certify(t)
    r.put("membership", str(membership))
    if membership is not Membership.IN_X:
        r.put("membership_witness", _membership_witness(spec, t))
    tracing = verify_tracing(t, f, m)
    r.put("tracing", tracing.passed)
    if not tracing:
        r.put("violation", tracing.describe())
    return PASS if membership is Membership.IN_X and tracing else VIOLATED


def _orbit(args, spec: ShiftSpec, m: int) -> PseudoOrbitFamily:
    if args.orbit:
        f = _read(formats.load_orbit, args.orbit)
        if f.alphabets != spec.alphabets:
            raise UsageError("orbit file alphabets differ from the shift's")
        return f
    e = _engine(spec, "a generated pseudo-orbit")
    n = args.n if args.n is not None else shadowing_bound(e, m)
    order = args.N or 2
    depth = args.depth or n + 2
    if depth < n + 1:
        raise UsageError("--depth must exceed -n")
    return random_pseudo_orbit(e, order, depth, n, Random(args.seed))


def cmd_stability(args, r: Report) -> int:
    spec = _load_shift(args)
    e = _engine(spec, "stability")
    m = args.m or 1
    r.put("shift", spec.name)
    r.put("m", m)
    if is_empty(e):
        raise UsageError(f"{spec.name} is empty")
    if not is_perfect(e):
        rigid = rigidity_fixpoint(e)
        r.put("perfect", False)
        r.put("refused", "the shift has isolated points, so injectivization is impossible")
        r.put("rigid_block", _blk(rigid[0], spec) if rigid else None)
        return VIOLATED
    runs = args.runs
    rng = Random(args.seed)
    failures = 0
    for k in range(runs):
        f = _orbit(args, spec, m) if k == 0 or args.orbit else _orbit_from(args, spec, m, rng)
        try:
            rep = run_pipeline(f, e, m, rng=rng)
        except InsufficientDepth as exc:
            r.put("insufficient_depth", str(exc))
            r.put("required_depth", exc.required_depth)
            return INCONCLUSIVE
        if runs == 1:
            r.put("resolution", f.resolution)
            r.put("M", rep.M)
            r.put("replaced", [format_word(w) for w in rep.replaced])
            r.put("tau_close", rep.tau_close.passed)
            r.put("tau_in_shift", rep.tau_in_shift)
            r.put("conjugacy", rep.conjugacy.passed)
            r.put("phi_close", rep.phi_close.passed)
            r.put("traces_original", rep.traces_original.passed)
        if not rep.passed:
            failures += 1
            if "first_failure" not in r.data:
                r.put("first_failure", k)
    r.put("runs", runs)
    r.put("failures", failures)
    return PASS if failures == 0 else VIOLATED


def _orbit_from(args, spec: ShiftSpec, m: int, rng: Random) -> PseudoOrbitFamily:
    e = spec.engine
    n = args.n if args.n is not None else shadowing_bound(e, m)
    return random_pseudo_orbit(e, args.N or 2, args.depth or n + 2, n, rng)


def cmd_openness(args, r: Report) -> int:
    spec = _load_shift(args)
    _need(args, "probe_depth")
    if args.all_blocks:
        _need(args, "n")
        blocks = spec.language(args.n)
    else:
        _need(args, "block")
        blocks = [_parse_block_arg(args.block, spec)]
    directions = range(spec.arity) if args.direction is None else [args.direction]
    if args.direction is not None and not 0 <= args.direction < spec.arity:
        raise UsageError(f"direction must lie in 0..{spec.arity - 1}")
    r.put("shift", spec.name)
    r.put("probe_depth", args.probe_depth)
    tally = {v.value: 0 for v in OpenVerdict}
    results = []
    first_bad = None
    for b in blocks:
        for i in directions:
            try:
                image_prefix(spec, i, b)
            except NotInLanguage:
                raise UsageError(f"block {_blk(b, spec)} is not in the language") from None
            rep = bounded_openness_check(spec, i, b, args.probe_depth, budget=args.budget)
            tally[rep.verdict.value] += 1
            entry = {
                "block": _blk(b, spec),
                "direction": i,
                "verdict": rep.verdict.value,
                "target_prefix": _blk(rep.target_prefix, spec),
                "preimages": len(rep.preimages),
            }
            if rep.verdict is OpenVerdict.NOT_OPEN_WITNESS:
                entry.update(
                    center=_blk(rep.center, spec), inside=_blk(rep.inside, spec),
                    outside=_blk(rep.outside, spec), witness=_blk(rep.witness, spec),
                )
            if rep.note:
                entry["note"] = rep.note
            results.append(entry)
            if rep.verdict is not OpenVerdict.OPEN_CERTIFIED and first_bad is None:
                first_bad = entry
            if len(blocks) == 1:
                r.say(" ".join(f"{k}={_text(v)}" for k, v in entry.items()))
    r.data["results"] = results
    for k, v in tally.items():
        r.put(k, v)
    if first_bad is not None and len(blocks) > 1:
        r.say("first non-certified: " + " ".join(f"{k}={_text(v)}" for k, v in first_bad.items()))
    if tally["NotOpenWitness"]:
        return VIOLATED
    if tally["Inconclusive"]:
        return INCONCLUSIVE
    return PASS


def cmd_perfect(args, r: Report) -> int:
    spec = _load_shift(args)
    e = _engine(spec, "perfect")
    rigid = rigidity_fixpoint(e)
    r.put("shift", spec.name)
    r.put("perfect", is_perfect(e))
    r.put("rigid", [_blk(b, spec) for b in rigid])
    return PASS if is_perfect(e) else VIOLATED


def cmd_empty(args, r: Report) -> int:
    spec = _load_shift(args)
    e = _engine(spec, "empty")
    r.put("shift", spec.name)
    r.put("empty", is_empty(e))
    r.put("viable", len(e.viable))
    return PASS


def cmd_gap(args, r: Report) -> int:
    spec = _load_shift(args)
    upto = args.upto or args.n
    if upto is None or upto < 1:
        raise UsageError("give -n or --upto (>= 1)")
    lo = args.n if args.n else 1
    r.put("shift", spec.name)
    rows = []
    undecided = False
    for n in range(lo, upto + 1):
        g = sft_approximation_gap(spec, n)
        rows.append({"n": n, "gap": g.gap, "witness": _blk(g.witness, spec), "note": g.note})
        r.say(f"n={n} gap={_text(g.gap)} witness={_text(_blk(g.witness, spec))} ({g.note})")
        undecided |= g.gap is None
    r.data["results"] = rows
    gaps = [row["n"] for row in rows if row["gap"]]
    r.put("gaps", len(gaps))
    r.put("finite_type_ruled_out_upto", upto if len(gaps) == len(rows) else None)
    return INCONCLUSIVE if undecided else PASS


def cmd_export(args, r: Report) -> int:
    spec = _load_shift(args)
    sft = spec.sft
    if sft is None:
        raise UsageError(f"{spec.name} has no forbidden set to export")
    text = formats.dump_forbidden(sft)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        r.put("written", args.output)
    else:
        r.data["file"] = text
        r.lines.append(text.rstrip("\n"))
    return PASS


def cmd_make_orbit(args, r: Report) -> int:
    if args.converse is not None:
        if args.converse < 1:
            raise UsageError("--converse needs n >= 1")
        f = converse_witness_family(args.converse)
    else:
        spec = _load_shift(args)
        f = _orbit(args, spec, args.m or 1)
    text = formats.dump_orbit(f)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        r.put("written", args.output)
    else:
        r.data["file"] = text
        r.lines.append(text.rstrip("\n"))
    return PASS


COMMANDS = {
    "blocks": (cmd_blocks, "count (and optionally list) the blocks of height n"),
    "shadow": (cmd_shadow, "trace a pseudo-orbit and check membership and tracing"),
    "stability": (cmd_stability, "injectivize, build tau and phi, run the conjugacy checks"),
    "openness": (cmd_openness, "bounded openness check of sigma^i on cylinders"),
    "perfect": (cmd_perfect, "report rigid blocks (isolated points)"),
    "empty": (cmd_empty, "decide emptiness"),
    "gap": (cmd_gap, "search for trees accepted by the finite-type approximation but not the shift"),
    "export": (cmd_export, "write a forbidden-set file"),
    "make-orbit": (cmd_make_orbit, "write a pseudo-orbit file"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--builtin", choices=sorted(BUILTINS), help="built-in shift")
    src.add_argument("--shift", metavar="FILE", help="forbidden-set file")
    common.add_argument("--orbit", metavar="FILE", help="pseudo-orbit file")
    common.add_argument("-n", type=int, help="block height or resolution")
    common.add_argument("-m", type=int, help="tracing or closeness depth")
    common.add_argument("-N", type=int, help="pseudo-orbit order")
    common.add_argument("--depth", type=int, help="entry depth of generated pseudo-orbits")
    common.add_argument("--probe-depth", type=int)
    common.add_argument("-i", "--direction", type=int)
    common.add_argument("--block", help="block labels in canonical order, e.g. '1 0 1' or 101")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    common.add_argument("--format", choices=("text", "structured"), default="text")

    parser = _Parser(prog="treeshift", description="Tree-shift analysis toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "blocks":
            p.add_argument("--list", action="store_true", help="print the blocks too")
        if name == "openness":
            p.add_argument("--all-blocks", action="store_true", help="check every block of height n")
        if name == "gap":
            p.add_argument("--upto", type=int, help="check every n from -n (default 1) to this value")
        if name == "stability":
            p.add_argument("--runs", type=int, default=1, help="number of seeded random families")
        if name in ("export", "make-orbit"):
            p.add_argument("-o", "--output", metavar="FILE")
        if name == "make-orbit":
            p.add_argument("--converse", type=int, metavar="N",
                           help="row-shift family whose traced tree leaves the shift")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = COMMANDS[args.command][0]
    r = Report(args.command)
    if args.budget < 1:
        print("treeshift: error: --budget must be positive", file=sys.stderr)
        return USAGE
    try:
        code = handler(args, r)
    except UsageError as exc:
        print(f"treeshift: error: {exc}", file=sys.stderr)
        return USAGE
    except BudgetExceeded as exc:
        r.put("budget_exceeded", str(exc))
        code = INCONCLUSIVE
    except (NotPerfectError, NotInLanguage, DepthError) as exc:
        print(f"treeshift: error: {exc}", file=sys.stderr)
        return USAGE
    r.data["exit_code"] = code
    print(r.render(args.format))
    return code


if __name__ == "__main__":
    sys.exit(main())
