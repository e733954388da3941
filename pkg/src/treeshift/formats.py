"""Text formats for forbidden sets and pseudo-orbit families.

Forbidden-set file::

    arity=2 labels=0,1 height=2
    1 0 1
    pattern e:1 0:1

Every plain line is one height-``p`` block in canonical order.  A
``pattern`` line lists ``word:label`` cells and is normalized to height ``p``
on load.  ``#`` starts a comment.

Pseudo-orbit file::

    arity=2 labels=0,1 order=2 depth=2 resolution=1
    e: 0 1 0
    0: 1 0 0
    1: 0 0 1
"""

from __future__ import annotations

from pathlib import Path

from .sft import ForbiddenSet, NormalizedSft, Pattern, normalize
from .shadowing import PseudoOrbitFamily
from .trees import Alphabets, TruncatedTree, format_block, format_word, parse_block, parse_word


class FormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def _lines(text: str):
    for k, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield k, line


def _header(line: str, k: int, required: tuple[str, ...]) -> dict[str, str]:
    fields = {}
    for tok in line.split():
        if "=" not in tok:
            raise FormatError(f"expected key=value in header, got {tok!r}", k)
        key, value = tok.split("=", 1)
        fields[key] = value
    missing = [key for key in required if key not in fields]
    if missing:
        raise FormatError(f"header lacks {', '.join(missing)}", k)
    return fields


def _int(fields: dict[str, str], key: str, k: int) -> int:
    try:
        return int(fields[key])
    except ValueError:
        raise FormatError(f"{key} must be an integer, got {fields[key]!r}", k) from None


def _alphabets(fields: dict[str, str], k: int) -> Alphabets:
    try:
        return Alphabets(_int(fields, "arity", k), tuple(fields["labels"].split(",")))
    except ValueError as exc:
        raise FormatError(str(exc), k) from None


def _header_text(a: Alphabets, **extra) -> str:
    tail = " ".join(f"{key}={value}" for key, value in extra.items())
    return f"arity={a.arity} labels={','.join(a.labels)} {tail}"


# ---- forbidden sets ----------------------------------------------------------

def parse_forbidden(text: str) -> NormalizedSft:
    lines = list(_lines(text))
    if not lines:
        raise FormatError("empty forbidden-set file")
    k0, head = lines[0]
    fields = _header(head, k0, ("arity", "labels", "height"))
    a = _alphabets(fields, k0)
    p = _int(fields, "height", k0)
    blocks, patterns = [], []
    for k, line in lines[1:]:
        try:
            if line.startswith("pattern"):
                cells = {}
                for tok in line.split()[1:]:
                    word, _, label = tok.partition(":")
                    cells[parse_word(word, a.arity)] = a.code(label)
                patterns.append(Pattern.of(cells))
            else:
                b = parse_block(line, a)
                if b.height != p:
                    raise ValueError(f"block of height {b.height} in a height-{p} file")
                blocks.append(b)
        except ValueError as exc:
            raise FormatError(str(exc), k) from None
    if patterns:
        try:
            blocks.extend(normalize(ForbiddenSet(a, tuple(patterns)), p).forbidden)
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    return NormalizedSft(a, p, blocks)


def dump_forbidden(sft: NormalizedSft) -> str:
    a = sft.alphabets
    out = [_header_text(a, height=sft.height)]
    out += [format_block(b, a) for b in sft.forbidden]
    return "\n".join(out) + "\n"


def load_forbidden(path: str | Path) -> NormalizedSft:
    return parse_forbidden(Path(path).read_text(encoding="utf-8"))


# ---- pseudo-orbit families ----------------------------------------------------

def parse_orbit(text: str) -> PseudoOrbitFamily:
    lines = list(_lines(text))
    if not lines:
        raise FormatError("empty pseudo-orbit file")
    k0, head = lines[0]
    fields = _header(head, k0, ("arity", "labels", "order", "depth"))
    a = _alphabets(fields, k0)
    order, depth = _int(fields, "order", k0), _int(fields, "depth", k0)
    resolution = _int(fields, "resolution", k0) if "resolution" in fields else 0
    entries = {}
    for k, line in lines[1:]:
        word, sep, body = line.partition(":")
        if not sep:
            raise FormatError("expected '<word>: <block>'", k)
        try:
            w = parse_word(word, a.arity)
            if w in entries:
                raise ValueError(f"duplicate entry for word {format_word(w)}")
            entries[w] = TruncatedTree(parse_block(body, a))
        except ValueError as exc:
            raise FormatError(str(exc), k) from None
    try:
        return PseudoOrbitFamily(a, order, depth, entries, resolution)
    except ValueError as exc:
        raise FormatError(str(exc)) from None


def dump_orbit(f: PseudoOrbitFamily) -> str:
    a = f.alphabets
    out = [_header_text(a, order=f.order, depth=f.depth, resolution=f.resolution)]
    out += [f"{format_word(w)}: {format_block(f[w].body, a)}" for w in f.index_words()]
    return "\n".join(out) + "\n"


def load_orbit(path: str | Path) -> PseudoOrbitFamily:
    return parse_orbit(Path(path).read_text(encoding="utf-8"))
