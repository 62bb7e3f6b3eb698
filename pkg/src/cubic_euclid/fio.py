"""Field files, translation caches, candidate files and batch manifests.

Field file layout (one item per line, whitespace separated)::

    disc p q r
    root lines (three)       real: alpha, alpha', alpha''; complex: alpha, Re, Im
    unit lines (two or one)  numerators over g in the basis 1, alpha, alpha^2
    g                        followed by "g_x g_y g_z" on the next line when g > 1
    k
    edge
    cube corner lines        integral-basis coordinates of the lowest corner

Decimals are read as exact base-10 rationals.  Values that have no finite
decimal expansion are written as ``p/q``.
"""

from __future__ import annotations

import os
import re
import shutil
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .covering import Coords, CoverState, Cube
from .exactfield import CubicField, FieldElement, format_element

__all__ = [
    "ParseError",
    "DiscFile",
    "parse_disc",
    "write_disc",
    "read_disc",
    "save_disc",
    "field_filename",
    "parse_cache",
    "format_cache",
    "load_cache",
    "save_cache",
    "append_cache",
    "CandidateRecord",
    "parse_candidates",
    "format_candidates",
    "ManifestRow",
    "parse_manifest",
    "parse_rational",
    "format_number",
]


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else "line %d: %s" % (line, message))


# ------------------------------------------------------------------ numbers


def parse_rational(tok: str, line: int | None = None) -> Fraction:
    """Exact value of a decimal or p/q token."""
    try:
        if "/" in tok:
            return Fraction(tok)
        return Fraction(Decimal(tok))
    except (ValueError, InvalidOperation, ZeroDivisionError):
        raise ParseError("not a number: %r" % tok, line) from None


def _terminates(q: Fraction) -> bool:
    d = q.denominator
    for p in (2, 5):
        while d % p == 0:
            d //= p
    return d == 1


def format_number(q: Fraction) -> str:
    """Shortest exact decimal, or p/q when the expansion does not terminate."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    if not _terminates(q):
        return "%d/%d" % (q.numerator, q.denominator)
    sign = "-" if q < 0 else ""
    q = abs(q)
    digits = 0
    while (q * 10**digits).denominator != 1:
        digits += 1
    s = str(int(q * 10**digits)).rjust(digits + 1, "0")
    return "%s%s.%s" % (sign, s[:-digits], s[-digits:])


def _ints(tokens, n, line):
    if len(tokens) != n:
        raise ParseError("expected %d integers, got %d tokens" % (n, len(tokens)), line)
    try:
        return tuple(int(t) for t in tokens)
    except ValueError:
        raise ParseError("expected integers: %s" % " ".join(tokens), line) from None


# --------------------------------------------------------------- field file


@dataclass
class DiscFile:
    disc: int
    poly: tuple[int, int, int]
    roots: tuple[Decimal, Decimal, Decimal]
    units: list[tuple[int, int, int]]
    g: int = 1
    theta: tuple[int, int, int] | None = None
    k: Fraction = Fraction(9, 10)
    edge: Fraction = Fraction(1, 2)
    cubes: list[tuple[Fraction, Fraction, Fraction]] = field(default_factory=list)

    @property
    def is_real(self) -> bool:
        return self.disc > 0

    def unit_elements(self) -> list[FieldElement]:
        return [FieldElement(*(Fraction(c, self.g) for c in u)) for u in self.units]

    def to_field(self, check: bool = True) -> CubicField:
        return CubicField(
            self.disc,
            self.poly,
            roots=tuple(float(t) for t in self.roots),
            units=self.unit_elements(),
            index_g=self.g,
            theta=self.theta,
            check=check,
        )

    def to_state(self, K: CubicField | None = None, domain: str = "f+") -> CoverState:
        K = K or self.to_field()
        cubes = [Cube(c, self.edge) for c in self.cubes]
        return CoverState(field=K, k=self.k, edge=self.edge, uncovered=cubes, domain=domain)

    def with_state(self, state: CoverState) -> "DiscFile":
        return DiscFile(
            self.disc, self.poly, self.roots, list(self.units), self.g, self.theta,
            state.k, state.edge, [c.corner for c in state.uncovered],
        )


def field_filename(disc: int) -> str:
    """``985`` for real fields, ``_199`` for the complex field of discriminant -199."""
    return str(disc) if disc > 0 else "_%d" % -disc


def parse_disc(text: str, check: bool = True) -> DiscFile:
    """Parse a field file; with ``check`` the field data is validated as well."""
    lines = [(i + 1, ln.split()) for i, ln in enumerate(text.splitlines())]
    lines = [(n, toks) for n, toks in lines if toks and not toks[0].startswith("#")]
    pos = 0

    def take(what):
        nonlocal pos
        if pos >= len(lines):
            last = lines[-1][0] if lines else 0
            raise ParseError("unexpected end of file, expected %s" % what, last + 1)
        item = lines[pos]
        pos += 1
        return item

    n, toks = take("discriminant and polynomial")
    disc, p, q, r = _ints(toks, 4, n)
    if disc == 0:
        raise ParseError("discriminant must be non-zero", n)
    roots = []
    for _ in range(3):
        n, toks = take("root")
        if len(toks) != 1:
            raise ParseError("expected one root value", n)
        try:
            roots.append(Decimal(toks[0]))
        except InvalidOperation:
            raise ParseError("not a number: %r" % toks[0], n) from None
    units = []
    for _ in range(2 if disc > 0 else 1):
        n, toks = take("unit")
        units.append(_ints(toks, 3, n))
    n, toks = take("index")
    if len(toks) == 1:
        (g,) = _ints(toks, 1, n)
        theta = None
        if g != 1:
            n, toks = take("theta numerators")
            theta = _ints(toks, 3, n)
    elif len(toks) == 4:
        g, *th = _ints(toks, 4, n)
        theta = tuple(th)
    else:
        raise ParseError("index line needs g or g g_x g_y g_z", n)
    if g < 1:
        raise ParseError("index must be positive", n)
    n, toks = take("k")
    if len(toks) != 1:
        raise ParseError("expected k", n)
    k = parse_rational(toks[0], n)
    n, toks = take("edge")
    if len(toks) != 1:
        raise ParseError("expected edge length", n)
    edge = parse_rational(toks[0], n)
    cubes = []
    while pos < len(lines):
        n, toks = take("cube")
        if len(toks) != 3:
            raise ParseError("expected a cube corner (3 numbers)", n)
        cubes.append(tuple(parse_rational(t, n) for t in toks))
    df = DiscFile(disc, (p, q, r), tuple(roots), units, g, theta, k, edge, cubes)
    if check:
        df.to_field(check=True)
    return df


def write_disc(df: DiscFile) -> str:
    out = ["%d %d %d %d" % ((df.disc,) + tuple(df.poly))]
    out += [str(r) for r in df.roots]
    out += ["%d %d %d" % u for u in df.units]
    out.append(str(df.g))
    if df.g != 1:
        out.append("%d %d %d" % tuple(df.theta))
    out.append(format_number(df.k))
    out.append(format_number(df.edge))
    out += [" ".join(format_number(c) for c in cube) for cube in df.cubes]
    return "\n".join(out) + "\n"


def read_disc(path, check: bool = True) -> DiscFile:
    return parse_disc(Path(path).read_text(), check)


def save_disc(path, df: DiscFile, backup: bool = True):
    """Write a field file, first copying any existing version to ``<path>.bak``."""
    path = Path(path)
    if backup and path.exists():
        shutil.copyfile(path, str(path) + ".bak")
    _atomic_write(path, write_disc(df))


def _atomic_write(path: Path, text: str):
    tmp = Path(str(path) + ".new")
    tmp.write_text(text)
    os.replace(tmp, path)


# ------------------------------------------------------------- cache files
#
# Files list the vectors v with N(xi + v) < k; in memory the cache holds the
# translations gamma = -v with N(xi - gamma) < k.

_TRIPLE = re.compile(r"\(\s*(-?\d+)\s*[, ]\s*(-?\d+)\s*[, ]\s*(-?\d+)\s*\)")


def parse_cache(text: str) -> list[Coords]:
    """Translations in file order; the zero vector is always present and first."""
    out: list[Coords] = [(0, 0, 0)]
    seen = {(0, 0, 0)}
    for n, ln in enumerate(text.splitlines(), 1):
        rest = _TRIPLE.sub(" ", ln).replace(",", " ").strip()
        if rest and not rest.startswith("#"):
            raise ParseError("unexpected text %r" % rest, n)
        for m in _TRIPLE.finditer(ln):
            v = tuple(-int(t) for t in m.groups())
            if v not in seen:
                seen.add(v)
                out.append(v)
    return out


def format_cache(cache: Sequence[Coords], per_line: int = 7) -> str:
    items = ["(%d %d %d)" % tuple(-t for t in v) for v in cache]
    rows = [", ".join(items[i : i + per_line]) for i in range(0, len(items), per_line)]
    return ",\n".join(rows) + "\n"


def load_cache(path, create: bool = True) -> list[Coords]:
    """Read a translation cache; a missing file starts as the zero vector."""
    path = Path(path)
    if not path.exists():
        cache = [(0, 0, 0)]
        if create:
            save_cache(path, cache)
        return cache
    return parse_cache(path.read_text())


def save_cache(path, cache: Sequence[Coords]):
    _atomic_write(Path(path), format_cache(cache))


def append_cache(path, vec: Coords) -> list[Coords]:
    cache = load_cache(path)
    vec = tuple(int(t) for t in vec)
    if vec not in cache:
        cache.append(vec)
        save_cache(path, cache)
    return cache


# --------------------------------------------------------- candidate files
#
# One candidate per line, fields separated by ';':
#   zeta=<x y z> ; t=<length> ; unit=<x y z> ; shifts=(a b c) (a b c) ... ;
#   checks=<fwd bwd unit region as 0/1> ; M=<value or ?> ; eta=<x y z or ?>
# zeta, unit and eta are power-basis coordinates; shifts are integral coordinates.


@dataclass
class CandidateRecord:
    zeta: FieldElement
    length: int
    unit: FieldElement
    shifts: list[Coords]
    checks: tuple[bool, bool, bool, bool]
    minimum: Fraction | None = None
    attaining: FieldElement | None = None

    @property
    def verified(self) -> bool:
        return all(self.checks[:3])


def _elt(e: FieldElement) -> str:
    return " ".join(format_number(c) for c in e.coords)


def format_candidates(records: Iterable[CandidateRecord]) -> str:
    out = ["# zeta ; t ; unit ; shifts ; checks(fwd bwd unit region) ; M ; eta"]
    for r in records:
        out.append(
            " ; ".join(
                [
                    "zeta=%s" % _elt(r.zeta),
                    "t=%d" % r.length,
                    "unit=%s" % _elt(r.unit),
                    "shifts=%s" % " ".join("(%d %d %d)" % tuple(b) for b in r.shifts),
                    "checks=%s" % " ".join("1" if c else "0" for c in r.checks),
                    "M=%s" % ("?" if r.minimum is None else str(r.minimum)),
                    "eta=%s" % ("?" if r.attaining is None else _elt(r.attaining)),
                ]
            )
        )
    return "\n".join(out) + "\n"


def parse_candidates(text: str) -> list[CandidateRecord]:
    out = []
    for n, ln in enumerate(text.splitlines(), 1):
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        try:
            kv = dict(part.strip().split("=", 1) for part in ln.split(";"))
            elt = lambda s: FieldElement(*(parse_rational(t, n) for t in s.split()))
            rec = CandidateRecord(
                zeta=elt(kv["zeta"]),
                length=int(kv["t"]),
                unit=elt(kv["unit"]),
                shifts=[tuple(int(t) for t in m.groups()) for m in _TRIPLE.finditer(kv["shifts"])],
                checks=tuple(t == "1" for t in kv["checks"].split()),
                minimum=None if kv["M"].strip() == "?" else Fraction(kv["M"].strip()),
                attaining=None if kv["eta"].strip() == "?" else elt(kv["eta"]),
            )
        except (KeyError, ValueError) as exc:
            raise ParseError("bad candidate record (%s)" % exc, n) from None
        if len(rec.checks) != 4:
            raise ParseError("checks needs four flags", n)
        out.append(rec)
    return out


# ----------------------------------------------------------------- manifest


@dataclass
class ManifestRow:
    """Expected outcome for one field file.

    ``letter`` is E, N or H; ``minimum`` is exact, or a lower bound when
    ``at_least`` is set; ``minimum`` None means covering at k = 0.99 suffices.
    """

    path: str
    letter: str
    minimum: Fraction | None = None
    at_least: bool = False
    budget: float | None = None
    line: int = 0


def parse_manifest(text: str, base: Path | str | None = None) -> list[ManifestRow]:
    """Rows ``<field file> <E|N|H> [<minimum> | >=<bound>] [budget=<seconds>]``."""
    rows = []
    for n, ln in enumerate(text.splitlines(), 1):
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        toks = ln.split()
        if len(toks) < 2:
            raise ParseError("expected a file name and a status letter", n)
        path, letter = toks[0], toks[1].upper()
        if letter not in ("E", "N", "H"):
            raise ParseError("status must be E, N or H", n)
        row = ManifestRow(str(Path(base) / path) if base else path, letter, line=n)
        for tok in toks[2:]:
            if tok.startswith("budget="):
                row.budget = float(tok[len("budget="):])
            elif tok.startswith(">="):
                row.minimum, row.at_least = parse_rational(tok[2:], n), True
            else:
                row.minimum = parse_rational(tok, n)
        rows.append(row)
    return rows


def describe(e: FieldElement) -> str:
    return format_element(e)
