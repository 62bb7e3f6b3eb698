"""Command line interface: ``cubic-euclid <command> ...``."""

from __future__ import annotations

import argparse
import logging
import shutil
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import fio
from .exactfield import FieldElement, format_element
from .minima import coeff_bounds, conjecture_check, euclidean_min_at
from .pipeline import (
    MinimumSearch,
    Phase,
    certify_level,
    default_schedule,
    find_minimum,
    report_from_search,
    run_pipeline,
    verify_tables,
)


def bundled_fields() -> Path:
    return Path(str(resources.files("cubic_euclid") / "data" / "fields"))


def _limits(text: str):
    try:
        mx, my, mz = (int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected MX,MY,MZ") from None
    return (mx, my, mz)


def _rational(text: str) -> Fraction:
    try:
        return fio.parse_rational(text)
    except fio.ParseError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _schedule(args) -> list[Phase]:
    if args.schedule:
        phases = [Phase.parse(t) for t in args.schedule.split(",") if t.strip()]
    else:
        phases = default_schedule()
    out = []
    for p in phases:
        if args.split and p.kind in ("subdivide", "tentative"):
            p = Phase(p.kind, args.split)
        if args.unit is not None and p.kind == "unit_elim" and p.arg is None:
            p = Phase(p.kind, args.unit)
        out.append(p)
    return out


def _field_path(name: str) -> Path:
    p = Path(name)
    if p.exists():
        return p
    cand = bundled_fields() / name
    if cand.exists():
        return cand
    names = sorted(x.name for x in bundled_fields().iterdir() if x.name != "tables.txt")
    raise SystemExit("no field file %r (bundled: %s)" % (name, ", ".join(names)))


def cmd_init(args):
    src = _field_path(args.field)
    dest = Path(args.dir) / src.name
    dest.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(src, dest)
    if args.k is not None:
        df = fio.read_disc(dest)
        df.k = args.k
        fio.save_disc(dest, df, backup=False)
    print(dest)


def cmd_run(args):
    path = Path(args.field)
    if not path.exists():
        raise SystemExit("no field file %r; copy a bundled one with 'cubic-euclid init'" % args.field)
    rep = run_pipeline(
        path,
        _schedule(args),
        k=args.k,
        limits=args.limits,
        max_power=args.max_power,
        domain=args.domain,
        budget=args.budget,
        restart=args.restart,
    )
    sys.stdout.write(rep.text())
    print(rep.summary_line())


def cmd_certify(args):
    df = fio.read_disc(_field_path(args.field))
    K = df.to_field()
    kw = dict(domain=args.domain, limits=args.limits, max_power=args.max_power)
    if args.k is not None:
        lv = certify_level(K, args.k, budget=args.budget, **kw)
        m = lv.minimum
        search = MinimumSearch([lv], m.value if m else None, m, lv.k if lv.status == "euclidean" else None)
    else:
        search = find_minimum(K, expected=args.expected, budget=args.budget, **kw)
    rep = report_from_search(fio.field_filename(df.disc), search)
    sys.stdout.write(rep.text())
    print(rep.summary_line())


def cmd_verify(args):
    path = Path(args.manifest) if args.manifest else bundled_fields() / "tables.txt"
    rows = fio.parse_manifest(path.read_text(), base=path.parent)
    results = verify_tables(rows, budget=args.budget or 600.0, guided=args.guided)
    for r in results:
        print(r.line())
    bad = sum(r.outcome != "match" for r in results)
    print("%d of %d rows match" % (len(results) - bad, len(results)))
    return 1 if bad else 0


def cmd_minimum(args):
    df = fio.read_disc(_field_path(args.field))
    K = df.to_field()
    xi = FieldElement(*(fio.parse_rational(t) for t in args.xi.replace(",", " ").split()))
    rep = euclidean_min_at(xi, args.k or Fraction(1), K)
    print("M(K, %s) = %s" % (format_element(xi), rep.value))
    print("attained by %s, orbit size %d, k used %s" % (format_element(rep.attaining), rep.orbit_size, rep.k_history[-1]))


def cmd_bounds(args):
    K = fio.read_disc(_field_path(args.field)).to_field()
    b = coeff_bounds(args.k, K, method=args.method)
    print("mu = (%.4f, %.4f, %.4f)" % b.mu)


def cmd_conjecture(args):
    ok = True
    for l in args.l:
        pred, got, match = conjecture_check(l)
        ok &= match
        print("l=%d predicted %s achieved %s %s" % (l, pred, got, "match" if match else "MISMATCH"))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cubic-euclid", description="Euclidean minima of cubic number fields")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--k", type=_rational, help="level k (exact decimal or p/q)")
        p.add_argument("--limits", type=_limits, help="translation search limits MX,MY,MZ")
        p.add_argument("--max-power", type=int, default=1, help="largest unit power tried for chains")
        p.add_argument("--budget", type=float, help="time budget in seconds")
        p.add_argument("--domain", choices=("f+", "ftilde"), default="f+")

    p = sub.add_parser("init", help="copy a bundled field file into a working directory")
    p.add_argument("field")
    p.add_argument("--dir", default=".")
    p.add_argument("--k", type=_rational)
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("run", help="run a schedule of phases on a field file")
    p.add_argument("field")
    common(p)
    p.add_argument("--schedule", help="comma separated phases, e.g. subdivide(5),unit_elim,detect")
    p.add_argument("--split", type=int, help="split factor for every subdivide/tentative phase")
    p.add_argument("--unit", type=int, help="restrict unit elimination to unit N (0-based)")
    p.add_argument("--restart", action="store_true", help="ignore the progress log")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("certify", help="determine M(K) by descending levels")
    p.add_argument("field")
    common(p)
    p.add_argument("--expected", type=_rational, help="run just below this value")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify", help="check a manifest of fields against expected minima")
    p.add_argument("manifest", nargs="?", help="manifest file (default: the bundled table rows)")
    p.add_argument("--budget", type=float)
    p.add_argument("--guided", action="store_true", help="use the expected minimum to choose k")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("minimum", help="exact M(K, xi) at a rational point")
    p.add_argument("field")
    p.add_argument("--xi", required=True, help="power-basis coordinates, e.g. '2/5 -1/5 2/5'")
    p.add_argument("--k", type=_rational)
    p.set_defaults(func=cmd_minimum)

    p = sub.add_parser("bounds", help="coefficient bounds for the enumeration")
    p.add_argument("field")
    p.add_argument("--k", type=_rational, required=True)
    p.add_argument("--method", choices=("conjugate", "lin"), default="conjugate")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("conjecture", help="check the pure cubic minimum formula")
    p.add_argument("l", type=int, nargs="+")
    p.set_defaults(func=cmd_conjecture)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args) or 0
    except (fio.ParseError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
