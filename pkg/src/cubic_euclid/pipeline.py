"""Certification driver: covering, unit elimination, chain resolution and minima.

A level-k run covers the fundamental domain, removes cubes by the unit action
and then tries to account for every remaining group of cubes:

* a closed chain whose orbit checks pass contains at most the orbit of its
  fixed point, whose exact minimum is then computed;
* a group whose image is covered, or lands in a group already known to hold
  no k-exceptional point, holds none either;
* a group whose images lead into a verified cycle of the same unit holds
  none, since any such point would itself lie on the cycle orbit.

When every group is accounted for, the field is Euclidean at level k (no
candidate reaches k) or its minimum is the largest candidate minimum.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .covering import CoverState, init_state, subdivide_filter, tentative_filter
from .exactfield import CubicField, FieldElement
from .minima import MinimumReport, euclidean_min_at
from .unitaction import (
    ExceptionalCandidate,
    candidate_from_chain,
    detect_chains,
    group_links,
    unit_eliminate,
)

log = logging.getLogger(__name__)


class BudgetExceeded(RuntimeError):
    pass


# ------------------------------------------------------------------ phases


@dataclass(frozen=True)
class Phase:
    """One step of a schedule: subdivide, tentative, unit_elim, detect or minima."""

    kind: str
    arg: int | None = None

    KINDS = ("subdivide", "tentative", "unit_elim", "detect", "minima")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError("unknown phase %r" % self.kind)
        if self.kind in ("subdivide", "tentative") and (self.arg is None or self.arg < 1):
            raise ValueError("%s needs a positive split" % self.kind)

    def __str__(self):
        return self.kind if self.arg is None else "%s(%d)" % (self.kind, self.arg)

    @classmethod
    def parse(cls, text: str) -> "Phase":
        text = text.strip()
        if "(" in text:
            name, rest = text.split("(", 1)
            return cls(name.strip(), int(rest.rstrip(")").strip()))
        if ":" in text:
            name, arg = text.split(":", 1)
            return cls(name.strip(), int(arg))
        return cls(text)


def default_schedule() -> list[Phase]:
    """Covering to edge 1/50, two unit sweeps, one tentative pass, then candidates."""
    return [
        Phase("subdivide", 5),
        Phase("subdivide", 5),
        Phase("unit_elim"),
        Phase("unit_elim"),
        Phase("tentative", 5),
        Phase("detect"),
        Phase("minima"),
    ]


def unit_list(K: CubicField, unit: int | None = None) -> list[FieldElement]:
    """Units used for elimination: the given ones (or one of them) and their inverses."""
    us = list(K.units) if unit is None else [K.units[unit]]
    out = []
    for u in us:
        out.extend([u, K.invert(u)])
    return out


def chain_units(K: CubicField) -> list[FieldElement]:
    """Units tried when building chains: the generators, then simple products."""
    us = list(K.units)
    if len(us) == 2:
        a, b = us
        us += [K.mul(a, b), K.mul(a, K.invert(b))]
    return us


def unit_sweep(
    state: CoverState,
    units: Sequence[FieldElement],
    single: bool = False,
    check: Callable[[], None] | None = None,
) -> CoverState:
    """Apply unit elimination with every unit in turn, repeating until nothing changes."""
    while True:
        before = len(state.uncovered)
        for u in units:
            if check:
                check()
            state = unit_eliminate(state, u)
        if single or len(state.uncovered) == before:
            return state


# -------------------------------------------------------------- resolution


@dataclass
class Candidate:
    candidate: ExceptionalCandidate
    minimum: MinimumReport | None
    unit_index: int

    @property
    def zeta(self) -> FieldElement:
        return self.candidate.zeta

    @property
    def value(self) -> Fraction | None:
        return None if self.minimum is None else self.minimum.value


@dataclass
class Resolution:
    n_groups: int
    empty: set[int]
    exceptional: dict[int, int]  # group -> index into candidates
    candidates: list[Candidate]

    @property
    def unresolved(self) -> list[int]:
        return [g for g in range(self.n_groups) if g not in self.empty and g not in self.exceptional]

    @property
    def complete(self) -> bool:
        return not self.unresolved

    def exceptional_candidates(self) -> list[Candidate]:
        idx = sorted(set(self.exceptional.values()))
        return [self.candidates[i] for i in idx]


def resolve(
    state: CoverState,
    max_power: int = 1,
    minima_method: str = "lin",
    minima: bool = True,
    check: Callable[[], None] | None = None,
) -> Resolution:
    """Account for every group of uncovered cubes, as far as the checks allow.

    Without ``minima`` the verified cycles are recorded but their points are
    not evaluated, so every cycle counts as possibly exceptional.  ``check``
    is called between units and chains and may raise to abort.
    """
    check = check or (lambda: None)
    K = state.field
    units = chain_units(K)
    res = Resolution(0, set(), {}, [])
    if not state.uncovered:
        return res
    per_unit = []
    for u in units:
        check()
        per_unit.append(group_links(state, u))
    groups = per_unit[0][0]
    res.n_groups = len(groups)

    def with_mirrors(gs):
        out = set(gs)
        out.update(groups[g].mirror for g in gs if groups[g].mirror is not None)
        return out
    seen_zeta: dict[FieldElement, int] = {}

    for ui, u in enumerate(units):
        for chain in detect_chains(state, u, max_power):
            check()
            if not chain.closed or all(g in res.empty or g in res.exceptional for g in chain.groups):
                continue
            cand = candidate_from_chain(chain, K)
            if not cand.verified:
                continue
            if not cand.in_region:
                res.empty.update(with_mirrors(chain.groups))
                continue
            key = K.canonical_mod_sign(cand.zeta)
            if key in seen_zeta:
                ci = seen_zeta[key]
            else:
                rep = euclidean_min_at(cand.zeta, state.k, K, method=minima_method) if minima else None
                ci = len(res.candidates)
                res.candidates.append(Candidate(cand, rep, ui))
                seen_zeta[key] = ci
            if res.candidates[ci].value is not None and res.candidates[ci].value < state.k:
                res.empty.update(with_mirrors(chain.groups))
            else:
                for g in with_mirrors(chain.groups):
                    res.exceptional.setdefault(g, ci)

    changed = True
    while changed:
        changed = False
        for g in res.unresolved:
            for ui in range(len(units)):
                if _tail_is_empty(g, ui, per_unit[ui][1], res):
                    res.empty.add(g)
                    changed = True
                    break
    log.info(
        "resolve: %d groups, %d empty, %d on candidate orbits, %d unresolved",
        res.n_groups, len(res.empty), len(res.exceptional), len(res.unresolved),
    )
    return res


def _tail_is_empty(g: int, ui: int, links, res: Resolution) -> bool:
    seen = {g}
    cur = g
    while True:
        link = links[cur]
        if link.ambiguous:
            return False
        if link.target is None or link.target in res.empty:
            return True
        ci = res.exceptional.get(link.target)
        if ci is not None:
            return res.candidates[ci].unit_index == ui
        if link.target in seen:
            return False
        seen.add(link.target)
        cur = link.target


# ------------------------------------------------------------ level runs


@dataclass
class LevelResult:
    k: Fraction
    state: CoverState
    resolution: Resolution | None
    trajectory: list[tuple[str, Fraction, int]] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def status(self) -> str:
        if not self.state.uncovered:
            return "euclidean"
        if self.resolution is None or not self.resolution.complete:
            return "inconclusive"
        return "minimum" if self.resolution.exceptional else "euclidean"

    @property
    def minimum(self) -> Candidate | None:
        """Candidate attaining the largest minimum among the exceptional orbits."""
        if self.status != "minimum":
            return None
        return max(self.resolution.exceptional_candidates(), key=lambda c: (c.value, str(c.zeta)))

    def lower_bound(self) -> Fraction | None:
        vals = [c.value for c in (self.resolution.candidates if self.resolution else []) if c.value is not None]
        return max(vals) if vals else None


class _Clock:
    def __init__(self, budget: float | None):
        self.start = time.monotonic()
        self.budget = budget

    def elapsed(self) -> float:
        return time.monotonic() - self.start

    def check(self):
        if self.budget is not None and self.elapsed() > self.budget:
            raise BudgetExceeded("time budget of %.0f s exhausted" % self.budget)


def certify_level(
    K: CubicField,
    k,
    splits: Sequence[int] = (5, 5),
    refine: int = 2,
    max_refinements: int = 6,
    max_cubes: int = 400_000,
    budget: float | None = None,
    domain: str = "f+",
    limits=None,
    max_power: int = 1,
    state: CoverState | None = None,
    on_phase: Callable[[str, CoverState], None] | None = None,
) -> LevelResult:
    """Cover at level k, refining until every remaining group is accounted for."""
    clock = _Clock(budget)
    k = Fraction(k)
    if state is None:
        state = init_state(K, k, domain, check_k=False)
        state.search_limits = limits
    units = unit_list(K)
    out = LevelResult(k, state, None)

    def step(name, st):
        out.trajectory.append((name, st.edge, len(st.uncovered)))
        out.state = st
        if on_phase:
            on_phase(name, st)
        return st

    plan = list(splits) + [refine] * max_refinements
    try:
        for i, split in enumerate(plan):
            clock.check()
            if len(state.uncovered) * split**3 > max_cubes:
                log.info("cube limit reached at edge %s", state.edge)
                break
            state = step("subdivide(%d)" % split, subdivide_filter(state, split, clock.check))
            state = step("unit_elim", unit_sweep(state, units, check=clock.check))
            if not state.uncovered:
                break
            if i + 1 >= len(splits):
                clock.check()
                out.resolution = resolve(state, max_power, check=clock.check)
                if out.resolution.complete:
                    break
    except BudgetExceeded as exc:
        log.info("%s", exc)
    out.seconds = clock.elapsed()
    return out


@dataclass
class MinimumSearch:
    levels: list[LevelResult]
    value: Fraction | None
    attaining: Candidate | None
    euclidean_below: Fraction | None  # smallest level certified free of exceptional points

    @property
    def status(self) -> str:
        if self.value is not None:
            return "minimum"
        if self.euclidean_below is not None:
            return "euclidean"
        return "inconclusive"


def find_minimum(
    K: CubicField,
    expected=None,
    k_start=Fraction(99, 100),
    factors: Sequence[Fraction] = (Fraction(9, 10), Fraction(97, 100), Fraction(3, 4)),
    budget: float | None = None,
    max_levels: int = 12,
    descent: Fraction = Fraction(4, 5),
    **level_kw,
) -> MinimumSearch:
    """Determine M(K) exactly by running levels below it.

    With ``expected`` the levels are ``factor * expected``.  Otherwise k
    descends from ``k_start`` by ``descent``, jumping just below the best lower
    bound found so far, and each level may use half of the remaining budget.
    An unresolved blind level that still certified a point above it is
    retried just below that point's value; otherwise the search bisects
    between it and the lowest level certified free of exceptional points.
    """
    clock = _Clock(budget)
    levels: list[LevelResult] = []
    eu = None
    fail = None  # highest level that could not be resolved

    def remaining():
        if budget is None:
            return None
        left = max(1.0, budget - clock.elapsed())
        return left if expected is not None else max(1.0, left / 2)

    def between(lo, hi):
        return [((lo + hi) / 2).limit_denominator(10**4)] if hi > Fraction(51, 50) * lo else []

    if expected is not None:
        ks = [Fraction(f) * Fraction(expected) for f in factors]
    else:
        ks = [Fraction(k_start)]
    lower = None
    while ks and len(levels) < max_levels:
        k = ks.pop(0)
        if budget is not None and clock.elapsed() > budget:
            break
        lr = certify_level(K, k, budget=remaining(), **level_kw)
        levels.append(lr)
        log.info("level %s: %s after %.1f s", k, lr.status, lr.seconds)
        if lr.status == "minimum":
            best = lr.minimum
            return MinimumSearch(levels, best.value, best, eu)
        lb = lr.lower_bound()
        if lb is not None and (lower is None or lb > lower):
            lower = lb
        if expected is not None:
            if lr.status == "euclidean":
                eu = k if eu is None else min(eu, k)
            continue
        if lr.status == "euclidean":
            eu = k if eu is None else min(eu, k)
            if lower is not None and Fraction(99, 100) * lower < k:
                ks = [max(descent * k, Fraction(99, 100) * lower).limit_denominator(10**4)]
            elif fail is not None and descent * k <= fail:
                ks = between(fail, k)
            else:
                ks = [(descent * k).limit_denominator(10**4)]
        elif lb is not None and Fraction(99, 100) * lb > k:
            ks = [(Fraction(99, 100) * lb).limit_denominator(10**4)]
        else:
            fail = k if fail is None else max(fail, k)
            ks = between(k, eu) if eu is not None else []
    return MinimumSearch(levels, None, None, eu)


# ------------------------------------------------------------ file runs


@dataclass
class RunReport:
    """Outcome of a run on one field.

    ``status`` is one of ``euclidean`` (covered at level k), ``minimum``
    (M(K) certified), ``not-euclidean`` (a point with M(K, xi) >= 1 is
    certified but M(K) is not) or ``inconclusive``.
    """

    field_id: str
    status: str
    k: Fraction
    minimum: Fraction | None = None
    point: FieldElement | None = None
    attaining: FieldElement | None = None
    lower_bound: Fraction | None = None
    candidates: list = field(default_factory=list)  # fio.CandidateRecord
    trajectory: list[tuple[str, Fraction, int]] = field(default_factory=list)
    remaining: int = 0
    seconds: float = 0.0

    @property
    def letter(self) -> str:
        """E for norm-Euclidean, N otherwise, '?' when undecided."""
        if self.status == "euclidean":
            return "E" if self.k <= 1 else "?"
        if self.status == "minimum":
            return "E" if self.minimum < 1 else "N"
        if self.status == "not-euclidean":
            return "N"
        return "?"

    def text(self) -> str:
        """Human-readable report; contains no timings so that reruns compare equal."""
        from .exactfield import format_element

        lines = ["field %s" % self.field_id, "status %s (%s)" % (self.status, self.letter), "k %s" % self.k]
        if self.minimum is not None:
            lines.append("minimum %s" % self.minimum)
            lines.append("attained at %s by %s" % (format_element(self.point), format_element(self.attaining)))
        if self.lower_bound is not None and self.minimum is None:
            lines.append("lower bound %s" % self.lower_bound)
        lines.append("remaining cubes %d" % self.remaining)
        for name, edge, count in self.trajectory:
            lines.append("  %-14s edge %-10s cubes %d" % (name, edge, count))
        for c in self.candidates:
            m = "?" if c.minimum is None else str(c.minimum)
            flags = "".join("+" if f else "-" for f in c.checks)
            lines.append("candidate %s  t=%d  checks %s  M=%s" % (format_element(c.zeta), c.length, flags, m))
        return "\n".join(lines) + "\n"

    def summary_line(self) -> str:
        parts = [
            "field=%s" % self.field_id,
            "status=%s" % self.status,
            "letter=%s" % self.letter,
            "k=%s" % self.k,
            "M=%s" % ("-" if self.minimum is None else self.minimum),
            "remaining=%d" % self.remaining,
            "candidates=%d" % len(self.candidates),
        ]
        return " ".join(parts)


def _records(res: Resolution | None):
    from .fio import CandidateRecord

    out = []
    if res is None:
        return out
    for c in res.candidates:
        ec = c.candidate
        out.append(
            CandidateRecord(
                zeta=ec.zeta,
                length=ec.chain.length,
                unit=ec.chain.unit,
                shifts=list(ec.chain.shifts),
                checks=(ec.verified_forward, ec.verified_backward, ec.unit_ok, ec.in_region),
                minimum=c.value,
                attaining=None if c.minimum is None else c.minimum.attaining,
            )
        )
    return out


def classify(field_id: str, state: CoverState, res: Resolution | None) -> RunReport:
    rep = RunReport(field_id, "inconclusive", state.k, remaining=len(state.uncovered))
    rep.candidates = _records(res)
    vals = [c.value for c in (res.candidates if res else []) if c.value is not None]
    rep.lower_bound = max(vals) if vals else None
    if not state.uncovered:
        rep.status = "euclidean"
    elif res is not None and res.complete and all(c.value is not None for c in res.exceptional_candidates()):
        exc = res.exceptional_candidates()
        if not exc:
            rep.status = "euclidean"
        else:
            best = max(exc, key=lambda c: (c.value, str(c.zeta)))
            rep.status = "minimum"
            rep.minimum = best.value
            rep.point = best.zeta
            rep.attaining = best.minimum.attaining
    elif rep.lower_bound is not None and rep.lower_bound >= 1:
        rep.status = "not-euclidean"
    return rep


class RunFiles:
    """The files belonging to a field file: cache, candidates, backup and progress log."""

    def __init__(self, path):
        from pathlib import Path

        self.disc = Path(path)
        base = str(self.disc)
        self.cache = Path(base + ".p")
        self.cands = Path(base + ".n")
        self.backup = Path(base + ".bak")
        self.progress = Path(base + ".run")

    def read_progress(self) -> list[tuple[str, Fraction, int]]:
        if not self.progress.exists():
            return []
        out = []
        for ln in self.progress.read_text().splitlines():
            if ln.strip() and not ln.startswith("#"):
                name, edge, count = ln.split()
                out.append((name, Fraction(edge), int(count)))
        return out

    def write_progress(self, rows):
        text = "".join("%s %s %d\n" % (name, edge, count) for name, edge, count in rows)
        tmp = self.progress.with_name(self.progress.name + ".new")
        tmp.write_text(text)
        tmp.replace(self.progress)


def run_pipeline(
    path,
    schedule: Sequence[Phase] | None = None,
    k=None,
    limits=None,
    max_power: int = 1,
    domain: str = "f+",
    budget: float | None = None,
    restart: bool = False,
) -> RunReport:
    """Run a schedule of phases on a field file, saving all files after every phase.

    Completed phases are recorded in ``<file>.run``; running the same schedule
    again resumes after the last completed phase.  Changing k resets the cubes
    to the initial four.
    """
    from . import fio

    clock = _Clock(budget)
    schedule = default_schedule() if schedule is None else list(schedule)
    files = RunFiles(path)
    df = fio.read_disc(files.disc)
    K = df.to_field()
    field_id = fio.field_filename(df.disc)

    done = [] if restart else files.read_progress()
    names = [str(p) for p in schedule]
    if [d[0] for d in done] != names[: len(done)]:
        raise ValueError("progress log %s belongs to a different schedule" % files.progress)
    if done and (df.edge, len(df.cubes)) != done[-1][1:]:
        # interrupted between saving the field file and logging the phase
        prev = fio.read_disc(files.backup) if files.backup.exists() else None
        if prev is None or (prev.edge, len(prev.cubes)) != done[-1][1:]:
            raise ValueError("%s does not match its progress log" % files.disc)
        df = prev
        fio.save_disc(files.disc, df, backup=False)
    if restart or (k is not None and Fraction(k) != df.k):
        done = []
        df = df.with_state(init_state(K, df.k if k is None else k, domain, check_k=False))
        fio.save_disc(files.disc, df)
    state = df.to_state(K, domain)
    state.search_limits = limits
    state.cache = fio.load_cache(files.cache)
    if not done:
        files.write_progress([])

    res: Resolution | None = None
    for i, phase in enumerate(schedule):
        if i < len(done):
            continue
        clock.check()
        if phase.kind == "subdivide":
            state = subdivide_filter(state, phase.arg)
        elif phase.kind == "tentative":
            state = tentative_filter(state, phase.arg)
        elif phase.kind == "unit_elim":
            state = unit_sweep(state, unit_list(K, phase.arg), single=True)
        elif phase.kind in ("detect", "minima"):
            res = resolve(state, max_power, minima=phase.kind == "minima")
            files.cands.write_text(fio.format_candidates(_records(res)))
        fio.save_disc(files.disc, df.with_state(state))
        fio.save_cache(files.cache, state.cache)
        done.append((str(phase), state.edge, len(state.uncovered)))
        files.write_progress(done)

    if res is None and any(p.kind in ("detect", "minima") for p in schedule):
        last = max(i for i, p in enumerate(schedule) if p.kind in ("detect", "minima"))
        res = resolve(state, max_power, minima=schedule[last].kind == "minima")
    rep = classify(field_id, state, res)
    rep.trajectory = done
    rep.seconds = clock.elapsed()
    return rep


def report_from_search(field_id: str, search: MinimumSearch) -> RunReport:
    last = search.levels[-1] if search.levels else None
    if last is None:
        return RunReport(field_id, "inconclusive", Fraction(0))
    rep = classify(field_id, last.state, last.resolution)
    rep.trajectory = [t for lv in search.levels for t in lv.trajectory]
    rep.seconds = sum(lv.seconds for lv in search.levels)
    if search.status == "euclidean" and rep.status != "minimum":
        rep.status = "euclidean"
        rep.k = search.euclidean_below
    lbs = [lv.lower_bound() for lv in search.levels if lv.lower_bound() is not None]
    if lbs and rep.minimum is None:
        rep.lower_bound = max(lbs)
    return rep


# ----------------------------------------------------------- table checks


@dataclass
class RowResult:
    row: object  # fio.ManifestRow
    outcome: str  # match, mismatch or timeout
    report: RunReport

    def line(self) -> str:
        exp = self.row.letter
        if self.row.minimum is not None:
            exp += (" >=" if self.row.at_least else " ") + str(self.row.minimum)
        got = self.report.letter
        if self.report.minimum is not None:
            got += " " + str(self.report.minimum)
        return "%-8s %-24s expected %-14s got %-14s %.1fs" % (
            self.outcome.upper(), self.row.path, exp, got, self.report.seconds)


def _row_matches(row, rep: RunReport) -> bool:
    if rep.letter == "?":
        return False
    if (row.letter == "E") != (rep.letter == "E"):
        return False
    if row.minimum is None:
        return rep.status in ("euclidean", "minimum")
    value = rep.minimum if rep.minimum is not None else None
    if row.at_least:
        best = value if value is not None else rep.lower_bound
        return best is not None and best >= row.minimum
    return value is not None and value == row.minimum


def verify_tables(rows, budget: float = 600.0, guided: bool = False) -> list[RowResult]:
    """Run every manifest row and compare with its expected letter and minimum."""
    from . import fio

    out = []
    for row in rows:
        df = fio.read_disc(row.path)
        K = df.to_field()
        fid = fio.field_filename(df.disc)
        row_budget = row.budget or budget
        try:
            if row.minimum is None:
                lv = certify_level(K, Fraction(99, 100), budget=row_budget)
                search = MinimumSearch([lv], None, None, lv.k if lv.status == "euclidean" else None)
                if lv.status == "minimum":
                    search = MinimumSearch([lv], lv.minimum.value, lv.minimum, None)
            else:
                expected = row.minimum if guided and not row.at_least else None
                search = find_minimum(K, expected=expected, budget=row_budget)
            rep = report_from_search(fid, search)
        except BudgetExceeded:
            rep = RunReport(fid, "inconclusive", Fraction(0), seconds=row_budget)
        if _row_matches(row, rep):
            outcome = "match"
        elif rep.status == "inconclusive" and rep.seconds >= row_budget:
            outcome = "timeout"
        else:
            outcome = "mismatch"
        out.append(RowResult(row, outcome, rep))
    return out
