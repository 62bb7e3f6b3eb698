"""End-to-end acceptance checks; each test records one PASS/FAIL line for the terminal summary."""

import shutil
import time
from contextlib import contextmanager
from fractions import Fraction

import numpy as np

from cubic_euclid import fio
from cubic_euclid.covering import Cube, cube_bound, init_state, subdivide_filter
from cubic_euclid.exactfield import FieldElement
from cubic_euclid.minima import _min_over_box, coeff_bounds_real, conjecture_check, euclidean_min_at, lin_bound, orbit
from cubic_euclid.pipeline import RunFiles, default_schedule, run_pipeline, unit_list, unit_sweep, verify_tables
from cubic_euclid.unitaction import candidate_from_chain, chain_through

from conftest import ACCEPTANCE, F, field_path
from oracles import exact_sampled_soundness
from test_covering import TEN_CUBES, cubes_at, exact_abs_norm
from test_minima import XI, brute_sup

ALPHA = F(0, 1, 0)
XI0 = F("2/5", "-1/5", "2/5")


@contextmanager
def criterion(name):
    info = {"detail": ""}
    try:
        yield info
    except BaseException as exc:
        ACCEPTANCE.append((name, False, "%s %s: %s" % (info["detail"], type(exc).__name__, exc)))
        raise
    ACCEPTANCE.append((name, True, info["detail"]))


def copy_field(tmp_path, name="985"):
    p = tmp_path / name
    shutil.copyfile(field_path(name), p)
    return p


def test_1_walkthrough_985(tmp_path):
    with criterion("1 disc-985 walkthrough at k=0.9") as info:
        p = copy_field(tmp_path)
        sched = default_schedule()
        t0 = time.monotonic()
        run_pipeline(p, sched[:4])
        ten = fio.read_disc(p)
        rep = run_pipeline(p, sched)
        seconds = time.monotonic() - t0
        counts = [c for _, _, c in rep.trajectory]
        info["detail"] = "counts %s, M=%s at %s by %s, %.1fs" % (counts, rep.minimum, rep.point, rep.attaining, seconds)
        assert abs(counts[0] - 106) <= 2 and abs(counts[1] - 27) <= 2
        assert counts[2:5] == [10, 10, 8]
        assert cubes_at([c for c in ten.cubes], ten.edge) == cubes_at(TEN_CUBES, "0.02")
        assert [r.zeta for r in rep.candidates] == [XI0]
        assert rep.status == "minimum" and rep.minimum == 1 and rep.attaining == F(2)
        assert seconds < 60


def test_2_second_tier_985(K985):
    with criterion("2 disc-985 second tier at k=0.39") as info:
        st = init_state(K985, Fraction(39, 100))
        units = unit_list(K985)
        for split in (5, 5, 5, 2, 2, 2):
            st = unit_sweep(subdivide_filter(st, split), units)
        ch = chain_through(st, ALPHA, XI[0])
        assert ch is not None and ch.closed
        cand = candidate_from_chain(ch)
        rep = euclidean_min_at(cand.zeta, Fraction(1, 2), K985)
        info["detail"] = "t=%d shifts %s zeta=%s M=%s" % (ch.length, ch.shifts, cand.zeta, rep.value)
        assert ch.shift_elements(K985) == [F(0), F(0, -3, 1), F(0, -2, 0), F(0, 2, -1), F(0, 3, 0)]
        assert cand.zeta == XI[0] and cand.verified
        assert cand.orbit == XI
        betas = ch.shift_elements(K985)
        for j in range(5):
            assert K985.mul(ALPHA, XI[j]) - betas[j] == XI[(j + 1) % 5]
        assert rep.value == Fraction(5, 11)


def test_3_coefficient_bounds(K985):
    with criterion("3 coefficient bounds") as info:
        hi = coeff_bounds_real(Fraction(105, 100), K985).mu
        lo = coeff_bounds_real(Fraction(1, 2), K985).mu
        info["detail"] = "k=1.05 %s, k=0.5 %s" % (tuple(round(m, 3) for m in hi), tuple(round(m, 3) for m in lo))
        for got, want in ((hi, (6.2, 3.2, 1.9)), (lo, (4.9, 2.5, 1.5))):
            assert all(abs(g - w) <= 0.1 for g, w in zip(got, want))


def test_4_table_rows():
    with criterion("4 table regression") as info:
        rows = [r for r in fio.parse_manifest(field_path("tables.txt").read_text(), base=field_path(".")) if not r.path.endswith("985")]
        results = verify_tables(rows, budget=600)
        info["detail"] = "; ".join("%s %s %.1fs" % (r.row.path.rsplit("/", 1)[-1], r.report.minimum, r.report.seconds) for r in results)
        assert len(results) == 7
        assert all(r.outcome == "match" for r in results)
        assert all(r.report.seconds < 600 for r in results)


def test_5_conjecture():
    with criterion("5 conjecture checker") as info:
        out = {l: conjecture_check(l) for l in (2, 4, 10)}
        info["detail"] = ", ".join("l=%d %s" % (l, v[1]) for l, v in out.items())
        assert all(match for _, _, match in out.values())
        assert out[2][1] == Fraction(9, 2) and out[4][0] == Fraction(4576, 64)


def test_6_property_suites(K985, K23, K49):
    with criterion("6 property suites") as info:
        rng = np.random.default_rng(2024)
        done = []

        def rat():
            return Fraction(int(rng.integers(-240, 241)), int(rng.integers(1, 13)))

        for _ in range(1000):
            u = FieldElement(rat(), rat(), rat())
            v = FieldElement(rat(), rat(), rat())
            assert K985.norm(K985.mul(u, v)) == K985.norm(u) * K985.norm(v)
        done.append("norm x1000")

        for _ in range(1000):
            corner = tuple(Fraction(int(x), 100) for x in rng.integers(-50, 51, size=3))
            S = Cube(corner, Fraction(int(rng.integers(1, 21)), 100))
            g = tuple(int(x) for x in rng.integers(-3, 4, size=3))
            inner = [tuple(c + Fraction(int(rng.integers(0, 51)), 50) * S.edge for c in S.corner) for _ in range(10)]
            worst = max(exact_abs_norm(K985, c, g) for c in S.corners() + inner)
            assert cube_bound(S, g, K985) >= worst
        done.append("cube_bound x1000")

        st = init_state(K985, Fraction(9, 10))
        st.log_covered = []
        st = subdivide_filter(subdivide_filter(st, 5), 5)
        log = st.log_covered
        exact_sampled_soundness(K985, log, st.k, 100, rng)
        done.append("exact soundness %d cubes x100" % len(log))

        for params in ((2, 2, 2, 1), (1, 3, 2, 2), (1.5, 0.8, 2.5, 1)):
            b, g = lin_bound(*params), brute_sup(*params)
            assert g <= b + 1e-9 and b - g <= 5e-3
        done.append("lin_bound grid")

        for xi in (XI0, XI[0]):
            orb = orbit(xi, K985)
            for r in orb.representatives:
                for u in unit_list(K985):
                    img, _ = K985.reduce(K985.mul(u, r))
                    assert K985.canonical_mod_sign(img) in orb
        values = {euclidean_min_at(r, Fraction(1, 2), K985).value for r in orbit(XI[0], K985).representatives}
        assert values == {Fraction(5, 11)}
        done.append("orbit closure and invariance")

        for K, xi in ((K23, F("1/5", "-1/5", "2/5")), (K49, F("1/7", "2/7", "3/7")), (K985, XI0), (K985, XI[0])):
            rep = euclidean_min_at(xi, Fraction(1, 2), K)
            big = tuple(2 * m for m in rep.bounds_used.mu)
            for r in orbit(xi, K).representatives:
                assert _min_over_box(K, r, big)[0] >= rep.value
        done.append("doubled boxes on -23, 49, 985")
        info["detail"] = ", ".join(done)


def test_7_determinism(tmp_path):
    with criterion("7 determinism") as info:
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        a, b = copy_field(tmp_path / "a"), copy_field(tmp_path / "b")
        ra, rb = run_pipeline(a), run_pipeline(b)
        ca, cb = RunFiles(a).cache.read_text(), RunFiles(b).cache.read_text()
        info["detail"] = "%d report bytes, %d cache vectors" % (len(ra.text()), len(fio.parse_cache(ca)))
        assert ra.text() == rb.text()
        assert ca == cb and set(fio.parse_cache(ca)) == set(fio.parse_cache(cb))
