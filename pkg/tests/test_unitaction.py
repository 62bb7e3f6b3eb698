import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubic_euclid.covering import CoverState, Cube, init_state, subdivide_filter, tentative_filter
from cubic_euclid.pipeline import unit_list, unit_sweep
from cubic_euclid.unitaction import (
    NoClosure,
    RegionChain,
    box_image,
    candidate_from_chain,
    connected_groups,
    detect_chains,
    unit_eliminate,
    unit_matrix,
    Grid,
)

from conftest import F
from test_covering import TEN_CUBES, cubes_at

K9 = Fraction(9, 10)
ALPHA = F(0, 1, 0)
XI0 = F("2/5", "-1/5", "2/5")
T = Cube((Fraction("0.38"), Fraction("-0.22"), Fraction("0.38")), Fraction("0.04"))


def point_in(state, xi):
    K = state.field
    for sign in (1, -1):
        rep, _ = K.reduce(xi.scale(sign))
        x = K.integral_coords(rep)
        for c in state.uncovered:
            if all(lo <= v <= lo + c.edge for lo, v in zip(c.corner, x)):
                return True
    return False


@pytest.fixture(scope="module")
def trajectory(K985):
    s = init_state(K985, K9)
    s = subdivide_filter(subdivide_filter(s, 5), 5)
    units = unit_list(K985)
    once = unit_sweep(s, units, single=True)
    twice = unit_sweep(once, units, single=True)
    final = tentative_filter(twice, 5)
    return {"27": s, "after_one": once, "10": twice, "8": final}


class TestBoxImage:
    def test_alpha(self, K985):
        b = box_image(T, ALPHA, K985)
        assert b.lo == (Fraction("0.38"), Fraction("-0.34"), Fraction("0.36"))
        assert b.hi == (Fraction("0.42"), Fraction("-0.06"), Fraction("0.44"))
        assert K985.to_power_basis(b.shift) == F(0, 3, -1)

    def test_alpha_inverse(self, K985):
        b = box_image(T, K985.invert(ALPHA), K985)
        assert b.lo == (Fraction("0.26"), Fraction("-0.24"), Fraction("0.38"))
        assert b.hi == (Fraction("0.54"), Fraction("-0.16"), Fraction("0.42"))
        assert K985.to_power_basis(b.shift) == F(-3, 1, 0)

    def test_identity(self, K985):
        b = box_image(T, F(1), K985)
        assert (b.lo, b.hi, b.shift) == (T.lo(), T.hi(), (0, 0, 0))

    @settings(max_examples=1000, deadline=None)
    @given(
        corner=st.tuples(*[st.integers(-50, 50)] * 3),
        edge=st.integers(1, 10),
        which=st.integers(0, 3),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_contains_images_of_points(self, K985, corner, edge, which, seed):
        S = Cube(tuple(Fraction(c, 100) for c in corner), Fraction(edge, 100))
        eps = unit_list(K985)[which]
        b = box_image(S, eps, K985)
        A = unit_matrix(K985, eps)
        rng = random.Random(seed)
        for _ in range(50):
            p = [c + Fraction(rng.randint(0, 64), 64) * S.edge for c in S.corner]
            img = [sum(int(A[i, j]) * p[j] for j in range(3)) - b.shift[i] for i in range(3)]
            assert b.contains(img)

    def test_matrix_image_agrees_with_field_product(self, K985):
        p = (Fraction(2, 7), Fraction(-1, 3), Fraction(5, 11))
        for eps in unit_list(K985):
            A = unit_matrix(K985, eps)
            img = tuple(sum(int(A[i, j]) * p[j] for j in range(3)) for i in range(3))
            assert K985.from_integral_coords(img) == K985.mul(eps, K985.from_integral_coords(p))


class TestUnitElimination:
    def test_two_sweeps_leave_the_ten_cubes(self, trajectory):
        assert trajectory["10"].uncovered == cubes_at(TEN_CUBES, "0.02")

    def test_tentative_leaves_eight(self, trajectory):
        assert len(trajectory["8"].uncovered) == 8

    def test_empty_state(self, K985):
        s = CoverState(K985, K9, Fraction(1, 50), [])
        assert unit_eliminate(s, ALPHA).uncovered == []

    @pytest.mark.parametrize("key", ["after_one", "10"])
    def test_subset(self, trajectory, key):
        assert set(trajectory[key].uncovered) <= set(trajectory["27"].uncovered)

    def test_identity_removes_nothing(self, trajectory):
        s = trajectory["27"]
        assert unit_eliminate(s, F(1)).uncovered == s.uncovered

    def test_keeps_the_exceptional_point(self, trajectory):
        for key in ("27", "after_one", "10", "8"):
            assert point_in(trajectory[key], XI0)

    def test_readding_removed_cubes_reaches_the_same_fixed_point(self, trajectory, K985):
        start = trajectory["27"]
        units = unit_list(K985)
        fixed = unit_sweep(start, units)
        removed = sorted(set(start.uncovered) - set(fixed.uncovered))
        for part in (removed[::2], removed[1::2], removed):
            again = unit_sweep(start.copy(uncovered=sorted(fixed.uncovered + part)), units)
            assert again.uncovered == fixed.uncovered

    def test_unit_matrix_acts_on_coordinates(self, K985):
        A = unit_matrix(K985, ALPHA)
        v = (2, -1, 3)
        w = tuple(int(x) for x in A @ v)
        assert K985.to_power_basis(w) == K985.mul(ALPHA, K985.to_power_basis(v))


class TestChains:
    def test_single_chain(self, K985, trajectory):
        chains = detect_chains(trajectory["8"], ALPHA)
        assert len(chains) == 1
        ch = chains[0]
        assert ch.closed and ch.length == 1
        assert ch.shift_elements(K985) == [F(0, 3, -1)]

    def test_candidate(self, K985, trajectory):
        cand = candidate_from_chain(detect_chains(trajectory["8"], ALPHA)[0])
        assert cand.zeta == XI0
        assert cand.verified_forward and cand.verified_backward and cand.unit_ok and cand.in_region
        assert cand.orbit == [XI0]

    def test_candidate_is_exact_fixed_point(self, K985, trajectory):
        cand = candidate_from_chain(detect_chains(trajectory["8"], ALPHA)[0])
        eps_t = K985.power(cand.chain.unit, cand.chain.length)
        assert K985.mul(eps_t - F(1), cand.zeta) == cand.combined_beta

    def test_empty_state(self, K985):
        assert detect_chains(CoverState(K985, K9, Fraction(1, 50), []), ALPHA) == []

    def test_zero_shift_gives_lattice_point(self, K985, trajectory):
        st = trajectory["8"]
        groups, _ = connected_groups(Grid(st))
        ch = RegionChain([0], [(0, 0, 0)], ALPHA, True, st, groups)
        assert candidate_from_chain(ch).zeta == F(0)

    def test_open_chain_raises(self, K985, trajectory):
        st = trajectory["8"]
        groups, _ = connected_groups(Grid(st))
        ch = RegionChain([0], [], ALPHA, False, st, groups, note="covered")
        with pytest.raises(NoClosure):
            candidate_from_chain(ch)

    def test_groups_pair_with_mirrors(self, trajectory):
        groups, owner = connected_groups(Grid(trajectory["8"]))
        for gid, g in enumerate(groups):
            if g.mirror is not None:
                assert groups[g.mirror].mirror == gid
