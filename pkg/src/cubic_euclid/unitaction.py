"""Unit action on uncovered cubes: elimination, orbit chains, exceptional candidates.

All cubes of a CoverState share the edge l and have corners on the grid l*Z^3,
and a unit acts on integral-basis coordinates by an integer matrix.  Image
boxes and intersection tests are therefore done exactly with integer cell
indices (cell c is the cube [c*l, (c+1)*l]).  Cells are compared modulo the
lattice Z^3 and, for the half domain, modulo sign.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .covering import Coords, CoverState, Cube
from .exactfield import CubicField, FieldElement

log = logging.getLogger(__name__)

UNIT_TOL = 1e-9


class NoClosure(RuntimeError):
    pass


def unit_matrix(K: CubicField, eps: FieldElement) -> np.ndarray:
    """Integer matrix A with coords(eps * xi) = A @ coords(xi) in the integral basis."""
    cols = []
    for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
        v = K.from_power_basis(K.mul(eps, K.to_power_basis(e)))
        if v is None:
            raise ValueError("%s is not integral" % eps)
        cols.append(v)
    return np.array(cols, dtype=np.int64).T


@dataclass(frozen=True)
class BoxImage:
    """Axis-aligned box (already shifted) containing eps*S - shift."""

    lo: tuple[Fraction, Fraction, Fraction]
    hi: tuple[Fraction, Fraction, Fraction]
    shift: Coords

    def contains(self, pt: Sequence[Fraction]) -> bool:
        return all(a <= p <= b for a, p, b in zip(self.lo, pt, self.hi))


def box_image(S: Cube, eps: FieldElement, K: CubicField, domain: str = "f+") -> BoxImage:
    """Smallest coordinate box around eps*S, translated so that its centre lies in the domain."""
    A = unit_matrix(K, eps)
    lo, hi = [], []
    for i in range(3):
        base = sum(int(A[i, j]) * S.corner[j] for j in range(3))
        neg = sum(min(0, int(A[i, j])) for j in range(3))
        pos = sum(max(0, int(A[i, j])) for j in range(3))
        lo.append(base + neg * S.edge)
        hi.append(base + pos * S.edge)
    center = [(a + b) / 2 for a, b in zip(lo, hi)]
    shift = []
    for i, c in enumerate(center):
        if i == 0 and domain == "ftilde":
            shift.append(math.floor(c))
        else:
            shift.append(-math.floor(Fraction(1, 2) - c))
    shift = tuple(shift)
    return BoxImage(
        tuple(a - s for a, s in zip(lo, shift)),
        tuple(b - s for b, s in zip(hi, shift)),
        shift,
    )


class Grid:
    """Uncovered cubes of a state as integer cells, with lattice/sign reduction."""

    def __init__(self, state: CoverState):
        self.state = state
        self.K = state.field
        self.edge = state.edge
        inv = 1 / self.edge
        if inv.denominator != 1:
            raise ValueError("edge %s does not divide 1" % self.edge)
        self.n = int(inv)
        self.half = self.n // 2
        self.signed = state.domain == "f+"
        self.cells = [self._cell(c) for c in state.uncovered]
        self.index = {c: i for i, c in enumerate(self.cells)}

    def _cell(self, cube: Cube) -> tuple[int, int, int]:
        out = []
        for c in cube.corner:
            q = c / self.edge
            if q.denominator != 1:
                raise ValueError("cube corner %s is off the grid of edge %s" % (cube.corner, self.edge))
            out.append(int(q))
        return tuple(out)

    def reduce(self, c) -> tuple[tuple[int, int, int], tuple[int, int, int]]:
        """Split an absolute cell into (reduced cell, lattice translation)."""
        n, h = self.n, self.half
        red, lam = [], []
        for i, v in enumerate(c):
            lo = 0 if (i == 0 and not self.signed) else -h
            q = (v - lo) // n
            red.append(v - q * n)
            lam.append(q)
        return tuple(red), tuple(lam)

    def lookup(self, c):
        """Which uncovered cube an absolute cell is equivalent to.

        Returns ``(index, sign, lam)`` with ``c == sign*cell(index) (+ offset) + n*lam``
        in the sense that the point set of cell c equals sign * cube + lam, or None.
        """
        red, lam = self.reduce(c)
        i = self.index.get(red)
        if i is not None:
            return i, 1, lam
        if self.signed:
            neg = tuple(-v - 1 for v in c)
            red2, lam2 = self.reduce(neg)
            i = self.index.get(red2)
            if i is not None:
                return i, -1, tuple(-v for v in lam2)
        return None

    def keys(self, with_negation: bool = True) -> np.ndarray:
        """Sorted int64 keys of the reduced cells (and their negations) for vectorised lookup."""
        cells = np.array(self.cells, dtype=np.int64).reshape(-1, 3)
        allc = [cells]
        if with_negation and self.signed:
            allc.append(-cells - 1)
        arr = np.concatenate(allc)
        return np.unique(self._encode(arr))

    def _encode(self, arr: np.ndarray) -> np.ndarray:
        n, h = self.n, self.half
        r = (arr + h) % n  # every axis in [0, n) after shifting by h
        return (r[:, 0] * n + r[:, 1]) * n + r[:, 2]


def _image_ranges(cells: np.ndarray, A: np.ndarray):
    """Closed-contact cell ranges [L-1, H] of the image boxes (integer arithmetic)."""
    base = cells @ A.T
    neg = np.minimum(A, 0).sum(axis=1)
    pos = np.maximum(A, 0).sum(axis=1)
    lo = base + neg - 1
    hi = base + pos
    return lo, hi


def _hits_any(grid: Grid, A: np.ndarray, cells: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """For each cell, whether the inflated image box meets any target key mod the lattice."""
    lo, hi = _image_ranges(cells, A)
    width = (hi - lo + 1).max(axis=0)
    offs = np.stack(
        np.meshgrid(*(np.arange(w) for w in width), indexing="ij"), axis=-1
    ).reshape(-1, 3)
    out = np.zeros(len(cells), dtype=bool)
    step = max(1, 2_000_000 // len(offs))
    for s in range(0, len(cells), step):
        l = lo[s : s + step]
        h = hi[s : s + step]
        pts = l[:, None, :] + offs[None, :, :]  # (B, W, 3)
        valid = (pts <= h[:, None, :]).all(axis=-1)
        enc = grid._encode(pts.reshape(-1, 3)).reshape(pts.shape[:2])
        pos = np.searchsorted(keys, enc)
        pos = np.minimum(pos, len(keys) - 1)
        found = (keys[pos] == enc) & valid
        out[s : s + step] = found.any(axis=1)
    return out


def unit_eliminate(state: CoverState, eps: FieldElement, max_rounds: int | None = None) -> CoverState:
    """Remove cubes whose image under eps meets no uncovered cube (or its negative) mod O_K.

    Target cubes are inflated by l/2, which on the grid amounts to counting
    closed contact as an intersection.  Iterates to the fixed point unless
    ``max_rounds`` is given.
    """
    new = state.copy()
    if not state.uncovered:
        return new
    K = state.field
    A = unit_matrix(K, eps)
    cubes = list(state.uncovered)
    rounds = 0
    while cubes:
        sub = state.copy(uncovered=cubes)
        grid = Grid(sub)
        keys = grid.keys()
        cells = np.array(grid.cells, dtype=np.int64)
        keep = _hits_any(grid, A, cells, keys)
        rounds += 1
        if keep.all():
            break
        cubes = [c for c, k in zip(cubes, keep) if k]
        if max_rounds is not None and rounds >= max_rounds:
            break
    new.uncovered = sorted(cubes)
    log.info("unit_eliminate: %d -> %d cubes (%d rounds)", len(state.uncovered), len(cubes), rounds)
    return new


# --------------------------------------------------------------------- chains
#
# Chains are built on the unfolded uncovered set: for the half domain every
# cube S stands for both S and -S, so a node is (cube index, sign) and groups
# are connected modulo the lattice only.  A neighbourhood of a point with
# 2*xi in O_K is then one group instead of a group glued to its own mirror.

Node = tuple[int, int]


@dataclass
class Group:
    """A connected set of nodes, placed as absolute cells in R^3."""

    nodes: list[Node]
    placement: dict[Node, tuple[int, int, int]]
    mirror: int | None = None

    @property
    def members(self) -> list[int]:
        return sorted({i for i, _ in self.nodes})

    def cells(self) -> list[tuple[int, int, int]]:
        return [self.placement[v] for v in self.nodes]


def _signed_cell(cell, sign):
    return cell if sign > 0 else tuple(-t - 1 for t in cell)


def connected_groups(grid: Grid) -> tuple[list[Group], dict[Node, int]]:
    """Closed-contact components of the unfolded uncovered set, modulo the lattice."""
    owner: dict[Node, int] = {}
    groups: list[Group] = []
    signs = (1, -1) if grid.signed else (1,)
    nbrs = [(dx, dy, dz) for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1) if (dx, dy, dz) != (0, 0, 0)]
    for i in range(len(grid.cells)):
        for s in signs:
            if (i, s) in owner:
                continue
            gid = len(groups)
            start = (i, s)
            place = {start: _signed_cell(grid.cells[i], s)}
            owner[start] = gid
            queue = [start]
            while queue:
                cu = place[queue.pop()]
                for d in nbrs:
                    c = (cu[0] + d[0], cu[1] + d[1], cu[2] + d[2])
                    hit = grid.lookup(c)
                    if hit is None:
                        continue
                    v = (hit[0], hit[1])
                    if v in owner:
                        continue
                    owner[v] = gid
                    place[v] = c
                    queue.append(v)
            groups.append(Group(sorted(place), place))
    if grid.signed:
        for g in groups:
            i, s = g.nodes[0]
            g.mirror = owner[(i, -s)]
    return groups, owner


@dataclass
class Link:
    target: int | None  # group index, None when the image is fully covered
    shift: Coords  # beta in integral coordinates
    ambiguous: bool = False


class _NodeTable:
    """Sorted residue keys of every node, with the owning group and placed cell per key."""

    def __init__(self, grid: Grid, groups: list[Group], owner: dict[Node, int]):
        table: dict[int, Node] = {}
        cells = np.array(grid.cells, dtype=np.int64).reshape(-1, 3)
        if grid.signed:
            # inserted first so that a positive node wins a shared residue, as in Grid.lookup
            for i, k in enumerate(grid._encode(-cells - 1).tolist()):
                table[k] = (i, -1)
        for i, k in enumerate(grid._encode(cells).tolist()):
            table[k] = (i, 1)
        self.keys = np.array(sorted(table), dtype=np.int64)
        nodes = [table[k] for k in self.keys.tolist()]
        self.gid = np.array([owner[v] for v in nodes], dtype=np.int64)
        self.place = np.array([groups[owner[v]].placement[v] for v in nodes], dtype=np.int64).reshape(-1, 3)


def _link(grid: Grid, table: _NodeTable, g: Group, A: np.ndarray, chunk: int = 2_000_000) -> Link:
    """Where the image of g under the unit lands, as (group, shift)."""
    cells = np.array(g.cells(), dtype=np.int64)
    lo, hi = _image_ranges(cells, A)
    width = (hi - lo + 1).max(axis=0)
    offs = np.stack(np.meshgrid(*(np.arange(w) for w in width), indexing="ij"), axis=-1).reshape(-1, 3)
    found = []
    step = max(1, chunk // len(offs))
    for s in range(0, len(cells), step):
        pts = lo[s : s + step, None, :] + offs[None, :, :]
        pts = pts[(pts <= hi[s : s + step, None, :]).all(axis=-1)]
        enc = grid._encode(pts)
        pos = np.minimum(np.searchsorted(table.keys, enc), len(table.keys) - 1)
        hit = table.keys[pos] == enc
        if not hit.any():
            continue
        diff = pts[hit] - table.place[pos[hit]]
        if (diff % grid.n).any():
            # the group wraps around the torus; placement is inconsistent
            return Link(None, (0, 0, 0), ambiguous=True)
        found.append(np.column_stack([table.gid[pos[hit]], diff // grid.n]))
    if not found:
        return Link(None, (0, 0, 0))
    pairs = np.unique(np.concatenate(found), axis=0)
    gid, beta = int(pairs[0, 0]), tuple(int(t) for t in pairs[0, 1:])
    return Link(gid, beta, ambiguous=len(pairs) > 1)


@dataclass
class RegionChain:
    """Regions T_1..T_t with eps*T_j - beta_j in T_{j+1} (T_{t+1} = T_1) up to covered territory."""

    groups: list[int]
    shifts: list[Coords]
    unit: FieldElement
    closed: bool
    state: CoverState = field(repr=False)
    all_groups: list[Group] = field(repr=False, default_factory=list)
    power: int = 1
    note: str = ""

    @property
    def length(self) -> int:
        return len(self.groups)

    def region_cubes(self, j: int) -> list[Cube]:
        """Point set T_j as explicit cubes."""
        e = self.state.edge
        return [Cube(tuple(t * e for t in c), e) for c in self.all_groups[self.groups[j]].cells()]

    def shift_elements(self, K: CubicField) -> list[FieldElement]:
        return [K.to_power_basis(b) for b in self.shifts]


class _Links:
    """Per-unit image links of all groups of one state, computed lazily."""

    def __init__(self, state: CoverState):
        self.state = state
        self.grid = Grid(state)
        self.groups, self.owner = connected_groups(self.grid)
        self.table = _NodeTable(self.grid, self.groups, self.owner)
        self._cache: dict[tuple, list[Link | None]] = {}

    def link(self, eps: FieldElement, g: int) -> Link:
        key = eps.coords
        row = self._cache.get(key)
        if row is None:
            row = self._cache[key] = [None] * len(self.groups)
        if row[g] is None:
            A = unit_matrix(self.state.field, eps)
            row[g] = _link(self.grid, self.table, self.groups[g], A)
        return row[g]

    def follow(self, eps: FieldElement, start: int, limit: int):
        """(groups, shifts, status) along the images of ``start``."""
        gs, bs = [start], []
        while True:
            link = self.link(eps, gs[-1])
            if link.ambiguous:
                return gs, bs, "ambiguous"
            if link.target is None:
                return gs, bs, "covered"
            bs.append(link.shift)
            if link.target == start:
                return gs, bs, "closed"
            if link.target in gs or len(gs) >= limit:
                return gs, bs, "open"
            gs.append(link.target)

    def chain(self, eps: FieldElement, start: int, max_power: int = 1) -> RegionChain:
        K = self.state.field
        best = None
        for power in range(1, max_power + 1):
            unit = K.power(eps, power)
            gs, bs, status = self.follow(unit, start, len(self.groups) + 1)
            cand = RegionChain(gs, bs, unit, status == "closed", self.state, self.groups, power, status)
            if best is None or cand.closed:
                best = cand
            if cand.closed:
                break
        return best


def detect_chains(state: CoverState, eps: FieldElement, max_power: int = 1) -> list[RegionChain]:
    """Group uncovered cubes and link the groups into eps-orbit chains.

    Every group lies in at most one returned chain; of a chain and its mirror
    image only the first found is returned.  Chains that do not close are
    returned with ``closed=False`` and the reason in ``note``.
    """
    if not state.uncovered:
        return []
    links = _Links(state)
    assigned: set[int] = set()
    chains: list[RegionChain] = []
    for start in range(len(links.groups)):
        if start in assigned:
            continue
        ch = links.chain(eps, start, max_power)
        chains.append(ch)
        members = ch.groups if ch.closed else [start]
        for g in members:
            assigned.add(g)
            if links.groups[g].mirror is not None:
                assigned.add(links.groups[g].mirror)
    log.info("detect_chains: %d groups, %d chains", len(links.groups), len(chains))
    return chains


def chain_through(state: CoverState, eps: FieldElement, point: FieldElement, max_power: int = 1) -> RegionChain | None:
    """The chain rooted at the group whose placed cubes contain ``point``."""
    links = _Links(state)
    K = state.field
    x = K.integral_coords(point)
    e = state.edge
    for gid, g in enumerate(links.groups):
        for c in g.cells():
            if all(ci * e <= xi <= (ci + 1) * e for ci, xi in zip(c, x)):
                return links.chain(eps, gid, max_power)
    return None


def group_links(state: CoverState, eps: FieldElement) -> tuple[list[Group], list[Link]]:
    """Connected groups of the uncovered set and the image link of each."""
    if not state.uncovered:
        return [], []
    links = _Links(state)
    return links.groups, [links.link(eps, g) for g in range(len(links.groups))]


# ----------------------------------------------------------------- candidates


@dataclass
class ExceptionalCandidate:
    zeta: FieldElement
    chain: RegionChain
    orbit: list[FieldElement]
    verified_forward: bool
    verified_backward: bool
    unit_ok: bool
    in_region: bool
    combined_beta: FieldElement | None = None

    @property
    def verified(self) -> bool:
        return self.verified_forward and self.verified_backward and self.unit_ok


def _unit_ok(K: CubicField, eps: FieldElement) -> bool:
    return all(abs(a - 1.0) > UNIT_TOL for a in K.abs_embeddings(eps))


def _in_cubes(K: CubicField, pt: FieldElement, cubes: list[Cube]) -> bool:
    x = K.integral_coords(pt)
    return any(all(lo <= v <= lo + c.edge for lo, v in zip(c.corner, x)) for c in cubes)


def candidate_from_chain(chain: RegionChain, K: CubicField | None = None) -> ExceptionalCandidate:
    """Exact fixed point of a closed chain and the checks of the orbit theorem."""
    if not chain.closed:
        raise NoClosure("chain is not closed (%s)" % chain.note)
    K = K or chain.state.field
    eps = chain.unit
    t = chain.length
    betas = chain.shift_elements(K)
    beta = FieldElement(0)
    for b in betas:
        beta = K.mul(eps, beta) + b
    zeta = K.fixed_point(eps, beta, t)

    orbit = [zeta]
    for j in range(t - 1):
        orbit.append(K.mul(eps, orbit[-1]) - betas[j])

    links = _Links(chain.state)
    # forward: each image lands in the next region only, with the recorded shift
    fwd = len(set(chain.groups)) == t
    for j in range(t):
        link = links.link(eps, chain.groups[j])
        if link.ambiguous or link.target != chain.groups[(j + 1) % t] or tuple(link.shift) != tuple(chain.shifts[j]):
            fwd = False
            break
    # backward: the inverse image of each region meets no uncovered group outside the chain
    inv = K.invert(eps)
    members = set(chain.groups)
    bwd = True
    for g in chain.groups:
        link = links.link(inv, g)
        if link.ambiguous or (link.target is not None and link.target not in members):
            bwd = False
            break
    return ExceptionalCandidate(
        zeta=zeta,
        chain=chain,
        orbit=orbit,
        verified_forward=fwd,
        verified_backward=bwd,
        unit_ok=_unit_ok(K, eps),
        in_region=_in_cubes(K, zeta, chain.region_cubes(0)),
        combined_beta=beta,
    )
