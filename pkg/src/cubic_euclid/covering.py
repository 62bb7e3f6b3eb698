"""Branch-and-bound covering of the fundamental domain by norm-bounded cubes.

Cubes live in integral-basis coordinates (x, y, z) <-> x + y*alpha + z*theta.
A cube S is k-covered when some gamma in O_K has sup_{xi in S} N(xi - gamma) < k.
Upper bounds are computed in floating point and inflated by a relative
margin before being compared to the exact k.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .exactfield import CubicField

log = logging.getLogger(__name__)

HALF = Fraction(1, 2)
BOUND_INFLATION = 1e-12
Coords = tuple[int, int, int]


class InvalidK(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Cube:
    """Closed cube [a1, a1+l] x [a2, a2+l] x [a3, a3+l]."""

    corner: tuple[Fraction, Fraction, Fraction]
    edge: Fraction

    def __post_init__(self):
        object.__setattr__(self, "corner", tuple(Fraction(c) for c in self.corner))
        object.__setattr__(self, "edge", Fraction(self.edge))
        if self.edge < 0:
            raise ValueError("edge must be non-negative")

    @property
    def center(self) -> tuple[Fraction, Fraction, Fraction]:
        h = self.edge / 2
        return tuple(c + h for c in self.corner)

    def corners(self) -> list[tuple[Fraction, Fraction, Fraction]]:
        return [
            tuple(c + d * self.edge for c, d in zip(self.corner, ds))
            for ds in itertools.product((0, 1), repeat=3)
        ]

    def split(self, f: int) -> list["Cube"]:
        e = self.edge / f
        return [
            Cube(tuple(c + i * e for c, i in zip(self.corner, idx)), e)
            for idx in itertools.product(range(f), repeat=3)
        ]

    def negated(self) -> "Cube":
        return Cube(tuple(-c - self.edge for c in self.corner), self.edge)

    def lo(self):
        return self.corner

    def hi(self):
        return tuple(c + self.edge for c in self.corner)


def default_limits(edge: Fraction) -> Coords:
    """Search limits (M_x, M_y, M_z) for the translation set I."""
    if edge >= Fraction(2, 100):
        return (8, 5, 2)
    if edge <= Fraction(5, 10000):
        return (30, 17, 5)
    # 0.001 <= l <= 0.01, and the unlisted gaps on either side
    return (19, 12, 3)


def translation_set(limits: Coords) -> np.ndarray:
    """Integer vectors of I ordered by max(|x|/Mx, |y|/My, |z|/Mz) shells, then lexicographically."""
    mx, my, mz = limits
    pts = []
    for x in range(-mx, mx + 1):
        for y in range(-my, my + 1):
            for z in range(-mz, mz + 1):
                shell = max(Fraction(abs(x), mx), Fraction(abs(y), my), Fraction(abs(z), mz))
                pts.append((shell, x, y, z))
    pts.sort()
    return np.array([p[1:] for p in pts], dtype=np.int64)


@dataclass
class CoverState:
    field: CubicField
    k: Fraction
    edge: Fraction
    uncovered: list[Cube]
    cache: list[Coords] = field(default_factory=lambda: [(0, 0, 0)])
    search_limits: Coords | None = None
    domain: str = "f+"
    # (cube, gamma) pairs for every cube discarded by direct covering
    log_covered: list[tuple[Cube, Coords]] | None = None

    def limits(self, edge: Fraction | None = None) -> Coords:
        if self.search_limits is not None:
            return self.search_limits
        return default_limits(self.edge if edge is None else edge)

    def copy(self, **changes) -> "CoverState":
        st = replace(self, **changes)
        if "cache" not in changes:
            st.cache = list(self.cache)
        if "uncovered" not in changes:
            st.uncovered = list(self.uncovered)
        return st


def _check_k(k) -> Fraction:
    k = Fraction(k)
    if k <= 0 or k > 1:
        raise InvalidK("k must lie in (0, 1], got %s" % k)
    return k


def init_state(K: CubicField, k, domain: str = "f+", check_k: bool = True) -> CoverState:
    """Four cubes of edge 1/2 tiling [0,1/2] x (-1/2,1/2]^2 (or the full-width variant)."""
    k = _check_k(k) if check_k else Fraction(k)
    if domain == "f+":
        xs = (Fraction(0),)
    elif domain == "ftilde":
        xs = (Fraction(0), HALF)
    else:
        raise ValueError("unknown domain %r" % domain)
    cubes = [Cube((x, y, z), HALF) for x in xs for y in (-HALF, Fraction(0)) for z in (-HALF, Fraction(0))]
    return CoverState(field=K, k=k, edge=HALF, uncovered=cubes, domain=domain)


class BoundEvaluator:
    """Vectorised upper bounds of N(xi - gamma) over cubes of a fixed edge."""

    def __init__(self, K: CubicField):
        self.K = K
        self.E = K.basis_embeddings()  # (3, n_emb)
        self.radius_weights = np.abs(self.E).sum(axis=0)  # 1 + |alpha|_j + |theta|_j
        if not K.is_real:
            signs = np.array(list(itertools.product((-1.0, 1.0), repeat=3)))  # (8, 3)
            self.corner_dirs = signs @ self.E[:, 1]  # complex offsets per unit half-edge

    def emb(self, pts: np.ndarray) -> np.ndarray:
        return pts @ self.E

    def bounds(self, centers_emb: np.ndarray, gammas_emb: np.ndarray, half: float) -> np.ndarray:
        """Bounds for every (cube, gamma) pair; inputs are embedded centres and translations."""
        v = centers_emb[:, None, :] - gammas_emb[None, :, :]  # (N, G, n_emb)
        if self.K.is_real:
            fac = np.abs(v) + half * self.radius_weights
            out = fac[..., 0] * fac[..., 1] * fac[..., 2]
        else:
            real = np.abs(v[..., 0].real) + half * self.radius_weights[0]
            cz = v[..., 1][..., None] + half * self.corner_dirs  # (N, G, 8)
            cmax = np.max(cz.real**2 + cz.imag**2, axis=-1)
            out = real * cmax
        return out * (1.0 + BOUND_INFLATION)

    def covers(self, centers_emb, gammas_emb, half, k: float, chunk: int = 200_000) -> np.ndarray:
        """Boolean (N, G) matrix of bound < k, computed in memory-bounded chunks."""
        n, g = len(centers_emb), len(gammas_emb)
        out = np.zeros((n, g), dtype=bool)
        if n == 0 or g == 0:
            return out
        step = max(1, chunk // max(g, 1))
        for s in range(0, n, step):
            out[s : s + step] = self.bounds(centers_emb[s : s + step], gammas_emb, half) < k
        return out

    def first_cover(self, centers_emb, gammas_emb, half, k: float, chunk: int = 400_000) -> np.ndarray:
        """Index of the first covering gamma per cube, -1 if none."""
        n, g = len(centers_emb), len(gammas_emb)
        res = np.full(n, -1, dtype=np.int64)
        if n == 0 or g == 0:
            return res
        step = max(1, chunk // g)
        for s in range(0, n, step):
            c = self.bounds(centers_emb[s : s + step], gammas_emb, half) < k
            any_ = c.any(axis=1)
            idx = np.argmax(c, axis=1)
            res[s : s + step] = np.where(any_, idx, -1)
        return res


_EVALUATORS: dict[int, BoundEvaluator] = {}


def evaluator(K: CubicField) -> BoundEvaluator:
    ev = _EVALUATORS.get(id(K))
    if ev is None or ev.K is not K:
        ev = BoundEvaluator(K)
        _EVALUATORS[id(K)] = ev
    return ev


def _centers(cubes: Sequence[Cube]) -> np.ndarray:
    if not cubes:
        return np.zeros((0, 3))
    h = cubes[0].edge / 2
    return np.array([[float(c + h) for c in s.corner] for s in cubes], dtype=float)


def cube_bound(S: Cube, gamma: Sequence[int], K: CubicField) -> float:
    """Upper bound for N(xi - gamma) over the closed cube S (inflated by the safety margin)."""
    ev = evaluator(K)
    c = ev.emb(_centers([S]))
    g = ev.emb(np.array([gamma], dtype=float))
    return float(ev.bounds(c, g, float(S.edge) / 2)[0, 0])


def _cover_batch(cubes: list[Cube], state: CoverState, edge: Fraction):
    """Sequential first-fit translation search over a batch of equal-size cubes.

    Returns a list with the covering gamma (or None) per cube; the cache of
    ``state`` is extended in place exactly as a cube-by-cube scan would.
    """
    if not cubes:
        return []
    K = state.field
    ev = evaluator(K)
    k = float(state.k)
    half = float(edge) / 2
    cent = ev.emb(_centers(cubes))

    # only cached vectors inside the current box I are used, so the outcome
    # does not depend on what earlier runs with larger limits left in the cache
    limits = state.limits(edge)
    usable = [g for g in state.cache if all(abs(c) <= m for c, m in zip(g, limits))]
    first = ev.first_cover(cent, ev.emb(np.array(usable, dtype=float)), half, k)
    result: list[Coords | None] = [tuple(usable[i]) if i >= 0 else None for i in first]

    todo = np.nonzero(first < 0)[0]
    if len(todo) == 0:
        return result
    iset = translation_set(limits)
    hit = ev.first_cover(cent[todo], ev.emb(iset.astype(float)), half, k)

    known = set(state.cache)
    added: list[Coords] = []
    added_emb = np.zeros((0, ev.E.shape[1]), dtype=ev.E.dtype)
    for pos, i in enumerate(todo):
        if len(added):
            c = ev.bounds(cent[i : i + 1], added_emb, half)[0] < k
            if c.any():
                result[i] = added[int(np.argmax(c))]
                continue
        if hit[pos] < 0:
            continue
        gam = tuple(int(t) for t in iset[hit[pos]])
        result[i] = gam
        if gam not in known:
            known.add(gam)
            state.cache.append(gam)
            added.append(gam)
            added_emb = ev.emb(np.array(added, dtype=float))
    return result


def find_translation(S: Cube, state: CoverState) -> Coords | None:
    """A gamma with cube_bound(S, gamma) < k from the cache, then from I; None if uncovered."""
    return _cover_batch([S], state, S.edge)[0]


def _record(state: CoverState, cubes, gammas):
    if state.log_covered is not None:
        state.log_covered.extend((c, g) for c, g in zip(cubes, gammas) if g is not None)


def subdivide_filter(state: CoverState, split: int, check: Callable[[], None] | None = None) -> CoverState:
    """Split every cube into split^3 subcubes and keep those without a covering translation.

    ``check`` is called between batches and may raise to abort.
    """
    if split < 1:
        raise ValueError("split must be >= 1")
    new = state.copy()
    edge = state.edge / split
    kept: list[Cube] = []
    batch: list[Cube] = []

    def flush():
        if check:
            check()
        gammas = _cover_batch(batch, new, edge)
        _record(new, batch, gammas)
        kept.extend(c for c, g in zip(batch, gammas) if g is None)
        batch.clear()

    for cube in state.uncovered:
        batch.extend(cube.split(split) if split > 1 else [cube])
        if len(batch) >= 20_000:
            flush()
    flush()
    new.edge = edge
    new.uncovered = sorted(kept)
    log.info("subdivide(%d): %d -> %d cubes of edge %s", split, len(state.uncovered), len(kept), edge)
    return new


def tentative_filter(state: CoverState, split: int) -> CoverState:
    """Drop a parent cube only if all of its split^3 subcubes are covered; keep it whole otherwise."""
    if split < 1:
        raise ValueError("split must be >= 1")
    new = state.copy()
    edge = state.edge / split
    kept = []
    for cube in state.uncovered:
        subs = cube.split(split)
        gammas = _cover_batch(subs, new, edge)
        if any(g is None for g in gammas):
            kept.append(cube)
        else:
            _record(new, subs, gammas)
    new.uncovered = sorted(kept)
    log.info("tentative(%d): %d -> %d cubes", split, len(state.uncovered), len(kept))
    return new


def union_volume(cubes: Iterable[Cube]) -> Fraction:
    """Volume of a set of non-overlapping cubes."""
    return sum((c.edge**3 for c in cubes), Fraction(0))
