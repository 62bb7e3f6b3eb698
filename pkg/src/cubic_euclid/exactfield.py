"""Exact arithmetic in a cubic number field K = Q(alpha).

Elements are stored over the power basis {1, alpha, alpha^2} with
``fractions.Fraction`` coordinates.  The ring of integers is the lattice
Z + Z*alpha + Z*theta with theta = (g_x + g_y*alpha + g_z*alpha^2)/g; the
integral basis is only a view on the power-basis representation.

Floating point only enters through the embeddings, which are used for
bounding and never for decisions that must be exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "FieldElement",
    "CubicField",
    "FieldError",
    "IrreducibilityError",
    "UnitError",
    "SingularUnit",
    "cubic_poly_disc",
]


class FieldError(ValueError):
    """Inconsistent field data."""


class IrreducibilityError(FieldError):
    pass


class UnitError(FieldError):
    pass


class SingularUnit(ArithmeticError):
    """Raised when eps**t - 1 vanishes, i.e. eps is torsion."""


def _q(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        # floats are only accepted when they are exact small dyadics
        return Fraction(v)
    return Fraction(v)


@dataclass(frozen=True)
class FieldElement:
    """x + y*alpha + z*alpha^2 with exact rational coordinates."""

    coords: tuple[Fraction, Fraction, Fraction]

    def __init__(self, x=0, y=0, z=0):
        object.__setattr__(self, "coords", (_q(x), _q(y), _q(z)))

    @classmethod
    def of(cls, seq: Iterable) -> "FieldElement":
        x, y, z = seq
        return cls(x, y, z)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    def __add__(self, other):
        other = _coerce(other)
        return FieldElement(*(a + b for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __sub__(self, other):
        other = _coerce(other)
        return FieldElement(*(a - b for a, b in zip(self.coords, other.coords)))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __neg__(self):
        return FieldElement(*(-a for a in self.coords))

    def scale(self, c) -> "FieldElement":
        c = _q(c)
        return FieldElement(*(c * a for a in self.coords))

    def is_zero(self) -> bool:
        return not any(self.coords)

    def is_rational(self) -> bool:
        return self.coords[1] == 0 and self.coords[2] == 0

    def denominator(self) -> int:
        return math.lcm(*(a.denominator for a in self.coords))

    def __repr__(self):
        return "FieldElement(%s)" % ", ".join(str(a) for a in self.coords)

    def __str__(self):
        return format_element(self)


def _coerce(v) -> FieldElement:
    if isinstance(v, FieldElement):
        return v
    return FieldElement(v, 0, 0)


def format_element(u: FieldElement, var: str = "a") -> str:
    """Human readable form, e.g. ``(2 - a + 2*a^2)/5``."""
    d = u.denominator()
    nums = [int(c * d) for c in u.coords]
    terms = []
    for n, mono in zip(nums, ("", var, var + "^2")):
        if n == 0:
            continue
        mag = abs(n)
        if mono:
            body = mono if mag == 1 else "%d*%s" % (mag, mono)
        else:
            body = str(mag)
        sign = "-" if n < 0 else "+"
        terms.append((sign, body))
    if not terms:
        return "0"
    s = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    for sign, body in terms[1:]:
        s += " %s %s" % (sign, body)
    if d == 1:
        return s
    return "(%s)/%d" % (s, d)


def cubic_poly_disc(p: int, q: int, r: int) -> int:
    """Discriminant of x^3 + p x^2 + q x + r."""
    return p * p * q * q - 4 * q**3 - 4 * p**3 * r - 27 * r * r + 18 * p * q * r


def _det3(m) -> Fraction:
    return (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )


def _divisors(n: int) -> list[int]:
    n = abs(n)
    if n == 0:
        return [0]
    out = []
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            out.extend({d, n // d})
    return out


class CubicField:
    """A cubic field given by a monic integer polynomial and field data.

    ``roots`` are floats as in the field files: three reals for a totally
    real field, or ``(real_root, re, im)`` for a complex field.  ``units``
    are given over the power basis (already divided by g).
    """

    def __init__(
        self,
        disc: int,
        poly: Sequence[int],
        roots: Sequence[float] | None = None,
        units: Sequence[FieldElement] = (),
        index_g: int = 1,
        theta: Sequence[int] | None = None,
        check: bool = True,
    ):
        self.disc = int(disc)
        self.poly = tuple(int(c) for c in poly)
        p, q, r = self.poly
        self.index_g = int(index_g)
        if theta is None:
            theta = (0, 0, 1) if self.index_g == 1 else None
        if theta is None:
            raise FieldError("theta (g_x, g_y, g_z) required when g > 1")
        self.theta_num = tuple(int(c) for c in theta)
        g = Fraction(self.index_g)
        self.theta = FieldElement(*(Fraction(c) / g for c in self.theta_num))
        if self.theta_num[2] == 0:
            raise FieldError("theta must involve alpha^2")
        self.units = tuple(units)
        self.is_real = self.disc > 0
        self.unit_rank = 2 if self.is_real else 1

        if check:
            for d in _divisors(r):
                for s in (d, -d):
                    if s**3 + p * s * s + q * s + r == 0:
                        raise IrreducibilityError(
                            "x^3 + %d x^2 + %d x + %d has the rational root %d" % (p, q, r, s)
                        )
            if cubic_poly_disc(p, q, r) != self.index_g**2 * self.disc:
                raise FieldError(
                    "disc(1, a, a^2) = %d but g^2 * disc = %d"
                    % (cubic_poly_disc(p, q, r), self.index_g**2 * self.disc)
                )

        self._set_roots(roots)

        if check:
            for u in self.units:
                if abs(self.norm(u)) != 1:
                    raise UnitError("%s has norm %s" % (u, self.norm(u)))
                if self.from_power_basis(u) is None:
                    raise UnitError("%s is not in the ring of integers" % (u,))
            if len(self.units) and len(self.units) != self.unit_rank:
                raise UnitError(
                    "expected %d independent units, got %d" % (self.unit_rank, len(self.units))
                )
            if len(self.units) == 2 and abs(self.regulator_det()) < 1e-9:
                raise UnitError("units are dependent")

    # ------------------------------------------------------------------ roots
    def _f(self, t):
        p, q, r = self.poly
        return ((t + p) * t + q) * t + r

    def _df(self, t):
        p, q, _ = self.poly
        return (3 * t + 2 * p) * t + q

    def _set_roots(self, roots):
        if roots is None:
            rts = np.roots([1.0, *map(float, self.poly)])
            reals = sorted(float(z.real) for z in rts if abs(z.imag) < 1e-12)
            if self.is_real:
                roots = reals
            else:
                cpx = [z for z in rts if z.imag > 1e-12][0]
                roots = (reals[0], cpx.real, cpx.imag)
        roots = [float(t) for t in roots]
        if self.is_real:
            if len(roots) != 3:
                raise FieldError("a totally real field needs three roots")
            polished = []
            for t in roots:
                d = self._df(t)
                if d != 0:
                    t = t - self._f(t) / d
                if abs(self._f(t)) > 1e-9:
                    raise FieldError("root %r does not satisfy f" % t)
                polished.append(t)
            self.roots = tuple(complex(t) for t in polished)
        else:
            t, re, im = roots
            t = t - self._f(t) / self._df(t)
            z = complex(re, im)
            z = z - self._f(z) / self._df(z)
            if abs(self._f(t)) > 1e-9 or abs(self._f(z)) > 1e-9:
                raise FieldError("roots do not satisfy f")
            self.roots = (complex(t), z, z.conjugate())
        # embeddings actually used: all three for real, (real, complex) otherwise
        self.n_emb = 3 if self.is_real else 2
        self.weights = (1, 1, 1) if self.is_real else (1, 2)

    # ------------------------------------------------------------ arithmetic
    def mul(self, u: FieldElement, v: FieldElement) -> FieldElement:
        """Product reduced modulo f."""
        u = _coerce(u)
        v = _coerce(v)
        c = [Fraction(0)] * 5
        for i, a in enumerate(u.coords):
            if a:
                for j, b in enumerate(v.coords):
                    c[i + j] += a * b
        p, q, r = self.poly
        for d in (4, 3):
            top = c[d]
            if top:
                c[d] = Fraction(0)
                c[d - 1] -= p * top
                c[d - 2] -= q * top
                c[d - 3] -= r * top
        return FieldElement(c[0], c[1], c[2])

    def power(self, u: FieldElement, n: int) -> FieldElement:
        if n < 0:
            return self.power(self.invert(u), -n)
        result = FieldElement(1)
        base = _coerce(u)
        while n:
            if n & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            n >>= 1
        return result

    def mul_matrix(self, u: FieldElement) -> list[list[Fraction]]:
        """Matrix of multiplication by u; columns are u, u*alpha, u*alpha^2."""
        cols = [self.mul(u, FieldElement(*e)) for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
        return [[cols[j].coords[i] for j in range(3)] for i in range(3)]

    def norm(self, u: FieldElement) -> Fraction:
        """Signed exact norm N_{K/Q}(u)."""
        return _det3(self.mul_matrix(_coerce(u)))

    def trace(self, u: FieldElement) -> Fraction:
        m = self.mul_matrix(_coerce(u))
        return m[0][0] + m[1][1] + m[2][2]

    def invert(self, u: FieldElement) -> FieldElement:
        u = _coerce(u)
        if u.is_zero():
            raise ZeroDivisionError("inverse of zero")
        m = self.mul_matrix(u)
        det = _det3(m)
        # first column of the inverse matrix: solve m x = e_1 by Cramer
        sol = []
        for i in range(3):
            mi = [row[:] for row in m]
            for row_idx in range(3):
                mi[row_idx][i] = Fraction(1 if row_idx == 0 else 0)
            sol.append(_det3(mi) / det)
        return FieldElement(*sol)

    def div(self, u: FieldElement, v: FieldElement) -> FieldElement:
        return self.mul(u, self.invert(v))

    def fixed_point(self, eps: FieldElement, beta: FieldElement, t: int = 1) -> FieldElement:
        """The fixed point zeta = beta / (eps^t - 1) of xi -> eps^t xi - beta."""
        if t < 1:
            raise ValueError("t must be positive")
        d = self.power(eps, t) - 1
        if d.is_zero():
            raise SingularUnit("eps^%d = 1" % t)
        return self.div(_coerce(beta), d)

    def is_torsion(self, eps: FieldElement) -> bool:
        return eps == FieldElement(1) or eps == FieldElement(-1)

    # -------------------------------------------------------- integral basis
    def to_power_basis(self, v: Sequence[int]) -> FieldElement:
        a, b, c = (Fraction(int(t)) for t in v)
        th = self.theta.coords
        return FieldElement(a + c * th[0], b + c * th[1], c * th[2])

    def integral_coords(self, u: FieldElement) -> tuple[Fraction, Fraction, Fraction]:
        """Rational coordinates of u over (1, alpha, theta)."""
        x, y, z = _coerce(u).coords
        th = self.theta.coords
        c = z / th[2]
        return (x - c * th[0], y - c * th[1], c)

    def from_integral_coords(self, v: Sequence) -> FieldElement:
        a, b, c = (_q(t) for t in v)
        th = self.theta.coords
        return FieldElement(a + c * th[0], b + c * th[1], c * th[2])

    def from_power_basis(self, u: FieldElement) -> tuple[int, int, int] | None:
        """Integer coordinates over (1, alpha, theta), or None if u is not in the lattice."""
        coords = self.integral_coords(u)
        if all(c.denominator == 1 for c in coords):
            return tuple(int(c) for c in coords)
        return None

    def reduce(self, u: FieldElement) -> tuple[FieldElement, tuple[int, int, int]]:
        """Representative of u mod O_K with integral coordinates in (-1/2, 1/2].

        Returns ``(rep, shift)`` with ``u = rep + shift``.
        """
        coords = self.integral_coords(u)
        shift = tuple(-math.floor(Fraction(1, 2) - c) for c in coords)
        rep = tuple(c - s for c, s in zip(coords, shift))
        return self.from_integral_coords(rep), shift

    def canonical_mod_sign(self, u: FieldElement) -> FieldElement:
        """Canonical representative of the class of +-u mod O_K."""
        a, _ = self.reduce(u)
        b, _ = self.reduce(-u)
        ka = self.integral_coords(a)
        kb = self.integral_coords(b)
        return a if ka >= kb else b

    # ------------------------------------------------------------ embeddings
    def embed(self, u: FieldElement, j: int) -> complex | float:
        """Value of u in embedding j (1-based); complex fields use j = 1, 2 (3 = conjugate)."""
        if j not in (1, 2, 3):
            raise IndexError("embedding index must be 1, 2 or 3")
        t = self.roots[j - 1]
        x, y, z = (float(c) for c in _coerce(u).coords)
        val = x + y * t + z * t * t
        if self.is_real or j == 1:
            return float(val.real)
        return complex(val)

    def abs_embeddings(self, u: FieldElement) -> list[float]:
        """|u|_j for the r + s archimedean places."""
        return [abs(self.embed(u, j)) for j in range(1, self.n_emb + 1)]

    def float_norm(self, u: FieldElement) -> float:
        out = 1.0
        for w, a in zip(self.weights, self.abs_embeddings(u)):
            out *= a**w
        return out

    def basis_embeddings(self) -> np.ndarray:
        """Array E of shape (3, n_emb): E[i, j] = embedding j of the i-th integral basis vector."""
        rows = []
        for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
            u = self.to_power_basis(e)
            rows.append([self.embed(u, j) for j in range(1, self.n_emb + 1)])
        dtype = float if self.is_real else complex
        return np.array(rows, dtype=dtype)

    def regulator_det(self) -> float:
        """Determinant of log|unit|_j over the first unit_rank places (weighted)."""
        m = [
            [self.weights[j] * math.log(abs(self.embed(u, j + 1))) for j in range(self.unit_rank)]
            for u in self.units
        ]
        if self.unit_rank == 1:
            return m[0][0]
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]

    def power_discriminant_float(self) -> float:
        """disc(1, alpha, alpha^2) from the root Vandermonde."""
        a = self.roots
        v = (a[1] - a[0]) * (a[2] - a[0]) * (a[2] - a[1])
        return float((v * v).real)

    def __repr__(self):
        return "CubicField(disc=%d, poly=%r)" % (self.disc, self.poly)


def alpha() -> FieldElement:
    return FieldElement(0, 1, 0)
