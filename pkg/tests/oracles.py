"""Independent reference computations used by the tests."""

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
import sympy

from cubic_euclid.exactfield import FieldElement

T, A, B, C = sympy.symbols("t a b c")


def _poly(K):
    p, q, r = K.poly
    return sympy.Poly(T**3 + p * T**2 + q * T + r, T)


def sympy_norm(K, u):
    """Resultant of f and x + y t + z t^2, an oracle independent of the matrix determinant."""
    x, y, z = (sympy.Rational(c.numerator, c.denominator) for c in u.coords)
    g = sympy.Poly(x + y * T + z * T**2, T, domain="QQ")
    return Fraction(str(sympy.resultant(_poly(K), g)))


def sympy_inverse(K, u):
    f = sympy.Poly(_poly(K).as_expr(), T, domain="QQ")
    x, y, z = (sympy.Rational(c.numerator, c.denominator) for c in u.coords)
    inv = sympy.invert(sympy.Poly(x + y * T + z * T**2, T, domain="QQ"), f)
    cs = sympy.Poly(inv, T).all_coeffs()[::-1] + [0, 0, 0]
    return FieldElement(*(Fraction(str(c)) for c in cs[:3]))


@lru_cache(maxsize=None)
def _norm_form(poly, index_g, theta):
    g = sympy.Integer(index_g)
    gx, gy, gz = theta
    x = A + C * gx / g
    y = B + C * gy / g
    z = C * gz / g
    p, q, r = poly
    res = sympy.resultant(T**3 + p * T**2 + q * T + r, x + y * T + z * T**2, T)
    form = sympy.Poly(sympy.expand(res), A, B, C)
    den = math.lcm(*(int(sympy.fraction(co)[1]) for co in form.coeffs()))
    terms = [(m, int(co * den)) for m, co in form.terms()]
    return terms, den


def integer_norm_form(K):
    """([(exponents, integer coefficient)], L) with N(a + b*alpha + c*theta) = form(a, b, c) / L."""
    return _norm_form(K.poly, K.index_g, K.theta_num)


def exact_sampled_soundness(K, log, k, points_per_cube, rng, resolution=1000):
    """Check |N(xi - gamma)| < k exactly at random rational points of every logged cube.

    Points are corner + (j / resolution) * edge with integer j, so every check
    is an exact integer comparison.  Returns the number of points checked.
    """
    terms, L = integer_norm_form(K)
    dens = {c.denominator for cube, _ in log for c in cube.corner} | {cube.edge.denominator for cube, _ in log}
    D = math.lcm(*dens) * resolution
    corner = np.array([[int(c * D) for c in cube.corner] for cube, _ in log], dtype=object)
    step = np.array([int(cube.edge * D) // resolution for cube, _ in log], dtype=object)
    gam = np.array([[g * D for g in gamma] for _, gamma in log], dtype=object)
    k = Fraction(k)
    limit = k.numerator * L * D**3
    for _ in range(points_per_cube):
        j = rng.integers(0, resolution + 1, size=corner.shape).astype(object)
        v = corner + j * step[:, None] - gam
        a, b, c = v[:, 0], v[:, 1], v[:, 2]
        val = 0
        for (i1, i2, i3), co in terms:
            val = val + co * a**i1 * b**i2 * c**i3
        worst = max(abs(int(t)) for t in val)
        assert worst * k.denominator < limit, "a discarded cube contains a point with |N| >= k"
    return points_per_cube * len(log)
