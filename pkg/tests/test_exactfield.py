from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubic_euclid.exactfield import (
    CubicField,
    FieldElement,
    FieldError,
    IrreducibilityError,
    SingularUnit,
    UnitError,
    cubic_poly_disc,
    format_element,
)

from conftest import FIXTURES, F, load_field
from oracles import sympy_inverse, sympy_norm
from cubic_euclid import fio

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)
elements = st.builds(FieldElement, rationals, rationals, rationals)
FIELDS = ["985", "_23", "_31", "_44", "_199", "49", "81", "148"]


@pytest.fixture(scope="module")
def fields():
    return {n: load_field(n) for n in FIELDS}


class TestArithmetic:
    def test_alpha_squared(self, K985):
        a = F(0, 1, 0)
        assert K985.mul(a, a) == F(0, 0, 1)

    def test_alpha_cubed_reduces_by_polynomial(self, K985):
        assert K985.mul(F(0, 1, 0), F(0, 0, 1)) == F(1, 6, -1)

    def test_identity(self, K985):
        u = F("1/3", -2, 5)
        assert K985.mul(u, F(1)) == u

    def test_power_matches_repeated_multiplication(self, K985):
        a = F(0, 1, 0)
        assert K985.power(a, 5) == K985.mul(K985.mul(K985.power(a, 2), K985.power(a, 2)), a)
        assert K985.power(a, -1) == K985.invert(a)
        assert K985.power(a, 0) == F(1)

    def test_elements_are_canonical(self):
        assert FieldElement(Fraction(2, 4), 0, 0) == FieldElement(Fraction(1, 2), 0, 0)
        assert hash(FieldElement(Fraction(6, 3))) == hash(FieldElement(2))


class TestNorm:
    def test_norm_of_two_minus_alpha(self, K985):
        assert K985.norm(F(2, -1, 0)) == -1

    def test_norm_zero(self, K985):
        assert K985.norm(F(0)) == 0

    def test_norm_at_the_half_integral_point(self, K985):
        xi0 = F("2/5", "-1/5", "2/5")
        assert abs(K985.norm(xi0 - F(2))) == 1

    @pytest.mark.parametrize("name", FIELDS)
    def test_agrees_with_resultant(self, fields, name):
        K = fields[name]
        for u in [F(1, 1, 1), F("1/2", -3, "2/7"), F(-4, 0, 1), K.theta]:
            assert K.norm(u) == sympy_norm(K, u)

    @settings(max_examples=1000, deadline=None)
    @given(u=elements, v=elements)
    def test_multiplicative(self, K985, u, v):
        assert K985.norm(K985.mul(u, v)) == K985.norm(u) * K985.norm(v)

    @settings(max_examples=200, deadline=None)
    @given(u=elements, v=elements)
    def test_multiplicative_complex(self, K23, u, v):
        assert K23.norm(K23.mul(u, v)) == K23.norm(u) * K23.norm(v)


class TestInverse:
    def test_inverse_of_one(self, K985):
        assert K985.invert(F(1)) == F(1)

    def test_inverse_of_alpha(self, K985):
        assert K985.invert(F(0, 1, 0)) == F(-6, 1, 1)

    def test_involution(self, K985):
        u = F(2, -1, 0)
        assert K985.invert(K985.invert(u)) == u

    def test_zero_has_no_inverse(self, K985):
        with pytest.raises(ZeroDivisionError):
            K985.invert(F(0))

    @settings(max_examples=100, deadline=None)
    @given(u=elements)
    def test_agrees_with_polynomial_inverse(self, K985, u):
        if u.is_zero():
            return
        inv = K985.invert(u)
        assert K985.mul(u, inv) == F(1)
        assert inv == sympy_inverse(K985, u)


class TestEmbeddings:
    def test_one(self, fields):
        for K in fields.values():
            for j in (1, 2, 3):
                assert K.embed(F(1), j) == pytest.approx(1.0)

    def test_alpha_first_embedding(self, K985):
        assert K985.embed(F(0, 1, 0), 1) == pytest.approx(-2.93080160017276, abs=1e-10)

    @pytest.mark.parametrize("name", FIELDS)
    def test_weighted_product_is_norm(self, fields, name):
        K = fields[name]
        u = F(1, 1, 1)
        assert K.float_norm(u) == pytest.approx(abs(float(K.norm(u))), rel=1e-6)


class TestIntegralBasis:
    def test_theta_is_alpha_squared_for_monogenic(self, K985):
        assert K985.to_power_basis((0, 0, 1)) == F(0, 0, 1)

    def test_theta_definition_for_index_two(self):
        K = CubicField(-44, (-3, -1, -1), units=(), index_g=2, theta=(1, 1, 1), check=False)
        assert K.to_power_basis((0, 0, 1)) == F("1/2", "1/2", "1/2")

    def test_non_integral_point_has_no_coordinates(self, K985):
        assert K985.from_power_basis(F("2/5", "-1/5", "2/5")) is None

    def test_index_two_round_trip(self):
        K = fio.read_disc(FIXTURES / "index2" / "_44").to_field()
        assert K.index_g == 2
        for v in [(1, 0, 0), (3, -2, 5), (0, 0, 1)]:
            assert K.from_power_basis(K.to_power_basis(v)) == v
        # every unit lies in the order spanned by the integral basis
        for u in K.units:
            assert K.from_power_basis(u) is not None

    @settings(max_examples=200, deadline=None)
    @given(u=elements)
    def test_reduce_representative(self, K985, u):
        rep, shift = K985.reduce(u)
        assert rep + K985.to_power_basis(shift) == u
        assert all(Fraction(-1, 2) < c <= Fraction(1, 2) for c in K985.integral_coords(rep))


class TestFixedPoint:
    def test_one_step(self, K985):
        assert K985.fixed_point(F(0, 1, 0), F(0, 3, -1), 1) == F("2/5", "-1/5", "2/5")

    def test_five_steps(self, K985):
        z = K985.fixed_point(F(0, 1, 0), F(7, 41, -28), 5)
        assert z == F("19/55", "-27/55", "-1/55")

    def test_zero_shift(self, K985):
        assert K985.fixed_point(F(0, 1, 0), F(0), 3) == F(0)

    def test_torsion_unit(self, K985):
        with pytest.raises(SingularUnit):
            K985.fixed_point(F(-1), F(1), 2)

    @settings(max_examples=100, deadline=None)
    @given(beta=st.tuples(*[st.integers(-9, 9)] * 3), t=st.integers(1, 4))
    def test_is_fixed(self, K985, beta, t):
        eps, b = F(2, -1, 0), F(*beta)
        z = K985.fixed_point(eps, b, t)
        assert K985.mul(K985.power(eps, t), z) - b == z


class TestValidation:
    def test_reducible_polynomial(self):
        with pytest.raises(IrreducibilityError):
            CubicField(-1728, (0, 0, -8))

    def test_discriminant_mismatch(self):
        with pytest.raises(FieldError):
            CubicField(-31, (1, -6, -1))

    def test_non_unit(self):
        with pytest.raises(UnitError):
            CubicField(985, (1, -6, -1), units=[F(0, 1, 0), F(2, 0, 0)])

    def test_dependent_units(self):
        a = F(0, 1, 0)
        with pytest.raises(UnitError):
            CubicField(985, (1, -6, -1), units=[a, F(-6, 1, 1)])

    def test_wrong_number_of_units(self):
        with pytest.raises(UnitError):
            CubicField(985, (1, -6, -1), units=[F(0, 1, 0)])

    def test_bad_root(self):
        with pytest.raises(FieldError):
            CubicField(985, (1, -6, -1), roots=(-2.5, -0.16, 2.09))

    @pytest.mark.parametrize("name", FIELDS)
    def test_bundled_fields_consistent(self, fields, name):
        K = fields[name]
        g = K.index_g
        p, q, r = K.poly
        assert cubic_poly_disc(p, q, r) == g * g * K.disc
        assert len(K.units) == K.unit_rank
        for u in K.units:
            assert abs(K.norm(u)) == 1
        for j in range(3):
            t = K.roots[j]
            assert abs(((t + p) * t + q) * t + r) < 1e-9


def test_format_element():
    assert format_element(F("2/5", "-1/5", "2/5")) == "(2 - a + 2*a^2)/5"
    assert format_element(F(0)) == "0"
