from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from quasitool.exactnum import (ExactReal, ExactVector, NoMultiplicationTable, basis,
                                er, ev, inner_is_integer, parse_exact, unit_phase)

fractions = st.fractions(min_value=-50, max_value=50, max_denominator=40)


def reals(tags):
    b = basis(*tags)
    return st.lists(fractions, min_size=b.dim, max_size=b.dim).map(lambda c: ExactReal(b, c))


TABLE_BASES = [("tau",), ("sqrt2",), ("sqrt3",), ("sqrt2", "sqrt3", "sqrt6")]


def test_add_cancels_irrational_part():
    x = er("1+sqrt2") + er("2-sqrt2")
    assert x == er(3)
    assert x.is_integer()
    assert hash(x) == hash(er(3))


def test_rational_scaling():
    assert er("2+4*sqrt2").scale(Fraction(1, 2)) == er("1+2*sqrt2")


def test_tau_plus_conjugate_is_one():
    tau = er("tau")
    assert tau + (1 - tau) == er(1)


def test_products_from_table():
    assert er("sqrt2") * er("sqrt2") == er(2)
    assert er("tau") * er("tau") == er("1+tau")
    # (1+sqrt2)(1-sqrt2) = -1, checked against mpmath
    p = er("1+sqrt2") * er("1-sqrt2")
    assert p == er(-1)
    mpmath.mp.dps = 40
    assert abs(float(p) - float((1 + mpmath.sqrt(2)) * (1 - mpmath.sqrt(2)))) < 1e-15


def test_multiplication_without_table_is_rejected():
    with pytest.raises(NoMultiplicationTable, match="numeric"):
        er("sqrt2") * er("tau")


def test_inverse_in_golden_field():
    x = er("2*tau-1")
    inv = x.inverse()
    assert inv == er("-1/5+2/5*tau")
    assert x * inv == er(1)


def test_basis_generator_zero_is_one():
    b = basis("tau")
    assert b.tags[0] == "1"
    assert b.float_values[0] == 1.0


def test_vector_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        ev(1, 2) + ev(1)


def test_inner_is_integer_examples():
    theta = ev("sqrt2", "1/2")
    ok, val = inner_is_integer(theta, [0, 2])
    assert ok and val == er(1)
    ok, val = inner_is_integer(theta, [1, 0])
    assert not ok and val == er("sqrt2")
    ok, val = inner_is_integer(ev("sqrt2", "sqrt3") - ev(0, 0), [1, 1])
    assert not ok and val == er("sqrt2+sqrt3")


def test_parse_exact_forms():
    assert parse_exact("1/3+sqrt2") == er(Fraction(1, 3)) + er("sqrt2")
    assert parse_exact("-2*tau") == er("tau").scale(-2)
    with pytest.raises(ValueError, match="squarefree"):
        parse_exact("sqrt8")


def test_json_roundtrip_large_integers():
    x = ExactReal(basis("sqrt2"), [Fraction(10**40 + 1, 3), Fraction(-7, 10**30)])
    assert ExactReal.from_json(x.to_json()) == x
    assert x.to_json()["coeffs"][0] == [str(10**40 + 1), "3"]


def test_unit_phase_quarter_values_are_exact():
    assert unit_phase(er("1/2")) == -1
    assert unit_phase(er("7/4")) == -1j
    assert unit_phase(er(3)) == 1


def test_comparisons_use_high_precision():
    # 99/70 approximates sqrt2 to 7e-5; 665857/470832 to 1.6e-12
    assert er("665857/470832") > er("sqrt2")
    assert er("sqrt2").floor() == 1
    assert (er("sqrt2") - er("665857/470832")).sign() == -1


def test_mismatched_basis_promotes_for_addition():
    x = er("sqrt2") + er("sqrt3")
    assert set(x.basis.tags) == {"1", "sqrt2", "sqrt3"}
    with pytest.raises(ValueError, match="dependent"):
        basis("tau", "sqrt5")


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(TABLE_BASES).flatmap(lambda t: st.tuples(reals(t), reals(t))))
def test_float_evaluation_commutes_with_arithmetic(pair):
    x, y = pair
    for exact, approx in ((x + y, float(x) + float(y)), (x * y, float(x) * float(y))):
        assert abs(float(exact) - approx) <= 1e-12 * max(1.0, abs(approx))


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(TABLE_BASES).flatmap(lambda t: st.tuples(reals(t), reals(t), reals(t))))
def test_ring_axioms_exact(triple):
    x, y, z = triple
    assert (x * y) * z == x * (y * z)
    assert x * (y + z) == x * y + x * z
    assert x * y == y * x


@settings(max_examples=200, deadline=None)
@given(st.lists(fractions, min_size=2, max_size=2), st.lists(st.integers(-6, 6), min_size=2, max_size=2))
def test_inner_is_integer_matches_numeric(coeffs, m):
    theta = ExactVector([ExactReal(basis("sqrt2"), [coeffs[0], coeffs[1]]), er(coeffs[0])])
    ok, val = inner_is_integer(theta, m)
    if ok:
        v = float(val)
        assert abs(v - round(v)) < 1e-12
