import itertools
import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasitool.exactnum import er, ev
from quasitool.lattice import (CosetSystem, EnumerationCapExceeded, Lattice, canonical_offset,
                               dual_lattice, enumerate_in_ball, lattice_det, parse_lattice,
                               refine_lattice)


def brute_count(B, offsets, R, box=40):
    n = B.shape[0]
    cnt = 0
    for k in itertools.product(range(-box, box + 1), repeat=n):
        for t in offsets:
            if np.linalg.norm(B @ np.array(k) + t) <= R + 1e-12:
                cnt += 1
    return cnt


def test_fibonacci_det_is_sqrt5():
    d = lattice_det(Lattice.fibonacci())
    assert d == er("2*tau-1") and d * d == er(5)
    mpmath.mp.dps = 30
    assert abs(Lattice.fibonacci().det_float - float(mpmath.sqrt(5))) < 1e-15


def test_dual_of_fibonacci_is_exact_and_involutive():
    L = Lattice.fibonacci()
    D = dual_lattice(L)
    assert D.is_exact
    assert dual_lattice(D).same_basis(L)
    assert lattice_det(L) * lattice_det(D) == er(1)
    # <x, y> is an integer for every x in L, y in L*
    for a, b in itertools.product(range(-3, 4), repeat=2):
        x = L.point([a, b])
        for c, d in itertools.product(range(-2, 3), repeat=2):
            s = x.dot(D.point([c, d]))
            assert s.is_integer()


def test_dual_of_scaled_integer_lattice():
    L = Lattice.diagonal(2, er("1/3"))
    D = dual_lattice(L)
    assert D.same_basis(Lattice.diagonal(er("1/2"), 3))


def test_singular_basis_rejected():
    with pytest.raises(ValueError, match="singular"):
        Lattice([[1, 2], [2, 4]])


def test_gauss_circle_count():
    # r_2 summatory function: #{(a, b) : a^2 + b^2 <= 100} = 317
    assert len(enumerate_in_ball(Lattice.integer(2), None, 10)) == 317


def test_enumeration_matches_brute_force_on_fibonacci_cosets():
    L = Lattice.fibonacci()
    offs = [ev(0, 0), ev("1/2", "1/3")]
    pts = enumerate_in_ball(L, offs, 12)
    assert len(pts) == brute_count(L.float_matrix, [o.to_float() for o in offs], 12, box=15)
    assert len(set(pts)) == len(pts)


def test_boundary_points_resolved_exactly():
    # (3, 4) sits exactly on |x| = 5
    pts = enumerate_in_ball(Lattice.integer(2), None, 5)
    assert ev(3, 4) in pts and ev(0, 5) in pts


def test_cap_exceeded():
    with pytest.raises(EnumerationCapExceeded):
        enumerate_in_ball(Lattice.integer(2), None, 100, cap=100)


def test_coset_system_rejects_duplicate_cosets():
    with pytest.raises(ValueError, match="lattice vector"):
        CosetSystem(Lattice.integer(1), (ev("1/2"), ev("3/2")))


def test_canonical_offset():
    rep, k = canonical_offset(Lattice.integer(1), ev("7/3+sqrt2"))
    assert rep == ev("1/3+sqrt2") and k == (2,)


def test_refinement_example():
    ref = refine_lattice(Lattice.integer(1), [ev("1/3+sqrt2"), ev("1/2")])
    assert ref.q == 6
    assert ref.lattice.same_basis(Lattice.diagonal(er("1/6")))
    assert set(ref.offsets) == {ev("sqrt2"), ev(0)}


def test_parse_lattice_forms():
    assert parse_lattice("Z2").same_basis(Lattice.integer(2))
    assert parse_lattice("diag:2,sqrt2").same_basis(Lattice.diagonal(2, er("sqrt2")))
    assert parse_lattice("fib").same_basis(Lattice.fibonacci())
    with pytest.raises(ValueError):
        parse_lattice("nonsense")


def test_json_roundtrip():
    L = Lattice.fibonacci()
    assert Lattice.from_json(L.to_json()).same_basis(L)


offsets_1d = st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=12), min_size=1, max_size=3)


@settings(max_examples=25, deadline=None)
@given(offsets_1d, st.sampled_from(["0", "sqrt2", "sqrt3"]))
def test_refinement_contains_original_cosets(rats, irr):
    Z = Lattice.integer(1)
    F = [ev(er(r) + er(irr)) for r in rats]
    ref = refine_lattice(Z, F)
    assert ref.q == math.lcm(*[Fraction(r).denominator for r in rats])
    for p in enumerate_in_ball(Z, F, 10):
        assert any(ref.lattice.contains(p - w) for w in ref.offsets)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=4, max_size=4).filter(lambda v: v[0] * v[3] - v[1] * v[2] != 0))
def test_dual_pairing_integral_for_integer_matrices(v):
    L = Lattice([[v[0], v[1]], [v[2], v[3]]])
    D = dual_lattice(L)
    for k in itertools.product(range(-2, 3), repeat=2):
        for m in itertools.product(range(-2, 3), repeat=2):
            assert L.point(k).dot(D.point(m)).is_integer()
