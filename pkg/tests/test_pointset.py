import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasitool.exactnum import ev
from quasitool.lattice import Lattice, enumerate_in_ball
from quasitool.pointset import (PointSet, covering_radius, densities, difference_set, lambda_h,
                                meyer_witness, min_gap, pairwise_disjoint)
from quasitool.presets import fibonacci_chain

TAU = (1 + math.sqrt(5)) / 2


def integers(R):
    return PointSet(enumerate_in_ball(Lattice.integer(1), None, R), R, "Z")


def test_min_gap_and_differences_small_set():
    A = PointSet([ev(0), ev("1/9"), ev(5)], 10)
    assert min_gap(A) == pytest.approx(1 / 9, abs=1e-15)
    assert len(difference_set(A, 10)) == 7


def test_duplicates_merged_and_truncation_checked():
    assert len(PointSet([ev(1), ev(1)], 5)) == 1
    with pytest.raises(ValueError, match="truncation"):
        PointSet([ev(6)], 5)


def test_integer_difference_set_within_three():
    H = difference_set(integers(20), 3)
    assert sorted(float(p[0]) for p in H) == [-3, -2, -1, 0, 1, 2, 3]


def test_lambda_h_on_integers():
    A = integers(10)
    L = lambda_h(A, ev(1), edge_correct=False)
    assert sorted(p[0].floor() for p in L) == list(range(-10, 10))
    Lc = lambda_h(A, ev(1))
    assert max(p[0].floor() for p in Lc) == 9 and Lc.R_trunc == 9


def test_integer_densities_converge_to_one():
    rep = densities(integers(300), [50, 100])
    for _, dm, ds, dp in rep.rows():
        assert dm <= ds <= dp
        assert abs(dm - 1) < 0.02 and abs(dp - 1) < 0.02


def test_covering_radius_integers_and_degenerate():
    assert covering_radius(integers(40)).radius == pytest.approx(0.5, abs=0.05)
    line = PointSet([ev(k, 0) for k in range(-20, 21)], 20)
    assert not covering_radius(line).relatively_dense


def test_fibonacci_geometry():
    A = fibonacci_chain(200)
    # gaps between consecutive points are tau and tau^2 (window [0, 1) in the internal space)
    xs = np.sort(A.coords[:, 0])
    gaps = set(np.round(np.diff(xs), 9))
    assert gaps == {round(TAU, 9), round(TAU ** 2, 9)}
    assert min_gap(A) == pytest.approx(TAU, rel=1e-12)
    assert covering_radius(A).radius == pytest.approx(TAU ** 2 / 2, abs=0.05)


def test_meyer_witness_integers_and_fibonacci():
    rep = meyer_witness(integers(100))
    assert rep.success and rep.residues == [ev(0)]
    rep = meyer_witness(fibonacci_chain(500))
    assert rep.success and rep.stable and len(rep.residues) <= 3


def test_meyer_two_cosets_cover():
    Z = Lattice.integer(1)
    A = PointSet(enumerate_in_ball(Z, [ev(0), ev("sqrt2")], 80), 80)
    rep = meyer_witness(A)
    assert rep.success and len(rep.residues) <= 3
    H = difference_set(A, 40)
    idx = A.index
    assert all(any((h - f) in idx for f in rep.residues) for h in H)


def test_pairwise_disjoint():
    a = PointSet([ev(0), ev(1)], 2)
    b = PointSet([ev(2)], 2)
    assert pairwise_disjoint([a, b])
    assert not pairwise_disjoint([a, a])


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(-200, 200), min_size=5, max_size=40, unique=True))
def test_density_ordering_random_sets(xs):
    A = PointSet([ev(x) for x in xs], 250)
    rep = densities(A, [20, 60])
    for _, dm, ds, dp in rep.rows():
        assert dm <= ds + 1e-15 and ds <= dp + 1e-15


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=2, max_size=25, unique=True))
def test_min_gap_matches_brute_force(xs):
    A = PointSet([ev(x) for x in xs], 60)
    brute = min(abs(a - b) for i, a in enumerate(xs) for b in xs[i + 1:])
    assert min_gap(A) == brute
