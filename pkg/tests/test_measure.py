import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasitool.exactnum import ev
from quasitool.lattice import Lattice
from quasitool.measure import (AtomicMeasure, autocorrelation_measure, modulate, phase, shift,
                               transform, validate)
from quasitool.presets import altsign, comb, fibonacci_measure


def test_exact_zero_weights_dropped():
    mu = AtomicMeasure([ev(0), ev(1)], [1.0, 0.0], 5)
    assert len(mu) == 1


def test_duplicate_points_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        AtomicMeasure([ev(0), ev(0)], [1.0, 2.0], 5)


def test_modulation_by_half_gives_alternating_signs():
    mu = modulate(comb(Lattice.integer(1), 10), ev("1/2"))
    for p, w in mu.as_dict().items():
        k = p[0].floor()
        assert w == (-1) ** k


def test_exact_phase_for_quarter_rationals():
    ph = phase(ev("1/4"), [ev(k) for k in range(4)])
    assert list(ph) == [1, 1j, -1, -1j]


def test_shift_restricts_radius():
    mu = comb(Lattice.integer(1), 10)
    s = shift(mu, ev("1/2"))
    assert s.R_trunc == 9.5
    assert all(abs(float(p[0])) <= 9.5 for p in s.points)
    assert ev("1/2") in s.support.index


def test_add_cancels_to_empty():
    mu = comb(Lattice.integer(1), 10)
    z = transform(mu, add=transform(mu, scalar=-1))
    assert len(z) == 0


def test_autocorrelation_of_alternating_comb():
    mu = modulate(comb(Lattice.integer(1), 20), ev("1/2"))
    m1 = autocorrelation_measure(mu, ev(1))
    assert np.allclose(m1.weights, -1)
    assert len(m1) == 39
    with pytest.raises(ValueError, match="empty"):
        autocorrelation_measure(mu, ev("1/2"))


def test_validate_reports():
    rep = validate(comb(Lattice.integer(2), 10))
    assert rep.is_positive and rep.bounded and rep.sup_weight == 1
    rep = validate(altsign(20))
    assert not rep.is_positive and rep.bounded and rep.min_gap == 1
    grow = AtomicMeasure([ev(k) for k in range(1, 200)], [k ** 2 for k in range(1, 200)], 200)
    rep = validate(grow)
    assert not rep.bounded and rep.growth_N > 1.5


def test_json_roundtrip_fibonacci():
    mu = modulate(fibonacci_measure(30), [0.3])
    back = AtomicMeasure.from_json(mu.to_json())
    assert back.points == mu.points
    assert np.array_equal(back.weights, mu.weights)


@settings(max_examples=40, deadline=None)
@given(st.fractions(-3, 3, max_denominator=8), st.fractions(-3, 3, max_denominator=8))
def test_modulation_composes_exactly(a, b):
    mu = comb(Lattice.integer(1), 12)
    left = modulate(modulate(mu, ev(a)), ev(b))
    right = modulate(mu, ev(a + b))
    assert np.allclose(left.weights, right.weights, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(st.integers(-3, 3), st.integers(-3, 3))
def test_shifts_compose(s, t):
    mu = comb(Lattice.integer(1), 15)
    a = shift(shift(mu, ev(s)), ev(t))
    b = shift(mu, ev(s + t))
    common = set(a.points) & set(b.points)
    assert common
    assert all(a.weight(p) == b.weight(p) for p in common)
