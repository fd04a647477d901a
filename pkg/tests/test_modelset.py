import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasitool.exactnum import er, ev
from quasitool.lattice import Lattice, enumerate_in_ball
from quasitool.modelset import (CutAndProjectScheme, Window, check_dense_projection,
                                extend_scheme, fibonacci_scheme, generate, lattice_scheme,
                                predicted_density, z3_scheme)
from quasitool.pointset import densities

TAU = (1 + math.sqrt(5)) / 2


def brute_fibonacci(R):
    # a + b*tau with a + b*(1 - tau) in [0, 1), by direct scan
    out = set()
    for b in range(-int(R) - 3, int(R) + 4):
        for a in range(-3 * int(R) - 10, 3 * int(R) + 11):
            x, y = a + b * TAU, a + b * (1 - TAU)
            if abs(x) <= R and 0 <= y < 1:
                out.add((a, b))
    return out


def test_fibonacci_matches_brute_force():
    g = generate(*fibonacci_scheme(), 60, with_coords=True)
    assert {tuple(map(int, k)) for k in g.gamma_coords} == brute_fibonacci(60)
    assert g.p1_injective


def test_fibonacci_density_prediction():
    mpmath.mp.dps = 30
    assert predicted_density(*fibonacci_scheme()) == pytest.approx(float(1 / mpmath.sqrt(5)), rel=1e-15)


def test_z3_density_prediction():
    # |det| = sqrt6 + sqrt2
    assert predicted_density(*z3_scheme()) == pytest.approx(1 / (math.sqrt(6) + math.sqrt(2)), rel=1e-14)


def test_z3_generation_and_density():
    scheme, window = z3_scheme()
    A = generate(scheme, window, 60)
    rep = densities(A, [30])
    assert abs(rep.d_sharp[0] / predicted_density(scheme, window) - 1) < 0.1


def test_half_open_window_boundary():
    # gamma = 0 has p2 = 0, which lies on the closed end of [0, 1)
    scheme, window = fibonacci_scheme()
    A = generate(scheme, window, 10)
    assert ev(0) in A
    # gamma = (1, 0) has p2 = 1, excluded; its image is x = 1
    assert ev(1) not in A
    assert window.contains_exact([er(1)]) == (False, True)
    assert window.contains_exact([er(0)]) == (True, True)


def test_window_measures():
    assert Window.interval(0, "sqrt2").measure() == pytest.approx(math.sqrt(2))
    assert Window.box([0, 0], [1, 2]).measure() == 2
    u = Window.union([Window.interval(0, 1), Window.interval("1/2", "3/2")])
    assert u.measure() == pytest.approx(1.5)
    assert Window.ball([0, 0], 1).measure() == pytest.approx(math.pi)


def test_window_json_roundtrip():
    w = Window.union([Window.interval(0, 1), Window.interval("sqrt2", 3)])
    assert Window.from_json(w.to_json()) == w


def test_lattice_scheme_reproduces_lattice():
    L = Lattice.fibonacci()
    A = generate(*lattice_scheme(L), 8)
    assert set(A.points) == set(enumerate_in_ball(L, None, 8))


def test_dense_projection_fibonacci():
    rep = check_dense_projection(*fibonacci_scheme(), eps=0.02)
    assert rep["all_cells_hit"] and rep["cells"] == 50


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        CutAndProjectScheme(Lattice.integer(2), 1, 2)
    with pytest.raises(ValueError, match="window"):
        generate(fibonacci_scheme()[0], Window.box([0, 0], [1, 1]), 5)


def test_extend_fibonacci_half_offset():
    ext = extend_scheme(*fibonacci_scheme(), [ev("1/2")])
    assert ext.q == 2
    assert ext.offsets == [ev(0)]
    assert ext.window == Window.interval("1/2", "3/2")
    assert ext.gammas == [(1, 0)]


def _inclusion_holds(scheme, window, F, R):
    ext = extend_scheme(scheme, window, F)
    A = generate(scheme, window, R)
    shift = max(float(np.linalg.norm(u.to_float())) for u in ext.u)
    B = generate(ext.scheme, ext.window, R + shift + 1)
    idx = B.index
    for p in A:
        for j, t in enumerate(F):
            if (p + t - ext.offsets[ext.mapping[j]]) not in idx:
                return False
    return True


@settings(max_examples=10, deadline=None)
@given(st.lists(st.tuples(st.fractions(-2, 2, max_denominator=6),
                          st.fractions(-2, 2, max_denominator=6),
                          st.sampled_from(["0", "sqrt2"])), min_size=1, max_size=3))
def test_extension_contains_shifted_fibonacci(parts):
    F = [ev(er(a) + er(b) * er("tau") + er(c)) for a, b, c in parts]
    assert _inclusion_holds(*fibonacci_scheme(), F, 30)
