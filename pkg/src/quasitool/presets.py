"""Named example objects used by the CLI and the test-suite."""

from __future__ import annotations

import numpy as np

from .exactnum import ExactVector
from .lattice import Lattice, enumerate_in_ball, parse_lattice
from .measure import AtomicMeasure
from .modelset import (CutAndProjectScheme, Window, fibonacci_scheme, generate, lattice_scheme,
                       z3_scheme)
from .pointset import PointSet

__all__ = ["comb", "altsign", "fibonacci_chain", "fibonacci_measure", "scheme_preset"]


def comb(L: Lattice, R: float) -> AtomicMeasure:
    """Unit masses on L within B_R."""
    pts = enumerate_in_ball(L, None, R)
    return AtomicMeasure(pts, np.ones(len(pts)), R, f"comb on {L.name or 'lattice'}", check=False)


def altsign(R: float, dim: int = 2) -> AtomicMeasure:
    """(-1)^n masses at (n, 0, ..., 0): uniformly discrete, not relatively dense for dim >= 2."""
    n = int(np.floor(R))
    pts = [ExactVector([k] + [0] * (dim - 1)) for k in range(-n, n + 1)]
    ws = [(-1.0) ** k for k in range(-n, n + 1)]
    return AtomicMeasure(pts, ws, R, f"alternating signs on Z x 0 in R^{dim}", check=False)


def fibonacci_chain(R: float) -> PointSet:
    scheme, window = fibonacci_scheme()
    return generate(scheme, window, R)


def fibonacci_measure(R: float) -> AtomicMeasure:
    return AtomicMeasure.from_pointset(fibonacci_chain(R))


def scheme_preset(name: str) -> tuple[CutAndProjectScheme, Window]:
    """"fib", "z3" or "lattice:<name>"."""
    if name == "fib":
        return fibonacci_scheme()
    if name == "z3":
        return z3_scheme()
    if name.startswith("lattice:"):
        return lattice_scheme(parse_lattice(name[len("lattice:"):]))
    raise ValueError(f"unknown scheme preset {name!r}")
