"""A fast self-check suite of structural invariants, runnable from the CLI."""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Callable

from .decompose import (CosetDecomposition, TrigPolynomial, find_separating_vector,
                        recover_polynomials, separating_value_check, synthesize)
from .exactnum import ExactReal, basis, ev
from .fourier import Gaussian, gap_certificate, gap_test, poisson_verify
from .lattice import Lattice, dual_lattice, enumerate_in_ball, refine_lattice
from .measure import modulate
from .modelset import fibonacci_scheme, generate, predicted_density
from .pointset import densities
from .presets import comb

__all__ = ["CHECKS", "run_checks"]


def _rand_er(rng: random.Random, b) -> ExactReal:
    return ExactReal(b, [Fraction(rng.randint(-9, 9), rng.randint(1, 6)) for _ in b.tags])


def check_ring_axioms(rng):
    b = basis("tau")
    worst = 0.0
    for _ in range(200):
        x, y, z = (_rand_er(rng, b) for _ in range(3))
        if (x * y) * z != x * (y * z) or x * (y + z) != x * y + x * z:
            return False, "ring axiom failed"
        worst = max(worst, abs(float(x * y) - float(x) * float(y)) / max(1.0, abs(float(x * y))))
    return worst < 1e-12, f"max relative float mismatch {worst:.2e}"


def check_dual_roundtrip(rng):
    L = Lattice.fibonacci()
    D = dual_lattice(L)
    ok = dual_lattice(D).same_basis(L)
    prod = L.det_float * D.det_float
    return ok and abs(prod - 1) < 1e-12, f"det(L) det(L*) = {prod:.17g}"


def check_poisson(rng):
    err = 0.0
    for L in (Lattice.integer(1), Lattice.fibonacci()):
        g = Gaussian.make(rng.uniform(0.7, 1.5), [rng.uniform(-0.5, 0.5)] * L.n,
                          [rng.uniform(-0.5, 0.5)] * L.n, L.n)
        err = max(err, poisson_verify(L, g, [0.1] * L.n, [0.2] * L.n, R=30).abs_error)
    return err < 1e-10, f"max |lhs - rhs| = {err:.2e}"


def check_fibonacci_density(rng):
    scheme, window = fibonacci_scheme()
    A = generate(scheme, window, 500)
    rep = densities(A, [200])
    p = predicted_density(scheme, window)
    err = abs(rep.d_sharp[0] / p - 1)
    ordered = rep.d_minus[0] <= rep.d_sharp[0] <= rep.d_plus[0]
    return err < 0.02 and ordered, f"relative error {err:.4f}"


def check_gap_at_origin(rng):
    mu = modulate(comb(Lattice.integer(1), 200), ev("1/2"))
    rep = gap_test(mu, 0.0, 0.4)
    return rep.gap, f"max ratio {rep.max_ratio:.2e}"


def check_roundtrip(rng):
    Z = Lattice.integer(1)
    thetas = [ev(0), ev("sqrt2"), ev("sqrt3")]
    parts = []
    for t in thetas:
        terms = {ev(Fraction(rng.randrange(8), 8)): complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
                 for _ in range(3)}
        parts.append((t, TrigPolynomial(terms)))
    d = CosetDecomposition(Z, parts)
    rec = recover_polynomials(synthesize(d, 40), Z, thetas, K=8)
    err = 0.0
    for (_, P), (_, Q) in zip(d.canonical().parts, rec.parts):
        for w in set(P.terms) | set(Q.terms):
            err = max(err, abs(P.terms.get(w, 0) - Q.terms.get(w, 0)))
    return err < 1e-9, f"max coefficient error {err:.2e}"


def check_separating(rng):
    thetas = [ev(0, 0), ev("sqrt2", "-sqrt2"), ev("sqrt3", "1/2")]
    m = find_separating_vector(thetas)
    return separating_value_check(thetas, m), f"m = {m}"


def check_refinement(rng):
    Z = Lattice.integer(1)
    F = [ev("1/3+sqrt2"), ev("1/2")]
    ref = refine_lattice(Z, F)
    pts = enumerate_in_ball(Z, F, 20)
    ok = all(any(ref.lattice.contains(p - w) for w in ref.offsets) for p in pts)
    return ok, f"q = {ref.q}, |F'| = {len(ref.offsets)}"


def check_gap_certificate(rng):
    cert = gap_certificate([3.0, -7.0, 12.5, 40.0, -55.0], 100.0, 4.0, 1.0)
    r = cert.report
    ok = (r["phi0_exact"] and r["max_abs_on_points"] < 1e-12
          and r["spectral_mass_outside"] < 1e-8 and r["sup_outside_R"] <= 1 and r["P_bound_ok"])
    return ok, f"spectral mass outside (0, a): {r['spectral_mass_outside']:.2e}"


CHECKS: dict[str, Callable] = {
    "ring_axioms": check_ring_axioms,
    "dual_roundtrip": check_dual_roundtrip,
    "poisson": check_poisson,
    "fibonacci_density": check_fibonacci_density,
    "gap_at_origin": check_gap_at_origin,
    "decomposition_roundtrip": check_roundtrip,
    "separating_vector": check_separating,
    "refinement_inclusion": check_refinement,
    "gap_certificate": check_gap_certificate,
}


def run_checks(seed: int = 0, only: list[str] | None = None) -> list[dict]:
    out = []
    for name, fn in CHECKS.items():
        if only and name not in only:
            continue
        rng = random.Random(f"{seed}:{name}")
        try:
            ok, detail = fn(rng)
        except Exception as exc:  # report, do not abort the suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append({"check": name, "passed": bool(ok), "detail": detail})
    return out
