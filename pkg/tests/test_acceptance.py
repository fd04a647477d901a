"""One test per acceptance criterion; a pass/fail line per criterion is printed at the end of the run."""

import math
import random
import time
from fractions import Fraction

import numpy as np

from quasitool.decompose import (CosetDecomposition, CosetSplitError, RecoveryFailed,
                                 TrigPolynomial, coset_split, find_separating_vector,
                                 recover_polynomials, separating_value_check, spectral_min_gap,
                                 synthesize, vandermonde_consistency)
from quasitool.exactnum import ExactReal, basis, er, ev
from quasitool.fourier import (Gaussian, diffraction_scan, gap_certificate, gap_test,
                               poisson_verify, verify_certificate)
from quasitool.lattice import Lattice, dual_lattice, enumerate_in_ball, lattice_det, refine_lattice
from quasitool.measure import AtomicMeasure, autocorrelation_measure, modulate
from quasitool.modelset import extend_scheme, fibonacci_scheme, generate, z3_scheme
from quasitool.pointset import PointSet, densities, difference_set
from quasitool.presets import comb, fibonacci_chain, fibonacci_measure

RESULTS: dict[int, tuple[bool, str]] = {}


def record(k, ok, detail):
    RESULTS[k] = (bool(ok), detail)
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def test_criterion_01_poisson():
    rng = random.Random(1)
    t0 = time.perf_counter()
    worst = 0.0
    for L in (Lattice.integer(1), Lattice.diagonal(2), Lattice.integer(2), Lattice.fibonacci()):
        for _ in range(5):
            n = L.n
            g = Gaussian.make(rng.uniform(0.8, 1.5), [rng.uniform(-1, 1) for _ in range(n)],
                              [rng.uniform(-1, 1) for _ in range(n)], n)
            rep = poisson_verify(L, g, [rng.uniform(-1, 1) for _ in range(n)],
                                 [rng.uniform(-1, 1) for _ in range(n)], R=30)
            worst = max(worst, rep.abs_error)
    dt = time.perf_counter() - t0
    record(1, worst < 1e-10 and dt < 5, f"max |lhs - rhs| = {worst:.2e}, {dt:.2f} s")


def test_criterion_02_duality():
    lattices = [Lattice.integer(1), Lattice.diagonal(2), Lattice.integer(2),
                Lattice([[2, 1], [er("1/3"), 5]]), Lattice.fibonacci(),
                Lattice([[er("tau"), 1], [0, er("2*tau")]])]
    ok, worst = True, 0.0
    for L in lattices:
        D = dual_lattice(L)
        ok &= D.is_exact and dual_lattice(D).same_basis(L)
        ok &= lattice_det(L) * lattice_det(D) == er(1)
        worst = max(worst, abs(L.det_float * D.det_float - 1))
    record(2, ok and worst < 1e-12, f"{len(lattices)} lattices, max |det L det L* - 1| = {worst:.1e}")


def test_criterion_03_fibonacci_density():
    t0 = time.perf_counter()
    A = fibonacci_chain(1100)
    target = 1 / math.sqrt(5)
    errs = []
    for R in (200, 400):
        rep = densities(A, [R])
        errs.append(max(abs(v[0] / target - 1) for v in (rep.d_minus, rep.d_sharp, rep.d_plus)))
    dt = time.perf_counter() - t0
    record(3, errs[0] < 0.02 and errs[1] < errs[0] and dt < 10,
           f"relative error {errs[0]:.4f} at R=200, {errs[1]:.4f} at R=400, {dt:.2f} s")


def test_criterion_04_diffraction():
    Z = Lattice.integer(1)
    scan = diffraction_scan(comb(Z, 200), [(-3.2, 3.2, 3201)])
    locs = scan.peak_locations()[:, 0]
    amps = scan.peak_amplitudes()
    grid, mag = scan.axes[0], np.abs(scan.values)
    at_int = np.all(np.abs(locs - np.round(locs)) < 1e-3) and sorted(np.round(locs)) == list(range(-3, 4))
    spread = float(np.ptp(amps) / amps.mean())
    off = np.abs(grid - np.round(grid)) > 0.1
    floor = float(mag[off].max())

    alt = modulate(comb(Z, 200), ev("1/2"))
    s2 = diffraction_scan(alt, [(-3.2, 3.2, 3201)])
    l2 = s2.peak_locations()[:, 0]
    g2, m2 = s2.axes[0], np.abs(s2.values)
    inner = float(m2[np.abs(g2) < 0.4].max())
    half = np.all(np.abs(l2 - (np.floor(l2) + 0.5)) < 1e-3) and len(l2) == 6
    ok = at_int and spread < 0.01 and floor < 1e-3 and inner < 1e-3 and half and np.all(np.abs(l2) > 0.4)
    record(4, ok, f"comb: {len(locs)} peaks, spread {spread:.1e}, floor {floor:.1e}; "
                  f"alternating: max in (-0.4,0.4) {inner:.1e}, peaks at {sorted(round(float(x), 3) for x in l2)}")


def test_criterion_05_autocorrelation_gap():
    mu = fibonacci_measure(2000)
    H = difference_set(mu.support, 25)
    hs = sorted((h for h in H.points if float(h[0]) > 0), key=lambda h: float(h[0]))[:10]
    worst, details = 0.0, []
    for h in hs:
        muh = autocorrelation_measure(mu, h)
        scan = diffraction_scan(muh, [(-2.0, 2.0, 4001)])
        a = scan.min_peak_gap()
        W = scan.taper["width"]
        rep = gap_test(muh, 0.0, a, probes=20, puncture=3.0 / W, threshold=1e-6)
        worst = max(worst, rep.max_ratio)
        details.append(f"{h[0]}: a={a:.4f} ratio={rep.max_ratio:.1e}")
    record(5, len(hs) == 10 and worst < 1e-6, f"max ratio {worst:.2e} over 10 h; " + "; ".join(details))


def test_criterion_06_gap_certificates():
    rng = np.random.default_rng(6)
    done, tries, failures = 0, 0, []
    while done < 20 and tries < 500:
        tries += 1
        R = float(rng.uniform(50, 200))
        a = float(rng.uniform(2, 4))
        count = int(rng.integers(1, 12))
        pts = np.round(rng.choice([-1, 1], count) * rng.uniform(1.0, 0.98 * R, count), 6)
        if len(set(pts.tolist())) != count:
            continue
        cert = gap_certificate(pts.tolist(), R, a, 1.0, enforce=False, verify=False)
        if not cert.admissible:
            continue
        r = verify_certificate(cert)
        ok = (r["phi0_exact"] and r["max_abs_on_points"] < 1e-12 and r["spectral_mass_outside"] < 1e-8
              and r["sup_outside_R"] <= 1 and r["max_P_circle"] <= r["P_bound"] * (1 + 1e-9))
        if not ok:
            failures.append((R, a, pts.tolist(), r))
        done += 1
    record(6, done == 20 and not failures, f"{done} admissible instances ({tries} drawn), {len(failures)} failed")


IRR = basis("sqrt2", "sqrt3")


def _random_offset(rng):
    # exact offset r0 + r1*sqrt2 + r2*sqrt3
    return ev(ExactReal(IRR, [Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(3)]))


def test_criterion_07_roundtrip():
    rng = random.Random(7)
    Z = Lattice.integer(1)
    K = 8
    t0 = time.perf_counter()
    worst_c, worst_v, offsets_ok, count = 0.0, 0.0, True, 0
    while count < 50:
        s = rng.randint(1, 4)
        thetas = [ev(0)]
        while len(thetas) < s:
            t = _random_offset(rng)
            if all(not (t - u).is_rational() for u in thetas):
                thetas.append(t)
        parts = []
        for t in thetas:
            qs = rng.sample(range(K), rng.randint(1, 5))
            terms = {ev(Fraction(q, K)): complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for q in qs}
            parts.append((t, TrigPolynomial(terms)))
        d = CosetDecomposition(Z, parts)
        gap = spectral_min_gap(d)
        R = 3.6 * 10 / gap
        mu = synthesize(d, R)
        rec = recover_polynomials(mu, Z, thetas, K=K)
        offsets_ok &= rec.thetas == d.thetas
        for (_, P), (_, Q) in zip(d.canonical().parts, rec.parts):
            for w in set(P.terms) | set(Q.terms):
                worst_c = max(worst_c, abs(P.terms.get(w, 0) - Q.terms.get(w, 0)))
        freqs = sorted({float(w[0]) for _, P in d.parts for w in P.terms})
        # spectrum is frequencies + Z; take three distinct peaks
        peaks = [freqs[i % len(freqs)] + i // len(freqs) for i in range(3)]
        for f in peaks:
            rep = vandermonde_consistency(mu, d, t=[f], gap=gap)
            worst_v = max(worst_v, rep.max_rel_error)
        count += 1
    dt = time.perf_counter() - t0
    record(7, worst_c < 1e-9 and worst_v < 1e-5 and offsets_ok and dt < 60,
           f"50 decompositions: coefficient error {worst_c:.1e}, Vandermonde error {worst_v:.1e}, {dt:.1f} s")


def test_criterion_08_independence():
    rng = random.Random(8)
    irr = [er("sqrt2"), er("sqrt3"), er("sqrt2+sqrt3"), er("sqrt2-sqrt3"), er("2*sqrt3"), er("-sqrt2")]
    families = [[ev("sqrt2", "-sqrt2"), ev(0, 0)]]
    while len(families) < 100:
        fam = [ev(0, 0)]
        for _ in range(rng.randint(1, 4)):
            t = ev(rng.choice(irr) + er(Fraction(rng.randint(-4, 4), rng.randint(1, 3))),
                   rng.choice(irr + [er(0)]))
            if all(not (t - u).is_rational() for u in fam):
                fam.append(t)
        if len(fam) > 1:
            families.append(fam)
    sep_ok = all(separating_value_check(f, find_separating_vector(f)) for f in families)
    engineered = find_separating_vector(families[0])

    incl_ok, n_inst = True, 0
    for i in range(25):
        F = [ev(er(Fraction(rng.randint(-5, 5), rng.randint(1, 6))) + rng.choice([er(0), er("sqrt2")]))
             for _ in range(rng.randint(1, 3))]
        F = list(dict.fromkeys(F))
        if i % 2 == 0:
            Z = Lattice.integer(1)
            ref = refine_lattice(Z, F)
            pts = enumerate_in_ball(Z, F, 50)
            incl_ok &= all(any(ref.lattice.contains(p - w) for w in ref.offsets) for p in pts)
        else:
            scheme, window = fibonacci_scheme()
            F = [f + ev(er("tau").scale(rng.randint(-2, 2))) for f in F]
            ext = extend_scheme(scheme, window, F)
            A = generate(scheme, window, 50)
            shift = max(float(np.linalg.norm(u.to_float())) for u in ext.u)
            B = generate(ext.scheme, ext.window, 50 + shift + 1).index
            incl_ok &= all((p + t - ext.offsets[ext.mapping[j]]) in B for p in A for j, t in enumerate(F))
        n_inst += 1
    record(8, sep_ok and incl_ok and n_inst == 25,
           f"100 families separated (engineered case m={engineered}); 25 inclusion checks {'ok' if incl_ok else 'FAILED'}")


def test_criterion_09_density_ordering_and_stability():
    rng = random.Random(9)
    sets = [
        PointSet(enumerate_in_ball(Lattice.integer(1), None, 400), 400, "Z"),
        fibonacci_chain(400),
        PointSet(enumerate_in_ball(Lattice.integer(1), [ev(0), ev("sqrt2")], 400), 400, "Z+{0,sqrt2}"),
        PointSet(enumerate_in_ball(Lattice.integer(2), None, 40), 40, "Z2"),
        generate(*z3_scheme(), 45),
    ]
    ordered, stable, worst = True, True, 0.0
    for A in sets:
        radii = [0.1 * A.R_trunc, 0.2 * A.R_trunc, 0.4 * A.R_trunc]
        rep = densities(A, radii)
        ordered &= all(a <= b <= c for _, a, b, c in rep.rows())
        t = ev(*[Fraction(rng.randint(-1000, 1000), 2000) * Fraction(rep.pitch).limit_denominator(10**6)
                 for _ in range(A.dim)])
        rep2 = densities(A.translate(t), radii)
        ordered &= all(a <= b <= c for _, a, b, c in rep2.rows())
        for i in range(len(radii)):
            for u, v in ((rep.d_minus, rep2.d_minus), (rep.d_sharp, rep2.d_sharp), (rep.d_plus, rep2.d_plus)):
                change = abs(u[i] - v[i])
                worst = max(worst, change / rep.pitch_bound[i])
                stable &= change <= rep.pitch_bound[i]
    record(9, ordered and stable, f"{len(sets)} sets ordered; max change / pitch bound = {worst:.2f}")


def test_criterion_10_negative_controls():
    Z = Lattice.integer(1)
    pts = [ev(n) for n in range(-1100, 1101)]
    mu = AtomicMeasure(pts, [1 / (1 + n * n) for n in range(-1100, 1101)], 1100)
    residuals = []
    for K in (8, 16, 32, 64, 128, 256, 512, 1024):
        try:
            recover_polynomials(mu, Z, [ev(0)], K=K, K_max=K)
            residuals.append(0.0)
        except RecoveryFailed as exc:
            residuals.append(exc.residual)
    bad = AtomicMeasure([ev(0), ev(1), ev("1/2"), ev("sqrt2"), ev("3+sqrt3")], [1] * 5, 5)
    try:
        coset_split(bad, Z, [ev(0), ev("sqrt2")])
        offenders = None
    except CosetSplitError as exc:
        offenders = exc.offenders
    ok = min(residuals) > 0.01 and offenders == [ev("1/2"), ev("3+sqrt3")]
    record(10, ok, f"min residual over K <= 1024: {min(residuals):.3f}; offenders {[str(o) for o in offenders or []]}")
