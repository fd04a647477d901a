"""quasitool command-line interface.

Exit codes: 0 success, 1 usage error, 2 validation failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .decompose import (CosetDecomposition, CosetSplitError, RecoveryFailed, recover_polynomials,
                        synthesize)
from .exactnum import ExactVector, parse_exact
from .fourier import (InadmissibleGapInstance, TailTooLarge, diffraction_scan, gap_certificate,
                      parse_test_function, poisson_verify)
from .io import load_payload, write_json
from .lattice import EnumerationCapExceeded, enumerate_in_ball, parse_lattice
from .measure import AtomicMeasure, autocorrelation_measure, validate
from .modelset import CutAndProjectScheme, Window, generate, predicted_density
from .pointset import PointSet, covering_radius, densities, meyer_witness, min_gap
from .presets import altsign, scheme_preset
from .verify import run_checks

__all__ = ["main", "run", "build_parser"]


class UsageError(Exception):
    pass


class ValidationFailure(Exception):
    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.payload = payload


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# argument helpers


def parse_offsets(text: str | None, dim: int) -> list[ExactVector]:
    """"0,sqrt2" (one offset per item in 1-D) or "(sqrt2,0);(0,sqrt3)"."""
    if text is None:
        return [ExactVector([0] * dim)]
    text = text.strip()
    if "(" in text or ";" in text:
        out = []
        for item in text.split(";"):
            vals = item.strip().strip("()").split(",")
            out.append(ExactVector(parse_exact(v) for v in vals))
        return out
    if dim != 1:
        return [ExactVector(parse_exact(v) for v in text.split(","))]
    return [ExactVector([parse_exact(v)]) for v in text.split(",")]


def parse_vector(text: str | None, dim: int) -> ExactVector | None:
    if text is None:
        return None
    v = ExactVector(parse_exact(x) for x in text.split(","))
    if v.dim != dim:
        raise UsageError(f"vector {text!r} has dimension {v.dim}, expected {dim}")
    return v


def parse_grid(text: str) -> list[tuple[float, float, int]]:
    out = []
    for axis in text.split(";"):
        lo, hi, cnt = axis.split(",")
        out.append((float(lo), float(hi), int(cnt)))
    return out


def load_measure(path: str) -> AtomicMeasure:
    obj = load_payload(path)
    if "atoms" in obj:
        return AtomicMeasure.from_json(obj)
    if "points" in obj:
        return AtomicMeasure.from_pointset(PointSet.from_json(obj))
    raise UsageError(f"{path}: not a measure or point set")


def load_pointset(path: str) -> PointSet:
    obj = load_payload(path)
    if "points" in obj:
        return PointSet.from_json(obj)
    if "atoms" in obj:
        return AtomicMeasure.from_json(obj).support
    raise UsageError(f"{path}: not a point set or measure")


def _threads(args) -> int:
    env = os.environ.get("QUASITOOL_THREADS")
    if env:
        return int(env)
    if getattr(args, "threads", None):
        return int(args.threads)
    return os.cpu_count() or 1


def _header(args, argv) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
    return {"tool": "quasitool", "version": __version__, "argv": list(argv), "config": cfg,
            "seed": args.seed, "threads": _threads(args)}


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args):
    kind = args.kind
    if kind == "lattice":
        L = parse_lattice(args.lattice)
        offs = parse_offsets(args.offsets, L.n)
        A = PointSet(enumerate_in_ball(L, offs, args.R), args.R, f"{args.lattice} + F, R={args.R:g}")
        res = A.to_json()
        res["density"] = len(offs) / L.det_float
        return res
    if kind == "modelset":
        if args.scheme.endswith(".json"):
            obj = load_payload(args.scheme)
            scheme = CutAndProjectScheme.from_json(obj)
            window = Window.from_json(obj["window"])
        else:
            scheme, window = scheme_preset(args.scheme)
        if args.window:
            lo, hi = args.window.split(",")
            window = Window.interval(parse_exact(lo), parse_exact(hi))
        A = generate(scheme, window, args.R)
        res = A.to_json()
        res["density"] = predicted_density(scheme, window)
        return res
    if kind == "preset":
        if args.name == "fib":
            scheme, window = scheme_preset("fib")
            A = generate(scheme, window, args.R)
            res = A.to_json()
            res["density"] = predicted_density(scheme, window)
            if args.R >= 50:
                rep = densities(A, [0.4 * args.R])
                res["density_estimate"] = rep.d_sharp[-1]
            return res
        if args.name == "altsign":
            return altsign(args.R, args.dim).to_json()
        raise UsageError(f"unknown preset {args.name!r} (choose fib or altsign)")
    if kind == "synth":
        d = CosetDecomposition.from_json(load_payload(args.input))
        return synthesize(d, args.R).to_json()
    raise UsageError(f"unknown gen kind {kind!r}")


def cmd_analyze(args):
    A = load_pointset(args.input)
    if args.what == "densities":
        radii = [float(r) for r in args.radii.split(",")] if args.radii else None
        if radii is None:
            top = 0.4 * A.R_trunc
            radii = [top / 8, top / 4, top / 2, top]
        rep = densities(A, radii)
        if args.csv:
            rep.write_csv(args.csv)
        out = rep.to_json()
        ordered = all(a <= b <= c for a, b, c in zip(rep.d_minus, rep.d_sharp, rep.d_plus))
        out["ordered"] = ordered
        if not ordered:
            raise ValidationFailure("density ordering violated", out)
        return out
    if args.what == "meyer":
        rep = meyer_witness(A, args.budget)
        out = rep.to_json()
        if not rep.success:
            raise ValidationFailure(rep.reason or "no Meyer witness", out)
        return out
    if args.what == "delone":
        cov = covering_radius(A)
        out = {"min_gap": min_gap(A), "covering_radius": cov.radius, "pitch": cov.pitch,
               "probe_radius": cov.probe_radius, "relatively_dense": cov.relatively_dense,
               "delone": cov.relatively_dense}
        if not cov.relatively_dense:
            raise ValidationFailure("not relatively dense on the probed region", out)
        return out
    raise UsageError(f"unknown analysis {args.what!r}")


def cmd_diffract(args):
    mu = load_measure(args.input)
    grid = parse_grid(args.grid) if args.grid else [(-3.0, 3.0, 1201)] * mu.dim
    scan = diffraction_scan(mu, grid, args.taper, args.threshold)
    if args.csv:
        scan.write_csv(args.csv)
    return scan.to_json()


def cmd_poisson(args):
    L = parse_lattice(args.lattice)
    f = parse_test_function(args.f, L.n)
    shift = parse_vector(args.shift, L.n)
    mod = parse_vector(args.modulation, L.n)
    try:
        rep = poisson_verify(L, f, shift, mod, args.R, args.tol)
    except TailTooLarge as exc:
        raise ValidationFailure(str(exc))
    out = rep.to_json()
    out["passed"] = rep.abs_error < args.tol
    if not out["passed"]:
        raise ValidationFailure(f"|lhs - rhs| = {rep.abs_error:.3g} >= {args.tol:g}", out)
    return out


def _real(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return float(parse_exact(text))


def cmd_gapcert(args):
    pts = [_real(x) for x in args.points.split(",")] if args.points else []
    try:
        cert = gap_certificate(pts, args.R, args.a, args.delta, enforce=not args.no_enforce)
    except InadmissibleGapInstance as exc:
        raise ValidationFailure(str(exc))
    out = cert.to_json()
    r = cert.report
    ok = (r["phi0_exact"] and r["max_abs_on_points"] < 1e-12 and r["P_bound_ok"]
          and (not cert.admissible or (r["spectral_mass_outside"] < 1e-8 and r["sup_outside_R"] <= 1)))
    out["passed"] = bool(ok)
    if not ok:
        raise ValidationFailure("certificate verification failed", out)
    return out


def cmd_autocorr(args):
    mu = load_measure(args.input)
    h = parse_vector(args.h, mu.dim)
    try:
        muh = autocorrelation_measure(mu, h)
    except ValueError as exc:
        raise ValidationFailure(str(exc))
    out = muh.to_json()
    out["validation"] = validate(muh).to_json()
    return out


def cmd_decompose(args):
    mu = load_measure(args.input)
    L = parse_lattice(args.lattice)
    F = parse_offsets(args.offsets, L.n)
    try:
        d = recover_polynomials(mu, L, F, K=args.K, eps=args.eps)
    except (RecoveryFailed, CosetSplitError) as exc:
        payload = {"error": str(exc)}
        if isinstance(exc, RecoveryFailed):
            payload["residual"] = exc.residual
        raise ValidationFailure(str(exc), payload)
    out = d.to_json()
    out["residuals"] = d.residuals
    if args.expect:
        ref = CosetDecomposition.from_json(load_payload(args.expect)).canonical()
        err = 0.0
        for (t1, P), (t2, Q) in zip(ref.parts, d.parts):
            if t1 != t2:
                raise ValidationFailure("offsets differ from the expected decomposition", out)
            for w in set(P.terms) | set(Q.terms):
                err = max(err, abs(P.terms.get(w, 0) - Q.terms.get(w, 0)))
        out["max_coefficient_error"] = err
        if err >= 1e-9:
            raise ValidationFailure(f"coefficient error {err:.3g}", out)
    return out


def cmd_verify(args):
    only = args.only.split(",") if args.only else None
    results = run_checks(args.seed, only)
    out = {"checks": results, "passed": all(r["passed"] for r in results)}
    if not out["passed"]:
        raise ValidationFailure("invariant checks failed", out)
    return out


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quasitool", description="Crystalline measures: generation, analysis, "
                                              "Fourier checks and coset decompositions.")
    p.add_argument("--version", action="version", version=f"quasitool {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-o", "--output", default="-", help="output JSON path (default stdout)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    common.add_argument("--threads", type=int, default=None,
                        help="thread count recorded in the header (env QUASITOOL_THREADS wins)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common],
                       help="generate point sets and measures",
                       description="Generate lattice cosets L + F, cut-and-project model sets "
                                   "{p1(g) : p2(g) in window}, presets (Fibonacci chain, alternating "
                                   "signs on Z x 0) or measures synthesized from a coset decomposition.")
    g.add_argument("kind", choices=["lattice", "modelset", "preset", "synth"])
    g.add_argument("name", nargs="?", help="preset name: fib | altsign")
    g.add_argument("--R", type=float, default=50.0, help="truncation radius")
    g.add_argument("--lattice", default="Z", help='"Z", "Z2", "Zn:3", "diag:2,3", "fib" or JSON')
    g.add_argument("--offsets", help='"0,sqrt2" or "(sqrt2,0);(0,sqrt3)"')
    g.add_argument("--scheme", default="fib", help='"fib", "z3", "lattice:<name>" or scheme JSON')
    g.add_argument("--window", help="interval window lo,hi for one-dimensional internal space")
    g.add_argument("--dim", type=int, default=2, help="ambient dimension of the altsign preset")
    g.add_argument("--input", help="decomposition JSON for synth")
    g.set_defaults(func=cmd_gen)

    a = sub.add_parser("analyze", parents=[common], help="densities, Meyer and Delone checks",
                       description="Finite-window analysis: lower/upper uniform and centred densities, "
                                   "a Meyer witness F with A - A inside A + F, and the uniform "
                                   "discreteness / relative denseness (Delone) check.")
    a.add_argument("what", choices=["densities", "meyer", "delone"])
    a.add_argument("--input", required=True)
    a.add_argument("--radii", help="comma-separated window radii")
    a.add_argument("--csv", help="write the density ladder as CSV")
    a.add_argument("--budget", type=int, default=16, help="largest accepted witness size")
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("diffract", parents=[common], help="tapered diffraction scan",
                       description="Scan the Gaussian-tapered Fourier transform of a measure on a grid "
                                   "and extract its spectral peaks (the atoms of the transform).")
    d.add_argument("--input", required=True)
    d.add_argument("--grid", help='"lo,hi,count" per axis, axes separated by ";"')
    d.add_argument("--taper", type=float, default=None, help="taper width (default R_trunc/6)")
    d.add_argument("--threshold", type=float, default=5.0, help="noise floor multiple of the median")
    d.add_argument("--csv", help="write grid values as CSV")
    d.set_defaults(func=cmd_diffract)

    q = sub.add_parser("poisson", parents=[common], help="verify Poisson summation on a lattice",
                       description="Compare sum over L of f with det(L)^-1 times the sum over the dual "
                                   "lattice of f-hat (Poisson summation), with optional shift/modulation.")
    q.add_argument("--lattice", default="Z")
    q.add_argument("--f", default="gauss:1", help='"gauss:sigma[:center[:modulation]]"')
    q.add_argument("--R", type=float, default=30.0)
    q.add_argument("--shift")
    q.add_argument("--modulation")
    q.add_argument("--tol", type=float, default=1e-10)
    q.set_defaults(func=cmd_poisson)

    c = sub.add_parser("gapcert", parents=[common], help="construct a spectral-gap certificate",
                       description="Build phi(x) = P(exp(i pi x/R)) psi(x/R)^(floor(R)+1) vanishing on the "
                                   "given points with phi(0) = 1 and spectrum in (0, a), and verify it.")
    c.add_argument("--points", default="", help="comma-separated points in (-R,R) minus (-delta,delta)")
    c.add_argument("--R", type=float, required=True)
    c.add_argument("--a", type=float, required=True)
    c.add_argument("--delta", type=float, required=True)
    c.add_argument("--no-enforce", action="store_true", help="build even if the density condition fails")
    c.set_defaults(func=cmd_gapcert)

    h = sub.add_parser("autocorr", parents=[common], help="autocorrelation measure mu_h",
                       description="mu_h = sum over Lambda_h of mu(l) conj(mu(l + h)) delta_l, with "
                                   "Lambda_h = {l : l + h also in the support}.")
    h.add_argument("--input", required=True)
    h.add_argument("--h", required=True, help="difference vector, comma-separated exact entries")
    h.set_defaults(func=cmd_autocorr)

    e = sub.add_parser("decompose", parents=[common], help="recover trigonometric-polynomial weights",
                       description="Split a measure over the cosets L + theta_j and recover each weight "
                                   "function P_j as a trigonometric polynomial by a DFT.")
    e.add_argument("--input", required=True)
    e.add_argument("--lattice", default="Z")
    e.add_argument("--offsets", default="0")
    e.add_argument("--K", type=int, default=64)
    e.add_argument("--eps", type=float, default=1e-10)
    e.add_argument("--expect", help="reference decomposition JSON to compare coefficients with")
    e.set_defaults(func=cmd_decompose)

    v = sub.add_parser("verify", parents=[common], help="run the invariant self-checks",
                       description="Run structural invariants: exact ring axioms, dual lattices, "
                                   "Poisson summation, model-set density, spectral gap at the origin, "
                                   "decomposition round trip, separating vectors, refinement, gap certificate.")
    v.add_argument("--only", help="comma-separated subset of checks")
    v.set_defaults(func=cmd_verify)
    return p


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return 1
        if args.command == "gen" and args.kind == "preset" and not args.name:
            raise UsageError("gen preset needs a name (fib or altsign)")
        header = _header(args, argv)
        try:
            result = args.func(args)
            code = 0
        except ValidationFailure as exc:
            print(f"quasitool: validation failure: {exc}", file=sys.stderr)
            result = exc.payload or {"error": str(exc)}
            code = 2
        except (EnumerationCapExceeded, TailTooLarge, ValueError) as exc:
            print(f"quasitool: {type(exc).__name__}: {exc}", file=sys.stderr)
            result = {"error": str(exc)}
            code = 2
        write_json({"header": header, "result": result}, args.output)
        return code
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
