"""Cut-and-project schemes, windows and model sets."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exactnum import MP, ExactReal, ExactVector, basis, er, solve_rational
from .lattice import DEFAULT_CAP, EnumerationCapExceeded, Lattice, refine_lattice
from .pointset import PointSet, ball_volume

__all__ = [
    "Window",
    "CutAndProjectScheme",
    "GeneratedModelSet",
    "Extension",
    "generate",
    "predicted_density",
    "extend_scheme",
    "check_dense_projection",
    "fibonacci_scheme",
    "z3_scheme",
]

log = logging.getLogger(__name__)

BOUNDARY_TOL = 1e-12


def _num(x):
    """High-precision value of an exact or float bound."""
    if isinstance(x, ExactReal):
        return x.to_mpf()
    if isinstance(x, Fraction):
        return MP.mpf(x.numerator) / x.denominator
    return MP.mpf(x)


def _bound(x):
    if isinstance(x, (ExactReal, float)):
        return x
    if isinstance(x, str):
        return er(x)
    return er(Fraction(x))


@dataclass(frozen=True)
class Window:
    """Bounded window in R^m.

    ``interval`` and ``box`` are half-open products of [lo, hi); ``ball`` is
    the open ball; ``union`` is a finite union of interval/box windows.
    ``point`` is the trivial window of the m = 0 case (measure 1).
    """

    kind: str
    lo: tuple = ()
    hi: tuple = ()
    center: tuple = ()
    radius: object = None
    parts: tuple = ()

    @classmethod
    def interval(cls, lo, hi) -> Window:
        return cls("interval", (_bound(lo),), (_bound(hi),))

    @classmethod
    def box(cls, lo: Sequence, hi: Sequence) -> Window:
        return cls("box", tuple(_bound(x) for x in lo), tuple(_bound(x) for x in hi))

    @classmethod
    def ball(cls, center: Sequence, radius) -> Window:
        return cls("ball", center=tuple(_bound(x) for x in center), radius=_bound(radius))

    @classmethod
    def point(cls) -> Window:
        return cls("point")

    @classmethod
    def union(cls, parts: Sequence[Window]) -> Window:
        flat = []
        for p in parts:
            flat.extend(p.parts if p.kind == "union" else [p])
        uniq = []
        for p in flat:
            if p.kind not in ("interval", "box"):
                raise ValueError("unions are supported for interval/box windows only")
            if p not in uniq:
                uniq.append(p)
        if len(uniq) == 1:
            return uniq[0]
        return cls("union", parts=tuple(uniq))

    @property
    def m(self) -> int:
        if self.kind == "point":
            return 0
        if self.kind == "ball":
            return len(self.center)
        if self.kind == "union":
            return self.parts[0].m
        return len(self.lo)

    def measure(self) -> float:
        if self.kind == "point":
            return 1.0
        if self.kind in ("interval", "box"):
            return float(np.prod([max(float(_num(h) - _num(l)), 0.0) for l, h in zip(self.lo, self.hi)]))
        if self.kind == "ball":
            return ball_volume(float(_num(self.radius)), self.m)
        # union of boxes by coordinate compression
        m = self.m
        cuts = [sorted({float(_num(x)) for p in self.parts for x in (p.lo[i], p.hi[i])}) for i in range(m)]
        total = 0.0
        for cell in itertools.product(*[range(len(c) - 1) for c in cuts]):
            mid = [0.5 * (cuts[i][j] + cuts[i][j + 1]) for i, j in enumerate(cell)]
            if any(all(float(_num(p.lo[i])) <= mid[i] < float(_num(p.hi[i])) for i in range(m))
                   for p in self.parts):
                total += float(np.prod([cuts[i][j + 1] - cuts[i][j] for i, j in enumerate(cell)]))
        return total

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        if self.kind in ("interval", "box"):
            return (np.array([float(x) for x in self.lo]), np.array([float(x) for x in self.hi]))
        if self.kind == "ball":
            c = np.array([float(x) for x in self.center])
            r = float(self.radius)
            return c - r, c + r
        if self.kind == "union":
            boxes = [p.bbox() for p in self.parts]
            return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)
        return np.zeros(0), np.zeros(0)

    def shifted(self, v: Sequence) -> Window:
        v = [er(x) if not isinstance(x, ExactReal) else x for x in v]
        if self.kind in ("interval", "box"):
            return Window(self.kind, tuple(_add(l, s) for l, s in zip(self.lo, v)),
                          tuple(_add(h, s) for h, s in zip(self.hi, v)))
        if self.kind == "ball":
            return Window("ball", center=tuple(_add(c, s) for c, s in zip(self.center, v)),
                          radius=self.radius)
        if self.kind == "union":
            return Window.union([p.shifted(v) for p in self.parts])
        return self

    def scaled(self, q) -> Window:
        q = Fraction(q)
        f = float(q)
        sc = (lambda x: x.scale(q) if isinstance(x, ExactReal) else x * f)
        if self.kind in ("interval", "box"):
            return Window(self.kind, tuple(sc(x) for x in self.lo), tuple(sc(x) for x in self.hi))
        if self.kind == "ball":
            return Window("ball", center=tuple(sc(x) for x in self.center), radius=sc(self.radius))
        if self.kind == "union":
            return Window.union([p.scaled(q) for p in self.parts])
        return self

    def contains_float(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Membership of rows of y and a mask of rows within tolerance of the boundary."""
        y = np.atleast_2d(y)
        if self.kind == "point":
            return np.ones(len(y), bool), np.zeros(len(y), bool)
        if self.kind in ("interval", "box"):
            lo, hi = self.bbox()
            inside = np.all((y >= lo) & (y < hi), axis=1)
            near = np.any((np.abs(y - lo) < 1e-9) | (np.abs(y - hi) < 1e-9), axis=1)
            return inside, near
        if self.kind == "ball":
            c = np.array([float(x) for x in self.center])
            r = float(self.radius)
            d = np.linalg.norm(y - c, axis=1)
            return d < r, np.abs(d - r) < 1e-9
        ins, nears = zip(*(p.contains_float(y) for p in self.parts))
        return np.any(ins, axis=0), np.any(nears, axis=0)

    def contains_exact(self, y: Sequence[ExactReal]) -> tuple[bool, bool]:
        """Exact (or 128-bit) membership and whether y lies on the boundary."""
        if self.kind == "point":
            return True, False
        if self.kind in ("interval", "box"):
            inside, hit = True, False
            for yi, l, h in zip(y, self.lo, self.hi):
                sl = _sign_diff(yi, l)
                sh = _sign_diff(yi, h)
                hit = hit or sl == 0 or sh == 0
                inside = inside and sl >= 0 and sh < 0
            return inside, hit
        if self.kind == "ball":
            d2 = MP.fsum((_num(a) - _num(c)) ** 2 for a, c in zip(y, self.center))
            r2 = _num(self.radius) ** 2
            return bool(d2 < r2), bool(abs(d2 - r2) < MP.mpf(10) ** -30)
        results = [p.contains_exact(y) for p in self.parts]
        return any(r[0] for r in results), any(r[1] for r in results)

    def to_json(self) -> dict:
        enc = (lambda x: x.to_json() if isinstance(x, ExactReal) else float(x))
        if self.kind == "union":
            return {"kind": "union", "parts": [p.to_json() for p in self.parts]}
        if self.kind == "ball":
            return {"kind": "ball", "center": [enc(x) for x in self.center], "radius": enc(self.radius)}
        if self.kind == "point":
            return {"kind": "point"}
        return {"kind": self.kind, "lo": [enc(x) for x in self.lo], "hi": [enc(x) for x in self.hi]}

    @classmethod
    def from_json(cls, obj: dict) -> Window:
        dec = (lambda x: x if isinstance(x, float) else ExactReal.from_json(x))
        k = obj["kind"]
        if k == "union":
            return cls.union([cls.from_json(p) for p in obj["parts"]])
        if k == "ball":
            return cls("ball", center=tuple(dec(x) for x in obj["center"]), radius=dec(obj["radius"]))
        if k == "point":
            return cls.point()
        return cls(k, tuple(dec(x) for x in obj["lo"]), tuple(dec(x) for x in obj["hi"]))


def _add(a, b):
    if isinstance(a, ExactReal):
        return a + b
    return a + float(b)


def _sign_diff(a: ExactReal, b) -> int:
    if isinstance(b, ExactReal):
        return (a - b).sign()
    d = a.to_mpf() - MP.mpf(b)
    return 0 if d == 0 else (1 if d > 0 else -1)


@dataclass(frozen=True)
class CutAndProjectScheme:
    """Lattice Gamma in R^{n+m}; p1 keeps the first n coordinates, p2 the last m."""

    gamma: Lattice
    n: int
    m: int
    name: str = ""

    def __post_init__(self):
        if self.gamma.n != self.n + self.m:
            raise ValueError(f"lattice dimension {self.gamma.n} != n + m = {self.n + self.m}")

    def p1(self, v: ExactVector) -> ExactVector:
        return ExactVector(v.entries[: self.n])

    def p2(self, v: ExactVector) -> list[ExactReal]:
        return list(v.entries[self.n:])

    def to_json(self) -> dict:
        return {"gamma": self.gamma.to_json(), "n": self.n, "m": self.m}

    @classmethod
    def from_json(cls, obj: dict) -> CutAndProjectScheme:
        return cls(Lattice.from_json(obj["gamma"]), int(obj["n"]), int(obj["m"]))


def fibonacci_scheme() -> tuple[CutAndProjectScheme, Window]:
    """Gamma = {(a + b*tau, a + b*(1 - tau))} with window [0, 1)."""
    return CutAndProjectScheme(Lattice.fibonacci(), 1, 1, "fib"), Window.interval(0, 1)


def z3_scheme() -> tuple[CutAndProjectScheme, Window]:
    """A Z^3 -> R^2 scheme over Q(sqrt2, sqrt3) with interval window [0, 1)."""
    s2, s3 = er("sqrt2"), er("sqrt3")
    b = basis("sqrt2", "sqrt3", "sqrt6")
    rows = [[1, 0, s2], [0, 1, s3], [1, s2, 0]]
    gamma = Lattice([[er(x, b) for x in r] for r in rows], name="z3")
    return CutAndProjectScheme(gamma, 2, 1, "z3"), Window.interval(0, 1)


def lattice_scheme(L: Lattice) -> tuple[CutAndProjectScheme, Window]:
    return CutAndProjectScheme(L, L.n, 0, L.name or "lattice"), Window.point()


@dataclass
class GeneratedModelSet:
    points: PointSet
    gamma_coords: np.ndarray
    boundary_hits: int
    p1_injective: bool


def _cylinder_box(scheme: CutAndProjectScheme, window: Window, R: float):
    inv = scheme.gamma.inv_float
    ylo = np.concatenate([np.full(scheme.n, -R), window.bbox()[0]])
    yhi = np.concatenate([np.full(scheme.n, R), window.bbox()[1]])
    lo = np.sum(np.minimum(inv * ylo, inv * yhi), axis=1)
    hi = np.sum(np.maximum(inv * ylo, inv * yhi), axis=1)
    return np.floor(lo - 1e-9).astype(np.int64), np.ceil(hi + 1e-9).astype(np.int64)


def generate(scheme: CutAndProjectScheme, window: Window, R: float,
             cap: int = DEFAULT_CAP, with_coords: bool = False):
    """Model set points p1(gamma) with |p1(gamma)| <= R and p2(gamma) in the window.

    Returns a PointSet, or a GeneratedModelSet with lattice coordinates and
    boundary diagnostics when ``with_coords`` is set.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    if window.m != scheme.m:
        raise ValueError(f"window dimension {window.m} != m = {scheme.m}")
    lo, hi = _cylinder_box(scheme, window, R)
    box = int(np.prod(hi - lo + 1))
    if box > 50 * cap:
        raise EnumerationCapExceeded(f"cylinder search box {box} exceeds cap {cap}")
    grids = np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(lo, hi)], indexing="ij")
    k = np.stack([g.ravel() for g in grids], axis=1)
    y = k @ scheme.gamma.float_matrix.T
    r = np.linalg.norm(y[:, : scheme.n], axis=1)
    in_r = r <= R * (1 + 1e-12)
    k, y, r = k[in_r], y[in_r], r[in_r]
    inside, near = window.contains_float(y[:, scheme.n:])
    hits = 0
    keep = inside.copy()
    for i in np.flatnonzero(near):
        g = scheme.gamma.point(k[i])
        ok, on_boundary = window.contains_exact(scheme.p2(g))
        keep[i] = ok
        if on_boundary:
            hits += 1
    if hits:
        log.info("%d lattice points hit the window boundary", hits)
    k = k[keep]
    if len(k) > cap:
        raise EnumerationCapExceeded(f"model set in B_{R} exceeds cap {cap} points")
    order = np.lexsort(tuple(k[:, i] for i in reversed(range(k.shape[1])))) if len(k) else []
    k = k[order] if len(k) else k
    pts = [scheme.p1(scheme.gamma.point(kk)) for kk in k]
    ps = PointSet(pts, R, f"model set {scheme.name or 'scheme'} R={R:g}", check=False)
    if not with_coords:
        return ps
    return GeneratedModelSet(ps, k, hits, len(ps) == len(pts))


def predicted_density(scheme: CutAndProjectScheme, window: Window) -> float:
    """mes(window) / det(Gamma)."""
    return window.measure() / scheme.gamma.det_float


def check_dense_projection(scheme: CutAndProjectScheme, window: Window, eps: float = 0.01,
                           min_hits: int = 1) -> dict:
    """Finite check that p2(Gamma) meets every eps-cell of the window's bounding box.

    Only cells lying inside the window are required to be hit.
    """
    if scheme.m == 0:
        return {"checked": True, "all_cells_hit": True, "cells": 0, "R": 0.0}
    lo, hi = window.bbox()
    shape = np.maximum(np.ceil((hi - lo) / eps).astype(int), 1)
    ncell = int(np.prod(shape))
    # enough lattice points to expect ~20 per cell
    target = 20 * ncell
    dens = predicted_density(scheme, window)
    R = (target / max(dens, 1e-12) / ball_volume(1.0, scheme.n)) ** (1 / scheme.n)
    g = generate(scheme, window, R, cap=max(DEFAULT_CAP, 4 * target), with_coords=True)
    y = g.gamma_coords @ scheme.gamma.float_matrix.T
    cell = np.floor((y[:, scheme.n:] - lo) / eps).astype(int)
    hit = np.zeros(shape, bool)
    ok = np.all((cell >= 0) & (cell < shape), axis=1)
    hit[tuple(cell[ok].T)] = True
    centers = lo + (np.stack(np.meshgrid(*[np.arange(s) for s in shape], indexing="ij"), -1)
                    .reshape(-1, len(shape)) + 0.5) * eps
    need, _ = window.contains_float(centers)
    missed = int(np.sum(need & ~hit.reshape(-1)))
    return {"checked": True, "all_cells_hit": missed == 0, "cells": int(need.sum()),
            "missed": missed, "R": float(R)}


@dataclass
class Extension:
    """Output of extend_scheme with the witness data of the construction."""

    scheme: CutAndProjectScheme
    window: Window
    offsets: list[ExactVector]
    q: int
    gammas: list[tuple[int, ...]] = field(default_factory=list)
    u: list[ExactVector] = field(default_factory=list)
    w: list[ExactVector] = field(default_factory=list)
    mapping: list[int] = field(default_factory=list)


def _rational_coords(v: Sequence[ExactReal], b) -> list[Fraction]:
    out = []
    for x in v:
        out.extend(x.in_basis(b).coeffs)
    return out


def _from_rational_coords(c: Sequence[Fraction], n: int, b) -> ExactVector:
    d = b.dim
    return ExactVector(ExactReal(b, c[i * d:(i + 1) * d]) for i in range(n))


def _rank(vectors: list[list[Fraction]]) -> int:
    rows = [list(v) for v in vectors]
    rank = 0
    ncol = len(rows[0]) if rows else 0
    for col in range(ncol):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank][col]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                f = rows[r][col] / p
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def extend_scheme(scheme: CutAndProjectScheme, window: Window, F: Sequence) -> Extension:
    """Enlarge (Gamma, window, F) so that p1(Gamma') ∩ Z[F'] = {0}.

    Each offset is split as theta_j = u_j + w_j with u_j in Q[p1(Gamma)] and
    w_j in a fixed complement of that space (spanned by standard rational
    coordinate directions).  With u_j = p1(gamma_j / q):
    Gamma' = Gamma / q, window' = union of (window + p2(gamma_j / q)), F' = {w_j}.
    For m = 0 this is exactly refine_lattice.
    """
    thetas = [t if isinstance(t, ExactVector) else ExactVector(t) for t in F]
    if not thetas:
        raise ValueError("F must be non-empty")
    if scheme.m == 0:
        ref = refine_lattice(scheme.gamma, thetas)
        new = CutAndProjectScheme(ref.lattice, scheme.n, 0, scheme.name)
        u = ref.rational_parts
        w = [ref.offsets[i] for _, i in ref.mapping]
        return Extension(new, window, ref.offsets, ref.q, [k for k, _ in ref.mapping], u, w,
                         [i for _, i in ref.mapping])
    n, N = scheme.n, scheme.gamma.n
    tags = set(scheme.gamma.exact_basis.tags)
    for t in thetas:
        tags.update(t.basis.tags)
    b = basis(*tags)
    cols = scheme.gamma.columns()
    G = [_rational_coords(scheme.p1(c).entries, b) for c in cols]
    dim = n * b.dim
    if _rank(G) != N:
        raise ValueError("p1 is not injective on Gamma (generators are Q-dependent after projection)")
    chosen: list[int] = []
    current = [list(g) for g in G]
    for i in range(dim):
        e = [Fraction(0)] * dim
        e[i] = Fraction(1)
        if _rank(current + [e]) > len(current):
            current.append(e)
            chosen.append(i)
    # columns of the square system: G then chosen unit vectors
    mat = [[current[j][r] for j in range(dim)] for r in range(dim)]
    cs, us, ws = [], [], []
    q = 1
    for t in thetas:
        if t.dim != n:
            raise ValueError("offset dimension does not match n")
        sol = solve_rational(mat, _rational_coords(t.entries, b))
        c = sol[:N]
        for x in c:
            q = q * x.denominator // math.gcd(q, x.denominator)
        wz = [Fraction(0)] * dim
        for z, i in zip(sol[N:], chosen):
            wz[i] = z
        w = _from_rational_coords(wz, n, b)
        cs.append(c)
        ws.append(w)
        us.append(t - w)
    gammas = [tuple(int(x * q) for x in c) for c in cs]
    new_gamma = scheme.gamma.scaled(Fraction(1, q))
    shifts = []
    for g in gammas:
        pt = scheme.gamma.point(g).scale(Fraction(1, q))
        shifts.append(scheme.p2(pt))
    new_window = Window.union([window.shifted(s) for s in shifts]) if window.kind in (
        "interval", "box", "union") else _single_shift(window, shifts)
    offsets, index, mapping = [], {}, []
    for w in ws:
        if w not in index:
            index[w] = len(offsets)
            offsets.append(w)
        mapping.append(index[w])
    new = CutAndProjectScheme(new_gamma, scheme.n, scheme.m, scheme.name)
    return Extension(new, new_window, offsets, q, gammas, us, ws, mapping)


def _single_shift(window: Window, shifts):
    if all(s == shifts[0] for s in shifts):
        return window.shifted(shifts[0])
    raise ValueError("unions of ball windows are not supported")
