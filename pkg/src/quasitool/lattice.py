"""Full-rank lattices with exact entries: determinant, dual, enumeration, cosets."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .exactnum import (
    MP,
    ExactReal,
    ExactVector,
    NoMultiplicationTable,
    basis,
    er,
)

__all__ = [
    "DEFAULT_CAP",
    "EnumerationCapExceeded",
    "Lattice",
    "CosetSystem",
    "Refinement",
    "lattice_det",
    "dual_lattice",
    "enumerate_in_ball",
    "canonical_offset",
    "enumerate_arrays",
    "refine_lattice",
    "parse_lattice",
]

DEFAULT_CAP = 1_000_000
MEMBERSHIP_TOL = 1e-9


class EnumerationCapExceeded(RuntimeError):
    pass


def _exact_det(rows: list[list[ExactReal]]) -> ExactReal:
    n = len(rows)
    total = ExactReal.rational(0)
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = ExactReal.rational(-1 if inversions % 2 else 1)
        for i, p in enumerate(perm):
            term = term * rows[i][p]
            if term.is_zero():
                break
        total = total + term
    return total


def _exact_inverse(rows: list[list[ExactReal]]) -> list[list[ExactReal]]:
    n = len(rows)
    zero, one = ExactReal.rational(0), ExactReal.rational(1)
    a = [list(r) + [one if i == j else zero for j in range(n)] for i, r in enumerate(rows)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not a[r][col].is_zero()), None)
        if piv is None:
            raise ZeroDivisionError("singular basis matrix")
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col].inverse()
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


class Lattice:
    """Image of Z^n under an invertible matrix whose columns are the generators.

    ``rows[i][j]`` is coordinate ``i`` of generator ``j``.  Entries are
    ExactReals; when the entries cannot be multiplied exactly (no table) the
    determinant and inverse fall back to 128-bit numerics and ``exact`` is
    False for those derived quantities.  A lattice may also be purely numeric
    (``rows is None``), which only happens for duals of such lattices.
    """

    def __init__(self, rows: Sequence[Sequence] | None, *, numeric=None, name: str | None = None):
        self.name = name
        if rows is not None:
            ents = [[er(x) for x in row] for row in rows]
            n = len(ents)
            if n == 0 or any(len(r) != n for r in ents):
                raise ValueError("basis matrix must be square and non-empty")
            b = basis(*(t for r in ents for x in r for t in x.basis.tags))
            self.rows = tuple(tuple(x.in_basis(b) for x in r) for r in ents)
            self.mp_matrix = MP.matrix([[x.to_mpf() for x in r] for r in self.rows])
        else:
            self.rows = None
            self.mp_matrix = MP.matrix(numeric)
            n = self.mp_matrix.rows
        self.n = n
        self.float_matrix = np.array(
            [[float(self.mp_matrix[i, j]) for j in range(n)] for i in range(n)]
        )
        self._inv_exact = None
        self._inv_tried = False
        self._det = None
        det = self.det_mpf
        if self.exact_det is not None:
            if self.exact_det.is_zero():
                raise ValueError("basis matrix is singular")
        elif abs(det) <= 1e-9:
            raise ValueError(f"basis matrix numerically singular (|det|={float(abs(det)):.3g})")
        self.inv_float = np.linalg.inv(self.float_matrix)

    # -- construction helpers ----------------------------------------------
    @classmethod
    def integer(cls, n: int = 1) -> Lattice:
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)], name=f"Z{n}")

    @classmethod
    def diagonal(cls, *entries) -> Lattice:
        n = len(entries)
        return cls([[entries[i] if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def fibonacci(cls) -> Lattice:
        """Lattice {(a + b*tau, a + b*(1 - tau))} used by the Fibonacci scheme."""
        tau = er("tau")
        return cls([[1, tau], [1, 1 - tau]], name="fib")

    @property
    def is_exact(self) -> bool:
        return self.rows is not None

    @property
    def exact_basis(self):
        return self.rows[0][0].basis if self.rows else None

    def columns(self) -> list[ExactVector]:
        return [ExactVector(self.rows[i][j] for i in range(self.n)) for j in range(self.n)]

    # -- determinant / inverse ---------------------------------------------
    @property
    def exact_det(self) -> ExactReal | None:
        if self._det is None:
            self._det = False
            if self.rows is not None:
                try:
                    self._det = _exact_det([list(r) for r in self.rows])
                except NoMultiplicationTable:
                    self._det = False
        return self._det or None

    @property
    def det_mpf(self):
        d = self.exact_det
        if d is not None:
            return abs(d.to_mpf())
        return abs(MP.det(self.mp_matrix))

    @property
    def det_float(self) -> float:
        return float(self.det_mpf)

    @property
    def exact_inverse(self) -> list[list[ExactReal]] | None:
        if not self._inv_tried:
            self._inv_tried = True
            if self.rows is not None:
                try:
                    self._inv_exact = _exact_inverse([list(r) for r in self.rows])
                except NoMultiplicationTable:
                    self._inv_exact = None
        return self._inv_exact

    # -- points and coordinates --------------------------------------------
    def point(self, k: Sequence[int]) -> ExactVector:
        if self.rows is None:
            raise NoMultiplicationTable("numeric lattice has no exact points")
        return ExactVector(
            sum((self.rows[i][j].scale(int(k[j])) for j in range(self.n) if k[j]),
                ExactReal.rational(0, self.exact_basis))
            for i in range(self.n)
        )

    def coords(self, x: ExactVector) -> list[ExactReal]:
        """Exact lattice coordinates B^{-1} x (raises without an exact inverse)."""
        inv = self.exact_inverse
        if inv is None:
            raise NoMultiplicationTable(f"no exact inverse for lattice {self.name or ''}")
        if x.dim != self.n:
            raise ValueError(f"dimension mismatch: {x.dim} vs {self.n}")
        out = []
        for i in range(self.n):
            acc = ExactReal.rational(0)
            for j in range(self.n):
                acc = acc + inv[i][j] * x[j]
            out.append(acc)
        return out

    def contains(self, x: ExactVector) -> bool:
        inv = self.exact_inverse
        if inv is not None:
            return all(c.is_integer() for c in self.coords(x))
        c = self.inv_float @ x.to_float()
        return bool(np.all(np.abs(c - np.round(c)) < MEMBERSHIP_TOL))

    def scaled(self, q) -> Lattice:
        q = Fraction(q)
        if self.rows is None:
            return Lattice(None, numeric=self.mp_matrix * (MP.mpf(q.numerator) / q.denominator))
        return Lattice([[x.scale(q) for x in r] for r in self.rows])

    def __eq__(self, other):
        """Equality of lattices as sets (same Z-span)."""
        if not isinstance(other, Lattice) or other.n != self.n:
            return NotImplemented
        if self.is_exact and other.is_exact and self.exact_inverse is not None \
                and other.exact_inverse is not None:
            return all(self.contains(c) for c in other.columns()) and \
                all(other.contains(c) for c in self.columns())
        u = self.inv_float @ other.float_matrix
        v = other.inv_float @ self.float_matrix
        return bool(np.all(np.abs(u - np.round(u)) < MEMBERSHIP_TOL)
                    and np.all(np.abs(v - np.round(v)) < MEMBERSHIP_TOL))

    __hash__ = None

    def same_basis(self, other: Lattice) -> bool:
        return self.rows is not None and self.rows == other.rows

    def __repr__(self):
        if self.rows is None:
            return f"Lattice(numeric {self.float_matrix.tolist()})"
        return "Lattice([" + ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in self.rows) + "])"

    # -- serialization ------------------------------------------------------
    def to_json(self) -> dict:
        if self.rows is None:
            return {"numeric": [[MP.nstr(self.mp_matrix[i, j], 40) for j in range(self.n)]
                                for i in range(self.n)]}
        return {"basis": [[x.to_json() for x in r] for r in self.rows]}

    @classmethod
    def from_json(cls, obj: dict) -> Lattice:
        if "numeric" in obj:
            return cls(None, numeric=[[MP.mpf(x) for x in r] for r in obj["numeric"]])
        return cls([[ExactReal.from_json(x) for x in r] for r in obj["basis"]])


def lattice_det(L: Lattice):
    """|det| of the basis matrix: an ExactReal when exact, else a 128-bit mpf."""
    d = L.exact_det
    if d is not None:
        return abs(d)
    return L.det_mpf


def dual_lattice(L: Lattice) -> Lattice:
    """Dual lattice with basis matrix B^{-T}; numeric if no exact inverse exists."""
    inv = L.exact_inverse
    if inv is not None:
        return Lattice([[inv[j][i] for j in range(L.n)] for i in range(L.n)])
    inv_mp = L.mp_matrix ** -1
    return Lattice(None, numeric=inv_mp.T)


@dataclass(frozen=True)
class CosetSystem:
    """Finite union of translates ``L + theta_j``; offsets distinct mod L."""

    lattice: Lattice
    offsets: tuple[ExactVector, ...]

    def __post_init__(self):
        offs = tuple(o if isinstance(o, ExactVector) else ExactVector(o) for o in self.offsets)
        object.__setattr__(self, "offsets", offs)
        for o in offs:
            if o.dim != self.lattice.n:
                raise ValueError("offset dimension does not match lattice")
        for a, b in itertools.combinations(range(len(offs)), 2):
            if self.lattice.contains(offs[a] - offs[b]):
                raise ValueError(f"offsets {a} and {b} differ by a lattice vector")

    @classmethod
    def origin(cls, L: Lattice) -> CosetSystem:
        return cls(L, (ExactVector([0] * L.n),))


def canonical_offset(L: Lattice, theta: ExactVector) -> tuple[ExactVector, tuple[int, ...]]:
    """Reduce theta mod L so rational parts of its L-coordinates lie in [0, 1).

    Returns the representative and the integer shift k with theta = rep + B k.
    """
    c = L.coords(theta)
    k = tuple(math.floor(x.rational_part) for x in c)
    if not any(k):
        return theta, k
    return theta - L.point(k), k


def enumerate_arrays(L: Lattice, offsets_float: np.ndarray, R: float, cap: int = DEFAULT_CAP):
    """Integer coordinates, coset indices and float points of (L + offsets) in the closed ball B_R.

    Sorted lexicographically by integer coordinates, then coset index.
    """
    if R <= 0:
        raise ValueError("R must be positive")
    offsets_float = np.atleast_2d(np.asarray(offsets_float, dtype=float))
    n = L.n
    B, inv = L.float_matrix, L.inv_float
    row_norms = np.linalg.norm(inv, axis=1)
    ks, idx, pts = [], [], []
    total = 0
    for j, theta in enumerate(offsets_float):
        c = inv @ theta
        lo = np.ceil(-c - R * row_norms - 1e-9).astype(np.int64)
        hi = np.floor(-c + R * row_norms + 1e-9).astype(np.int64)
        sizes = hi - lo + 1
        box = int(np.prod(np.maximum(sizes, 0)))
        if box > 50 * cap:
            raise EnumerationCapExceeded(
                f"search box of {box} candidates for R={R} exceeds cap {cap}")
        if box == 0:
            continue
        grids = np.meshgrid(*[np.arange(a, b + 1) for a, b in zip(lo, hi)], indexing="ij")
        k = np.stack([g.ravel() for g in grids], axis=1)
        x = k @ B.T + theta
        r = np.linalg.norm(x, axis=1)
        keep = r <= R * (1 + 1e-12)
        total += int(keep.sum())
        if total > cap:
            raise EnumerationCapExceeded(f"enumeration in B_{R} exceeds cap {cap} points")
        ks.append(k[keep])
        idx.append(np.full(int(keep.sum()), j))
        pts.append(x[keep])
    if not ks:
        return np.zeros((0, n), np.int64), np.zeros(0, np.int64), np.zeros((0, n))
    ks, idx, pts = np.concatenate(ks), np.concatenate(idx), np.concatenate(pts)
    order = np.lexsort(tuple([idx] + [ks[:, i] for i in reversed(range(n))]))
    return ks[order], idx[order], pts[order]


def _near_boundary_exact_norm_ok(p: ExactVector, R) -> bool:
    r2 = MP.fsum(e.to_mpf() ** 2 for e in p)
    return r2 <= MP.mpf(R) ** 2


def enumerate_in_ball(L: Lattice, offsets: CosetSystem | Sequence[ExactVector] | None,
                      R: float, cap: int = DEFAULT_CAP) -> list[ExactVector]:
    """Exact points of the union of cosets ``L + theta_j`` with norm <= R."""
    if offsets is None:
        thetas = [ExactVector([0] * L.n)]
    elif isinstance(offsets, CosetSystem):
        thetas = list(offsets.offsets)
    else:
        thetas = [o if isinstance(o, ExactVector) else ExactVector(o) for o in offsets]
    off_f = np.array([t.to_float() for t in thetas]).reshape(len(thetas), L.n)
    ks, idx, pts = enumerate_arrays(L, off_f, R * (1 + 1e-9), cap)
    out, seen = [], set()
    for k, j, x in zip(ks, idx, pts):
        p = L.point(k) + thetas[j]
        if abs(np.linalg.norm(x) - R) < 1e-8 * max(R, 1.0) and not _near_boundary_exact_norm_ok(p, R):
            continue
        if p in seen:
            continue
        seen.add(p)
        out.append(p)
    return out


@dataclass
class Refinement:
    """Result of refining (L, F) to (L', F') with L' ∩ Z[F'] = {0}."""

    lattice: Lattice
    offsets: list[ExactVector]
    q: int
    # j -> (integer coordinates of u_j in L', index of w_j in offsets)
    mapping: list[tuple[tuple[int, ...], int]] = field(default_factory=list)
    rational_parts: list[ExactVector] = field(default_factory=list)


def refine_lattice(L: Lattice, F: Sequence[ExactVector]) -> Refinement:
    """Absorb the rational parts of the offsets into a finer lattice.

    Each offset is written in exact L-coordinates ``c = B^{-1} theta`` and split
    into the coefficient on the generator 1 (rational) and the rest
    (irrational).  The rational parts live in ``L' = (1/q) L`` with ``q`` the
    lcm of their denominators; the irrational parts, mapped back by ``B``,
    form ``F'``.
    """
    if L.exact_inverse is None:
        raise NoMultiplicationTable("refine_lattice needs exact lattice coordinates")
    thetas = [t if isinstance(t, ExactVector) else ExactVector(t) for t in F]
    splits = []
    q = 1
    for t in thetas:
        c = L.coords(t)
        rat = [x.rational_part for x in c]
        irr = [x.irrational_part() for x in c]
        for r in rat:
            q = q * r.denominator // math.gcd(q, r.denominator)
        splits.append((rat, irr))
    L2 = L.scaled(Fraction(1, q))
    offsets: list[ExactVector] = []
    index: dict[ExactVector, int] = {}
    mapping, rational_parts = [], []
    for rat, irr in splits:
        w = ExactVector(
            sum((L.rows[i][j] * irr[j] for j in range(L.n)), ExactReal.rational(0))
            for i in range(L.n)
        )
        if w not in index:
            index[w] = len(offsets)
            offsets.append(w)
        k = tuple(int(r * q) for r in rat)
        mapping.append((k, index[w]))
        rational_parts.append(L2.point(k))
    return Refinement(L2, offsets, q, mapping, rational_parts)


def parse_lattice(text: str) -> Lattice:
    """Lattice from CLI shorthand ("Z", "Z2", "Zn:3", "diag:2,3", "fib") or a JSON path."""
    s = text.strip()
    if s in ("Z", "Zn"):
        return Lattice.integer(1)
    if s.startswith("Zn:"):
        return Lattice.integer(int(s[3:]))
    if s.startswith("Z") and s[1:].isdigit():
        return Lattice.integer(int(s[1:]))
    if s.startswith("diag:"):
        return Lattice.diagonal(*[er(x) for x in s[5:].split(",")])
    if s == "fib":
        return Lattice.fibonacci()
    p = Path(s)
    if p.suffix == ".json" and p.exists():
        obj = json.loads(p.read_text())
        return Lattice.from_json(obj.get("lattice", obj))
    raise ValueError(f"unrecognized lattice {text!r}")
