"""Finite truncations of discrete point sets and their geometry.

Every quantity here is a finite-window estimate of an infinite-set notion
(uniform discreteness, relative denseness, uniform densities, the Meyer
property).  Windows are kept inside ``0.8 * R_trunc`` so that the truncation
boundary does not bias counts.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .exactnum import ExactVector

__all__ = [
    "TRUNCATION_GUARD",
    "PointSet",
    "DensityReport",
    "CoverReport",
    "MeyerReport",
    "min_gap",
    "difference_set",
    "lambda_h",
    "covering_radius",
    "densities",
    "meyer_witness",
    "ball_volume",
    "shell_count_bound",
]

TRUNCATION_GUARD = 0.8
MAX_CENTERS_1D = 400_000
MAX_CENTERS_ND = 40_000
MAX_PROBES = 1_000_000


def ball_volume(R: float, n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * R ** n


class PointSet:
    """Deduplicated exact points known to be complete within radius ``R_trunc``."""

    def __init__(self, points: Iterable, R_trunc: float, provenance: str = "", *, check: bool = True):
        pts = []
        seen = set()
        for p in points:
            p = p if isinstance(p, ExactVector) else ExactVector(p)
            if p not in seen:
                seen.add(p)
                pts.append(p)
        self.points: list[ExactVector] = pts
        self.R_trunc = float(R_trunc)
        self.provenance = provenance
        self._coords = None
        self._tree = None
        self._index = None
        if pts:
            dims = {p.dim for p in pts}
            if len(dims) != 1:
                raise ValueError("points of mixed dimension")
            self.dim = dims.pop()
        else:
            self.dim = 0
        if check and pts:
            r = np.linalg.norm(self.coords, axis=1)
            if np.any(r > self.R_trunc * (1 + 1e-9) + 1e-12):
                raise ValueError("point outside the declared truncation radius")

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __contains__(self, p: ExactVector) -> bool:
        return p in self.index

    @property
    def coords(self) -> np.ndarray:
        if self._coords is None:
            if not self.points:
                self._coords = np.zeros((0, max(self.dim, 1)))
            else:
                self._coords = np.array([p.to_float() for p in self.points])
        return self._coords

    @property
    def index(self) -> dict[ExactVector, int]:
        if self._index is None:
            self._index = {p: i for i, p in enumerate(self.points)}
        return self._index

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.coords)
        return self._tree

    def restrict(self, R: float, provenance: str | None = None) -> PointSet:
        """Sub-truncation to the closed ball B_R (R <= R_trunc)."""
        R = min(R, self.R_trunc)
        r = np.linalg.norm(self.coords, axis=1) if self.points else np.zeros(0)
        keep = [p for p, x in zip(self.points, r) if x <= R * (1 + 1e-12)]
        return PointSet(keep, R, provenance or f"{self.provenance} restricted to R={R:g}", check=False)

    def translate(self, t: ExactVector) -> PointSet:
        """Translated copy; complete within the shrunk radius R_trunc - |t|."""
        t = t if isinstance(t, ExactVector) else ExactVector(t)
        R = self.R_trunc - float(np.linalg.norm(t.to_float()))
        moved = [p + t for p in self.points]
        out = PointSet(moved, self.R_trunc + float(np.linalg.norm(t.to_float())),
                       f"{self.provenance} + {t}", check=False)
        return out.restrict(R, out.provenance)

    def to_json(self) -> dict:
        return {"points": [p.to_json() for p in self.points], "R_trunc": self.R_trunc,
                "provenance": self.provenance}

    @classmethod
    def from_json(cls, obj: dict) -> PointSet:
        return cls((ExactVector.from_json(p) for p in obj["points"]), obj["R_trunc"],
                   obj.get("provenance", ""))


def min_gap(A: PointSet) -> float:
    """Minimal pairwise distance d(A) of the truncation."""
    if len(A) < 2:
        raise ValueError("min_gap needs at least two points")
    d, _ = A.tree.query(A.coords, k=2)
    return float(d[:, 1].min())


def difference_set(A: PointSet, R: float) -> PointSet:
    """Exact differences a - a' with |a - a'| <= R (0 included)."""
    pairs = A.tree.query_pairs(R * (1 + 1e-12), output_type="ndarray")
    out = {ExactVector([0] * A.dim)}
    pts = A.points
    for i, j in pairs:
        d = pts[i] - pts[j]
        out.add(d)
        out.add(-d)
    ordered = sorted(out, key=lambda p: tuple(p.to_float()))
    return PointSet(ordered, R, f"({A.provenance}) - ({A.provenance}) within R={R:g}", check=False)


def lambda_h(A: PointSet, h: ExactVector, edge_correct: bool = True) -> PointSet:
    """Points lambda of A with lambda + h also in A.

    With ``edge_correct`` the result is restricted to |lambda| <= R_trunc - |h|,
    the region where membership of lambda + h is decidable from the truncation.
    """
    h = h if isinstance(h, ExactVector) else ExactVector(h)
    hn = float(np.linalg.norm(h.to_float()))
    R = A.R_trunc - hn if edge_correct else A.R_trunc
    r = np.linalg.norm(A.coords, axis=1) if len(A) else np.zeros(0)
    idx = A.index
    keep = [p for p, x in zip(A.points, r)
            if (not edge_correct or x <= R * (1 + 1e-12)) and (p + h) in idx]
    return PointSet(keep, max(R, 0.0), f"Lambda_h of {A.provenance}, h={h}", check=False)


def _grid(pitch: float, radius: float, n: int) -> np.ndarray:
    """Points of pitch * Z^n inside the closed ball of the given radius (origin included)."""
    m = int(math.floor(radius / pitch))
    axis = np.arange(-m, m + 1) * pitch
    if n == 1:
        return axis[:, None]
    g = np.stack(np.meshgrid(*([axis] * n), indexing="ij"), axis=-1).reshape(-1, n)
    return g[np.linalg.norm(g, axis=1) <= radius + 1e-12]


def _grid_size(pitch: float, radius: float, n: int) -> float:
    return (2 * radius / pitch + 1) ** n if n == 1 else ball_volume(radius + pitch, n) / pitch ** n


def _pitch_for(A: PointSet, radius: float, cap: int) -> float:
    pitch = min_gap(A) / 4
    while _grid_size(pitch, radius, A.dim) > cap:
        pitch *= 1.25
    return pitch


@dataclass
class CoverReport:
    radius: float
    pitch: float
    probe_radius: float
    relatively_dense: bool
    farthest_probe: list[float]


def covering_radius(A: PointSet) -> CoverReport:
    """Largest distance from a probe (grid inside 0.8 R_trunc) to the nearest point.

    The set is flagged as not relatively dense when that distance reaches a
    quarter of the probed region's radius.
    """
    if not len(A):
        raise ValueError("covering_radius of an empty set")
    probe_R = TRUNCATION_GUARD * A.R_trunc
    if len(A) >= 2:
        pitch = _pitch_for(A, probe_R, MAX_PROBES)
    else:
        pitch = probe_R / 50
    probes = _grid(pitch, probe_R, A.dim)
    d, _ = A.tree.query(probes, k=1)
    i = int(np.argmax(d))
    value = float(d[i])
    return CoverReport(value, pitch, probe_R, value < 0.25 * probe_R, probes[i].tolist())


@dataclass
class DensityReport:
    radii: list[float]
    d_minus: list[float]
    d_sharp: list[float]
    d_plus: list[float]
    pitch: float
    # max change of any estimate under a translation by at most pitch*sqrt(n)/2
    pitch_bound: list[float]
    extrapolated: tuple[float, float, float] = field(default=(math.nan,) * 3)

    def rows(self):
        return list(zip(self.radii, self.d_minus, self.d_sharp, self.d_plus))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["R", "d_minus", "d_sharp", "d_plus"])
            for row in self.rows():
                w.writerow([f"{x:.17g}" for x in row])

    def to_json(self) -> dict:
        return {
            "radii": self.radii, "d_minus": self.d_minus, "d_sharp": self.d_sharp,
            "d_plus": self.d_plus, "pitch": self.pitch, "pitch_bound": self.pitch_bound,
            "extrapolated": list(self.extrapolated),
        }


def shell_count_bound(R: float, width: float, gap: float, n: int) -> float:
    """Upper bound on points with gap >= ``gap`` in the shell R - width < |x| < R + width."""
    g = gap / 2
    outer = (R + width + g) ** n
    inner = max(R - width - g, 0.0) ** n
    return (outer - inner) / g ** n


def _counts(A: PointSet, centers: np.ndarray, R: float) -> np.ndarray:
    if A.dim == 1:
        xs = np.sort(A.coords[:, 0])
        c = centers[:, 0]
        lo = np.searchsorted(xs, c - R, side="right")
        hi = np.searchsorted(xs, c + R, side="left")
        return (hi - lo).astype(float)
    return np.asarray(A.tree.query_ball_point(centers, R * (1 - 1e-12), return_length=True),
                      dtype=float)


def densities(A: PointSet, radii: Sequence[float]) -> DensityReport:
    """Sliding-window estimates of D^-, D_# and D^+ on a ladder of radii.

    For each R, windows are open balls x + B_R with centers x on the grid
    pitch * Z^n inside B_{0.8 R_trunc - R}; d_minus/d_plus are the min/max
    counts over centers and d_sharp is the centered count, all divided by |B_R|.
    """
    radii = [float(r) for r in radii]
    if not len(A):
        raise ValueError("densities of an empty set")
    for R in radii:
        if R <= 0 or R > TRUNCATION_GUARD * A.R_trunc:
            raise ValueError(f"radius {R} outside (0, {TRUNCATION_GUARD} * R_trunc]")
    n = A.dim
    cap = MAX_CENTERS_1D if n == 1 else MAX_CENTERS_ND
    region_max = max(TRUNCATION_GUARD * A.R_trunc - min(radii), 0.0)
    pitch = _pitch_for(A, region_max, cap) if len(A) > 1 else 1.0
    g = min_gap(A) if len(A) > 1 else pitch
    dm, ds, dp, bounds = [], [], [], []
    origin = np.zeros((1, n))
    for R in radii:
        vol = ball_volume(R, n)
        region = TRUNCATION_GUARD * A.R_trunc - R
        centers = _grid(pitch, region, n) if region > 0 else origin
        counts = _counts(A, centers, R)
        dm.append(float(counts.min() / vol))
        dp.append(float(counts.max() / vol))
        ds.append(float(_counts(A, origin, R)[0] / vol))
        bounds.append(shell_count_bound(R, pitch * math.sqrt(n), g, n) / vol)
    return DensityReport(radii, dm, ds, dp, pitch, bounds, (dm[-1], ds[-1], dp[-1]))


@dataclass
class MeyerReport:
    success: bool
    residues: list[ExactVector]
    histogram: dict[str, int]
    stable: bool
    residues_half: list[ExactVector]
    n_differences: int
    reason: str = ""

    def to_json(self) -> dict:
        return {"success": self.success, "residues": [f.to_json() for f in self.residues],
                "residues_text": [str(f) for f in self.residues], "histogram": self.histogram,
                "stable": self.stable, "residues_half": [str(f) for f in self.residues_half],
                "n_differences": self.n_differences, "reason": self.reason}


def _greedy_residues(A: PointSet, R_diff: float) -> tuple[list[ExactVector], Counter, int]:
    H = difference_set(A, R_diff)
    order = sorted(range(len(H)),
                   key=lambda i: (round(float(np.linalg.norm(H.coords[i])), 12), tuple(H.coords[i])))
    F: list[ExactVector] = []
    counts: Counter = Counter()
    idx = A.index
    for i in order:
        h = H.points[i]
        for f_i, f in enumerate(F):
            if (h - f) in idx:
                counts[f_i] += 1
                break
        else:
            _, j = A.tree.query(H.coords[i], k=1)
            F.append(h - A.points[int(j)])
            counts[len(F) - 1] += 1
    return F, counts, len(H)


def meyer_witness(A: PointSet, budget: int = 16) -> MeyerReport:
    """Greedy search for a finite F with (A - A) ∩ B_{R_trunc/2} ⊂ A + F.

    Residues already found are reused first; otherwise the difference is
    matched to its nearest point.  The search is repeated on the half-radius
    truncation and the residue sets must agree (self-consistency).  A success
    certifies the truncation only; a failure is not a disproof.
    """
    F, counts, nH = _greedy_residues(A, A.R_trunc / 2)
    hist = {str(f): counts[i] for i, f in enumerate(F)}
    if len(F) > budget:
        return MeyerReport(False, F, hist, False, [], nH,
                           f"{len(F)} residues exceed budget {budget}")
    half = A.restrict(A.R_trunc / 2)
    F_half, _, _ = _greedy_residues(half, half.R_trunc / 2)
    stable = set(F_half) == set(F)
    reason = "" if stable else "residue set changed when R_trunc was halved"
    return MeyerReport(stable, F, hist, stable, F_half, nH, reason)


def pairwise_disjoint(sets: Sequence[PointSet]) -> bool:
    seen: set = set()
    for s in sets:
        for p in s.points:
            if p in seen:
                return False
            seen.add(p)
    return True


def close_differences(A: PointSet, center: np.ndarray, radius: float, R_diff: float) -> list[ExactVector]:
    """Elements of the difference set within ``radius`` of ``center``."""
    H = difference_set(A, R_diff)
    d = np.linalg.norm(H.coords - np.asarray(center, dtype=float), axis=1)
    return [H.points[i] for i in np.flatnonzero(d < radius)]

