"""Finite truncations of atomic measures sum mu(lambda) delta_lambda."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .exactnum import MP, ExactVector, NoMultiplicationTable, unit_phase
from .pointset import PointSet, lambda_h, min_gap

__all__ = [
    "ZERO_PRUNE",
    "AtomicMeasure",
    "ValidationReport",
    "transform",
    "shift",
    "modulate",
    "autocorrelation_measure",
    "validate",
    "phase",
]

ZERO_PRUNE = 1e-13


class AtomicMeasure:
    """Atoms at exact points with complex double-precision weights."""

    def __init__(self, points: Iterable, weights: Iterable[complex], R_trunc: float,
                 provenance: str = "", *, check: bool = True):
        pts, ws = [], []
        for p, w in zip(points, weights):
            w = complex(w)
            if w != 0:
                pts.append(p if isinstance(p, ExactVector) else ExactVector(p))
                ws.append(w)
        self.support = PointSet(pts, R_trunc, provenance, check=check)
        if len(self.support) != len(pts):
            raise ValueError("duplicate support points; combine weights with transform(add=...)")
        self.weights = np.array(ws, dtype=complex)

    @classmethod
    def from_pointset(cls, A: PointSet, weights=None) -> AtomicMeasure:
        ws = np.ones(len(A)) if weights is None else weights
        return cls(A.points, ws, A.R_trunc, A.provenance, check=False)

    @property
    def points(self) -> list[ExactVector]:
        return self.support.points

    @property
    def R_trunc(self) -> float:
        return self.support.R_trunc

    @property
    def dim(self) -> int:
        return self.support.dim

    @property
    def coords(self) -> np.ndarray:
        return self.support.coords

    def __len__(self):
        return len(self.support)

    def weight(self, p: ExactVector) -> complex:
        i = self.support.index.get(p)
        return 0j if i is None else complex(self.weights[i])

    def mass(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def as_dict(self) -> dict[ExactVector, complex]:
        return dict(zip(self.points, self.weights.tolist()))

    def to_json(self) -> dict:
        return {"atoms": [{"point": p.to_json(), "re": float(w.real), "im": float(w.imag)}
                          for p, w in zip(self.points, self.weights)],
                "R_trunc": self.R_trunc}

    @classmethod
    def from_json(cls, obj: dict) -> AtomicMeasure:
        atoms = obj["atoms"]
        return cls((ExactVector.from_json(a["point"]) for a in atoms),
                   (complex(a["re"], a["im"]) for a in atoms), obj["R_trunc"],
                   obj.get("provenance", ""))


def phase(omega, points: Sequence[ExactVector]) -> np.ndarray:
    """e^{2 pi i <omega, lambda>} per point; exact reduction mod 1 when possible."""
    if isinstance(omega, ExactVector):
        try:
            return np.array([unit_phase(omega.dot(p)) for p in points], dtype=complex)
        except NoMultiplicationTable:
            return np.array([complex(MP.expjpi(2 * omega.dot_mpf(p))) for p in points], dtype=complex)
    om = np.asarray(omega, dtype=float).reshape(-1)
    x = np.array([p.to_float() for p in points]).reshape(len(points), -1)
    return np.exp(2j * np.pi * (x @ om))


def transform(mu: AtomicMeasure, *, shift: ExactVector | None = None, modulation=None,
              scalar: complex | None = None, add: AtomicMeasure | None = None) -> AtomicMeasure:
    """Apply, in this order, modulation, shift, scaling and addition.

    Modulation multiplies mu(lambda) by e^{2 pi i <omega, lambda>}.  A shift
    by t moves every atom and keeps only those within R_trunc - |t|, the
    region where the shifted truncation is complete.  Sums merge supports,
    live on the smaller of the two regions, and drop atoms whose combined
    weight is below 1e-13.
    """
    pts = list(mu.points)
    ws = mu.weights.copy()
    R = mu.R_trunc
    if modulation is not None:
        ws = ws * phase(modulation, pts)
    if shift is not None:
        t = shift if isinstance(shift, ExactVector) else ExactVector(shift)
        if t.dim != mu.dim:
            raise ValueError(f"dimension mismatch: shift {t.dim} vs measure {mu.dim}")
        R = R - float(np.linalg.norm(t.to_float()))
        if R < 0:
            raise ValueError("shift larger than the truncation radius")
        moved = [p + t for p in pts]
        r = np.linalg.norm(np.array([p.to_float() for p in moved]).reshape(len(moved), -1), axis=1)
        keep = r <= R * (1 + 1e-12)
        pts = [p for p, k in zip(moved, keep) if k]
        ws = ws[keep]
    if scalar is not None:
        ws = ws * complex(scalar)
    out = AtomicMeasure(pts, ws, R, mu.support.provenance, check=False)
    if add is not None:
        if add.dim != mu.dim and len(add) and len(mu):
            raise ValueError(f"dimension mismatch: {mu.dim} vs {add.dim}")
        acc: dict[ExactVector, complex] = {}
        for p, w in zip(pts, ws.tolist()):
            acc[p] = acc.get(p, 0j) + w
        for p, w in zip(add.points, add.weights.tolist()):
            acc[p] = acc.get(p, 0j) + w
        keep = [(p, w) for p, w in acc.items() if abs(w) >= ZERO_PRUNE]
        keep.sort(key=lambda pw: tuple(pw[0].to_float()))
        out = AtomicMeasure([p for p, _ in keep], [w for _, w in keep], min(R, add.R_trunc),
                            f"({mu.support.provenance}) + ({add.support.provenance})", check=False)
    return out


def shift(mu: AtomicMeasure, t) -> AtomicMeasure:
    return transform(mu, shift=t)


def modulate(mu: AtomicMeasure, omega) -> AtomicMeasure:
    return transform(mu, modulation=omega)


def autocorrelation_measure(mu: AtomicMeasure, h: ExactVector) -> AtomicMeasure:
    """mu_h = sum over Lambda_h of mu(lambda) * conj(mu(lambda + h)) delta_lambda."""
    h = h if isinstance(h, ExactVector) else ExactVector(h)
    sup = lambda_h(mu.support, h)
    if not len(sup):
        raise ValueError(f"Lambda_h is empty for h={h} after edge correction")
    idx = mu.support.index
    ws = [mu.weights[idx[p]] * np.conj(mu.weights[idx[p + h]]) for p in sup.points]
    return AtomicMeasure(sup.points, ws, sup.R_trunc, f"mu_h of {mu.support.provenance}, h={h}",
                         check=False)


@dataclass
class ValidationReport:
    is_positive: bool
    sup_weight: float
    growth_C: float
    growth_N: float
    bounded: bool
    min_gap: float | None

    def to_json(self) -> dict:
        return dict(self.__dict__)


def validate(mu: AtomicMeasure) -> ValidationReport:
    """Positivity, sup |mu|, and a least-squares polynomial growth fit.

    The fit regresses log|mu(lambda)| on log(1 + |lambda|); ``bounded`` is
    declared when the fitted exponent is below 0.1.
    """
    if not len(mu):
        raise ValueError("validate needs a nonempty measure")
    w = mu.weights
    pos = bool(np.all(np.abs(w.imag) <= 1e-12) and np.all(w.real >= 0))
    a = np.abs(w)
    x = np.log1p(np.linalg.norm(mu.coords, axis=1))
    y = np.log(a)
    if np.ptp(x) > 0:
        N, logC = np.polyfit(x, y, 1)
    else:
        N, logC = 0.0, float(y.mean())
    gap = min_gap(mu.support) if len(mu) >= 2 else None
    return ValidationReport(pos, float(a.max()), float(np.exp(logC)), float(N),
                            bool(N < 0.1), gap)
