"""Measures carried by finitely many lattice cosets with trigonometric-polynomial weights.

A decomposition (L, {(theta_j, P_j)}) describes
    mu = sum_j sum_{lambda in L + theta_j} P_j(lambda) delta_lambda.
P_j is always evaluated at the atom lambda itself.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .exactnum import ExactReal, ExactVector, NoMultiplicationTable, unit_phase
from .lattice import CosetSystem, Lattice, dual_lattice, enumerate_arrays
from .measure import ZERO_PRUNE, AtomicMeasure

__all__ = [
    "TrigPolynomial",
    "CosetDecomposition",
    "CosetSplit",
    "CosetSplitError",
    "RecoveryFailed",
    "IllConditioned",
    "synthesize",
    "coset_split",
    "find_separating_vector",
    "separating_value_check",
    "vandermonde_consistency",
    "VandermondeReport",
    "recover_polynomials",
    "spectral_min_gap",
]


class CosetSplitError(ValueError):
    """Some support points are not of the form k + theta_j."""

    def __init__(self, message: str, offenders: list[ExactVector]):
        super().__init__(message)
        self.offenders = offenders


class RecoveryFailed(ValueError):
    def __init__(self, message: str, residual: float, K: int):
        super().__init__(message)
        self.residual = residual
        self.K = K


class IllConditioned(ValueError):
    pass


def _vec(x) -> ExactVector:
    return x if isinstance(x, ExactVector) else ExactVector(x if isinstance(x, (list, tuple)) else [x])


@dataclass
class TrigPolynomial:
    """P(x) = sum_omega c_omega exp(2 pi i <omega, x>) with exact frequencies."""

    terms: dict[ExactVector, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for w, c in self.terms.items():
            w = _vec(w)
            c = complex(c)
            if c != 0:
                clean[w] = clean.get(w, 0j) + c
        self.terms = {w: c for w, c in clean.items() if c != 0}

    @classmethod
    def constant(cls, c: complex, dim: int = 1) -> TrigPolynomial:
        return cls({ExactVector([0] * dim): c})

    @property
    def dim(self) -> int:
        return next(iter(self.terms)).dim if self.terms else 0

    def __len__(self):
        return len(self.terms)

    def coefficient_l1(self) -> float:
        return float(sum(abs(c) for c in self.terms.values()))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        """Float evaluation at the rows of x."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, self.dim or 1)
        out = np.zeros(len(x), dtype=complex)
        for w, c in self.terms.items():
            out += c * np.exp(2j * np.pi * (x @ w.to_float()))
        return out

    def evaluate_exact(self, p: ExactVector) -> complex:
        """Evaluation with each phase reduced exactly mod 1 (needs a multiplication table)."""
        return complex(sum(c * unit_phase(w.dot(p)) for w, c in self.terms.items()))

    def canonical(self, L: Lattice) -> TrigPolynomial:
        """Frequencies reduced to the half-open fundamental domain of L* spanned by its basis."""
        out: dict[ExactVector, complex] = {}
        for w, c in self.terms.items():
            w2 = canonical_frequency(L, w)
            out[w2] = out.get(w2, 0j) + c
        return TrigPolynomial(out)

    def to_json(self) -> dict:
        return {"terms": [{"freq": w.to_json(), "re": c.real, "im": c.imag}
                          for w, c in self.terms.items()]}

    @classmethod
    def from_json(cls, obj: dict) -> TrigPolynomial:
        return cls({ExactVector.from_json(t["freq"]): complex(t["re"], t["im"]) for t in obj["terms"]})


def canonical_frequency(L: Lattice, omega: ExactVector) -> ExactVector:
    """omega - s with s in L* such that the L*-coordinates B^T omega lie in [0, 1)."""
    # L*-coordinates of omega are B^T omega
    coords = [sum((L.rows[i][j] * omega[i] for i in range(L.n)), ExactReal.rational(0))
              for j in range(L.n)]
    shift = [c.floor() for c in coords]
    if not any(shift):
        return omega
    D = dual_lattice(L)
    return omega - D.point(shift)


@dataclass
class CosetDecomposition:
    lattice: Lattice
    parts: list[tuple[ExactVector, TrigPolynomial]]
    certificate: dict | None = None

    def __post_init__(self):
        self.parts = [(_vec(t), p) for t, p in self.parts]
        CosetSystem(self.lattice, tuple(t for t, _ in self.parts))

    @property
    def thetas(self) -> list[ExactVector]:
        return [t for t, _ in self.parts]

    def canonical(self) -> CosetDecomposition:
        return CosetDecomposition(self.lattice, [(t, p.canonical(self.lattice)) for t, p in self.parts],
                                  self.certificate)

    def to_json(self) -> dict:
        out = {"lattice": self.lattice.to_json(),
               "parts": [{"theta": t.to_json(), "poly": p.to_json()} for t, p in self.parts]}
        if self.certificate is not None:
            out["certificate"] = self.certificate
        return out

    @classmethod
    def from_json(cls, obj: dict) -> CosetDecomposition:
        return cls(Lattice.from_json(obj["lattice"]),
                   [(ExactVector.from_json(p["theta"]), TrigPolynomial.from_json(p["poly"]))
                    for p in obj["parts"]], obj.get("certificate"))


# ---------------------------------------------------------------------------
# synthesis and coset split


def synthesize(d: CosetDecomposition, R: float) -> AtomicMeasure:
    """Atoms P_j(lambda) delta_lambda on (L + theta_j) within B_R."""
    L = d.lattice
    thetas = d.thetas
    off = np.array([t.to_float() for t in thetas]).reshape(len(thetas), L.n)
    ks, idx, x = enumerate_arrays(L, off, R * (1 + 1e-9))
    r = np.linalg.norm(x, axis=1)
    keep = r <= R * (1 + 1e-12)
    ks, idx, x = ks[keep], idx[keep], x[keep]
    w = np.zeros(len(x), dtype=complex)
    for j, (_, P) in enumerate(d.parts):
        sel = idx == j
        w[sel] = P(x[sel])
    nz = np.abs(w) >= ZERO_PRUNE
    pts = [L.point(k) + thetas[j] for k, j, z in zip(ks, idx, nz) if z]
    return AtomicMeasure(pts, w[nz], R, "synthesized coset measure", check=False)


@dataclass
class CosetSplit:
    lattice: Lattice
    thetas: list[ExactVector]
    coords: list[np.ndarray]       # integer lattice coordinates per coset
    weights: list[np.ndarray]
    R_trunc: float

    def as_maps(self) -> list[dict[tuple[int, ...], complex]]:
        return [{tuple(int(v) for v in k): complex(w) for k, w in zip(ks, ws)}
                for ks, ws in zip(self.coords, self.weights)]


def coset_split(mu: AtomicMeasure, L: Lattice, F: Sequence) -> CosetSplit:
    """Write every atom as B k + theta_j and group weights by coset.

    Membership is decided exactly; an atom in two cosets (impossible when the
    offsets are distinct mod L) or in none is reported.
    """
    thetas = [_vec(t) for t in F]
    if not thetas:
        raise ValueError("F must be non-empty")
    inv = L.inv_float
    off = np.array([t.to_float() for t in thetas])
    coords_f = mu.coords @ inv.T if len(mu) else np.zeros((0, L.n))
    per_coords = [[] for _ in thetas]
    per_w = [[] for _ in thetas]
    offenders = []
    exact = L.exact_inverse is not None
    for p, x, w in zip(mu.points, coords_f, mu.weights):
        hits = []
        for j, t in enumerate(thetas):
            c = x - inv @ off[j]
            k = np.round(c)
            if np.max(np.abs(c - k)) > 1e-6:
                continue
            if exact:
                ex = L.coords(p - t)
                if not all(e.is_integer() for e in ex):
                    continue
                k = np.array([int(e.rational_part) for e in ex])
            hits.append((j, k.astype(np.int64)))
        if len(hits) != 1:
            offenders.append(p)
            continue
        j, k = hits[0]
        per_coords[j].append(k)
        per_w[j].append(w)
    if offenders:
        shown = ", ".join(str(o) for o in offenders[:20])
        more = f" (+{len(offenders) - 20} more)" if len(offenders) > 20 else ""
        raise CosetSplitError(f"{len(offenders)} atom(s) not uniquely in L + F: {shown}{more}",
                              offenders)
    return CosetSplit(L, thetas,
                      [np.array(c, dtype=np.int64).reshape(-1, L.n) for c in per_coords],
                      [np.array(w, dtype=complex) for w in per_w], mu.R_trunc)


# ---------------------------------------------------------------------------
# separating vectors


def _zigzag(v: int) -> tuple[int, int]:
    return (abs(v), 1 if v < 0 else 0)


def _shell(n: int, r: int):
    """Integer vectors of sup-norm r in zig-zag lexicographic order (0, 1, -1, 2, -2, ...)."""
    vals = sorted(range(-r, r + 1), key=_zigzag)
    for m in itertools.product(vals, repeat=n):
        if max(abs(v) for v in m) == r:
            yield m


def separating_value_check(thetas: Sequence[ExactVector], m: Sequence[int]) -> bool:
    """Exact check that <theta_j - theta_l, m> is not an integer for all j < l."""
    for a, b in itertools.combinations(thetas, 2):
        if (a - b).dot_int(m).is_integer():
            return False
    return True


def find_separating_vector(thetas: Sequence, max_norm: int = 64) -> tuple[int, ...]:
    """Smallest m in Z^n (sup-norm shells, zig-zag lexicographic) with all <theta_j - theta_l, m> non-integer."""
    ths = [_vec(t) for t in thetas]
    if len(ths) < 2:
        return tuple([1] + [0] * (ths[0].dim - 1)) if ths else (1,)
    n = ths[0].dim
    diffs = [a - b for a, b in itertools.combinations(ths, 2)]
    for i, d in enumerate(diffs):
        if d.is_rational():
            raise ValueError(f"offset difference {d} is rational; apply refine_lattice first")
    for r in range(1, max_norm + 1):
        for m in _shell(n, r):
            if all(not d.dot_int(m).is_integer() for d in diffs):
                return tuple(m)
    raise ValueError(f"no separating vector with sup-norm <= {max_norm}")


# ---------------------------------------------------------------------------
# Vandermonde consistency


def _lattice_thetas(L: Lattice, thetas: Sequence[ExactVector]) -> list[ExactVector]:
    return [ExactVector(L.coords(t)) for t in thetas]


def spectral_min_gap(d: CosetDecomposition, radius: float = 4.0) -> float:
    """Minimal distance between points of L* + (frequencies of all P_j)."""
    L = d.lattice
    D = dual_lattice(L)
    freqs = {canonical_frequency(L, w) for _, P in d.parts for w in P.terms} if L.is_exact \
        else {w for _, P in d.parts for w in P.terms}
    off = np.array([w.to_float() for w in freqs]).reshape(len(freqs), L.n)
    _, _, pts = enumerate_arrays(D, off, radius)
    if len(pts) < 2:
        raise ValueError("spectrum too sparse to measure a gap")
    from scipy.spatial import cKDTree
    dist, _ = cKDTree(pts).query(pts, k=2)
    return float(dist[:, 1].min())


@dataclass
class VandermondeReport:
    alpha: list[complex]
    predicted: list[complex]
    max_rel_error: float
    condition: float
    m: tuple[int, ...]
    t: list[float]
    probe_width: float

    def to_json(self) -> dict:
        return {"alpha": [[a.real, a.imag] for a in self.alpha],
                "predicted": [[a.real, a.imag] for a in self.predicted],
                "max_rel_error": self.max_rel_error, "condition": self.condition,
                "m": list(self.m), "t": self.t, "probe_width": self.probe_width}


def _smoothed(points: np.ndarray, weights: np.ndarray, t: np.ndarray, W: float) -> complex:
    taper = np.exp(-np.pi * np.sum(points ** 2, axis=1) / W ** 2)
    return complex(np.sum(weights * taper * np.exp(-2j * np.pi * (points @ t)))) / W ** points.shape[1]


def vandermonde_consistency(mu: AtomicMeasure, d: CosetDecomposition, m: Sequence[int] | None = None,
                            t=None, p_max: int | None = None, gap: float | None = None,
                            max_condition: float = 1e6) -> VandermondeReport:
    """Recover alpha_j(t) from the smoothed transform at t - p k and compare with the coset prediction.

    k = B^{-T} m is a dual-lattice vector, so the smoothed transform S of a
    measure on the cosets satisfies S(t - p k) = sum_j e^{2 pi i <theta_j, p k>} S_j(t),
    where S_j is the smoothed transform of the atoms on coset j.  The system is
    solved for alpha_j = S_j(t) and compared with S_j(t) computed directly.
    The Gaussian taper has spectral width gap / 10.
    """
    L = d.lattice
    thetas = d.thetas
    s = len(thetas)
    lat_thetas = _lattice_thetas(L, thetas)
    if m is None:
        if d.certificate and "m" in d.certificate:
            m = tuple(d.certificate["m"])
        else:
            m = find_separating_vector(lat_thetas) if s > 1 else tuple([1] + [0] * (L.n - 1))
    m = tuple(int(v) for v in m)
    if s > 1 and not separating_value_check(lat_thetas, m):
        raise ValueError(f"m={m} does not separate the offsets")
    p_max = s if p_max is None else int(p_max)
    t = np.zeros(L.n) if t is None else np.atleast_1d(np.asarray(t, dtype=float))
    if gap is None:
        gap = spectral_min_gap(d)
    W = 10.0 / gap
    if mu.R_trunc < 3.5 * W:
        raise ValueError(f"R_trunc={mu.R_trunc:g} too small for probe width {gap / 10:.3g} "
                         f"(need >= {3.5 * W:.3g})")
    k = L.inv_float.T @ np.array(m, dtype=float)
    rhs = np.array([_smoothed(mu.coords, mu.weights, t - p * k, W) for p in range(p_max)])
    V = np.array([[unit_phase(th.dot_int([p * v for v in m])) for th in lat_thetas]
                  for p in range(p_max)], dtype=complex)
    cond = float(np.linalg.cond(V))
    if cond > max_condition:
        raise IllConditioned(f"Vandermonde condition number {cond:.3g} > {max_condition:g}; "
                             "try a different separating vector")
    alpha = np.linalg.lstsq(V, rhs, rcond=None)[0]
    split = coset_split(mu, L, thetas)
    pred = []
    for j in range(s):
        pts = split.coords[j] @ L.float_matrix.T + thetas[j].to_float()
        pred.append(_smoothed(pts, split.weights[j], t, W) if len(pts) else 0j)
    pred = np.array(pred)
    scale = max(float(np.max(np.abs(pred))), 1e-300)
    err = float(np.max(np.abs(alpha - pred))) / scale
    return VandermondeReport(alpha.tolist(), pred.tolist(), err, cond, m, t.tolist(), gap / 10)


# ---------------------------------------------------------------------------
# recovery of the polynomials


def _coset_grid_weights(L: Lattice, theta: ExactVector, ks: np.ndarray, ws: np.ndarray, R: float):
    """All lattice coordinates of L + theta within B_R and their weights (0 where no atom)."""
    kk, _, x = enumerate_arrays(L, theta.to_float().reshape(1, -1), R)
    table = {tuple(int(v) for v in k): w for k, w in zip(ks, ws)}
    w = np.array([table.get(tuple(int(v) for v in k), 0j) for k in kk], dtype=complex)
    return kk, x, w


def _recover_one(L: Lattice, theta: ExactVector, kk: np.ndarray, x: np.ndarray, w: np.ndarray,
                 K: int, eps: float):
    n = L.n
    index = {tuple(int(v) for v in k): i for i, k in enumerate(kk)}
    block = list(itertools.product(range(K), repeat=n))
    if any(b not in index for b in block):
        return None
    samples = np.array([w[index[b]] for b in block]).reshape((K,) * n)
    F = np.fft.fftn(samples) / K ** n
    terms: dict[ExactVector, complex] = {}
    Binv = L.exact_inverse
    for q in itertools.product(range(K), repeat=n):
        c = complex(F[q])
        if abs(c) <= eps:
            continue
        nu = [Fraction(v, K) for v in q]
        if Binv is not None:
            # omega = B^{-T} nu
            omega = ExactVector(sum((Binv[j][i].scale(nu[j]) for j in range(n)),
                                    ExactReal.rational(0)) for i in range(n))
            phase = unit_phase(omega.dot(theta)) if _has_table(omega, theta) else \
                complex(np.exp(2j * np.pi * float(omega.dot_mpf(theta))))
        else:
            omega = ExactVector(L.inv_float.T @ np.array([float(v) for v in nu]))
            phase = complex(np.exp(2j * np.pi * omega.to_float() @ theta.to_float()))
        terms[omega] = c / phase
    P = TrigPolynomial(terms)
    inblock = np.all((kk >= 0) & (kk < K), axis=1)
    held = ~inblock
    residual = float(np.max(np.abs(P(x[held]) - w[held]))) if held.any() else float("inf")
    return P, residual


def _has_table(a: ExactVector, b: ExactVector) -> bool:
    try:
        a.dot(b)
        return True
    except NoMultiplicationTable:
        return False


def recover_polynomials(mu: AtomicMeasure, L: Lattice, F: Sequence, K: int = 64, eps: float = 1e-10,
                        K_max: int = 1024, tol: float = 1e-6) -> CosetDecomposition:
    """Recover P_j on each coset from a K^n block of samples by a discrete Fourier transform.

    The block is lattice coordinates k in [0, K)^n; the residual is the largest
    |P_j(lambda) - mu(lambda)| over all other points of the coset inside the
    truncation (atoms absent from mu count as weight 0).  When it exceeds
    tol * sup|mu|, K is doubled up to K_max; the best residual is reported on failure.
    """
    split = coset_split(mu, L, F)
    sup = float(np.max(np.abs(mu.weights))) if len(mu) else 0.0
    parts, residuals = [], []
    for j, theta in enumerate(split.thetas):
        kk, x, w = _coset_grid_weights(L, theta, split.coords[j], split.weights[j], mu.R_trunc)
        Kc, best = int(K), None
        while True:
            res = _recover_one(L, theta, kk, x, w, Kc, eps)
            if res is None:
                break
            P, r = res
            if best is None or r < best[1]:
                best = (P, r, Kc)
            if r <= tol * sup or Kc * 2 > K_max:
                break
            Kc *= 2
        if best is None:
            raise RecoveryFailed(f"coset {j}: truncation R={mu.R_trunc:g} does not contain a "
                                 f"{K}^{L.n} sample block plus held-out points", float("inf"), K)
        P, r, Kc = best
        if r > tol * sup:
            raise RecoveryFailed(
                f"coset {j}: weights are not trigonometric-polynomial on this coset at "
                f"resolution K={Kc} (residual {r:.3g})", r, Kc)
        parts.append((theta, P))
        residuals.append(r)
    cert = None
    if len(split.thetas) > 1:
        lat = _lattice_thetas(L, split.thetas)
        try:
            cert = {"m": list(find_separating_vector(lat))}
        except ValueError:
            cert = None
    out = CosetDecomposition(L, parts, cert)
    out.residuals = residuals
    return out
