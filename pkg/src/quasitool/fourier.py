"""Fourier side of atomic measures.

Convention: phi_hat(t) = integral of phi(x) exp(-2 pi i <t, x>) dx, so the
Gaussian exp(-pi |x|^2) is its own transform and Poisson summation reads
sum_{L} f = det(L)^{-1} sum_{L*} f_hat.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate
from scipy.ndimage import maximum_filter

from .exactnum import ExactVector
from .lattice import Lattice, dual_lattice, enumerate_arrays
from .measure import AtomicMeasure
from .pointset import ball_volume, min_gap

__all__ = [
    "TestFunction",
    "Gaussian",
    "BandlimitedBump",
    "CompactBump",
    "TailTooLarge",
    "PairingResult",
    "pair_spectrum",
    "PoissonReport",
    "poisson_verify",
    "SpectrumScan",
    "diffraction_scan",
    "GapTestReport",
    "gap_test",
    "bump_transform",
    "GapCertificate",
    "gap_certificate",
    "InadmissibleGapInstance",
    "parse_test_function",
]

VANISH_REL = 1e-9


class TailTooLarge(ValueError):
    """Raised when the truncation tail of a sum cannot be bounded below tolerance."""


# ---------------------------------------------------------------------------
# test functions


def _unit_bump(s: np.ndarray) -> np.ndarray:
    """C-infinity bump on (-1, 1) with peak value 1 at 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


@lru_cache(maxsize=64)
def _gl(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(nodes)


def bump_transform(xi: np.ndarray) -> np.ndarray:
    """B(xi) = integral_{-1}^{1} bump(s) cos(2 pi xi s) ds (the bump is even)."""
    xi = np.asarray(xi, dtype=float)
    flat = np.abs(xi.ravel())
    if not flat.size:
        return np.zeros_like(xi)
    nodes = int(min(40_000, 300 + 6 * flat.max()))
    s, w = _gl(nodes)
    wb = w * _unit_bump(s)
    out = np.empty_like(flat)
    step = max(1, 2_000_000 // nodes)
    for i in range(0, flat.size, step):
        out[i:i + step] = np.cos(2 * np.pi * np.outer(flat[i:i + step], s)) @ wb
    return out.reshape(xi.shape)


BUMP_INTEGRAL = float(bump_transform(np.zeros(1))[0])
_ENV_STEP = 0.02
_ENV_MAX = 300.0


@lru_cache(maxsize=1)
def _bump_envelope_table() -> np.ndarray:
    xi = np.arange(0.0, _ENV_MAX + _ENV_STEP, _ENV_STEP)
    vals = np.abs(bump_transform(xi))
    return np.maximum.accumulate(vals[::-1])[::-1]


def _bump_envelope(xi: float) -> float:
    """sup |B| over [xi, inf), from a sampled running maximum (roundoff level beyond 300)."""
    table = _bump_envelope_table()
    i = min(int(xi / _ENV_STEP), len(table) - 1)
    return float(table[i])


@dataclass(frozen=True)
class TestFunction:
    """Base class: ``value`` evaluates phi, ``transform`` evaluates phi_hat."""

    def value(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def transform(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def transform_envelope(self, r: float) -> float:
        """Upper bound of |phi_hat(t)| over |t| >= r (non-increasing in r)."""
        raise NotImplementedError

    def value_envelope(self, r: float) -> float:
        """Upper bound of |phi(x)| over |x| >= r."""
        raise NotImplementedError

    def transform_support_radius(self) -> float | None:
        """Radius of a ball containing supp(phi_hat), if compact."""
        return None

    def dual(self) -> TestFunction:
        """The function whose value is phi_hat (and whose transform is phi(-x))."""
        raise NotImplementedError


def _as_points(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if dim == 1 and x.ndim <= 1:
        return x.reshape(-1, 1)
    return x.reshape(-1, dim)


@dataclass(frozen=True)
class Gaussian(TestFunction):
    """phi(x) = exp(-pi |x - c|^2 / sigma^2) exp(2 pi i <omega, x>).

    phi_hat(t) = sigma^n exp(-pi sigma^2 |t - omega|^2) exp(-2 pi i <t - omega, c>).
    """

    sigma: float = 1.0
    center: tuple = (0.0,)
    modulation: tuple = (0.0,)

    @classmethod
    def make(cls, sigma=1.0, center=None, modulation=None, dim: int = 1) -> Gaussian:
        c = tuple(float(v) for v in (center if center is not None else [0.0] * dim))
        w = tuple(float(v) for v in (modulation if modulation is not None else [0.0] * len(c)))
        if len(c) != len(w):
            raise ValueError("center and modulation dimensions differ")
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        return cls(float(sigma), c, w)

    @property
    def dim(self) -> int:
        return len(self.center)

    def value(self, x):
        x = _as_points(x, self.dim)
        c, w = np.array(self.center), np.array(self.modulation)
        r2 = np.sum((x - c) ** 2, axis=1)
        return np.exp(-np.pi * r2 / self.sigma ** 2 + 2j * np.pi * (x @ w))

    def transform(self, t):
        t = _as_points(t, self.dim)
        c, w = np.array(self.center), np.array(self.modulation)
        d = t - w
        return self.sigma ** self.dim * np.exp(-np.pi * self.sigma ** 2 * np.sum(d ** 2, axis=1)
                                               - 2j * np.pi * (d @ c))

    def transform_envelope(self, r):
        s = max(r - float(np.linalg.norm(self.modulation)), 0.0)
        return self.sigma ** self.dim * math.exp(-math.pi * self.sigma ** 2 * s * s)

    def value_envelope(self, r):
        s = max(r - float(np.linalg.norm(self.center)), 0.0)
        return math.exp(-math.pi * s * s / self.sigma ** 2)

    def dual(self):
        # phi_hat is sigma^n times a Gaussian of width 1/sigma centred at omega,
        # modulated by -c, up to the constant phase exp(2 pi i <omega, c>)
        return _ScaledGaussian(self)


@dataclass(frozen=True)
class _ScaledGaussian(TestFunction):
    base: Gaussian = None

    @property
    def dim(self):
        return self.base.dim

    def value(self, x):
        return self.base.transform(x)

    def transform(self, t):
        return self.base.value(-_as_points(t, self.dim))

    def transform_envelope(self, r):
        return self.base.value_envelope(r)

    def value_envelope(self, r):
        return self.base.transform_envelope(r)


@dataclass(frozen=True)
class _Bump(TestFunction):
    """Product of unit bumps rescaled to the box prod (lo_k, hi_k)."""

    lo: tuple = (-0.5,)
    hi: tuple = (0.5,)
    normalization: str = "peak"

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def centers(self) -> np.ndarray:
        return (np.array(self.lo) + np.array(self.hi)) / 2

    @property
    def halfwidths(self) -> np.ndarray:
        return (np.array(self.hi) - np.array(self.lo)) / 2

    @property
    def scale(self) -> float:
        if self.normalization == "peak":
            return 1.0
        if self.normalization == "unit_integral":
            return 1.0 / float(np.prod(self.halfwidths * BUMP_INTEGRAL))
        raise ValueError(f"unknown normalization {self.normalization!r}")

    def _compact(self, y):
        y = _as_points(y, self.dim)
        s = (y - self.centers) / self.halfwidths
        return self.scale * np.prod(_unit_bump(s), axis=1)

    def _smooth(self, x, sign: float):
        """integral of compact(y) exp(sign * 2 pi i <x, y>) dy."""
        x = _as_points(x, self.dim)
        out = np.full(len(x), self.scale, dtype=complex)
        for k in range(self.dim):
            h, c = self.halfwidths[k], self.centers[k]
            out *= h * bump_transform(h * x[:, k]) * np.exp(sign * 2j * np.pi * c * x[:, k])
        return out

    def _smooth_envelope(self, r):
        h = float(np.max(self.halfwidths))
        rr = r / math.sqrt(self.dim)
        env = _bump_envelope(h * rr)
        return self.scale * float(np.prod(self.halfwidths)) * BUMP_INTEGRAL ** (self.dim - 1) * env


@dataclass(frozen=True)
class BandlimitedBump(_Bump):
    """phi_hat is the bump supported in the box (lo, hi); phi is smooth.

    With ``normalization="unit_integral"`` phi(0) = 1.
    """

    def value(self, x):
        return self._smooth(x, +1.0)

    def transform(self, t):
        return self._compact(t).astype(complex)

    def transform_support_radius(self):
        return float(np.max(np.linalg.norm(np.stack([self.lo, self.hi]), axis=1)))

    def transform_envelope(self, r):
        return 0.0 if r >= self.transform_support_radius() else self.scale

    def value_envelope(self, r):
        return self._smooth_envelope(r)

    def dual(self):
        return CompactBump(self.lo, self.hi, self.normalization)


@dataclass(frozen=True)
class CompactBump(_Bump):
    """phi is the bump supported in the box (lo, hi); phi_hat is smooth."""

    def value(self, x):
        return self._compact(x).astype(complex)

    def transform(self, t):
        return self._smooth(t, -1.0)

    def transform_envelope(self, r):
        return self._smooth_envelope(r)

    def value_envelope(self, r):
        rad = float(np.max(np.linalg.norm(np.stack([self.lo, self.hi]), axis=1)))
        return 0.0 if r >= rad else self.scale

    def dual(self):
        lo = tuple(-h for h in self.hi)
        hi = tuple(-l for l in self.lo)
        return BandlimitedBump(lo, hi, self.normalization)


def parse_test_function(text: str, dim: int = 1) -> TestFunction:
    """``gauss:sigma[:c1,c2,...[:w1,w2,...]]`` or ``bump:lo,hi`` (1-D compact bump)."""
    parts = text.split(":")
    kind = parts[0].lower()
    if kind in ("gauss", "gaussian"):
        sigma = float(parts[1]) if len(parts) > 1 and parts[1] else 1.0
        c = [float(v) for v in parts[2].split(",")] if len(parts) > 2 else None
        w = [float(v) for v in parts[3].split(",")] if len(parts) > 3 else None
        return Gaussian.make(sigma, c, w, dim)
    if kind in ("bump", "bandbump"):
        lo, hi = (float(v) for v in parts[1].split(","))
        cls = CompactBump if kind == "bump" else BandlimitedBump
        return cls((lo,) * dim, (hi,) * dim)
    raise ValueError(f"unknown test function {text!r}")


# ---------------------------------------------------------------------------
# pairing and Poisson summation


def _radial_tail(envelope, R: float, gap: float, n: int, sup_w: float) -> float:
    """Bound of sum_{|lambda| > R} sup_w * envelope(|lambda|) for a gap-separated set.

    Each atom owns a disjoint ball of radius gap/2, so the sum is dominated by
    vol(B_{gap/2})^{-1} * integral over |x| > R - gap/2 of envelope(|x| - gap/2).
    """
    rho = gap / 2
    area = n * ball_volume(1.0, n)
    lo = max(R - rho, 0.0)

    def f(r):
        return r ** (n - 1) * envelope(max(r - rho, 0.0))

    val, _ = integrate.quad(f, lo, lo + 1.0, limit=200)
    tail, _ = integrate.quad(f, lo + 1.0, np.inf, limit=200)
    return sup_w * area * (val + tail) / ball_volume(rho, n)


@dataclass
class PairingResult:
    value: complex
    tail_bound: float
    n_atoms: int

    def __complex__(self):
        return complex(self.value)


def pair_spectrum(mu: AtomicMeasure, phi: TestFunction, tol: float = 1e-9) -> PairingResult:
    """<mu_hat, phi> = sum_lambda mu(lambda) phi_hat(lambda) with a tail bound.

    Raises TailTooLarge when atoms outside R_trunc could contribute more than ``tol``.
    """
    if not len(mu):
        return PairingResult(0j, 0.0, 0)
    vals = mu.weights * phi.transform(mu.coords)
    total = complex(np.sum(vals))
    supp = phi.transform_support_radius()
    if supp is not None and supp < mu.R_trunc:
        tail = 0.0
    else:
        gap = min_gap(mu.support) if len(mu) > 1 else 1.0
        tail = _radial_tail(phi.transform_envelope, mu.R_trunc, gap, mu.dim,
                            float(np.max(np.abs(mu.weights))))
    if tail > tol:
        raise TailTooLarge(f"tail bound {tail:.3g} exceeds {tol:.3g}; increase R_trunc")
    return PairingResult(total, tail, len(mu))


@dataclass
class PoissonReport:
    lhs: complex
    rhs: complex
    abs_error: float
    lhs_terms: int
    rhs_terms: int
    tail_bound: float

    def to_json(self) -> dict:
        return {"lhs": [self.lhs.real, self.lhs.imag], "rhs": [self.rhs.real, self.rhs.imag],
                "abs_error": self.abs_error, "lhs_terms": self.lhs_terms,
                "rhs_terms": self.rhs_terms, "tail_bound": self.tail_bound}


def _shortest(L: Lattice) -> float:
    cols = L.float_matrix.T
    r = 2 * float(np.max(np.linalg.norm(cols, axis=1)))
    _, _, pts = enumerate_arrays(L, np.zeros((1, L.n)), r)
    nz = np.linalg.norm(pts, axis=1)
    return float(np.min(nz[nz > 1e-12]))


def poisson_verify(L: Lattice, f: TestFunction, shift=None, modulation=None, R: float = 30.0,
                   tol: float = 1e-10) -> PoissonReport:
    """Both sides of sum_{L} f(lambda + a) e^{2 pi i <b, lambda + a>} = det^{-1} sum_{L*} e^{2 pi i <s, a>} f_hat(s - b)."""
    n = L.n
    a = np.zeros(n) if shift is None else np.asarray(
        shift.to_float() if isinstance(shift, ExactVector) else shift, dtype=float).reshape(n)
    b = np.zeros(n) if modulation is None else np.asarray(
        modulation.to_float() if isinstance(modulation, ExactVector) else modulation,
        dtype=float).reshape(n)
    D = dual_lattice(L)
    det = L.det_float
    _, _, lam = enumerate_arrays(L, np.zeros((1, n)), R)
    _, _, dual_pts = enumerate_arrays(D, np.zeros((1, n)), R)
    x = lam + a
    lhs_terms = f.value(x) * np.exp(2j * np.pi * (x @ b))
    rhs_terms = np.exp(2j * np.pi * (dual_pts @ a)) * f.transform(dual_pts - b)
    lhs = complex(np.sum(lhs_terms))
    rhs = complex(np.sum(rhs_terms)) / det
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    tail_l = _radial_tail(lambda r: f.value_envelope(max(r - na, 0.0)), R, _shortest(L), n, 1.0)
    tail_r = _radial_tail(lambda r: f.transform_envelope(max(r - nb, 0.0)), R, _shortest(D), n,
                          1.0) / det
    tail = tail_l + tail_r
    if tail > tol:
        raise TailTooLarge(f"truncation tails {tail:.3g} exceed tolerance {tol:.3g} at R={R}")
    return PoissonReport(lhs, rhs, abs(lhs - rhs), len(lam), len(dual_pts), tail)


# ---------------------------------------------------------------------------
# diffraction scans


def _taper(mu: AtomicMeasure, width: float | None) -> tuple[np.ndarray, float]:
    W = mu.R_trunc / 6 if width is None else float(width)
    r2 = np.sum(mu.coords ** 2, axis=1)
    return np.exp(-np.pi * r2 / W ** 2), W


def smoothed_transform(mu: AtomicMeasure, t: np.ndarray, width: float | None = None,
                       chunk: int = 2_000_000) -> np.ndarray:
    """sum_lambda mu(lambda) w(lambda) e^{-2 pi i <t, lambda>} / W^n (Gaussian taper w)."""
    w, W = _taper(mu, width)
    t = _as_points(t, mu.dim)
    x = mu.coords
    aw = mu.weights * w
    out = np.empty(len(t), dtype=complex)
    step = max(1, chunk // max(len(x), 1))
    for i in range(0, len(t), step):
        out[i:i + step] = np.exp(-2j * np.pi * (t[i:i + step] @ x.T)) @ aw
    return out / W ** mu.dim


@dataclass
class SpectrumScan:
    axes: list[np.ndarray]
    values: np.ndarray
    taper: dict
    peaks: list[tuple[list[float], float, float]]
    noise_floor: float
    nyquist_ok: bool

    @property
    def grid(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def peak_locations(self) -> np.ndarray:
        return np.array([p[0] for p in self.peaks]).reshape(len(self.peaks), len(self.axes))

    def peak_amplitudes(self) -> np.ndarray:
        return np.array([p[1] for p in self.peaks])

    def min_peak_gap(self) -> float:
        locs = self.peak_locations()
        if len(locs) < 2:
            return float("inf")
        d = np.linalg.norm(locs[:, None, :] - locs[None, :, :], axis=2)
        return float(np.min(d[np.triu_indices(len(locs), 1)]))

    def write_csv(self, path) -> None:
        g = self.grid
        v = self.values.ravel()
        n = g.shape[1]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow([f"t{i}" for i in range(n)] + ["re", "im", "abs"])
            for row, z in zip(g, v):
                wr.writerow([f"{c:.17g}" for c in row] + [f"{z.real:.17g}", f"{z.imag:.17g}",
                                                          f"{abs(z):.17g}"])

    def peaks_json(self) -> list[dict]:
        return [{"location": loc, "amplitude": amp, "width": wd} for loc, amp, wd in self.peaks]

    def to_json(self) -> dict:
        return {"taper": self.taper, "noise_floor": self.noise_floor, "nyquist_ok": self.nyquist_ok,
                "grid": [[float(a[0]), float(a[-1]), len(a)] for a in self.axes],
                "peaks": self.peaks_json()}


def _parabolic(lm, l0, lp):
    den = lm - 2 * l0 + lp
    if den >= 0:
        return 0.0, l0
    off = 0.5 * (lm - lp) / den
    return off, l0 - 0.25 * (lm - lp) * off


def diffraction_scan(mu: AtomicMeasure, grid: Sequence[tuple[float, float, int]],
                     taper_width: float | None = None, threshold: float = 5.0) -> SpectrumScan:
    """Tapered Fourier transform on a regular grid, with peak extraction.

    ``grid`` is one (lo, hi, count) triple per dimension.  A Gaussian taper
    exp(-pi |x|^2 / W^2) (default W = R_trunc / 6) is applied and the result
    divided by W^n, so a unit comb sum over L yields peaks of height 1/det(L).
    Peaks are local maxima of |values| above max(threshold * median, 1e-9 * max);
    locations and amplitudes are refined by a parabola through log|values|.
    """
    if not len(mu):
        raise ValueError("diffraction_scan of an empty measure")
    if len(grid) != mu.dim:
        raise ValueError(f"grid has {len(grid)} axes, measure dimension is {mu.dim}")
    axes = [np.linspace(lo, hi, int(cnt)) for lo, hi, cnt in grid]
    pitch = min(float(a[1] - a[0]) if len(a) > 1 else np.inf for a in axes)
    _, W = _taper(mu, taper_width)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = smoothed_transform(mu, pts, W).reshape(mesh[0].shape)
    mag = np.abs(vals)
    floor = max(threshold * float(np.median(mag)), 1e-9 * float(mag.max()))
    is_max = (mag == maximum_filter(mag, size=3, mode="constant", cval=-1.0)) & (mag > floor)
    peaks = []
    logm = np.log(np.maximum(mag, 1e-300))
    for idx in zip(*np.nonzero(is_max)):
        loc, amp, width = [], float(mag[idx]), 0.0
        la = math.log(amp)
        for d, ax in enumerate(axes):
            i = idx[d]
            if 0 < i < len(ax) - 1:
                im = list(idx); im[d] -= 1
                ip = list(idx); ip[d] += 1
                off, lv = _parabolic(logm[tuple(im)], logm[idx], logm[tuple(ip)])
                step = float(ax[1] - ax[0])
                loc.append(float(ax[i] + off * step))
                la = max(la, lv)
                curv = logm[tuple(im)] - 2 * logm[idx] + logm[tuple(ip)]
                width = max(width, step * math.sqrt(-1.0 / curv) if curv < 0 else step)
            else:
                loc.append(float(ax[i]))
        peaks.append((loc, float(math.exp(la)), width))
    peaks.sort(key=lambda p: -p[1])
    taper = {"kind": "gaussian", "width": W}
    return SpectrumScan(axes, vals, taper, peaks, floor, pitch <= 1.0 / W)


# ---------------------------------------------------------------------------
# spectral gap probes


@dataclass
class GapTestReport:
    gap: bool
    max_ratio: float
    ratios: list[float]
    probes: list[tuple[list[float], list[float]]]
    threshold: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _probe_boxes(center: np.ndarray, radius: float, count: int, puncture: float):
    """Axis-aligned boxes packed inside B_radius(center), avoiding B_puncture(center)."""
    n = len(center)
    if n == 1:
        if puncture > 0:
            half = count // 2
            edges_r = np.linspace(puncture, radius, count - half + 1)
            edges_l = np.linspace(-radius, -puncture, half + 1)
            spans = list(zip(edges_l[:-1], edges_l[1:])) + list(zip(edges_r[:-1], edges_r[1:]))
        else:
            e = np.linspace(-radius, radius, count + 1)
            spans = list(zip(e[:-1], e[1:]))
        return [([center[0] + a], [center[0] + b]) for a, b in spans]
    # n-D: cubes of a grid inscribed in the ball
    side = 2 * radius / math.sqrt(n)
    k = max(1, int(math.ceil(count ** (1.0 / n))))
    while True:
        h = side / k
        cells = []
        for idx in np.ndindex(*([k] * n)):
            lo = -side / 2 + np.array(idx) * h
            hi = lo + h
            far = np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi)))
            near = np.linalg.norm(np.where(lo * hi > 0, np.minimum(np.abs(lo), np.abs(hi)), 0.0))
            if far <= radius and near >= puncture:
                cells.append(((center + lo).tolist(), (center + hi).tolist()))
        if len(cells) >= count or k > 64:
            return cells[:count]
        k += 1


def gap_test(mu: AtomicMeasure, center, radius: float, probes: int = 20, puncture: float = 0.0,
             taper_width: float | None = None, threshold: float = VANISH_REL) -> GapTestReport:
    """Probe whether mu_hat vanishes on B_radius(center) (optionally minus B_puncture(center)).

    Each probe is a peak-normalized bump g supported in a small box inside the
    ball; the pairing <(mu w)^, g> = sum mu(lambda) w(lambda) g_hat(lambda),
    with the Gaussian taper w, is compared to sum |mu(lambda)| w(lambda).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    c = np.atleast_1d(np.asarray(center, dtype=float))
    if len(c) != mu.dim:
        raise ValueError("center dimension does not match the measure")
    w, _ = _taper(mu, taper_width)
    mass = float(np.sum(np.abs(mu.weights) * w))
    aw = mu.weights * w
    ratios, boxes = [], _probe_boxes(c, radius, probes, puncture)
    for lo, hi in boxes:
        g = CompactBump(tuple(lo), tuple(hi), "peak")
        val = complex(np.sum(aw * g.transform(mu.coords)))
        ratios.append(abs(val) / mass if mass else 0.0)
    mr = max(ratios) if ratios else 0.0
    return GapTestReport(bool(mr < threshold), mr, ratios, boxes, threshold)


# ---------------------------------------------------------------------------
# gap certificate


class InadmissibleGapInstance(ValueError):
    """The point count is too large for the density condition of the certificate."""


_PSI_NODES = 400


@lru_cache(maxsize=32)
def _psi_rule(a: float):
    s, w = _gl(_PSI_NODES)
    s = (s + 1) / 2
    w = w / 2
    beta = np.exp(-1.0 / (s * (1 - s)))
    freqs = a / 4 * s
    amps = w * beta
    return freqs, amps / amps.sum()


def psi(x: np.ndarray, a: float) -> np.ndarray:
    """Band-limited psi with spectrum in (0, a/4) and psi(0) = 1.

    psi_hat is the bump exp(-1/(t(1-t))) rescaled to (0, a/4), discretized by
    a Gauss-Legendre rule, so psi is a finite exponential sum with all
    frequencies strictly inside (0, a/4).
    """
    freqs, amps = _psi_rule(float(a))
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    out = np.empty(flat.size, dtype=complex)
    step = 20_000
    for i in range(0, flat.size, step):
        out[i:i + step] = np.exp(2j * np.pi * np.outer(flat[i:i + step], freqs)) @ amps
    out[flat == 0] = 1.0
    return out.reshape(x.shape)


def measure_gamma(a: float) -> tuple[float, float]:
    """sup |psi| over |x| in [1, 50] (pitch 0.01) and a coarse scan of [50, 200]."""
    x = np.arange(1.0, 50.0 + 1e-9, 0.01)
    g = float(np.max(np.abs(psi(x, a))))
    tail = float(np.max(np.abs(psi(np.arange(50.0, 200.0, 0.05), a))))
    return max(g, tail), tail


@dataclass
class GapCertificate:
    points: np.ndarray
    padded: np.ndarray
    R: float
    a: float
    delta: float
    gamma: float
    eps: float
    admissible: bool
    admissibility_value: float
    report: dict = field(default_factory=dict)

    @property
    def power(self) -> int:
        return int(math.floor(self.R)) + 1

    def P(self, z: np.ndarray) -> np.ndarray:
        """prod (z - z_l) / (1 - z_l) over the padded points; exactly 1 at z = 1."""
        z = np.asarray(z, dtype=complex)
        out = np.ones(z.shape, dtype=complex)
        for zl in np.exp(1j * np.pi * self.padded / self.R):
            out *= (z - zl) / (1 - zl)
        out[z == 1] = 1.0
        return out

    def phi(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        z = np.exp(1j * np.pi * x / self.R)
        return self.P(z) * psi(x / self.R, self.a) ** self.power

    def __call__(self, x):
        return self.phi(x)

    def to_json(self) -> dict:
        return {"points": self.points.tolist(), "padded": self.padded.tolist(), "R": self.R,
                "a": self.a, "delta": self.delta, "gamma": self.gamma, "eps": self.eps,
                "admissible": self.admissible, "admissibility_value": self.admissibility_value,
                "report": self.report}


def _pad_point(pts: np.ndarray, R: float, delta: float) -> float:
    """Midpoint of the widest free gap in (-R, -delta] u [delta, R)."""
    best, where = -1.0, None
    for lo, hi in ((-R, -delta), (delta, R)):
        inner = np.sort(pts[(pts > lo) & (pts < hi)])
        edges = np.concatenate([[lo], inner, [hi]])
        gaps = np.diff(edges)
        i = int(np.argmax(gaps))
        if gaps[i] > best:
            best, where = float(gaps[i]), float(0.5 * (edges[i] + edges[i + 1]))
    return where


def gap_certificate(points: Sequence[float], R: float, a: float, delta: float,
                    enforce: bool = True, verify: bool = True) -> GapCertificate:
    """Smooth phi with phi(0) = 1, phi = 0 on the given points, spectrum in (0, a).

    phi(x) = P(e^{i pi x / R}) psi(x / R)^{floor(R) + 1}.  The construction is
    admissible when eps = n / R < a / 2 and gamma (e / (delta eps))^{2 eps} < 1,
    where 2n is the point count padded to even and gamma = sup_{|x|>=1} |psi|;
    then sup_{|x|>=R} |phi| <= 1.  With ``enforce`` an inadmissible instance
    raises InadmissibleGapInstance.
    """
    pts = np.asarray(sorted(float(p) for p in points), dtype=float)
    if R < 1 or a <= 0 or delta <= 0:
        raise ValueError("need R >= 1, a > 0, delta > 0")
    if len(set(pts.tolist())) != len(pts):
        raise ValueError("points must be distinct")
    if np.any(np.abs(pts) >= R) or np.any(np.abs(pts) < delta):
        raise ValueError("points must lie in (-R, R) minus (-delta, delta)")
    padded = pts
    if len(pts) % 2:
        padded = np.sort(np.append(pts, _pad_point(pts, R, delta)))
    n = len(padded) // 2
    eps = n / R
    gamma, _ = measure_gamma(a)
    value = gamma * (math.e / (delta * eps)) ** (2 * eps) if n else gamma
    admissible = bool(eps < a / 2 and value < 1)
    if enforce and not admissible:
        raise InadmissibleGapInstance(
            f"density condition violated: eps = n/R = {eps:.4g} (need < a/2 = {a / 2:.4g}) and "
            f"gamma*(e/(delta*eps))^(2*eps) = {value:.4g} (need < 1); use fewer points or a larger R")
    cert = GapCertificate(pts, padded, float(R), float(a), float(delta), gamma, eps, admissible,
                          float(value))
    if verify:
        cert.report = verify_certificate(cert)
    return cert


def _circle_max(cert: GapCertificate, samples: int = 1 << 16) -> float:
    theta = np.linspace(0, 2 * np.pi, samples, endpoint=False)
    mags = np.abs(cert.P(np.exp(1j * theta)))
    i = int(np.argmax(mags))
    # local refinement around the best sample
    fine = theta[i] + np.linspace(-2 * np.pi / samples, 2 * np.pi / samples, 2049)
    return float(max(mags[i], np.max(np.abs(cert.P(np.exp(1j * fine))))))


def verify_certificate(cert: GapCertificate) -> dict:
    """Numerical checks of the certificate's defining properties."""
    R, a = cert.R, cert.a
    n = len(cert.padded) // 2
    phi0 = complex(cert.phi(np.zeros(1))[0])
    at_pts = float(np.max(np.abs(cert.phi(cert.points)))) if len(cert.points) else 0.0
    pmax = _circle_max(cert) if n else 1.0
    bound = (math.e * R / (cert.delta * n)) ** (2 * n) if n else 1.0
    # spectral window: extend until |psi(x/R)|^power * max|P| is negligible
    u = 2.0
    while u < 400:
        env = float(np.max(np.abs(psi(np.linspace(u, u + 1, 64), a)))) ** cert.power * max(pmax, 1)
        if env < 1e-22:
            break
        u *= 1.25
    X = u * R
    h = 1.0 / (4 * a)
    M = int(2 * math.ceil(X / h))
    x = -X + h * np.arange(M)
    vals = cert.phi(x)
    F = np.fft.fft(vals)
    t = np.fft.fftfreq(M, d=h)
    outside = (t <= 0) | (t >= a)
    mass_out = float(np.sum(np.abs(F[outside])) / np.sum(np.abs(F)))
    pitch = min(0.05, h / 2)
    xs = np.arange(R, X, pitch)
    sup_out = float(np.max(np.abs(cert.phi(np.concatenate([xs, -xs]))))) if len(xs) else 0.0
    return {"phi0": [phi0.real, phi0.imag], "phi0_exact": phi0 == 1.0, "max_abs_on_points": at_pts,
            "spectral_mass_outside": mass_out, "sup_outside_R": sup_out, "max_P_circle": pmax,
            "P_bound": bound, "P_bound_ok": bool(pmax <= bound * (1 + 1e-9)),
            "fft_halfwidth": X, "fft_samples": M}
