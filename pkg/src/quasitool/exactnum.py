"""Exact arithmetic over a declared Q-basis of real numbers.

A real number is stored as a rational vector ``(q_0, q_1, ...)`` standing for
``q_0 * 1 + q_1 * b_1 + ...`` where ``1, b_1, ...`` are generators whose
Q-linear independence is taken as an axiom.  With that axiom, equality,
rationality and integrality are decidable by looking at coefficients.

Generators are named by tags: ``"1"``, ``"tau"`` (golden ratio) and
``"sqrtN"`` for a squarefree integer ``N``.  A basis built from tags gets a
multiplication table whenever every pairwise product of generators falls back
into the span of the basis (quadratic fields, the biquadratic field
``Q(sqrt2, sqrt3)``, ...).
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Sequence

import mpmath
import numpy as np

__all__ = [
    "BasisMismatch",
    "NoMultiplicationTable",
    "RealBasis",
    "ExactReal",
    "ExactVector",
    "MP",
    "basis",
    "er",
    "ev",
    "parse_exact",
    "inner_is_integer",
    "unit_phase",
]

# working precision for numeric evaluation of exact values
MP = mpmath.MPContext()
MP.prec = 128


class BasisMismatch(ValueError):
    """Raised when two exact values cannot be placed in a common basis."""


class NoMultiplicationTable(ArithmeticError):
    """Raised when an exact product is requested over a table-less basis."""


_SQRT_TAG = re.compile(r"^sqrt(\d+)$")


def _squarefree_split(n: int) -> tuple[int, int]:
    """Write n = s**2 * core with core squarefree; return (s, core)."""
    s, core, p = 1, n, 2
    while p * p <= core:
        while core % (p * p) == 0:
            core //= p * p
            s *= p
        p += 1
    return s, core


def _tag_value(tag: str):
    if tag == "1":
        return MP.mpf(1)
    if tag == "tau":
        return (1 + MP.sqrt(5)) / 2
    m = _SQRT_TAG.match(tag)
    if m:
        n = int(m.group(1))
        s, core = _squarefree_split(n)
        if s != 1 or core == 1:
            raise ValueError(f"generator {tag!r} is not sqrt of a squarefree integer > 1")
        return MP.sqrt(n)
    raise ValueError(f"unknown generator tag {tag!r}")


def _tag_key(tag: str) -> tuple:
    if tag == "1":
        return (0, 0)
    if tag == "tau":
        return (1, 0)
    return (2, int(_SQRT_TAG.match(tag).group(1)))


def _product_in(tags: tuple[str, ...], a: str, b: str) -> tuple[Fraction, ...] | None:
    """Coefficients of generator product a*b over ``tags``, or None."""
    index = {t: i for i, t in enumerate(tags)}
    out = [Fraction(0)] * len(tags)
    if a == "1" or b == "1":
        other = b if a == "1" else a
        out[index[other]] = Fraction(1)
        return tuple(out)
    if a == "tau" and b == "tau":
        out[index["1"]] += 1
        out[index["tau"]] += 1
        return tuple(out)
    if a == "tau" or b == "tau":
        return None
    na = int(_SQRT_TAG.match(a).group(1))
    nb = int(_SQRT_TAG.match(b).group(1))
    s, core = _squarefree_split(na * nb)
    if core == 1:
        out[index["1"]] = Fraction(s)
        return tuple(out)
    tag = f"sqrt{core}"
    if tag not in index:
        return None
    out[index[tag]] = Fraction(s)
    return tuple(out)


class RealBasis:
    """Ordered generators ``1 = b_0, b_1, ...`` with high-precision values.

    Use :func:`basis` to obtain instances; bases are interned so identity
    comparison is equality.
    """

    __slots__ = ("tags", "values", "float_values", "table", "_index")

    def __init__(self, tags: tuple[str, ...]):
        if not tags or tags[0] != "1":
            raise ValueError("generator 0 must be the constant 1")
        if len(set(tags)) != len(tags):
            raise ValueError(f"duplicate generator tags in {tags}")
        if "tau" in tags and "sqrt5" in tags:
            raise ValueError("tau and sqrt5 are Q-linearly dependent")
        self.tags = tags
        self.values = tuple(_tag_value(t) for t in tags)
        self.float_values = np.array([float(v) for v in self.values])
        self._index = {t: i for i, t in enumerate(tags)}
        table = {}
        for i, a in enumerate(tags):
            for j in range(i, len(tags)):
                prod = _product_in(tags, a, tags[j])
                if prod is None:
                    table = None
                    break
                table[i, j] = table[j, i] = prod
            if table is None:
                break
        self.table = table

    @property
    def dim(self) -> int:
        return len(self.tags)

    @property
    def has_table(self) -> bool:
        return self.table is not None

    def index(self, tag: str) -> int:
        return self._index[tag]

    def __contains__(self, tag: str) -> bool:
        return tag in self._index

    def __repr__(self) -> str:
        return f"RealBasis({', '.join(self.tags)})"

    def __reduce__(self):
        return (basis, self.tags)


@lru_cache(maxsize=None)
def _basis_cached(tags: tuple[str, ...]) -> RealBasis:
    return RealBasis(tags)


def basis(*tags: str) -> RealBasis:
    """Interned basis over ``1`` plus the given generator tags (any order)."""
    if len(tags) == 1 and not isinstance(tags[0], str):
        tags = tuple(tags[0])
    rest = sorted({t for t in tags if t != "1"}, key=_tag_key)
    return _basis_cached(("1", *rest))


QQ = basis()


def _common_basis(a: RealBasis, b: RealBasis) -> RealBasis:
    if a is b:
        return a
    try:
        return basis(*a.tags, *b.tags)
    except ValueError as exc:
        raise BasisMismatch(f"cannot combine {a} and {b}: {exc}") from None


def _as_fraction(q) -> Fraction:
    if isinstance(q, Fraction):
        return q
    if isinstance(q, (int, Rational)):
        return Fraction(q)
    if isinstance(q, str):
        return Fraction(q)
    raise TypeError(f"expected a rational number, got {type(q).__name__}")


class ExactReal:
    """Immutable real number ``sum_i coeffs[i] * generator_i``."""

    __slots__ = ("basis", "coeffs", "_hash")

    def __init__(self, basis_: RealBasis, coeffs: Sequence):
        coeffs = tuple(_as_fraction(c) for c in coeffs)
        if len(coeffs) != basis_.dim:
            raise ValueError(f"expected {basis_.dim} coefficients, got {len(coeffs)}")
        self.basis = basis_
        self.coeffs = coeffs
        self._hash = None

    @classmethod
    def rational(cls, q, basis_: RealBasis = QQ) -> ExactReal:
        c = [Fraction(0)] * basis_.dim
        c[0] = _as_fraction(q)
        return cls(basis_, c)

    @classmethod
    def generator(cls, tag: str, basis_: RealBasis | None = None) -> ExactReal:
        b = basis_ if basis_ is not None else basis(tag)
        c = [Fraction(0)] * b.dim
        c[b.index(tag)] = Fraction(1)
        return cls(b, c)

    # -- coercion -----------------------------------------------------------
    def in_basis(self, target: RealBasis) -> ExactReal:
        """Re-express over a basis that contains all of this value's tags."""
        if target is self.basis:
            return self
        c = [Fraction(0)] * target.dim
        for tag, q in zip(self.basis.tags, self.coeffs):
            if q:
                if tag not in target:
                    raise BasisMismatch(f"generator {tag!r} missing from {target}")
                c[target.index(tag)] = q
        return ExactReal(target, c)

    def _coerce(self, other) -> tuple[ExactReal, ExactReal]:
        if not isinstance(other, ExactReal):
            other = ExactReal.rational(_as_fraction(other), self.basis)
        b = _common_basis(self.basis, other.basis)
        return self.in_basis(b), other.in_basis(b)

    # -- predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def is_integer(self) -> bool:
        return self.is_rational() and self.coeffs[0].denominator == 1

    @property
    def rational_part(self) -> Fraction:
        return self.coeffs[0]

    def irrational_part(self) -> ExactReal:
        return ExactReal(self.basis, (Fraction(0), *self.coeffs[1:]))

    def terms(self) -> dict[str, Fraction]:
        return {t: q for t, q in zip(self.basis.tags, self.coeffs) if q}

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        try:
            a, b = self._coerce(other)
        except TypeError:
            return NotImplemented
        return ExactReal(a.basis, [x + y for x, y in zip(a.coeffs, b.coeffs)])

    __radd__ = __add__

    def __neg__(self):
        return ExactReal(self.basis, [-x for x in self.coeffs])

    def __sub__(self, other):
        try:
            a, b = self._coerce(other)
        except TypeError:
            return NotImplemented
        return ExactReal(a.basis, [x - y for x, y in zip(a.coeffs, b.coeffs)])

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, q) -> ExactReal:
        q = _as_fraction(q)
        return ExactReal(self.basis, [q * x for x in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, Rational)):
            return self.scale(other)
        if not isinstance(other, ExactReal):
            return NotImplemented
        if other.is_rational():
            return self.scale(other.coeffs[0])
        if self.is_rational():
            return other.scale(self.coeffs[0])
        a, b = self._coerce(other)
        table = a.basis.table
        if table is None:
            raise NoMultiplicationTable(
                f"{a.basis} has no multiplication table; evaluate numerically instead"
            )
        out = [Fraction(0)] * a.basis.dim
        for i, x in enumerate(a.coeffs):
            if not x:
                continue
            for j, y in enumerate(b.coeffs):
                if not y:
                    continue
                xy = x * y
                for k, t in enumerate(table[i, j]):
                    if t:
                        out[k] += xy * t
        return ExactReal(a.basis, out)

    __rmul__ = __mul__

    def inverse(self) -> ExactReal:
        """Multiplicative inverse; exact over rationals or table bases."""
        if self.is_zero():
            raise ZeroDivisionError("inverse of exact zero")
        if self.is_rational():
            return ExactReal.rational(1 / self.coeffs[0], self.basis)
        b = self.basis
        if b.table is None:
            raise NoMultiplicationTable(f"cannot invert over {b} without a multiplication table")
        d = b.dim
        # columns: self * generator_j expressed in the basis
        cols = []
        for j in range(d):
            e = [Fraction(0)] * d
            e[j] = Fraction(1)
            cols.append((self * ExactReal(b, e)).coeffs)
        mat = [[cols[j][i] for j in range(d)] for i in range(d)]
        rhs = [Fraction(1)] + [Fraction(0)] * (d - 1)
        return ExactReal(b, solve_rational(mat, rhs))

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, Rational)):
            return self.scale(1 / _as_fraction(other))
        if isinstance(other, ExactReal):
            return self * other.inverse()
        return NotImplemented

    def __rtruediv__(self, other):
        return self.inverse() * other

    # -- comparison ---------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.is_rational() and self.coeffs[0] == other
        if not isinstance(other, ExactReal):
            return NotImplemented
        if other.basis is self.basis:
            return self.coeffs == other.coeffs
        return self.terms() == other.terms()

    def __hash__(self):
        if self._hash is None:
            t = self.terms()
            if len(t) <= 1 and "1" in t or not t:
                self._hash = hash(t.get("1", Fraction(0)))
            else:
                self._hash = hash(frozenset(t.items()))
        return self._hash

    def sign(self) -> int:
        if self.is_zero():
            return 0
        v = self.to_mpf()
        if v == 0:  # pragma: no cover - would contradict independence at 128 bits
            raise ArithmeticError("nonzero exact value evaluates to 0 at working precision")
        return 1 if v > 0 else -1

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def floor(self) -> int:
        if self.is_rational():
            return math.floor(self.coeffs[0])
        return int(MP.floor(self.to_mpf()))

    # -- numerics -----------------------------------------------------------
    def to_mpf(self):
        return MP.fsum(MP.mpf(q.numerator) / q.denominator * v
                       for q, v in zip(self.coeffs, self.basis.values) if q)

    def __float__(self):
        if self.is_rational():
            return float(self.coeffs[0])
        return float(self.to_mpf())

    def frac_mpf(self):
        """Fractional part, with the rational part reduced exactly first."""
        q = self.coeffs[0]
        shifted = ExactReal(self.basis, (q - math.floor(q), *self.coeffs[1:]))
        v = shifted.to_mpf()
        return v - MP.floor(v)

    def __repr__(self):
        return f"ExactReal({self})"

    def __str__(self):
        parts = []
        for tag, q in zip(self.basis.tags, self.coeffs):
            if not q:
                continue
            if tag == "1":
                parts.append(str(q))
            elif q == 1:
                parts.append(tag)
            elif q == -1:
                parts.append(f"-{tag}")
            else:
                parts.append(f"{q}*{tag}")
        if not parts:
            return "0"
        return "+".join(parts).replace("+-", "-")

    # -- serialization ------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "basis": list(self.basis.tags),
            "coeffs": [[str(q.numerator), str(q.denominator)] for q in self.coeffs],
        }

    @classmethod
    def from_json(cls, obj: dict) -> ExactReal:
        b = basis(*obj["basis"])
        if b.tags != tuple(obj["basis"]):
            got = dict(zip(obj["basis"], obj["coeffs"]))
            coeffs = [Fraction(int(got[t][0]), int(got[t][1])) if t in got else 0 for t in b.tags]
        else:
            coeffs = [Fraction(int(n), int(d)) for n, d in obj["coeffs"]]
        return cls(b, coeffs)


def solve_rational(mat: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination over Q for a square nonsingular system."""
    n = len(mat)
    a = [list(row) + [r] for row, r in zip(mat, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("singular rational system")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]


def er(value, basis_: RealBasis | None = None) -> ExactReal:
    """Build an ExactReal from an int, Fraction, string expression or ExactReal."""
    if isinstance(value, ExactReal):
        x = value
    elif isinstance(value, str):
        x = parse_exact(value)
    else:
        x = ExactReal.rational(_as_fraction(value))
    if basis_ is not None:
        x = x.in_basis(_common_basis(x.basis, basis_))
    return x


_TERM = re.compile(
    r"""^\s*(?P<sign>[+-]?)\s*
        (?:(?P<num>\d+(?:/\d+)?)\s*\*?\s*)?
        (?P<gen>tau|sqrt\d+)?
        (?:\s*/\s*(?P<den>\d+))?\s*$""",
    re.VERBOSE,
)


def parse_exact(text: str) -> ExactReal:
    """Parse expressions such as ``"1/3+sqrt2"``, ``"2*tau-1"``, ``"-sqrt3/2"``."""
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty exact expression")
    pieces = re.findall(r"[+-]?[^+-]+", s)
    if "".join(pieces) != s:
        raise ValueError(f"cannot parse exact expression {text!r}")
    total = ExactReal.rational(0)
    for piece in pieces:
        m = _TERM.match(piece)
        if not m or (m.group("num") is None and m.group("gen") is None):
            raise ValueError(f"cannot parse term {piece!r} in {text!r}")
        q = Fraction(m.group("num")) if m.group("num") else Fraction(1)
        if m.group("den"):
            q /= int(m.group("den"))
        if m.group("sign") == "-":
            q = -q
        if m.group("gen"):
            total = total + ExactReal.generator(m.group("gen")).scale(q)
        else:
            total = total + q
    return total


class ExactVector:
    """Immutable vector of ExactReals sharing one basis."""

    __slots__ = ("entries", "_hash")

    def __init__(self, entries: Iterable):
        ents = [e if isinstance(e, ExactReal) else er(e) for e in entries]
        if not ents:
            raise ValueError("ExactVector needs dimension >= 1")
        b = ents[0].basis
        for e in ents[1:]:
            if e.basis is not b:
                b = _common_basis(b, e.basis)
        self.entries = tuple(e.in_basis(b) for e in ents)
        self._hash = None

    @property
    def basis(self) -> RealBasis:
        return self.entries[0].basis

    @property
    def dim(self) -> int:
        return len(self.entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def in_basis(self, b: RealBasis) -> ExactVector:
        return ExactVector(e.in_basis(b) for e in self.entries)

    def _check(self, other: ExactVector):
        if not isinstance(other, ExactVector):
            other = ExactVector(other)
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return other

    def __add__(self, other):
        other = self._check(other)
        return ExactVector(a + b for a, b in zip(self.entries, other.entries))

    def __sub__(self, other):
        other = self._check(other)
        return ExactVector(a - b for a, b in zip(self.entries, other.entries))

    def __neg__(self):
        return ExactVector(-a for a in self.entries)

    def scale(self, q) -> ExactVector:
        return ExactVector(a.scale(q) for a in self.entries)

    def dot_int(self, m: Sequence[int]) -> ExactReal:
        if len(m) != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {len(m)}")
        out = ExactReal.rational(0, self.basis)
        for a, k in zip(self.entries, m):
            if k:
                out = out + a.scale(int(k))
        return out

    def dot(self, other: ExactVector) -> ExactReal:
        other = self._check(other)
        out = ExactReal.rational(0)
        for a, b in zip(self.entries, other.entries):
            out = out + a * b
        return out

    def dot_mpf(self, other: ExactVector):
        """High-precision numeric inner product (works without a table)."""
        other = self._check(other)
        return MP.fsum(a.to_mpf() * b.to_mpf() for a, b in zip(self.entries, other.entries))

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries)

    def is_rational(self) -> bool:
        return all(e.is_rational() for e in self.entries)

    def to_float(self) -> np.ndarray:
        return np.array([float(e) for e in self.entries])

    def __eq__(self, other):
        if not isinstance(other, ExactVector):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.entries)
        return self._hash

    def __repr__(self):
        return f"ExactVector({', '.join(str(e) for e in self.entries)})"

    def to_json(self) -> list:
        return [e.to_json() for e in self.entries]

    @classmethod
    def from_json(cls, obj: list) -> ExactVector:
        return cls(ExactReal.from_json(e) for e in obj)


def ev(*values) -> ExactVector:
    """Shorthand: ``ev("sqrt2", "1/2")`` or ``ev(1, 0)``."""
    if len(values) == 1 and isinstance(values[0], (list, tuple)):
        values = values[0]
    return ExactVector(er(v) for v in values)


def inner_is_integer(theta: ExactVector, m: Sequence[int]) -> tuple[bool, ExactReal]:
    """Exact test of whether <theta, m> is an integer; returns (flag, value)."""
    value = theta.dot_int(m)
    return value.is_integer(), value


_QUARTER_PHASES = {
    Fraction(0): 1 + 0j,
    Fraction(1, 4): 1j,
    Fraction(1, 2): -1 + 0j,
    Fraction(3, 4): -1j,
}


def unit_phase(x) -> complex:
    """``exp(2*pi*i*x)`` for an ExactReal (or rational), reducing mod 1 exactly.

    Rational multiples of 1/4 return the exact values 1, i, -1, -i.
    """
    if not isinstance(x, ExactReal):
        x = ExactReal.rational(_as_fraction(x))
    if x.is_rational():
        q = x.coeffs[0]
        r = q - math.floor(q)
        if r in _QUARTER_PHASES:
            return _QUARTER_PHASES[r]
        return complex(MP.expjpi(2 * (MP.mpf(r.numerator) / r.denominator)))
    return complex(MP.expjpi(2 * x.frac_mpf()))
