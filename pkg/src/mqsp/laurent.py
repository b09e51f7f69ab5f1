"""Sparse bivariate Laurent polynomials in ``a`` and ``b``.

Coefficients live in one of two backends:

* ``"exact"`` -- Gaussian rationals (:class:`ExactComplex`, a pair of
  :class:`fractions.Fraction`). Arithmetic never rounds.
* ``"float"`` -- Python ``complex`` (binary64 real and imaginary parts).

A polynomial never mixes backends. Values are immutable.
"""

from __future__ import annotations

import cmath
import enum
import math
from fractions import Fraction
from numbers import Rational
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Tuple, Union

EXACT = "exact"
FLOAT = "float"
BACKENDS = (EXACT, FLOAT)

#: Default absolute tolerance for float-backend comparisons.
FLOAT_ATOL = 1e-10

Exponent = Tuple[int, int]


class BackendMismatch(TypeError):
    """Raised when exact and float coefficients meet in one operation."""


class FormatError(ValueError):
    """Malformed serialized data. ``field`` points at the offending item."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class ExactComplex:
    """Complex number with arbitrary-precision rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def _raw(cls, re: Fraction, im: Fraction) -> "ExactComplex":
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    @classmethod
    def coerce(cls, value) -> "ExactComplex":
        if isinstance(value, ExactComplex):
            return value
        if isinstance(value, Rational):
            return cls._raw(Fraction(value), Fraction(0))
        raise BackendMismatch(f"cannot represent {value!r} exactly")

    def __add__(self, other):
        if not isinstance(other, ExactComplex):
            if isinstance(other, Rational):
                return ExactComplex._raw(self.re + other, self.im)
            return NotImplemented
        return ExactComplex._raw(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, ExactComplex):
            if isinstance(other, Rational):
                return ExactComplex._raw(self.re - other, self.im)
            return NotImplemented
        return ExactComplex._raw(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self):
        return ExactComplex._raw(-self.re, -self.im)

    def __mul__(self, other):
        if not isinstance(other, ExactComplex):
            if isinstance(other, Rational):
                return ExactComplex._raw(self.re * other, self.im * other)
            return NotImplemented
        a, b, c, d = self.re, self.im, other.re, other.im
        return ExactComplex._raw(a * c - b * d, a * d + b * c)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = ExactComplex.coerce(other)
        den = other.abs2()
        if den == 0:
            raise ZeroDivisionError("ExactComplex division by zero")
        num = self * other.conjugate()
        return ExactComplex._raw(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        return ExactComplex.coerce(other) / self

    def conjugate(self) -> "ExactComplex":
        return ExactComplex._raw(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __abs__(self) -> float:
        return math.hypot(self.re, self.im)

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, ExactComplex):
            return self.re == other.re and self.im == other.im
        if isinstance(other, Rational):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"ExactComplex({str(self.re)!r}, {str(self.im)!r})"

    def __str__(self):
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


Scalar = Union[ExactComplex, complex]

I = ExactComplex(0, 1)


def scalar_backend(value) -> str | None:
    """Backend a raw value belongs to; ``None`` for plain integers."""
    if isinstance(value, (bool, int)):
        return None
    if isinstance(value, (ExactComplex, Rational)):
        return EXACT
    if isinstance(value, (float, complex)):
        return FLOAT
    raise TypeError(f"unsupported coefficient type {type(value).__name__}")


def to_backend(value, backend: str) -> Scalar:
    """Convert ``value`` into ``backend``; exact-from-float is refused."""
    if backend == EXACT:
        return ExactComplex.coerce(value)
    return complex(value)


def conj(value: Scalar) -> Scalar:
    return value.conjugate()


def abs2(value: Scalar) -> float | Fraction:
    if isinstance(value, ExactComplex):
        return value.abs2()
    return value.real * value.real + value.imag * value.imag


class Transform(enum.Enum):
    INVERT_BOTH = "invert_both"  # (a, b) -> (1/a, 1/b)
    NEGATE_A = "negate_a"  # a -> -a
    NEGATE_B = "negate_b"  # b -> -b


class Axis(enum.Enum):
    A = "a"
    B = "b"

    @property
    def other(self) -> "Axis":
        return Axis.B if self is Axis.A else Axis.A


class Parity(enum.Enum):
    EVEN = "even"
    ODD = "odd"
    NONE = "none"


class DegreeBox(NamedTuple):
    deg_a: int
    deg_b: int

    def fits_in(self, other: "DegreeBox") -> bool:
        return self.deg_a <= other.deg_a and self.deg_b <= other.deg_b


class UniLaurent:
    """Single-variable Laurent polynomial, the slice of a :class:`BiLaurent`."""

    __slots__ = ("_terms", "backend")

    def __init__(self, terms: Mapping[int, Scalar], backend: str):
        self._terms = {k: v for k, v in terms.items() if v}
        self.backend = backend

    @property
    def terms(self) -> Mapping[int, Scalar]:
        return MappingProxyType(self._terms)

    def __getitem__(self, k: int) -> Scalar:
        return self._terms.get(k, _zero(self.backend))

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def exponents(self) -> list[int]:
        return sorted(self._terms)

    def __eq__(self, other):
        if not isinstance(other, UniLaurent):
            return NotImplemented
        return self._terms == other._terms

    def __repr__(self):
        inner = ", ".join(f"{k}: {self._terms[k]}" for k in sorted(self._terms))
        return f"UniLaurent({{{inner}}}, {self.backend!r})"


def _zero(backend: str) -> Scalar:
    return ExactComplex._raw(Fraction(0), Fraction(0)) if backend == EXACT else 0j


def _one(backend: str) -> Scalar:
    return ExactComplex._raw(Fraction(1), Fraction(0)) if backend == EXACT else 1 + 0j


class BiLaurent:
    """Finite sum of ``c[j, k] * a**j * b**k`` with ``j, k`` any integers.

    Build instances through :func:`make_poly` (or the classmethods); the
    constructor assumes its input is already canonical and backend-uniform.
    """

    __slots__ = ("_terms", "backend")

    def __init__(self, terms: Mapping[Exponent, Scalar], backend: str):
        if backend not in BACKENDS:
            raise ValueError(f"unknown backend {backend!r}")
        self._terms = {e: c for e, c in terms.items() if c}
        self.backend = backend

    @classmethod
    def zero(cls, backend: str = EXACT) -> "BiLaurent":
        return cls({}, backend)

    @classmethod
    def constant(cls, value, backend: str | None = None) -> "BiLaurent":
        return make_poly([((0, 0), value)], backend)

    @classmethod
    def monomial(cls, j: int, k: int, value=1, backend: str | None = None) -> "BiLaurent":
        return make_poly([((j, k), value)], backend)

    @property
    def terms(self) -> Mapping[Exponent, Scalar]:
        return MappingProxyType(self._terms)

    def items(self) -> list[tuple[Exponent, Scalar]]:
        """Terms in canonical (lexicographic by ``(j, k)``) order."""
        return sorted(self._terms.items())

    def __getitem__(self, exponent: Exponent) -> Scalar:
        return self._terms.get(tuple(exponent), _zero(self.backend))

    def __len__(self):
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other):
        if not isinstance(other, BiLaurent):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def __repr__(self):
        inner = ", ".join(f"{e}: {c}" for e, c in self.items())
        return f"BiLaurent({{{inner}}}, {self.backend!r})"

    # -- arithmetic -------------------------------------------------------

    def _check(self, other: "BiLaurent"):
        if self.backend != other.backend:
            raise BackendMismatch(f"{self.backend} vs {other.backend}")

    def __add__(self, other):
        if not isinstance(other, BiLaurent):
            return NotImplemented
        self._check(other)
        out = dict(self._terms)
        for e, c in other._terms.items():
            if e in out:
                out[e] = out[e] + c
            else:
                out[e] = c
        return BiLaurent(out, self.backend)

    def __neg__(self):
        return BiLaurent({e: -c for e, c in self._terms.items()}, self.backend)

    def __sub__(self, other):
        if not isinstance(other, BiLaurent):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, BiLaurent):
            self._check(other)
            out: dict[Exponent, Scalar] = {}
            for (j1, k1), c1 in self._terms.items():
                for (j2, k2), c2 in other._terms.items():
                    e = (j1 + j2, k1 + k2)
                    if e in out:
                        out[e] = out[e] + c1 * c2
                    else:
                        out[e] = c1 * c2
            return BiLaurent(out, self.backend)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, value) -> "BiLaurent":
        backend = scalar_backend(value)
        if backend is not None and backend != self.backend:
            raise BackendMismatch(f"{backend} scalar on {self.backend} polynomial")
        value = to_backend(value, self.backend)
        return BiLaurent({e: c * value for e, c in self._terms.items()}, self.backend)

    # -- structure --------------------------------------------------------

    def star(self) -> "BiLaurent":
        """Torus conjugate: ``(j, k) -> (-j, -k)`` with conjugated coefficient."""
        return BiLaurent(
            {(-j, -k): c.conjugate() for (j, k), c in self._terms.items()}, self.backend
        )

    def transform(self, kind: Transform) -> "BiLaurent":
        if kind is Transform.INVERT_BOTH:
            return BiLaurent({(-j, -k): c for (j, k), c in self._terms.items()}, self.backend)
        if kind is Transform.NEGATE_A:
            return BiLaurent(
                {(j, k): (-c if j % 2 else c) for (j, k), c in self._terms.items()}, self.backend
            )
        if kind is Transform.NEGATE_B:
            return BiLaurent(
                {(j, k): (-c if k % 2 else c) for (j, k), c in self._terms.items()}, self.backend
            )
        raise ValueError(f"unknown transform {kind!r}")

    def degree(self) -> DegreeBox:
        if not self._terms:
            return DegreeBox(0, 0)
        return DegreeBox(
            max(abs(j) for j, _ in self._terms), max(abs(k) for _, k in self._terms)
        )

    def slice(self, axis: Axis, exponent: int) -> UniLaurent:
        """Coefficient of ``a**exponent`` (as a polynomial in ``b``) or vice versa."""
        if axis is Axis.A:
            terms = {k: c for (j, k), c in self._terms.items() if j == exponent}
        else:
            terms = {j: c for (j, k), c in self._terms.items() if k == exponent}
        return UniLaurent(terms, self.backend)

    def evaluate(self, theta_a: float, theta_b: float) -> complex:
        """Value at ``a = exp(i theta_a)``, ``b = exp(i theta_b)`` (always float)."""
        total = 0j
        for (j, k), c in self._terms.items():
            total += complex(c) * cmath.exp(1j * (j * theta_a + k * theta_b))
        return total

    def evaluate_grid(self, theta_a, theta_b):
        """Values on the grid ``theta_a x theta_b`` as a 2-D numpy array."""
        import numpy as np

        theta_a = np.asarray(theta_a, dtype=float)
        theta_b = np.asarray(theta_b, dtype=float)
        out = np.zeros((theta_a.size, theta_b.size), complex)
        # canonical order keeps the floating-point sum independent of construction history
        for (j, k), c in self.items():
            out += complex(c) * np.outer(np.exp(1j * j * theta_a), np.exp(1j * k * theta_b))
        return out

    # -- float helpers ----------------------------------------------------

    def to_float(self) -> "BiLaurent":
        return BiLaurent({e: complex(c) for e, c in self._terms.items()}, FLOAT)

    def max_abs(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def chop(self, tol: float) -> "BiLaurent":
        """Drop float coefficients with modulus ``<= tol`` (exact: no-op)."""
        if self.backend == EXACT:
            return self
        return BiLaurent({e: c for e, c in self._terms.items() if abs(c) > tol}, self.backend)

    def restrict(self, box: DegreeBox) -> tuple["BiLaurent", float]:
        """Split off terms outside ``box``; returns (inside, max |outside|)."""
        inside, worst = {}, 0.0
        for (j, k), c in self._terms.items():
            if abs(j) <= box.deg_a and abs(k) <= box.deg_b:
                inside[(j, k)] = c
            else:
                worst = max(worst, abs(c))
        return BiLaurent(inside, self.backend), worst


def make_poly(
    raw_entries: Iterable[tuple[Exponent, object]], backend: str | None = None
) -> BiLaurent:
    """Canonical polynomial from ``((j, k), value)`` pairs.

    Duplicate exponents are summed and zero results dropped. The backend is
    inferred from the values (plain ints fit either) unless given; mixing
    exact and float values raises :class:`BackendMismatch`.
    """
    entries = [((int(e[0]), int(e[1])), v) for e, v in raw_entries]
    seen = {scalar_backend(v) for _, v in entries} - {None}
    if len(seen) > 1:
        raise BackendMismatch("mixed exact and float coefficients")
    if backend is None:
        backend = seen.pop() if seen else EXACT
    elif seen and seen != {backend}:
        raise BackendMismatch(f"{seen.pop()} coefficients for a {backend} polynomial")
    out: dict[Exponent, Scalar] = {}
    for e, v in entries:
        v = to_backend(v, backend)
        out[e] = out[e] + v if e in out else v
    return BiLaurent(out, backend)


def add(p: BiLaurent, q: BiLaurent) -> BiLaurent:
    return p + q


def mul(p: BiLaurent, q: BiLaurent) -> BiLaurent:
    return p * q


def star(p: BiLaurent) -> BiLaurent:
    return p.star()


def transform(p: BiLaurent, kind: Transform) -> BiLaurent:
    return p.transform(kind)


def evaluate(p: BiLaurent, theta_a: float, theta_b: float) -> complex:
    return p.evaluate(theta_a, theta_b)


def default_tol(backend: str, tol: float | None = None) -> float:
    if tol is not None:
        return tol
    return 0.0 if backend == EXACT else FLOAT_ATOL


def max_deviation(p: BiLaurent, q: BiLaurent) -> float:
    """Largest coefficient-wise modulus of ``p - q``; 0.0 iff they are equal."""
    return (p - q).max_abs()


def close(p: BiLaurent, q: BiLaurent, tol: float | None = None) -> bool:
    """Coefficient-wise equality: exact in exact mode, ``<= tol`` in float mode."""
    tol = default_tol(p.backend, tol)
    if p.backend == EXACT and tol == 0:
        return p == q
    return max_deviation(p, q) <= tol


def parity_of(p: BiLaurent, kind: Transform, tol: float | None = None) -> Parity:
    """Even/odd behaviour under ``kind``; the zero polynomial counts as even."""
    image = p.transform(kind)
    if close(image, p, tol):
        return Parity.EVEN
    if close(image, -p, tol):
        return Parity.ODD
    return Parity.NONE


def has_sign(p: BiLaurent, kind: Transform, sign: int, tol: float | None = None) -> bool:
    """True if ``transform(p, kind) == sign * p``."""
    image = p.transform(kind)
    return close(image, p if sign > 0 else -p, tol)


def slice_poly(p: BiLaurent, axis: Axis, exponent: int) -> UniLaurent:
    return p.slice(axis, exponent)


# -- serialization -------------------------------------------------------


def scalar_to_json(value: Scalar) -> tuple:
    if isinstance(value, ExactComplex):
        return str(value.re), str(value.im)
    return value.real, value.imag


def parse_fraction(text, field: str) -> Fraction:
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise FormatError(field, f"expected a fraction string, got {text!r}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(field, f"bad fraction {text!r}") from exc


def parse_float(value, field: str) -> float:
    if isinstance(value, bool):
        raise FormatError(field, f"expected a number, got {value!r}")
    try:
        out = float(value)
    except (TypeError, ValueError) as exc:
        raise FormatError(field, f"expected a number, got {value!r}") from exc
    if not math.isfinite(out):
        raise FormatError(field, "non-finite value")
    return out


def poly_to_json(p: BiLaurent) -> dict:
    entries = []
    for (j, k), c in p.items():
        re, im = scalar_to_json(c)
        entries.append({"j": j, "k": k, "re": re, "im": im})
    return {"backend": p.backend, "entries": entries}


def poly_from_json(obj, field: str = "$") -> BiLaurent:
    if not isinstance(obj, dict):
        raise FormatError(field, "expected an object")
    backend = obj.get("backend")
    if backend not in BACKENDS:
        raise FormatError(f"{field}.backend", f"expected 'exact' or 'float', got {backend!r}")
    entries = obj.get("entries")
    if not isinstance(entries, list):
        raise FormatError(f"{field}.entries", "expected a list")
    raw = []
    for idx, item in enumerate(entries):
        where = f"{field}.entries[{idx}]"
        if not isinstance(item, dict):
            raise FormatError(where, "expected an object")
        for key in ("j", "k", "re", "im"):
            if key not in item:
                raise FormatError(f"{where}.{key}", "missing")
        j, k = item["j"], item["k"]
        if isinstance(j, bool) or not isinstance(j, int):
            raise FormatError(f"{where}.j", f"expected an integer, got {j!r}")
        if isinstance(k, bool) or not isinstance(k, int):
            raise FormatError(f"{where}.k", f"expected an integer, got {k!r}")
        if backend == EXACT:
            value = ExactComplex._raw(
                parse_fraction(item["re"], f"{where}.re"), parse_fraction(item["im"], f"{where}.im")
            )
        else:
            value = complex(
                parse_float(item["re"], f"{where}.re"), parse_float(item["im"], f"{where}.im")
            )
        raw.append(((j, k), value))
    return make_poly(raw, backend)
