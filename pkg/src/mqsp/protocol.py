"""M-QSP protocols and the polynomial pairs they produce.

A pair ``(P, Q)`` stands for the SU(2)-shaped Laurent matrix
``[[P, Q], [-Q*, P*]]``.  A protocol interleaves the signal operators
``A(a)``, ``B(b)`` with phase gates ``exp(i phi sigma_z)``::

    U = W(phi_0) S_1 W(phi_1) S_2 ... S_n W(phi_n),   S_k = A if s_k else B
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .laurent import (
    EXACT,
    FLOAT,
    Axis,
    BackendMismatch,
    BiLaurent,
    DegreeBox,
    ExactComplex,
    FormatError,
    Scalar,
    make_poly,
    parse_float,
    parse_fraction,
    poly_from_json,
    poly_to_json,
    scalar_backend,
)

#: Unit-modulus tolerance for float phases.
UNIT_TOL = 1e-12
#: Largest out-of-box coefficient tolerated when a float peel drops degree.
PEEL_TOL = 1e-8


class DegreeNotReduced(ValueError):
    """A peel left terms outside the reduced degree box."""

    def __init__(self, axis: Axis, residual, message: str | None = None):
        super().__init__(message or f"peel along {axis.value} left residual {residual}")
        self.axis = axis
        self.residual = residual


def normalize_angle(theta: float) -> float:
    """Reduce an angle to ``(-pi, pi]``."""
    theta = math.remainder(theta, 2 * math.pi)
    if theta <= -math.pi:
        theta += 2 * math.pi
    return theta


class UnitPhase:
    """The unit-modulus scalar ``exp(i phi)``.

    Exact phases are Gaussian rationals with ``re**2 + im**2 == 1``; float
    phases carry the angle reduced to ``(-pi, pi]``.
    """

    __slots__ = ("value", "_angle")

    def __init__(self, value, angle: float | None = None):
        backend = scalar_backend(value)
        if backend == EXACT or backend is None:
            value = ExactComplex.coerce(value)
            if value.abs2() != 1:
                raise ValueError(f"phase {value} is not unit modulus")
        else:
            value = complex(value)
            if abs(abs(value) - 1.0) > UNIT_TOL:
                raise ValueError(f"phase {value} is not unit modulus")
        self.value: Scalar = value
        self._angle = angle

    @classmethod
    def exact(cls, re, im=0) -> "UnitPhase":
        return cls(ExactComplex(re, im))

    @classmethod
    def from_angle(cls, radians: float) -> "UnitPhase":
        theta = normalize_angle(float(radians))
        return cls(cmath.exp(1j * theta), angle=theta)

    @classmethod
    def one(cls, backend: str = EXACT) -> "UnitPhase":
        return cls(ExactComplex(1)) if backend == EXACT else cls.from_angle(0.0)

    @property
    def backend(self) -> str:
        return EXACT if isinstance(self.value, ExactComplex) else FLOAT

    @property
    def angle(self) -> float:
        if self._angle is None:
            return normalize_angle(cmath.phase(complex(self.value)))
        return self._angle

    def conjugate(self) -> "UnitPhase":
        if self.backend == EXACT:
            return UnitPhase(self.value.conjugate())
        return UnitPhase.from_angle(-self.angle)

    def square(self) -> Scalar:
        return self.value * self.value

    def negated(self) -> "UnitPhase":
        """The other square root of ``self.square()`` (angle shifted by pi)."""
        if self.backend == EXACT:
            return UnitPhase(-self.value)
        return UnitPhase.from_angle(self.angle + math.pi)

    def in_backend(self, backend: str) -> "UnitPhase":
        if backend == self.backend:
            return self
        if backend == FLOAT:
            return UnitPhase(complex(self.value))
        raise BackendMismatch("float phase cannot be used in exact mode")

    def __eq__(self, other):
        if not isinstance(other, UnitPhase):
            return NotImplemented
        return self.value == other.value

    def __hash__(self):
        return hash(self.value)

    def __repr__(self):
        if self.backend == EXACT:
            return f"UnitPhase.exact({str(self.value.re)!r}, {str(self.value.im)!r})"
        return f"UnitPhase.from_angle({self.angle!r})"

    def to_json(self) -> dict:
        if self.backend == EXACT:
            return {"kind": "exact", "re": str(self.value.re), "im": str(self.value.im)}
        return {"kind": "angle", "radians": self.angle}

    @classmethod
    def from_json(cls, obj, field: str = "$") -> "UnitPhase":
        if not isinstance(obj, dict):
            raise FormatError(field, "expected an object")
        kind = obj.get("kind")
        try:
            if kind == "exact":
                for key in ("re", "im"):
                    if key not in obj:
                        raise FormatError(f"{field}.{key}", "missing")
                return cls.exact(
                    parse_fraction(obj["re"], f"{field}.re"), parse_fraction(obj["im"], f"{field}.im")
                )
            if kind == "angle":
                if "radians" not in obj:
                    raise FormatError(f"{field}.radians", "missing")
                return cls.from_angle(parse_float(obj["radians"], f"{field}.radians"))
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(field, str(exc)) from exc
        raise FormatError(f"{field}.kind", f"expected 'exact' or 'angle', got {kind!r}")


@dataclass(frozen=True)
class Protocol:
    """Signal selection bits ``s`` (1 = A, 0 = B) and phases ``phi_0..phi_n``."""

    s: tuple[int, ...]
    phases: tuple[UnitPhase, ...]

    def __post_init__(self):
        object.__setattr__(self, "s", tuple(int(x) for x in self.s))
        object.__setattr__(self, "phases", tuple(self.phases))
        if any(x not in (0, 1) for x in self.s):
            raise ValueError("s must be a bit string")
        if len(self.phases) != len(self.s) + 1:
            raise ValueError(
                f"need {len(self.s) + 1} phases for {len(self.s)} signal slots, got {len(self.phases)}"
            )

    @property
    def n(self) -> int:
        return len(self.s)

    @property
    def m(self) -> int:
        return sum(self.s)

    @property
    def backend(self) -> str:
        return EXACT if all(ph.backend == EXACT for ph in self.phases) else FLOAT

    def to_json(self) -> dict:
        return {"s": list(self.s), "phases": [ph.to_json() for ph in self.phases]}

    @classmethod
    def from_json(cls, obj, field: str = "$") -> "Protocol":
        if not isinstance(obj, dict):
            raise FormatError(field, "expected an object")
        s = obj.get("s")
        if not isinstance(s, list) or any(x not in (0, 1) or isinstance(x, bool) for x in s):
            raise FormatError(f"{field}.s", "expected a list of 0/1 integers")
        phases = obj.get("phases")
        if not isinstance(phases, list):
            raise FormatError(f"{field}.phases", "expected a list")
        parsed = [UnitPhase.from_json(ph, f"{field}.phases[{i}]") for i, ph in enumerate(phases)]
        if len(parsed) != len(s) + 1:
            raise FormatError(f"{field}.phases", f"expected {len(s) + 1} phases, got {len(parsed)}")
        return cls(tuple(s), tuple(parsed))


@dataclass(frozen=True)
class PolyPair:
    """Entries ``P``, ``Q`` of ``[[P, Q], [-Q*, P*]]`` with declared degrees.

    ``n`` is the declared total degree and ``m`` the declared degree in ``a``
    (so the declared box is ``(m, n - m)``).
    """

    p: BiLaurent
    q: BiLaurent
    n: int
    m: int

    def __post_init__(self):
        if self.p.backend != self.q.backend:
            raise BackendMismatch("P and Q must share a backend")
        if self.n < 0 or not 0 <= self.m <= self.n:
            raise ValueError(f"invalid declared degrees n={self.n}, m={self.m}")

    @classmethod
    def identity(cls, backend: str = EXACT) -> "PolyPair":
        return cls(make_poly([((0, 0), 1)], backend), BiLaurent.zero(backend), 0, 0)

    @property
    def backend(self) -> str:
        return self.p.backend

    @property
    def box(self) -> DegreeBox:
        return DegreeBox(self.m, self.n - self.m)

    def declared(self, axis: Axis) -> int:
        return self.m if axis is Axis.A else self.n - self.m

    def to_float(self) -> "PolyPair":
        return PolyPair(self.p.to_float(), self.q.to_float(), self.n, self.m)

    def scale(self, value) -> "PolyPair":
        """Multiply the whole matrix by a real scalar (e.g. a global sign)."""
        return PolyPair(self.p.scale(value), self.q.scale(value), self.n, self.m)

    def matrix(self, theta_a: float, theta_b: float) -> np.ndarray:
        p = self.p.evaluate(theta_a, theta_b)
        q = self.q.evaluate(theta_a, theta_b)
        return np.array([[p, q], [-q.conjugate(), p.conjugate()]])

    def to_json(self) -> dict:
        return {"p": poly_to_json(self.p), "q": poly_to_json(self.q), "n": self.n, "m": self.m}

    @classmethod
    def from_json(cls, obj, field: str = "$") -> "PolyPair":
        if not isinstance(obj, dict):
            raise FormatError(field, "expected an object")
        for key in ("p", "q", "n", "m"):
            if key not in obj:
                raise FormatError(f"{field}.{key}", "missing")
        for key in ("n", "m"):
            if isinstance(obj[key], bool) or not isinstance(obj[key], int):
                raise FormatError(f"{field}.{key}", f"expected an integer, got {obj[key]!r}")
        p = poly_from_json(obj["p"], f"{field}.p")
        q = poly_from_json(obj["q"], f"{field}.q")
        if p.backend != q.backend:
            raise FormatError(f"{field}.q.backend", "P and Q backends differ")
        n, m = obj["n"], obj["m"]
        if n < 0 or not 0 <= m <= n:
            raise FormatError(f"{field}.m", f"need 0 <= m <= n, got n={n}, m={m}")
        return cls(p, q, n, m)


def _half_sum_diff(axis: Axis, backend: str) -> tuple[BiLaurent, BiLaurent]:
    """``((x + 1/x)/2, (x - 1/x)/2)`` for ``x = a`` or ``b``."""
    half = Fraction(1, 2) if backend == EXACT else 0.5
    if axis is Axis.A:
        up, down = (1, 0), (-1, 0)
    else:
        up, down = (0, 1), (0, -1)
    cos_part = make_poly([(up, half), (down, half)], backend)
    sin_part = make_poly([(up, half), (down, -half)], backend)
    return cos_part, sin_part


def signal(axis: Axis, backend: str = EXACT) -> PolyPair:
    """The signal operator ``A`` (or ``B``) as a pair: ``P = (x+1/x)/2``, ``Q = (x-1/x)/2``."""
    cos_part, sin_part = _half_sum_diff(axis, backend)
    return PolyPair(cos_part, sin_part, 1, 1 if axis is Axis.A else 0)


def phase_gate(phase: UnitPhase, backend: str | None = None) -> PolyPair:
    backend = backend or phase.backend
    w = phase.in_backend(backend).value
    return PolyPair(make_poly([((0, 0), w)], backend), BiLaurent.zero(backend), 0, 0)


def compose(left: PolyPair, right: PolyPair) -> PolyPair:
    """Matrix product of two SU(2)-shaped Laurent matrices."""
    p = left.p * right.p - left.q * right.q.star()
    q = left.p * right.q + left.q * right.p.star()
    return PolyPair(p, q, left.n + right.n, left.m + right.m)


def build(prot: Protocol, backend: str | None = None) -> PolyPair:
    """Multiply out the protocol left to right, starting with ``W(phi_0)``."""
    backend = backend or prot.backend
    signals = {Axis.A: signal(Axis.A, backend), Axis.B: signal(Axis.B, backend)}
    out = phase_gate(prot.phases[0], backend)
    for bit, phase in zip(prot.s, prot.phases[1:]):
        out = compose(out, signals[Axis.A if bit else Axis.B])
        out = compose(out, phase_gate(phase, backend))
    return out


def _phase_value(pair: PolyPair, phase: UnitPhase) -> Scalar:
    return phase.in_backend(pair.backend).value


def step_extend(pair: PolyPair, axis: Axis, phase: UnitPhase) -> PolyPair:
    """Right-multiply by the signal on ``axis`` followed by ``W(phi)``."""
    w = _phase_value(pair, phase)
    c, s = _half_sum_diff(axis, pair.backend)
    p = (c * pair.p + s * pair.q).scale(w)
    q = (s * pair.p + c * pair.q).scale(w.conjugate())
    return PolyPair(p, q, pair.n + 1, pair.m + (axis is Axis.A))


def peel_raw(pair: PolyPair, axis: Axis, phase: UnitPhase) -> tuple[BiLaurent, BiLaurent]:
    """``U W(-phi) S^dagger`` without any degree bookkeeping."""
    w = _phase_value(pair, phase)
    wc = w.conjugate()
    c, s = _half_sum_diff(axis, pair.backend)
    p = c * pair.p.scale(wc) - s * pair.q.scale(w)
    q = c * pair.q.scale(w) - s * pair.p.scale(wc)
    return p, q


def step_peel(
    pair: PolyPair, axis: Axis, phase: UnitPhase, tol: float = PEEL_TOL
) -> PolyPair:
    """Undo :func:`step_extend`: right-multiply by ``W(-phi)`` and the signal's inverse.

    The declared degree on ``axis`` drops by one.  Raises
    :class:`DegreeNotReduced` if the extremal terms do not cancel (exactly in
    exact mode, to within ``tol`` in float mode).
    """
    if pair.declared(axis) < 1:
        raise DegreeNotReduced(axis, None, f"declared {axis.value}-degree is already 0")
    p, q = peel_raw(pair, axis, phase)
    new_m = pair.m - (axis is Axis.A)
    box = DegreeBox(new_m, pair.n - 1 - new_m)
    p, p_out = p.restrict(box)
    q, q_out = q.restrict(box)
    residual = max(p_out, q_out)
    if residual > (0.0 if pair.backend == EXACT else tol):
        raise DegreeNotReduced(axis, residual)
    return PolyPair(p, q, pair.n - 1, new_m)


def protocol_from_angles(s: Sequence[int], angles: Sequence[float]) -> Protocol:
    return Protocol(tuple(s), tuple(UnitPhase.from_angle(t) for t in angles))
