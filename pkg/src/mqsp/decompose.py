"""Recover a protocol from a polynomial pair by peeling signals off the right.

At each level the top slices of ``P`` and ``Q`` on an axis must satisfy
``P_top = c Q_top`` with ``|c| = 1``.  Then ``c = exp(2 i phi)`` fixes the
last phase up to ``phi -> phi + pi``; the shifted root only flips the global
sign of the remainder, which the base case absorbs into ``phi_0``, so it is
pruned unless asked for.  Levels where both axes qualify are branched on.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .conditions import (
    BothSidesZero,
    NotProportional,
    Variant,
    check_conditions,
    top_proportionality,
)
from .laurent import EXACT, Axis, ExactComplex, max_deviation
from .protocol import (
    PEEL_TOL,
    DegreeNotReduced,
    PolyPair,
    Protocol,
    UnitPhase,
    build,
    step_peel,
)

#: Float tolerance for the base case (``Q = 0``, ``P`` a unit constant).
BASE_TOL = 1e-8
#: Float tolerance for the rebuilt pair against the input.
ROUNDTRIP_TOL = 1e-9


class NotDecomposable(Exception):
    """Every branch of the peel-down search hit a dead end."""

    def __init__(self, trace: list["TraceEntry"]):
        super().__init__("no protocol reproduces this pair")
        self.trace = trace


class PrecondViolated(ValueError):
    """The input pair fails the revised necessary conditions."""

    def __init__(self, report):
        super().__init__(f"pair fails conditions {report.failed()}")
        self.report = report


@dataclass(frozen=True)
class TraceEntry:
    """One event of the depth-first search, in exploration order."""

    depth: int
    n: int
    m: int
    axis: str | None
    relation: dict | None
    action: str
    root: UnitPhase | None = None
    detail: str = ""

    def to_json(self) -> dict:
        out = {"depth": self.depth, "n": self.n, "m": self.m, "axis": self.axis, "action": self.action}
        if self.relation is not None:
            out["relation"] = self.relation
        if self.root is not None:
            out["root"] = self.root.to_json()
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass(frozen=True)
class Decomposition:
    protocol: Protocol
    trace: list[TraceEntry] = field(default_factory=list)
    depth: int = 0

    def to_json(self) -> dict:
        return {"protocol": self.protocol.to_json(), "trace": [e.to_json() for e in self.trace]}


def _exact_sqrt(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    num, den = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if num * num != x.numerator or den * den != x.denominator:
        return None
    return Fraction(num, den)


def canonical_root(c: UnitPhase) -> UnitPhase | None:
    """The square root of ``c`` with angle in ``(-pi/2, pi/2]``.

    Returns ``None`` when ``c`` is exact but its root is not a Gaussian
    rational.
    """
    if c.backend == EXACT:
        v = c.value
        if v == -1:
            return UnitPhase(ExactComplex(0, 1))
        # (1 + c) / |1 + c| halves the angle of c; |1 + c|^2 = 2 + 2 Re c
        norm = _exact_sqrt(2 + 2 * v.re)
        if norm is None:
            return None
        return UnitPhase(ExactComplex((1 + v.re) / norm, v.im / norm))
    w = cmath.sqrt(complex(c.value))
    if w.real < 0 or (w.real == 0 and w.imag < 0):
        w = -w
    return UnitPhase(w / abs(w))


class _Search:
    def __init__(self, tol: float | None, explore_shifted_root: bool):
        self.tol = tol
        self.explore_shifted_root = explore_shifted_root
        self.trace: list[TraceEntry] = []

    def slice_tol(self, pair: PolyPair) -> float | None:
        # float peels accumulate error; compare tops at the peel tolerance
        if pair.backend == EXACT or self.tol is not None:
            return self.tol
        return PEEL_TOL

    def log(self, pair: PolyPair, depth: int, axis, relation, action, root=None, detail=""):
        self.trace.append(
            TraceEntry(
                depth,
                pair.n,
                pair.m,
                axis.value if axis is not None else None,
                relation.to_json() if relation is not None else None,
                action,
                root,
                detail,
            )
        )

    def base(self, pair: PolyPair, depth: int) -> UnitPhase | None:
        p00 = pair.p[(0, 0)]
        rest = [c for e, c in pair.p.terms.items() if e != (0, 0)] + list(pair.q.terms.values())
        if pair.backend == EXACT:
            ok = not rest and p00.abs2() == 1
            phase = UnitPhase(p00) if ok else None
        else:
            tol = BASE_TOL if self.tol is None else max(self.tol, BASE_TOL)
            ok = all(abs(c) <= tol for c in rest) and abs(abs(p00) - 1) <= tol
            phase = UnitPhase(p00 / abs(p00)) if ok else None
        if phase is None:
            self.log(pair, depth, None, None, "base-fail", detail="Q != 0 or P not a unit constant")
        else:
            self.log(pair, depth, None, None, "base-ok", root=phase)
        return phase

    def run(self, pair: PolyPair, depth: int):
        """List of ``(axis, phase)`` from the right end inwards, then ``phi_0``."""
        if pair.n == 0:
            phase = self.base(pair, depth)
            return None if phase is None else [phase]
        for axis in (Axis.A, Axis.B):
            if pair.declared(axis) == 0:
                continue
            rel = top_proportionality(pair, axis, self.slice_tol(pair))
            if isinstance(rel, NotProportional):
                self.log(pair, depth, axis, rel, "dead-end", detail="top slices not proportional")
                continue
            if isinstance(rel, BothSidesZero):
                # any phase cancels an already-vanishing top; take phi = 0
                roots = [UnitPhase.one(pair.backend)]
                shifted = None
            else:
                root = canonical_root(rel.phase)
                if root is None:
                    self.log(pair, depth, axis, rel, "dead-end", detail="square root of c is irrational")
                    continue
                roots = [root]
                shifted = root.negated()
                if self.explore_shifted_root:
                    roots.append(shifted)
                    shifted = None
            for root in roots:
                try:
                    peeled = step_peel(pair, axis, root, PEEL_TOL)
                except DegreeNotReduced as exc:
                    self.log(pair, depth, axis, rel, "dead-end", root, f"degree not reduced ({exc.residual})")
                    continue
                self.log(pair, depth, axis, rel, "peel", root)
                rest = self.run(peeled, depth + 1)
                if rest is not None:
                    return [(axis, root)] + rest
            if shifted is not None:
                self.log(
                    pair, depth, axis, rel, "pruned", shifted,
                    "shifted root gives the negated remainder (global sign absorbed by phi_0)",
                )
        return None


def decompose(
    pair: PolyPair,
    tol: float | None = None,
    explore_shifted_root: bool = False,
    check: bool = True,
) -> Decomposition:
    """Find ``(s, Phi)`` whose built pair equals ``pair``.

    Raises :class:`PrecondViolated` if ``check`` is set and the pair fails the
    revised conditions, and :class:`NotDecomposable` (carrying the search
    trace) if no branch reaches a valid base case.
    """
    if check:
        report = check_conditions(pair, Variant.REVISED, tol)
        if not report.overall:
            raise PrecondViolated(report)
    search = _Search(tol, explore_shifted_root)
    steps = search.run(pair, 0)
    if steps is None:
        raise NotDecomposable(search.trace)
    *peels, phi0 = steps
    s = tuple(1 if axis is Axis.A else 0 for axis, _ in reversed(peels))
    phases = (phi0,) + tuple(root for _, root in reversed(peels))
    prot = Protocol(s, phases)
    rebuilt = build(prot, pair.backend)
    limit = 0.0 if pair.backend == EXACT else ROUNDTRIP_TOL
    if max(max_deviation(rebuilt.p, pair.p), max_deviation(rebuilt.q, pair.q)) > limit:
        raise RuntimeError("decomposition does not rebuild the input pair")
    return Decomposition(prot, search.trace, len(peels))


@dataclass(frozen=True)
class RoundTrip:
    protocol: Protocol
    recovered: Protocol
    deviation: float
    depth: int


def roundtrip_report(prot: Protocol) -> RoundTrip:
    """Build, decompose and rebuild; report the largest coefficient deviation."""
    pair = build(prot)
    result = decompose(pair, check=False)
    rebuilt = build(result.protocol, pair.backend)
    deviation = max(max_deviation(rebuilt.p, pair.p), max_deviation(rebuilt.q, pair.q))
    return RoundTrip(prot, result.protocol, deviation, result.depth)


__all__ = [
    "Decomposition",
    "NotDecomposable",
    "PrecondViolated",
    "TraceEntry",
    "canonical_root",
    "decompose",
    "roundtrip_report",
]
