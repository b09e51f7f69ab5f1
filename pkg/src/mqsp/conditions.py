"""Coefficient-level checks of the M-QSP necessary conditions.

Two variants are supported:

``Variant.ORIGINAL``
    Conditions (i)-(v) as first stated, with inversion parity ``n`` / ``n-1``
    and sign parities ``m-1`` / ``n-m-1`` for ``Q``.  These are mutually
    inconsistent; :func:`forced_zero_trace` replays why.
``Variant.REVISED``
    Conditions (i), (ii'), (iii'), (iv), (v'), which every built protocol
    satisfies.

Condition (iv), ``|P|^2 + |Q|^2 = 1`` on the torus, is checked through the
coefficients of ``P P* + Q Q*``: the constant term must be 1 and every other
coefficient must vanish.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .laurent import (
    EXACT,
    Axis,
    BiLaurent,
    ExactComplex,
    Transform,
    UniLaurent,
    default_tol,
    make_poly,
    scalar_to_json,
)
from .protocol import PolyPair, UnitPhase

#: Relative tolerance for float top-slice proportionality.
PROPORTIONALITY_RTOL = 1e-8


class Variant(enum.Enum):
    ORIGINAL = "original"
    REVISED = "revised"


class InvalidRange(ValueError):
    pass


# -- top-slice proportionality ----------------------------------------------


@dataclass(frozen=True)
class Proportional:
    """``P_top = c * Q_top`` with ``|c| = 1``; ``c`` plays the role of ``exp(2 i phi)``."""

    phase: UnitPhase

    def to_json(self) -> dict:
        re, im = scalar_to_json(self.phase.value)
        return {"status": "proportional", "c": {"re": re, "im": im}}


@dataclass(frozen=True)
class NotProportional:
    exponent: int
    reason: str
    margin: float = math.nan

    def to_json(self) -> dict:
        out = {"status": "not-proportional", "exponent": self.exponent, "reason": self.reason}
        if not math.isnan(self.margin):
            out["margin"] = self.margin
        return out


@dataclass(frozen=True)
class BothSidesZero:
    def to_json(self) -> dict:
        return {"status": "both-sides-zero"}


TopRelation = Proportional | NotProportional | BothSidesZero


def proportionality_margin(p: UniLaurent, q: UniLaurent) -> float:
    """``min over |c| = 1`` of ``||p - c q||_2`` (float)."""
    keys = set(p.terms) | set(q.terms)
    pv = [complex(p[k]) for k in keys]
    qv = [complex(q[k]) for k in keys]
    norm2 = sum(abs(x) ** 2 for x in pv) + sum(abs(x) ** 2 for x in qv)
    inner = abs(sum(x.conjugate() * y for x, y in zip(qv, pv)))
    return math.sqrt(max(0.0, norm2 - 2 * inner))


def slice_proportionality(
    p: UniLaurent, q: UniLaurent, tol: float | None = None
) -> TopRelation:
    """Compare two slices for ``p = c q`` with a unit scalar ``c``."""
    if p.backend == EXACT and not tol:
        return _exact_proportionality(p, q)
    return _float_proportionality(p, q, default_tol("float", tol))


def _exact_proportionality(p: UniLaurent, q: UniLaurent) -> TopRelation:
    if p.is_zero() and q.is_zero():
        return BothSidesZero()
    if q.is_zero():
        return NotProportional(p.exponents()[0], "Q slice is zero", proportionality_margin(p, q))
    if p.is_zero():
        return NotProportional(q.exponents()[0], "P slice is zero", proportionality_margin(p, q))
    pivot = q.exponents()[0]
    c = p[pivot] / q[pivot]
    for k in sorted(set(p.terms) | set(q.terms)):
        if p[k] != c * q[k]:
            return NotProportional(k, "ratio differs from pivot", proportionality_margin(p, q))
    if c.abs2() != 1:
        return NotProportional(pivot, "ratio is not unit modulus", proportionality_margin(p, q))
    return Proportional(UnitPhase(c))


def _float_proportionality(p: UniLaurent, q: UniLaurent, atol: float) -> TopRelation:
    keys = sorted(set(p.terms) | set(q.terms))
    pv = {k: complex(p[k]) for k in keys}
    qv = {k: complex(q[k]) for k in keys}
    scale = max([abs(v) for v in pv.values()] + [abs(v) for v in qv.values()], default=0.0)
    if scale <= atol:
        return BothSidesZero()
    margin = proportionality_margin(p, q)
    pivot = max(keys, key=lambda k: abs(qv[k]))
    if abs(qv[pivot]) <= atol:
        return NotProportional(max(keys, key=lambda k: abs(pv[k])), "Q slice is zero", margin)
    c = pv[pivot] / qv[pivot]
    # an absolute error atol on the pivot pair moves c by about atol / |q_pivot|
    if abs(abs(c) - 1.0) > PROPORTIONALITY_RTOL + atol / abs(qv[pivot]):
        return NotProportional(pivot, "ratio is not unit modulus", margin)
    for k in keys:
        if abs(pv[k] - c * qv[k]) > PROPORTIONALITY_RTOL * scale + atol:
            return NotProportional(k, "ratio differs from pivot", margin)
    return Proportional(UnitPhase(c / abs(c)))


def top_proportionality(pair: PolyPair, axis: Axis, tol: float | None = None) -> TopRelation:
    """Relation between the top slices of ``P`` and ``Q`` at the declared degree on ``axis``."""
    top = pair.declared(axis)
    return slice_proportionality(pair.p.slice(axis, top), pair.q.slice(axis, top), tol)


# -- reports ------------------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    status: str  # "pass" | "fail" | "vacuous"
    witness: dict | None = None

    @property
    def ok(self) -> bool:
        return self.status != "fail"

    def to_json(self) -> dict:
        return {"verdict": self.status, "witness": self.witness}


PASS = Verdict("pass")
VACUOUS = Verdict("vacuous")

CONDITION_KEYS = ("i", "ii", "iii", "iv", "v")


@dataclass(frozen=True)
class ConditionReport:
    variant: Variant
    verdicts: dict[str, Verdict] = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return all(v.ok for v in self.verdicts.values())

    def failed(self) -> list[str]:
        return [key for key, v in self.verdicts.items() if not v.ok]

    def __getitem__(self, key: str) -> Verdict:
        return self.verdicts[key]

    def to_json(self) -> dict:
        out = {"variant": self.variant.value, "overall": "pass" if self.overall else "fail"}
        for key in CONDITION_KEYS:
            out[key] = self.verdicts[key].to_json()
        return out


def _value_json(value) -> list:
    return list(scalar_to_json(value))


def _magnitude(value) -> Fraction | float:
    # exact comparisons stay exact; float ones use the modulus
    return value.abs2() if isinstance(value, ExactComplex) else abs(value)


def _within(value, tol: float) -> bool:
    if isinstance(value, ExactComplex) and tol == 0:
        return not value
    return abs(value) <= tol


def _worst(entries: Iterator[tuple[tuple[int, int], object]], tol: float):
    """Entry with the largest modulus above ``tol``, or ``None``."""
    worst = None
    for e, v in entries:
        if _within(v, tol):
            continue
        if worst is None or _magnitude(v) > _magnitude(worst[1]):
            worst = (e, v)
    return worst


def _degree_verdict(pair: PolyPair, tol: float) -> Verdict:
    box = pair.box
    for name, poly in (("P", pair.p), ("Q", pair.q)):
        for (j, k), value in poly.items():
            if (abs(j) > box.deg_a or abs(k) > box.deg_b) and not _within(value, tol):
                return Verdict(
                    "fail", {"poly": name, "exponent": [j, k], "bound": [box.deg_a, box.deg_b]}
                )
    return PASS


def _sign_verdict(checks: list[tuple[str, BiLaurent, Transform, int]], tol: float) -> Verdict:
    """Every ``transform(poly, kind) == sign * poly``; witness is the worst offender."""
    for name, poly, kind, sign in checks:
        diff = poly.transform(kind) - (poly if sign > 0 else -poly)
        worst = _worst(diff.terms.items(), tol)
        if worst is not None:
            (j, k), value = worst
            return Verdict(
                "fail",
                {
                    "poly": name,
                    "transform": kind.value,
                    "expected": "even" if sign > 0 else "odd",
                    "exponent": [j, k],
                    "residual": _value_json(value),
                },
            )
    return PASS


def unitarity_defect(pair: PolyPair) -> BiLaurent:
    """``P P* + Q Q* - 1``; identically zero iff condition (iv) holds."""
    one = make_poly([((0, 0), 1)], pair.backend)
    return pair.p * pair.p.star() + pair.q * pair.q.star() - one


def _unitarity_verdict(pair: PolyPair, tol: float) -> Verdict:
    worst = _worst(unitarity_defect(pair).terms.items(), tol)
    if worst is None:
        return PASS
    (la, lb), value = worst
    return Verdict("fail", {"shift": [la, lb], "residual": _value_json(value)})


def _proportionality_verdict(relations: dict[Axis, TopRelation]) -> Verdict:
    # two vanishing top slices satisfy P_top = c Q_top for every c
    if any(isinstance(r, (Proportional, BothSidesZero)) for r in relations.values()):
        return PASS
    return Verdict("fail", {axis.value: rel.to_json() for axis, rel in relations.items()})


def _sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


def check_conditions(
    pair: PolyPair, variant: Variant = Variant.REVISED, tol: float | None = None
) -> ConditionReport:
    """Evaluate every condition of ``variant`` on the coefficients of ``pair``.

    Exact pairs are checked with zero tolerance.  Float pairs use ``tol``
    (default 1e-10) as the absolute coefficient tolerance.
    """
    tol = default_tol(pair.backend, tol)
    n, m = pair.n, pair.m
    P, Q = pair.p, pair.q
    verdicts = {"i": _degree_verdict(pair, tol)}

    if variant is Variant.REVISED:
        verdicts["ii"] = _sign_verdict(
            [("P", P, Transform.INVERT_BOTH, 1), ("Q", Q, Transform.INVERT_BOTH, -1)], tol
        )
        verdicts["iii"] = _sign_verdict(
            [
                ("P", P, Transform.NEGATE_A, _sign(m)),
                ("P", P, Transform.NEGATE_B, _sign(n - m)),
                ("Q", Q, Transform.NEGATE_A, _sign(m)),
                ("Q", Q, Transform.NEGATE_B, _sign(n - m)),
            ],
            tol,
        )
    else:
        verdicts["ii"] = _sign_verdict(
            [("P", P, Transform.INVERT_BOTH, _sign(n)), ("Q", Q, Transform.INVERT_BOTH, _sign(n - 1))],
            tol,
        )
        verdicts["iii"] = _sign_verdict(
            [
                ("P", P, Transform.NEGATE_A, _sign(m)),
                ("P", P, Transform.NEGATE_B, _sign(m - n)),
                ("Q", Q, Transform.NEGATE_A, _sign(m - 1)),
                ("Q", Q, Transform.NEGATE_B, _sign(n - m - 1)),
            ],
            tol,
        )

    verdicts["iv"] = _unitarity_verdict(pair, tol)

    if variant is Variant.REVISED:
        if m >= 1 and n - m >= 1:
            verdicts["v"] = _proportionality_verdict(
                {axis: top_proportionality(pair, axis, tol) for axis in (Axis.A, Axis.B)}
            )
        else:
            verdicts["v"] = VACUOUS
    else:
        # the conjecture uses the largest positive degrees that actually occur
        relations = {}
        for axis in (Axis.A, Axis.B):
            idx = 0 if axis is Axis.A else 1
            top = max([e[idx] for e in list(P.terms) + list(Q.terms)] + [0])
            relations[axis] = slice_proportionality(P.slice(axis, top), Q.slice(axis, top), tol)
        verdicts["v"] = _proportionality_verdict(relations)

    return ConditionReport(variant, verdicts)


# -- forced zeros under the original conditions --------------------------------


@dataclass(frozen=True)
class ForcedZeroStep:
    """One deduction: at ``shift`` only ``product`` survives, so ``target`` vanishes."""

    shift: tuple[int, int]
    target: tuple[str, tuple[int, int]]
    mirror: tuple[int, int]
    product: tuple[tuple[str, tuple[int, int]], tuple[str, tuple[int, int]]]
    inversion_sign: int
    tag: str = "unique-product"

    def to_json(self) -> dict:
        (n1, e1), (n2, e2) = self.product
        return {
            "shift": list(self.shift),
            "zero": {"poly": self.target[0], "exponent": list(self.target[1]), "mirror": list(self.mirror)},
            "surviving_product": f"{n1}{list(e1)} * conj({n2}{list(e2)})",
            "inversion_sign": self.inversion_sign,
            "justification": self.tag,
        }


@dataclass(frozen=True)
class ForcedZeroTrace:
    n: int
    m: int
    premises: tuple[tuple[str, tuple[int, int], str], ...]
    steps: tuple[ForcedZeroStep, ...]
    zeroed: frozenset[tuple[str, tuple[int, int]]]

    @property
    def box(self) -> list[tuple[int, int]]:
        return [
            (j, k)
            for j in range(-self.m, self.m + 1)
            for k in range(-(self.n - self.m), self.n - self.m + 1)
        ]

    @property
    def final_zeroed(self) -> frozenset[tuple[int, int]]:
        """Non-constant exponent pairs where both ``P`` and ``Q`` are forced to zero."""
        return frozenset(
            e
            for e in self.box
            if e != (0, 0) and ("P", e) in self.zeroed and ("Q", e) in self.zeroed
        )

    @property
    def complete(self) -> bool:
        return len(self.final_zeroed) == len(self.box) - 1

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "premises": [
                {"poly": name, "exponent": list(e), "justification": tag}
                for name, e, tag in self.premises
            ],
            "steps": [step.to_json() for step in self.steps],
            "final_zeroed": [list(e) for e in sorted(self.final_zeroed)],
            "all_nonconstant_zero": self.complete,
        }


def _parity_rules(n: int, m: int, variant: Variant):
    """(inversion sign, a-sign exponent, b-sign exponent) for P and Q."""
    if variant is Variant.ORIGINAL:
        return {"P": (_sign(n), m, n - m), "Q": (_sign(n - 1), m - 1, n - m - 1)}
    return {"P": (1, m, n - m), "Q": (-1, m, n - m)}


def forced_zero_trace(n: int, m: int, variant: Variant = Variant.ORIGINAL) -> ForcedZeroTrace:
    """Replay the zero-forcing chain over the ``(m, n-m)`` coefficient box.

    Premises are the zeros imposed directly by the sign parities and by
    inversion parity at the origin.  Each step then picks a shift
    ``(l_a, l_b) = (2j, 2k)`` at which the off-diagonal unitarity sum has a
    single surviving product ``X[j,k] conj(X[-j,-k])``; inversion parity turns
    it into ``+-|X[j,k]|^2 = 0``.  Targets are visited layer by layer, from the
    outermost ``a``-row inwards, deferring any whose sum is not yet reduced to
    one product.
    """
    if m < 1 or n - m < 1:
        raise InvalidRange(f"need 1 <= m <= n-1, got n={n}, m={m}")
    nb = n - m
    rules = _parity_rules(n, m, variant)
    box = [(j, k) for j in range(-m, m + 1) for k in range(-nb, nb + 1)]
    zero: set[tuple[str, tuple[int, int]]] = set()
    premises = []
    for name, (inv, pa, pb) in rules.items():
        for j, k in box:
            if (j - pa) % 2 or (k - pb) % 2:
                zero.add((name, (j, k)))
                premises.append((name, (j, k), "sign parity"))
        if inv < 0 and (name, (0, 0)) not in zero:
            zero.add((name, (0, 0)))
            premises.append((name, (0, 0), "inversion parity at the origin"))

    def live(name, e):
        return (name, e) not in zero

    def surviving(la, lb):
        out = []
        for name in ("P", "Q"):
            for j1, k1 in box:
                e2 = (j1 - la, k1 - lb)
                if abs(e2[0]) <= m and abs(e2[1]) <= nb and live(name, (j1, k1)) and live(name, e2):
                    out.append(((name, (j1, k1)), (name, e2)))
        return out

    order: list[tuple[int, int]] = []
    for t in range(max(m, nb) + 1):
        if m - t >= 0:
            order += [(m - t, k) for k in range(nb, -nb - 1, -1)]
        if nb - t >= 0:
            order += [(j, nb - t) for j in range(m, -m - 1, -1)]
    pending, seen = [], set()
    for e in order:
        orbit = frozenset({e, (-e[0], -e[1])})
        if e != (0, 0) and orbit not in seen:
            seen.add(orbit)
            pending.append(e)

    steps = []
    progress = True
    while progress:
        progress = False
        deferred = []
        for j, k in pending:
            names = [name for name in ("P", "Q") if live(name, (j, k))]
            if not names:
                continue
            prods = surviving(2 * j, 2 * k)
            if len(prods) != 1 or prods[0][1][1] != (-j, -k):
                deferred.append((j, k))
                continue
            (name, e1), (_, e2) = prods[0]
            inv = rules[name][0]
            for e in (e1, e2):
                zero.add((name, e))
            steps.append(ForcedZeroStep((2 * j, 2 * k), (name, e1), e2, prods[0], inv))
            progress = True
        pending = deferred

    return ForcedZeroTrace(n, m, tuple(premises), tuple(steps), frozenset(zero))
