"""Search for pairs meeting (i)-(iv) but violating (v'), and the lift argument.

The coefficient box ``(m, n-m)`` is parametrized so that inversion parity
and sign parity hold by construction: only slots with ``j = m`` and
``k = n - m`` (mod 2) are populated, ``P[-e] = P[e]``, ``Q[-e] = -Q[e]``
(hence ``Q[0, 0] = 0``).  Unitarity is then the quadratic system

    sum_e P[e] conj(P[e - l]) + Q[e] conj(Q[e - l]) = delta(l)

over all shifts ``l``; each residual is ``x^T H_r x - delta`` for a fixed
symmetric ``H_r``, so the Jacobian ``2 H_r x`` is exact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .conditions import (
    ConditionReport,
    NotProportional,
    Proportional,
    Variant,
    check_conditions,
    proportionality_margin,
    top_proportionality,
)
from .decompose import Decomposition, NotDecomposable, TraceEntry, canonical_root, decompose
from .laurent import FLOAT, Axis, BiLaurent, max_deviation
from .protocol import PolyPair, UnitPhase, step_extend, step_peel

log = logging.getLogger(__name__)

#: Weight of the hinge penalty pushing top slices away from proportionality.
PENALTY_WEIGHT = 1e-2
#: Violation (squared margin per unit norm) the penalty aims for before switching off.
PENALTY_TARGET = 0.05


class NotFound(Exception):
    """Restart budget exhausted without an accepted pair (not a nonexistence proof)."""


class InvalidSpec(ValueError):
    pass


@dataclass(frozen=True)
class SearchSpec:
    n: int = 4
    m: int = 2
    seed: int = 0
    budget: int = 50
    residual_tol: float = 1e-10
    violation_margin: float = 1e-3

    def __post_init__(self):
        if self.m < 1 or self.n - self.m < 1:
            raise InvalidSpec(f"(v') is vacuous for n={self.n}, m={self.m}")
        if self.budget < 1:
            raise InvalidSpec("budget must be positive")


class BoxParametrization:
    """Real coordinates for symmetric coefficient boxes of degree ``(m, n-m)``.

    ``x`` holds ``(re, im)`` of one representative per inversion orbit; the
    orbit at the origin is free for ``P`` and absent for ``Q``.
    """

    def __init__(self, n: int, m: int):
        self.n, self.m = n, m
        nb = n - m
        self.slots = [
            (j, k)
            for j in range(-m, m + 1)
            for k in range(-nb, nb + 1)
            if (j - m) % 2 == 0 and (k - nb) % 2 == 0
        ]
        index = {e: i for i, e in enumerate(self.slots)}
        reps = [e for e in self.slots if e >= (-e[0], -e[1])]
        self.labels = []
        columns = {"P": [], "Q": []}
        for name in ("P", "Q"):
            for e in reps:
                mirror = (-e[0], -e[1])
                if name == "Q" and e == mirror:
                    continue
                for part, unit in (("re", 1.0), ("im", 1j)):
                    col = np.zeros(len(self.slots), complex)
                    col[index[e]] = unit
                    if e != mirror:
                        col[index[mirror]] = unit if name == "P" else -unit
                    columns[name].append(col)
                    self.labels.append((name, e, part))
        n_p, n_q = len(columns["P"]), len(columns["Q"])
        self.size = n_p + n_q
        zeros_p = np.zeros((len(self.slots), n_p), complex)
        zeros_q = np.zeros((len(self.slots), n_q), complex)
        self.MP = np.hstack([np.array(columns["P"]).T, zeros_q])
        self.MQ = np.hstack([zeros_p, np.array(columns["Q"]).T])
        self._build_quadratic_forms()

    def _build_quadratic_forms(self):
        diffs = {}
        for s, es in enumerate(self.slots):
            for t, et in enumerate(self.slots):
                diffs.setdefault((es[0] - et[0], es[1] - et[1]), []).append((s, t))
        self.shifts = [l for l in sorted(diffs) if l >= (0, 0)]
        forms, targets, self.row_labels = [], [], []
        for l in self.shifts:
            g = np.zeros((self.size, self.size), complex)
            for s, t in diffs[l]:
                for M in (self.MP, self.MQ):
                    g += np.outer(M[s], M[t].conj())
            parts = [("re", g.real)] if l == (0, 0) else [("re", g.real), ("im", g.imag)]
            for part, mat in parts:
                forms.append(0.5 * (mat + mat.T))
                targets.append(1.0 if l == (0, 0) else 0.0)
                self.row_labels.append((l, part))
        self.H = np.array(forms)
        self.targets = np.array(targets)

    # -- coefficients ------------------------------------------------------

    def coefficients(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.MP @ x, self.MQ @ x

    def pair(self, x: np.ndarray) -> PolyPair:
        zp, zq = self.coefficients(x)
        p = BiLaurent({e: complex(v) for e, v in zip(self.slots, zp)}, FLOAT)
        q = BiLaurent({e: complex(v) for e, v in zip(self.slots, zq)}, FLOAT)
        return PolyPair(p, q, self.n, self.m)

    def params(self, pair: PolyPair) -> np.ndarray:
        """Inverse of :meth:`pair` on symmetric pairs (reads representatives)."""
        x = np.zeros(self.size)
        for i, (name, e, part) in enumerate(self.labels):
            value = complex((pair.p if name == "P" else pair.q)[e])
            x[i] = value.real if part == "re" else value.imag
        return x

    # -- unitarity residual -------------------------------------------------

    def residual(self, x: np.ndarray) -> np.ndarray:
        return np.einsum("rij,i,j->r", self.H, x, x) - self.targets

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * np.einsum("rij,j->ri", self.H, x)

    def normalize(self, x: np.ndarray) -> np.ndarray:
        """Rescale so the constant unitarity term equals 1."""
        return x / math.sqrt(x @ self.H[0] @ x)

    # -- top-slice violation -------------------------------------------------

    def top_rows(self, axis: Axis) -> np.ndarray:
        if axis is Axis.A:
            return np.array([i for i, e in enumerate(self.slots) if e[0] == self.m])
        return np.array([i for i, e in enumerate(self.slots) if e[1] == self.n - self.m])

    def violation(self, x: np.ndarray, axis: Axis) -> tuple[float, np.ndarray]:
        """Squared best-fit distance of the top slices, over the total coefficient norm.

        ``(|p|^2 + |q|^2 - 2|<q, p>|) / sum |coeffs|^2``, with its gradient.
        Dividing by the whole pair's norm (1 on the unitary set) rather than
        the tops' own norm keeps the tops from shrinking to zero.
        """
        rows = self.top_rows(axis)
        Mp, Mq = self.MP[rows], self.MQ[rows]
        p, q = Mp @ x, Mq @ x
        total = x @ self.H[0] @ x
        d_total = 2.0 * self.H[0] @ x
        S = np.vdot(p, p).real + np.vdot(q, q).real
        dS = 2.0 * (p.conj() @ Mp + q.conj() @ Mq).real
        g = np.vdot(q, p)
        if abs(g) > 0.0:
            dg = q.conj() @ Mp + (Mq.conj().T @ p)
            dabs = (g.conjugate() * dg).real / abs(g)
        else:
            dabs = np.zeros_like(x)
        dist = S - 2.0 * abs(g)
        v = dist / total
        dv = (dS - 2.0 * dabs) / total - dist * d_total / total**2
        return v, dv

    def penalty(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        vals, rows = [], []
        for axis in (Axis.A, Axis.B):
            v, dv = self.violation(x, axis)
            if v < PENALTY_TARGET:
                vals.append(PENALTY_WEIGHT * (PENALTY_TARGET - v))
                rows.append(-PENALTY_WEIGHT * dv)
            else:
                vals.append(0.0)
                rows.append(np.zeros_like(x))
        return np.array(vals), np.array(rows)


def residual_norm(pair: PolyPair) -> float:
    """2-norm of the independent unitarity residuals of ``pair``."""
    param = BoxParametrization(pair.n, pair.m)
    return float(np.linalg.norm(param.residual(param.params(pair))))


def violation_margins(pair: PolyPair) -> dict[Axis, float]:
    """Distance of each top-slice pair from unit-scalar proportionality."""
    out = {}
    for axis in (Axis.A, Axis.B):
        top = pair.declared(axis)
        out[axis] = proportionality_margin(pair.p.slice(axis, top), pair.q.slice(axis, top))
    return out


def _solve(param: BoxParametrization, x0: np.ndarray) -> np.ndarray:
    def fun(x):
        pen, _ = param.penalty(x)
        return np.concatenate([param.residual(x), pen])

    def jac(x):
        _, dpen = param.penalty(x)
        return np.vstack([param.jacobian(x), dpen])

    steered = least_squares(fun, x0, jac=jac, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=500)
    polished = least_squares(
        param.residual, steered.x, jac=param.jacobian, method="trf",
        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200,
    )
    return polished.x


def search_nonrealizable(spec: SearchSpec) -> PolyPair:
    """Find a float pair passing (i)-(iv) with both top-slice relations broken.

    Restarts draw ``x`` uniformly from ``[-1, 1]`` with ``spec.seed`` and
    take the first accepted restart in index order, so the result is
    reproducible bit for bit.
    """
    param = BoxParametrization(spec.n, spec.m)
    rng = np.random.default_rng(spec.seed)
    for restart in range(spec.budget):
        x0 = param.normalize(rng.uniform(-1.0, 1.0, param.size))
        x = _solve(param, x0)
        res = float(np.linalg.norm(param.residual(x)))
        pair = param.pair(x)
        margins = violation_margins(pair)
        log.debug("restart %d: residual %.3e, margins %s", restart, res, margins)
        if res < spec.residual_tol and min(margins.values()) > spec.violation_margin:
            return pair
    raise NotFound(f"no pair accepted after {spec.budget} restarts")


def lift(base: PolyPair, phase: UnitPhase) -> PolyPair:
    """Append ``A W(phi)``: the degree-``(n+1, m+1)`` pair whose ``a``-tops are proportional."""
    return step_extend(base, Axis.A, phase)


@dataclass(frozen=True)
class RootCheck:
    """Peeling the lifted pair with one square root of its top ratio."""

    root: UnitPhase
    sign: int  # +1 or -1: which of +-base the peel returned
    deviation: float
    base_relations: dict


@dataclass
class InsufficiencyReport:
    base_pair: PolyPair
    base_report: ConditionReport
    lifted_pair: PolyPair
    lifted_report: ConditionReport
    lift_phase: UnitPhase
    top_relations: dict = field(default_factory=dict)
    root_checks: list[RootCheck] = field(default_factory=list)
    decompose_trace: list[TraceEntry] = field(default_factory=list)
    decomposition: Decomposition | None = None

    @property
    def is_counterexample(self) -> bool:
        """True when the lifted pair passes (i)-(v') yet admits no protocol."""
        return self.decomposition is None and self.lifted_report.overall

    def consistent(self, tol: float | None = None) -> bool:
        """Stored reports agree with fresh checks of the stored pairs."""
        return (
            check_conditions(self.base_pair, Variant.REVISED, tol).to_json() == self.base_report.to_json()
            and check_conditions(self.lifted_pair, Variant.REVISED, tol).to_json()
            == self.lifted_report.to_json()
        )

    def to_json(self) -> dict:
        out = {
            "verdict": "counterexample" if self.is_counterexample else "not a counterexample",
            "base_pair": self.base_pair.to_json(),
            "base_report": self.base_report.to_json(),
            "base_unitarity_residual": residual_norm(self.base_pair),
            "base_margins": {a.value: v for a, v in violation_margins(self.base_pair).items()},
            "lift_phase": self.lift_phase.to_json(),
            "lifted_pair": self.lifted_pair.to_json(),
            "lifted_report": self.lifted_report.to_json(),
            "lifted_top_relations": {a: r for a, r in self.top_relations.items()},
            "root_checks": [
                {
                    "root": rc.root.to_json(),
                    "peels_to": "+base" if rc.sign > 0 else "-base",
                    "deviation": rc.deviation,
                    "base_top_relations": rc.base_relations,
                }
                for rc in self.root_checks
            ],
            "decompose": (
                {"outcome": "NotDecomposable"}
                if self.decomposition is None
                else {"outcome": "decomposed", "protocol": self.decomposition.protocol.to_json()}
            ),
            "decompose_trace": [e.to_json() for e in self.decompose_trace],
        }
        return out


def analyze_lift(base: PolyPair, lift_phase: UnitPhase, tol: float | None = None) -> InsufficiencyReport:
    """Lift ``base``, re-check both pairs and try to decompose the lifted one."""
    lift_phase = lift_phase.in_backend(base.backend)
    lifted = lift(base, lift_phase)
    report = InsufficiencyReport(
        base_pair=base,
        base_report=check_conditions(base, Variant.REVISED, tol),
        lifted_pair=lifted,
        lifted_report=check_conditions(lifted, Variant.REVISED, tol),
        lift_phase=lift_phase,
    )
    report.top_relations = {
        axis.value: top_proportionality(lifted, axis, tol).to_json() for axis in (Axis.A, Axis.B)
    }
    rel = top_proportionality(lifted, Axis.A, tol)
    if isinstance(rel, Proportional):
        root = canonical_root(rel.phase)
        for candidate in (root, root.negated()):
            peeled = step_peel(lifted, Axis.A, candidate)
            dev_plus = max(max_deviation(peeled.p, base.p), max_deviation(peeled.q, base.q))
            dev_minus = max(max_deviation(peeled.p, -base.p), max_deviation(peeled.q, -base.q))
            sign = 1 if dev_plus <= dev_minus else -1
            report.root_checks.append(
                RootCheck(
                    candidate,
                    sign,
                    min(dev_plus, dev_minus),
                    {
                        axis.value: top_proportionality(peeled, axis, tol).to_json()
                        for axis in (Axis.A, Axis.B)
                    },
                )
            )
    if report.lifted_report.overall:
        try:
            result = decompose(lifted, tol=tol, explore_shifted_root=True)
        except NotDecomposable as exc:
            report.decompose_trace = exc.trace
        else:
            report.decomposition = result
            report.decompose_trace = result.trace
    return report


def insufficiency_pipeline(spec: SearchSpec, lift_phase: UnitPhase) -> InsufficiencyReport:
    """Search a base pair, lift it, and show the lifted pair cannot be decomposed."""
    base = search_nonrealizable(spec)
    return analyze_lift(base, lift_phase)


__all__ = [
    "BoxParametrization",
    "InsufficiencyReport",
    "InvalidSpec",
    "NotFound",
    "NotProportional",
    "SearchSpec",
    "analyze_lift",
    "insufficiency_pipeline",
    "lift",
    "residual_norm",
    "search_nonrealizable",
    "violation_margins",
]
