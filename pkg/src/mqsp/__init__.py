"""Bivariate quantum signal processing: Laurent pairs, condition checks, decomposition."""

from .conditions import (
    ConditionReport,
    ForcedZeroTrace,
    InvalidRange,
    Variant,
    check_conditions,
    forced_zero_trace,
    top_proportionality,
)
from .counterexample import (
    InsufficiencyReport,
    InvalidSpec,
    NotFound,
    SearchSpec,
    analyze_lift,
    insufficiency_pipeline,
    lift,
    search_nonrealizable,
)
from .decompose import NotDecomposable, PrecondViolated, decompose
from .laurent import EXACT, FLOAT, Axis, BiLaurent, ExactComplex, FormatError, make_poly
from .protocol import PolyPair, Protocol, UnitPhase, build, step_extend, step_peel

__version__ = "0.1.0"

__all__ = [
    "EXACT",
    "FLOAT",
    "Axis",
    "BiLaurent",
    "ConditionReport",
    "ExactComplex",
    "ForcedZeroTrace",
    "FormatError",
    "InsufficiencyReport",
    "InvalidRange",
    "InvalidSpec",
    "NotDecomposable",
    "NotFound",
    "PolyPair",
    "PrecondViolated",
    "Protocol",
    "SearchSpec",
    "UnitPhase",
    "Variant",
    "analyze_lift",
    "build",
    "check_conditions",
    "decompose",
    "forced_zero_trace",
    "insufficiency_pipeline",
    "lift",
    "make_poly",
    "search_nonrealizable",
    "step_extend",
    "step_peel",
    "top_proportionality",
]
