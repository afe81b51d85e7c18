"""Stability switches of planar and triadic linear systems with one discrete delay."""
from .charpoly import QuasiPolynomial, evaluate, quasi_polynomial
from .model import (
    DelayPlacement,
    DelaySystem,
    GoalModel,
    InteractionMatrix,
    NonGenericError,
    Placement,
    Verdict,
    build_system,
    classify_baseline,
    homogenize,
)
from .oracle import SearchRegion, count_roots, oracle_switches, unstable_count, verify_report
from .sim import export_trajectory, growth_rate, integrate
from .switches import (
    Regime,
    SwitchReport,
    analytic_report,
    classify_theorem_case,
    enumerate_switches,
    zsubstitution_analysis,
)

__all__ = [
    "DelayPlacement", "DelaySystem", "GoalModel", "InteractionMatrix", "NonGenericError", "Placement",
    "QuasiPolynomial", "Regime", "SearchRegion", "SwitchReport", "Verdict", "analytic_report",
    "build_system", "classify_baseline", "classify_theorem_case", "count_roots", "enumerate_switches",
    "evaluate", "export_trajectory", "growth_rate", "homogenize", "integrate", "oracle_switches",
    "quasi_polynomial", "unstable_count", "verify_report", "zsubstitution_analysis",
]
