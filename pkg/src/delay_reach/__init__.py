"""Reachability analysis for difference delay systems with distributed delays.

Measures on a uniform grid form a convolution algebra; a delay system is the
pair ``(Q, P)`` of matrix measures and everything else (simulation, state
space, minimal-time bound, control compression, Bezout synthesis, Hautus
tests) is computed in that algebra.
"""

__version__ = "0.1.0"

from .measure import (MatrixMeasure, ScalarMeasure, adjugate, apply_to_signal,
                      causal_inverse, conv, det_measure, support_inf)
from .signals import GridSignal
from .system import SystemSpec, build_QP
from .reach import (ReachReport, compress_control, extend_to_state, kamen_compress,
                    minimal_time_bound, plan_control, reach_and_verify, simulate,
                    state_residual)
from .laplace import (MarginSample, coprimeness_margin, eval_transfer, limit_margin,
                      margin_scan)
from .hautus import (HautusReport, hautus_check, hautus_exact_commensurate,
                     hautus_grid_check)
from .bezout import (BezoutFailure, BezoutPair, solve_bezout_commensurate,
                     verify_bezout)
from .estimator import ReachabilityPlanner

__all__ = [
    "MatrixMeasure", "ScalarMeasure", "adjugate", "apply_to_signal", "causal_inverse",
    "conv", "det_measure", "support_inf", "GridSignal", "SystemSpec", "build_QP",
    "ReachReport", "compress_control", "extend_to_state", "kamen_compress",
    "minimal_time_bound", "plan_control", "reach_and_verify", "simulate",
    "state_residual", "MarginSample", "coprimeness_margin", "eval_transfer",
    "limit_margin", "margin_scan", "HautusReport", "hautus_check",
    "hautus_exact_commensurate", "hautus_grid_check", "BezoutFailure", "BezoutPair",
    "solve_bezout_commensurate", "verify_bezout", "ReachabilityPlanner",
]
