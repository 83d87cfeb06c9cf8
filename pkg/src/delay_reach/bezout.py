"""Bezout identities ``Q * R + P * S = delta_0 I`` over past-supported measures."""

from dataclasses import dataclass

import numpy as np

from .measure import MatrixMeasure, conv
from .system import build_QP

BEZOUT_TOL = 1e-9


@dataclass
class BezoutPair:
    R: MatrixMeasure
    S: MatrixMeasure
    residual: float
    degree: int = None

    success = True


@dataclass
class BezoutFailure:
    """No pair found up to ``max_degree``; evidence against left-coprimeness,
    not a proof."""

    best_residual: float
    max_degree: int

    success = False


def bezout_defect(Q, P, R, S):
    """``Q * R + P * S - delta_0 I``."""
    d = Q.rows
    if Q.shape != (d, d) or P.rows != d or R.shape != (d, d) or S.shape != (P.cols, d):
        raise ValueError(f"incompatible shapes Q{Q.shape} P{P.shape} R{R.shape} S{S.shape}")
    return conv(Q, R) + conv(P, S) - MatrixMeasure.identity(d, Q.h)


def verify_bezout(Q, P, R, S, tol=BEZOUT_TOL):
    """Return ``(ok, residual)`` for the identity ``Q*R + P*S = delta_0 I``.

    The residual is the largest atom weight plus the largest entry density
    L1 mass of the defect.
    """
    for name, X in (("Q", Q), ("P", P), ("R", R), ("S", S)):
        if not X.is_past_supported():
            raise ValueError(f"{name} must be supported in (-inf, 0]")
    a, m = bezout_defect(Q, P, R, S).norms()
    res = a + m
    return res <= tol, res


def _pair_from_coefficients(Rc, Sc, tau_idx, h):
    def build(C):
        return MatrixMeasure.from_atoms({-i * tau_idx: C[i] for i in range(len(C))}, h)
    return build(Rc), build(Sc)


def solve_bezout_commensurate(spec, max_degree=None, tol=BEZOUT_TOL):
    """Solve the Bezout identity for commensurate atomic systems.

    Writes past-supported atomic measures as polynomials in the shift
    ``sigma = delta_{-tau}``; then ``Q(sigma) = I sigma^K - sum_j A_j
    sigma^{K - k_j}`` and ``Q R + B S = I`` is linear in the coefficients of
    ``R`` (degree ``D``) and ``S`` (degree ``D + K``). ``D`` runs from 0 to
    ``max_degree`` (default ``d K``); the first pair whose verified residual
    is at most ``tol`` is returned. When ``B`` has a right inverse the
    feedforward pair ``R = 0, S = B^+`` is tried first. Otherwise the
    coefficients are the minimum-norm least-squares solution.
    """
    if spec.g is not None:
        raise ValueError("synthesis requires no distributed delay (g = 0); "
                         "supply S and use verify_bezout instead")
    tau_idx, K, ks = spec.commensurate_base()
    d, m, B = spec.d, spec.m, spec.B
    if max_degree is None:
        max_degree = d * K
    Qc = np.zeros((K + 1, d, d))
    Qc[K] = np.eye(d)
    for k, A in zip(ks, spec.A):
        Qc[K - k] -= A
    Q, P = build_QP(spec)
    best = np.inf
    # pure feedforward pair R = 0, S = S_0 when B has a right inverse
    S0, *_ = np.linalg.lstsq(B, np.eye(d), rcond=None)
    if np.abs(B @ S0 - np.eye(d)).max() <= 10 * tol:
        R, S = _pair_from_coefficients(np.zeros((1, d, d)), S0[None], tau_idx, spec.h)
        ok, res = verify_bezout(Q, P, R, S, tol)
        if ok:
            return BezoutPair(R, S, res, 0)
    for D in range(max_degree + 1):
        n_eq = D + K + 1
        nR, nS = (D + 1) * d, n_eq * m
        Mbig = np.zeros((n_eq * d, nR + nS))
        for n in range(n_eq):
            rows = slice(n * d, (n + 1) * d)
            for i in range(max(0, n - K), min(D, n) + 1):
                Mbig[rows, i * d:(i + 1) * d] = Qc[n - i]
            Mbig[rows, nR + n * m:nR + (n + 1) * m] = B
        rhs = np.zeros((n_eq * d, d))
        rhs[:d] = np.eye(d)
        X, *_ = np.linalg.lstsq(Mbig, rhs, rcond=None)
        cheap = float(np.abs(Mbig @ X - rhs).max())
        if cheap > 10 * tol:
            best = min(best, cheap)
            continue
        Rc = X[:nR].reshape(D + 1, d, d)
        Sc = X[nR:].reshape(n_eq, m, d)
        R, S = _pair_from_coefficients(Rc, Sc, tau_idx, spec.h)
        ok, res = verify_bezout(Q, P, R, S, tol)
        best = min(best, res)
        if ok:
            return BezoutPair(R, S, res, D)
    return BezoutFailure(float(best), max_degree)
