"""Hautus-type rank tests: a grid scan in general, an exact polynomial test for
commensurate delays without distributed part."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import minimize

from .laplace import coprimeness_margin, default_strip, eval_transfer, margin_scan

MAX_EXACT_DIM = 4
MAX_EXACT_DEGREE = 256


@dataclass
class Witness:
    """Left vector ``g`` with ``g^T [F, B]`` (nearly) zero.

    ``p`` is the frequency (``-inf`` for the limit matrix), ``z`` the
    polynomial variable ``e^{-p tau}`` for the exact test (``inf`` for the
    limit), ``F`` the transfer matrix at which the rank drops.
    """

    p: complex
    z: complex
    g: np.ndarray
    F: np.ndarray
    residual: float


@dataclass
class HautusReport:
    verdict: str  # "pass" | "fail" | "inconclusive"
    min_margin: float
    method: str  # "grid" | "exact-commensurate"
    limit_check: float
    witness: Witness = None
    gcd_degree: int = None
    details: dict = None

    @property
    def passed(self):
        return self.verdict == "pass"


def _witness(F, B, g, p, z):
    res = float(np.linalg.norm(g @ np.hstack([F, B])))
    return Witness(complex(p), complex(z), g, np.asarray(F), res)


def refine_minimum(spec, sample, strip, step):
    """Polish a scan minimum by a local Nelder-Mead search inside the strip.

    The search starts at the grid sample and stays within one grid step of
    it, so it can only sharpen the scan, never move to another valley.
    """
    r0, r1, i0, i1 = strip
    p0 = np.array([sample.p.real, sample.p.imag])
    lo = np.maximum(p0 - step, [r0, i0])
    hi = np.minimum(p0 + step, [r1, i1])

    def f(x):
        x = np.clip(x, lo, hi)
        return coprimeness_margin(spec, complex(x[0], x[1])).margin

    res = minimize(f, p0, method="Nelder-Mead",
                   options={"xatol": 1e-15, "fatol": 1e-16, "maxiter": 4000,
                            "initial_simplex": [p0, p0 + [step / 2, 0], p0 + [0, step / 2]]})
    x = np.clip(res.x, lo, hi)
    best = coprimeness_margin(spec, complex(x[0], x[1]))
    return best if best.margin < sample.margin else sample


def hautus_grid_check(spec, strip=None, density=0.05, tol=1e-6):
    """Scan the margin of ``[Q^(p), B]`` on a strip and check the limit pair.

    The grid minimum is polished locally (:func:`refine_minimum`). Returns
    ``pass`` when the minimum and the ``[-A_N, B]`` margin both exceed
    ``tol``, ``fail`` with a witness when either is at most ``tol / 10``, and
    ``inconclusive`` otherwise. A scan can refute the criterion but never
    prove it.
    """
    if strip is None:
        strip = default_strip(spec)
    r0, r1, i0, i1 = strip
    scan = margin_scan(spec, (r0, r1), (i0, i1), density)
    lim = scan.limit
    best = refine_minimum(spec, scan.minimum, strip, scan.step)
    details = {"strip": tuple(float(x) for x in strip), "density": float(density),
               "tol": float(tol), "grid_shape": scan.grid_shape,
               "im_period": scan.im_period, "min_p": best.p}
    witness = None
    if lim.margin <= tol / 10:
        witness = _witness(-spec.A[-1], spec.B, lim.witness_g, complex(-np.inf), np.inf)
    elif best.margin <= tol / 10:
        F, _ = eval_transfer(spec, best.p)
        z = np.exp(-best.p * spec.h * spec.commensurate_base()[0])
        witness = _witness(F, spec.B, best.witness_g, best.p, z)
    if witness is not None:
        verdict = "fail"
    elif best.margin > tol and lim.margin > tol:
        verdict = "pass"
    else:
        verdict = "inconclusive"
    return HautusReport(verdict, min(best.margin, lim.margin), "grid", lim.margin,
                        witness, None, details)


def _trim(c, tol):
    c = np.atleast_1d(np.asarray(c, dtype=complex if np.iscomplexobj(c) else float))
    k = c.size
    while k > 0 and abs(c[k - 1]) <= tol:
        k -= 1
    return c[:k]


def poly_gcd(a, b, rtol=1e-9):
    """Monic GCD of two polynomials (coefficients lowest degree first).

    Remainders are trimmed with tolerance ``rtol * (1 + max |coeff|)`` of the
    current divisor, so nearly common roots count as common.
    """
    a = _trim(a, rtol * (1 + np.max(np.abs(a), initial=0)))
    b = _trim(b, rtol * (1 + np.max(np.abs(b), initial=0)))
    if a.size == 0:
        a, b = b, a
    if a.size == 0:
        return np.zeros(0)
    while b.size:
        b = b / b[-1]
        _, r = npoly.polydiv(a, b)
        a, b = b, _trim(r, rtol * (1 + np.max(np.abs(b))))
    return a / a[-1]


def _poly_det(cols):
    """Determinant of a square matrix of polynomials, ``cols[j][i]`` = entry (i, j)."""
    n = len(cols)
    if n == 1:
        return cols[0][0]
    acc = np.zeros(1)
    for i in range(n):
        sub = [c[:i] + c[i + 1:] for c in cols[1:]]
        term = npoly.polymul(cols[0][i], _poly_det(sub))
        acc = npoly.polyadd(acc, term) if i % 2 == 0 else npoly.polysub(acc, term)
    return acc


def polynomial_data(spec):
    """``(tau_index, K, Mc)`` where ``M(z) = sum_k Mc[k] z^k = I - sum_j A_j z^{k_j}``."""
    tau_idx, K, ks = spec.commensurate_base()
    Mc = np.zeros((K + 1, spec.d, spec.d))
    Mc[0] = np.eye(spec.d)
    for k, A in zip(ks, spec.A):
        Mc[k] -= A
    return tau_idx, K, Mc


def minors(spec):
    """All ``d x d`` minors of ``[M(z), B]`` as ``(columns, coefficients)``."""
    _, _, Mc = polynomial_data(spec)
    d, m = spec.d, spec.m
    cols = [[Mc[:, i, j] for i in range(d)] for j in range(d)]
    cols += [[np.array([spec.B[i, j]]) for i in range(d)] for j in range(m)]
    return [(c, _poly_det([cols[j] for j in c])) for c in combinations(range(d + m), d)]


def hautus_exact_commensurate(spec, rank_tol=1e-7, coeff_rtol=1e-9):
    """Exact rank test for commensurate delays and no distributed part.

    Passes iff ``rank [A_N, B] = d`` and the ``d x d`` minors of
    ``[M(z), B]`` have no common complex root. Common roots are searched by a
    GCD of the minors and confirmed by evaluating ``[M(z), B]`` at the roots
    of the lowest-degree nonzero minor; the verdict follows the evaluation.
    """
    if spec.g is not None:
        raise ValueError("exact test requires no distributed delay (g = 0)")
    d = spec.d
    if d > MAX_EXACT_DIM:
        raise ValueError(f"exact test supports d <= {MAX_EXACT_DIM}, got {d}")
    tau_idx, K, Mc = polynomial_data(spec)
    if d * K > MAX_EXACT_DEGREE:
        raise ValueError(f"polynomial degree d*K = {d * K} exceeds {MAX_EXACT_DEGREE}")
    tau = tau_idx * spec.h
    B = spec.B

    lim = np.hstack([spec.A[-1], B])
    U, s, _ = np.linalg.svd(lim)
    limit_margin = float(s[-1]) if s.size == d else 0.0
    details = {"tau": tau, "K": K}
    if limit_margin <= rank_tol * (1 + np.linalg.norm(lim, 2)):
        w = _witness(-spec.A[-1], B, np.conj(U[:, -1]), complex(-np.inf), np.inf)
        return HautusReport("fail", limit_margin, "exact-commensurate", limit_margin,
                            w, None, details)

    nonzero = []
    for cols, c in minors(spec):
        c = _trim(c, coeff_rtol * (1 + np.max(np.abs(c))))
        if c.size:
            nonzero.append((c.size - 1, cols, c))
    if not nonzero:
        # rank deficient for every z; any z is a witness
        z0 = 1.0
        F = npoly.polyval(z0, Mc)
        U, s, _ = np.linalg.svd(np.hstack([F, B]))
        w = _witness(F, B, np.conj(U[:, -1]), 0.0, z0)
        return HautusReport("fail", 0.0, "exact-commensurate", limit_margin, w, None, details)

    g = nonzero[0][2]
    for _, _, c in nonzero[1:]:
        g = poly_gcd(g, c, coeff_rtol)
        if g.size == 1:
            break
    gcd_degree = int(g.size - 1)

    deg, cols, first = min(nonzero, key=lambda t: t[0])
    details["root_minor"] = list(cols)
    witness, best = None, np.inf
    for z0 in npoly.polyroots(first) if deg > 0 else []:
        Mz = npoly.polyval(z0, Mc)
        C = np.hstack([Mz, B])
        U, s, _ = np.linalg.svd(C)
        sm = float(s[-1]) if s.size == d else 0.0
        rel = sm / (1 + np.linalg.norm(C, 2))
        best = min(best, rel)
        if rel <= rank_tol and witness is None:
            p = -np.log(complex(z0)) / tau
            F = Mz * complex(z0) ** (-K)
            witness = _witness(F, B, np.conj(U[:, -1]), p, z0)
    details["gcd_agrees"] = (gcd_degree > 0) == (witness is not None)
    details["root_margin"] = best
    verdict = "fail" if witness is not None else "pass"
    min_margin = 0.0 if witness is not None else float(min(limit_margin, best))
    return HautusReport(verdict, min_margin, "exact-commensurate", limit_margin,
                        witness, gcd_degree, details)


def hautus_check(spec, **kw):
    """Exact test when it applies, grid scan otherwise."""
    if spec.g is None and spec.d <= MAX_EXACT_DIM:
        tau_idx, K, _ = polynomial_data(spec)
        if spec.d * K <= MAX_EXACT_DEGREE:
            return hautus_exact_commensurate(spec)
    return hautus_grid_check(spec, **kw)
