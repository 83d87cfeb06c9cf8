"""Simulation, state space, minimal-time bound, control compression and
motion planning for difference delay systems."""

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_positive, to_index
from .measure import apply_to_signal, causal_inverse, det_measure
from .signals import GridSignal
from .system import build_QP

logger = logging.getLogger(__name__)

# cutoff breakpoints, as fractions of the admissible intervals
CUTOFF_INNER = 0.25
CUTOFF_OUTER = 0.75


def _run_recursion(spec, X, i_from, forcing=None):
    """Fill ``X[i_from:]`` in place with the delay recursion.

    ``X[i] = sum_j A_j X[i - k_j] + h sum_{s=1..L} g_s X[i - s] + forcing[i]``,
    with rows before index 0 read as zero.
    """
    h, g = spec.h, spec.g
    L = spec.L
    terms = [(k, A) for k, A in zip(spec.delay_index, spec.A) if np.any(A)]
    for i in range(i_from, X.shape[0]):
        acc = np.zeros(spec.d) if forcing is None else forcing[i].copy()
        for k, A in terms:
            if i - k >= 0:
                acc += A @ X[i - k]
        if g is not None and i > 0:
            w = min(L, i)
            acc += h * np.einsum("sab,sb->a", g[:w], X[i - 1::-1][:w])
        X[i] = acc


def simulate(spec, u, T_out, x_past=None):
    """Run the delay system from rest and return the state and output.

    Parameters
    ----------
    spec : SystemSpec
    u : GridSignal
        Input of dimension ``m``.
    T_out : float
        Length of the output window ``[0, T_out)``; a grid multiple.
    x_past : GridSignal, optional
        Stored state to restart from. The recursion resumes at
        ``x_past.stop``; inputs before that cell are ignored.

    Returns
    -------
    x : GridSignal
        State up to ``T_out``, zero before the support of ``u`` (or before
        ``x_past``).
    y : GridSignal
        ``y(t) = x(t - delay_N)`` on ``[0, T_out)``.
    """
    if u.dim != spec.m:
        raise ValueError(f"input dimension {u.dim} != m = {spec.m}")
    n_out = to_index(check_positive(T_out, "T_out"), spec.h, "T_out")
    L, d = spec.L, spec.d
    if x_past is not None:
        if x_past.dim != d:
            raise ValueError(f"stored state dimension {x_past.dim} != d = {d}")
        k_start = x_past.stop
        lo = min(x_past.start, k_start, -L)
    else:
        r = u.nonzero_range()
        k_start = r[0] if r is not None else -L
        lo = min(k_start, -L)
    hi = max(n_out, u.stop, k_start)
    X = np.zeros((hi - lo, d))
    if x_past is not None:
        X[x_past.start - lo:x_past.stop - lo] = x_past.values
    forcing = u.window(lo, hi) @ spec.B.T
    if x_past is not None or np.any(forcing):
        _run_recursion(spec, X, k_start - lo, forcing)
    x = GridSignal(spec.h, lo, X)
    y = GridSignal(spec.h, 0, x.window(-L, n_out - L))
    return x, y


def state_residual(spec, y, Q=None):
    """Largest ``||(Q * y)(t)||_1`` over cells of ``[0, T - delay_N)``.

    ``y`` is read on ``[0, T)`` with ``T`` its last stored cell and zero on
    negative times. Zero (to rounding) means ``y`` lies in the state space.
    """
    if y.dim != spec.d:
        raise ValueError(f"signal dimension {y.dim} != d = {spec.d}")
    n = y.stop
    if n < spec.L:
        raise ValueError("window shorter than the largest delay")
    if Q is None:
        Q, _ = build_QP(spec)
    w = apply_to_signal(Q, y.restrict(0, n)).window(0, n - spec.L)
    return float(np.abs(w).sum(axis=1).max()) if w.size else 0.0


def extend_to_state(spec, y0, T):
    """Unique state-space trajectory on ``[0, T)`` starting with ``y0``.

    ``y0`` gives the values on ``[0, delay_N)``; later cells follow the
    homogeneous recursion.
    """
    if y0.dim != spec.d:
        raise ValueError(f"signal dimension {y0.dim} != d = {spec.d}")
    r = y0.nonzero_range()
    if r is not None and (r[0] < 0 or r[1] > spec.L):
        raise ValueError("initial segment must live on [0, delay_N)")
    n = to_index(T, spec.h, "T")
    Y = np.zeros((max(n, spec.L), spec.d))
    Y[:spec.L] = y0.window(0, spec.L)
    _run_recursion(spec, Y, spec.L)
    return GridSignal(spec.h, 0, Y[:n])


def minimal_time_bound(spec, Q=None):
    """Upper bound ``-l(det Q)`` on the minimal reachability time (= d * delay_N)."""
    if Q is None:
        Q, _ = build_QP(spec)
    return -det_measure(Q).support_inf()


def kamen_compress(omega, beta, beta_inv, tau):
    """Split ``omega = alpha + beta * r`` with ``alpha`` vanishing left of ``tau``.

    Parameters
    ----------
    omega : GridSignal
        Scalar control supported in ``(-inf, 0)``.
    beta : ScalarMeasure
        Past-supported measure with invertible leading atom.
    beta_inv : ScalarMeasure
        Truncated causal inverse of ``beta``.
    tau : float
        Must satisfy ``tau < l(beta)``.

    Returns
    -------
    alpha, r : GridSignal
        ``alpha`` is exactly zero on every cell starting at or before ``tau``.
    """
    if omega.dim != 1:
        raise ValueError("kamen_compress works on scalar signals")
    h = omega.h
    l_beta = beta.support_inf()
    if not tau < l_beta:
        raise ValueError(f"tau = {tau} must be smaller than l(beta) = {l_beta}")
    rng = omega.nonzero_range()
    if rng is None or rng[0] * h > tau:
        return omega, GridSignal.zeros(h, 0, 0, 1)
    k_om, k_end = rng
    if k_end > 0:
        raise ValueError("omega must be supported in (-inf, 0]")
    m_beta = beta.index_span()[0]
    # beta * w at cells <= -1 reads w up to -1 - m_beta
    n_max = -1 - m_beta
    if beta_inv.truncated_at is not None and beta_inv.truncated_at < n_max - k_om:
        raise ValueError("inverse horizon too short: need coefficients up to index "
                         f"{n_max - k_om}, have {beta_inv.truncated_at}")
    v = apply_to_signal(beta_inv, omega.restrict(k_om, k_end))
    lo = v.start
    vals = v.window(lo, n_max + 1)[:, 0]
    nz = np.flatnonzero(vals)
    l_v = (lo + nz[0]) * h if nz.size else tau - l_beta

    # admissible: a2 < a1 < l(v) and tau - l(beta) < b1 < b2 < 0
    width = l_beta - tau
    b_lo = tau - l_beta
    b1, b2 = b_lo + CUTOFF_INNER * width, b_lo + CUTOFF_OUTER * width
    a1, a2 = l_v - CUTOFF_INNER * width, l_v - CUTOFF_OUTER * width
    t = np.arange(lo, n_max + 1) * h
    phi = np.interp(t, [a2, a1, b1, b2], [0.0, 1.0, 1.0, 0.0], left=0.0, right=0.0)

    r = GridSignal(h, lo, vals * phi).trim()
    rest = GridSignal(h, lo, vals * (1.0 - phi))
    alpha = apply_to_signal(beta, rest)
    alpha = alpha.restrict(min(alpha.start, 0), 0).trim()
    return alpha, r


def compress_control(spec, omega, T, T_check=0.0, Q=None):
    """Rewrite ``omega`` as a control supported in ``[-T, 0]`` with the same output.

    Applies the splitting of :func:`kamen_compress` with ``beta = det Q`` to
    every input channel; the discarded part ``Adj(Q) * P * r`` lives in
    negative time and never reaches the output.
    """
    if omega.dim != spec.m:
        raise ValueError(f"control dimension {omega.dim} != m = {spec.m}")
    if Q is None:
        Q, _ = build_QP(spec)
    beta = det_measure(Q)
    bound = -beta.support_inf()
    if not T > bound:
        raise ValueError(f"T = {T} must exceed the minimal-time bound {bound}")
    rng = omega.nonzero_range()
    if rng is None:
        return GridSignal.zeros(spec.h, 0, 0, spec.m)
    if rng[1] > 0:
        raise ValueError("omega must be supported in (-inf, 0]")
    if rng[0] * spec.h > -T:
        return omega.trim()
    horizon = -rng[0] * spec.h + bound + float(T_check)
    beta_inv = causal_inverse(beta, horizon)
    parts = [kamen_compress(omega.component(i), beta, beta_inv, -T)[0]
             for i in range(spec.m)]
    return GridSignal.stack(parts).trim() if any(p.values.size for p in parts) \
        else GridSignal.zeros(spec.h, 0, 0, spec.m)


def _plan(spec, S, psi, Q, state_tol, reject_tol):
    if S.shape != (spec.m, spec.d):
        raise ValueError(f"S must be {spec.m} x {spec.d}, got {S.shape}")
    if not S.is_past_supported():
        raise ValueError("S must be supported in (-inf, 0]")
    if psi.dim != spec.d:
        raise ValueError(f"target dimension {psi.dim} != d = {spec.d}")
    n, L = psi.stop, spec.L
    span = S.index_span()
    depth = 0 if span is None else -span[0]
    if n - L < depth:
        raise ValueError("target window too short for the depth of S")
    w = apply_to_signal(Q, psi.restrict(0, n))
    pos = w.window(0, n - L)
    resid = float(np.abs(pos).sum(axis=1).max()) if pos.size else 0.0
    if resid > reject_tol:
        raise ValueError(f"target not in the state space (residual {resid:.3g})")
    if resid > state_tol:
        warnings.warn(f"target is only approximately in the state space "
                      f"(residual {resid:.3g})", RuntimeWarning)
    w_valid = w.restrict(-L, n - L)
    full = apply_to_signal(S, w_valid)
    # cells >= 0 whose inputs lie inside the valid window
    pi_part = full.window(0, n - L - depth)
    pi_norm = float(np.abs(pi_part).sum(axis=1).max()) if pi_part.size else 0.0
    if pi_norm > reject_tol:
        raise ValueError(f"planned control leaks into positive time ({pi_norm:.3g})")
    omega = full.restrict(full.start, 0).trim()
    if omega.values.size == 0:
        omega = GridSignal.zeros(spec.h, 0, 0, spec.m)
    return omega, resid, pi_norm, w.restrict(-L, 0)


def plan_control(spec, S, psi, T_support=None, state_tol=1e-9, reject_tol=1e-6, Q=None):
    """Control ``omega = S * Q * psi`` restricted to negative time.

    ``psi`` is read on ``[0, T_support)`` (default: its stored window). If
    ``S`` comes from a Bezout pair, ``simulate(spec, omega)`` reproduces
    ``psi``.
    """
    if T_support is not None:
        psi = psi.restrict(0, to_index(T_support, spec.h, "T_support"))
    if Q is None:
        Q, _ = build_QP(spec)
    return _plan(spec, S, psi, Q, state_tol, reject_tol)[0]


@dataclass
class ReachReport:
    """Outcome of planning, compressing and re-simulating one target."""

    target: GridSignal
    omega: GridSignal
    alpha: GridSignal
    T: float
    bound: float
    output: GridSignal
    error: float
    plan_error: float
    state_residual: float
    tol: float
    verdict: str
    stage: str
    error_constant: float = float("nan")
    notes: list = field(default_factory=list)

    @property
    def passed(self):
        return self.verdict == "pass"


def _tv_norm(M):
    return float(sum(np.abs(e.atom_w).sum() + M.h * np.abs(e.dens).sum()
                     for r in M.entries() for e in r))


def reach_and_verify(spec, S, psi, T, tol=1e-9, state_tol=1e-9, reject_tol=1e-6):
    """Plan a control for ``psi``, compress it into ``[-T, 0]`` and re-simulate.

    The verdict is ``pass`` iff the L1 output error on the target window is at
    most ``tol`` and the compressed control lives in ``[-T, 0]``.

    ``error_constant`` is ``||Q^-1||_TV * ||(Q * psi)|_(-inf,0)||_1``; when
    ``Q*R + P*S - I`` has total variation ``eps`` the output error is at most
    ``error_constant * eps``.
    """
    Q, _ = build_QP(spec)
    n = psi.stop
    if n <= 0:
        raise ValueError("target window is empty")
    T_check = n * spec.h
    bound = minimal_time_bound(spec, Q)
    if not T > bound:
        raise ValueError(f"T = {T} must exceed the minimal-time bound {bound}")
    psi = psi.restrict(0, n)
    omega, resid, _, w_neg = _plan(spec, S, psi, Q, state_tol, reject_tol)
    depth = 0 if S.index_span() is None else -S.index_span()[0]
    Qinv = causal_inverse(Q, T_check + (2 * spec.L + depth) * spec.h)
    const = _tv_norm(Qinv) * w_neg.l1_norm()

    _, y_plan = simulate(spec, omega, T_check) if omega.values.size else \
        (None, GridSignal.zeros(spec.h, 0, n, spec.d))
    plan_error = y_plan.distance_l1(psi, 0, n)
    empty = GridSignal.zeros(spec.h, 0, 0, spec.m)
    if plan_error > tol:
        logger.info("planned control misses the target (L1 error %.3g)", plan_error)
        return ReachReport(psi, omega, empty, T, bound, y_plan, plan_error, plan_error,
                           resid, tol, "fail", "plan", const)

    alpha = compress_control(spec, omega, T, T_check, Q)
    if alpha.values.size:
        _, y = simulate(spec, alpha, T_check)
    else:
        y = GridSignal.zeros(spec.h, 0, n, spec.d)
    error = y.distance_l1(psi, 0, n)
    inside = alpha.support_inf() >= -T - 1e-12 * max(1.0, T) and alpha.support_sup() <= 0
    notes = [] if inside else ["compressed control leaves [-T, 0]"]
    verdict = "pass" if error <= tol and inside else "fail"
    return ReachReport(psi, omega, alpha, T, bound, y, error, plan_error, resid, tol,
                       verdict, "compress", const, notes)
