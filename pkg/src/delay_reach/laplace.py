"""Transfer matrices and the coprimeness margin over the complex plane."""

from dataclasses import dataclass

import numpy as np

# |Re p| * delay_N above this overflows exp in double precision
OVERFLOW_LIMIT = 700.0


@dataclass(frozen=True)
class MarginSample:
    """Smallest singular value of ``[Q^(p), B]`` and its left direction ``g``.

    ``g`` is normalised so that ``||g^T [Q^(p), B]||_2 == margin``.
    """

    p: complex
    margin: float
    witness_g: np.ndarray


def _check_overflow(spec, p):
    if np.any(np.abs(np.real(p)) * spec.max_delay > OVERFLOW_LIMIT):
        raise ValueError(f"|Re p| * delay_N exceeds {OVERFLOW_LIMIT}; "
                         "restrict the strip")


def eval_transfer(spec, p):
    """``Q^(p)`` and ``P^(p)`` for scalar or array ``p``.

    ``Q^(p) = e^{p L}(I - sum_j A_j e^{-p L_j} - h sum_i g_i e^{-p i h})``
    with the same right-endpoint cells as the simulator; ``P^(p) = B``.
    Arrays of ``p`` give stacks of shape ``p.shape + (d, d)``.
    """
    p = np.asarray(p, dtype=complex)
    _check_overflow(spec, p)
    d, h, Lmax = spec.d, spec.h, spec.max_delay
    pe = p[..., None, None]
    Q = np.exp(pe * Lmax) * np.eye(d)
    for lam, A in zip(spec.delays, spec.A):
        Q = Q - A * np.exp(pe * (Lmax - lam))
    if spec.g is not None:
        s = np.arange(1, spec.L + 1) * h
        # sum_i g_i e^{p (delay_N - s_i)}
        phase = np.exp(p[..., None] * (Lmax - s))
        Q = Q - h * np.einsum("...s,sab->...ab", phase, spec.g)
    P = np.broadcast_to(spec.B, p.shape + spec.B.shape)
    return Q, P


def _margin_stack(Qs, B):
    C = np.concatenate([Qs, np.broadcast_to(B, Qs.shape[:-1] + (B.shape[1],))], axis=-1)
    U, s, _ = np.linalg.svd(C)
    return s[..., -1], np.conj(U[..., :, -1])


def coprimeness_margin(spec, p):
    """:class:`MarginSample` at a single point ``p``."""
    Q, _ = eval_transfer(spec, complex(p))
    s, g = _margin_stack(Q, spec.B)
    return MarginSample(complex(p), float(s), g)


def limit_margin(spec):
    """Margin of ``[-A_N, B]``, the limit of ``[Q^(p), B]`` as Re p -> -inf."""
    s, g = _margin_stack(-spec.A[-1], spec.B)
    return MarginSample(complex(-np.inf, 0.0), float(s), g)


def im_period(spec):
    """Period of ``Q^`` in Im p: ``2 pi / tau`` with ``tau`` the common delay
    quantum (``h`` once a density is present)."""
    tau_idx = spec.commensurate_base()[0] if spec.g is None else 1
    return 2 * np.pi / (tau_idx * spec.h)


def default_strip(spec, eps=1e-6):
    """Heuristic bounded strip ``(re_lo, re_hi, im_lo, im_hi)`` covering one
    Im-period; left edge where the delayed terms have decayed below ``eps``."""
    re_lo = -np.log(1.0 / eps) / spec.h
    re_lo = max(re_lo, -0.99 * OVERFLOW_LIMIT / spec.max_delay)
    norms = sum(np.linalg.norm(A, 2) for A in spec.A)
    re_hi = np.log(2 * norms + 2) / spec.max_delay
    half = im_period(spec) / 2
    return re_lo, re_hi, -half, half


def lipschitz_bound(spec, re_max):
    """Bound on ``||dQ^/dp||_2`` for ``Re p <= re_max``; the margin is
    Lipschitz in ``p`` with this constant."""
    Lmax = spec.max_delay
    r = max(re_max, 0.0)
    out = Lmax * np.exp(r * Lmax)
    for lam, A in zip(spec.delays, spec.A):
        out += np.linalg.norm(A, 2) * (Lmax - lam) * np.exp(r * (Lmax - lam))
    if spec.g is not None:
        s = np.arange(1, spec.L + 1) * spec.h
        gn = np.array([np.linalg.norm(gi, 2) for gi in spec.g])
        out += spec.h * float(np.sum(gn * (Lmax - s) * np.exp(r * (Lmax - s))))
    return float(out)


@dataclass
class ScanResult:
    minimum: MarginSample
    limit: MarginSample
    im_period: float
    commensurate: bool
    grid_shape: tuple
    step: float


def margin_scan(spec, re_range, im_range, grid_density, chunk=20000):
    """Smallest margin over a rectangular grid of the strip, plus the limit pair.

    ``grid_density`` is the spacing between samples in both directions. Ties
    are broken by the lexicographically smallest ``(Re p, Im p)`` so the
    result does not depend on evaluation order.
    """
    step = float(grid_density)
    if not step > 0:
        raise ValueError("grid_density must be positive")
    (r0, r1), (i0, i1) = re_range, im_range
    if not (r1 >= r0 and i1 >= i0):
        raise ValueError("empty strip")
    re = np.linspace(r0, r1, int(np.floor((r1 - r0) / step + 1e-9)) + 1)
    im = np.linspace(i0, i1, int(np.floor((i1 - i0) / step + 1e-9)) + 1)
    P = (re[:, None] + 1j * im[None, :]).ravel()
    _check_overflow(spec, P)
    best = None
    for a in range(0, P.size, chunk):
        p = P[a:a + chunk]
        Q, _ = eval_transfer(spec, p)
        s, g = _margin_stack(Q, spec.B)
        # P is already in (Re, Im) lexicographic order, argmin keeps the first
        k = int(np.argmin(s))
        if best is None or s[k] < best.margin:
            best = MarginSample(complex(p[k]), float(s[k]), g[k])
    return ScanResult(best, limit_margin(spec), im_period(spec), spec.g is None,
                      (re.size, im.size), step)
