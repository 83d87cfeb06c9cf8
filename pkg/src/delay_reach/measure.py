"""Convolution algebra of compactly supported measures on a uniform grid.

A scalar measure is a finite sum of Dirac atoms at grid points plus a
gridded density. Density sample ``i`` stands for the cell ``((i-1) h, i h]``
and carries mass ``h * sample``, concentrated at ``i h`` for the purpose of
convolution (rectangle rule on left-open cells). With that convention every
operation below is exact polynomial arithmetic in the grid shift, so forward
recursions and convolution identities hold to rounding error.

Matrix-valued measures are rectangular arrays of scalar measures sharing one
grid step. The heavy kernels (convolution, inverse, application to signals)
run on a dense coefficient representation::

    lo, atoms, dens   # atoms/dens have shape (n, rows, cols); index lo + k
"""

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from ._validation import check_step, same_step, to_index
from .signals import GridSignal

MAX_DET_DIM = 6


@dataclass(frozen=True, eq=False)
class ScalarMeasure:
    """Atoms plus a gridded density, all on grid step ``h``.

    Parameters
    ----------
    h : float
        Grid step in seconds.
    atom_idx : array of int
        Strictly increasing atom locations, in grid units.
    atom_w : array of float
        Atom weights. Zero weights are pruned.
    dens_start : int
        Grid index of the first density sample.
    dens : array of float
        Density samples; leading and trailing zeros are trimmed.
    truncated_at : int or None
        If set, coefficients beyond this index are unknown (the measure is a
        truncation of an infinitely supported one). None means complete.
    """

    h: float
    atom_idx: np.ndarray
    atom_w: np.ndarray
    dens_start: int = 0
    dens: np.ndarray = None
    truncated_at: int = None

    def __post_init__(self):
        object.__setattr__(self, "h", check_step(self.h))
        idx = np.asarray(self.atom_idx, dtype=np.int64).reshape(-1)
        w = np.asarray(self.atom_w, dtype=float).reshape(-1)
        if idx.shape != w.shape:
            raise ValueError("atom index and weight arrays differ in length")
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            raise ValueError("atom locations must be strictly increasing")
        keep = w != 0
        idx, w = idx[keep], w[keep]
        dens = np.zeros(0) if self.dens is None else np.asarray(self.dens, dtype=float).reshape(-1)
        start = int(self.dens_start)
        nz = np.flatnonzero(dens)
        if nz.size:
            start, dens = start + int(nz[0]), dens[nz[0]:nz[-1] + 1].copy()
        else:
            start, dens = 0, np.zeros(0)
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(dens))):
            raise ValueError("measure has non-finite weights")
        for a in (idx, w, dens):
            a.setflags(write=False)
        object.__setattr__(self, "atom_idx", idx)
        object.__setattr__(self, "atom_w", w)
        object.__setattr__(self, "dens_start", start)
        object.__setattr__(self, "dens", dens)

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, h):
        return cls(h, [], [])

    @classmethod
    def dirac(cls, t, h, weight=1.0):
        """Atom of ``weight`` at time ``t`` (must be a grid multiple)."""
        return cls(h, [to_index(t, h, "atom location")], [weight])

    @classmethod
    def from_atoms(cls, atoms, h):
        """Build from ``{index: weight}``; repeated indices are summed."""
        acc = {}
        for k, w in dict(atoms).items():
            acc[int(k)] = acc.get(int(k), 0.0) + float(w)
        keys = sorted(acc)
        return cls(h, keys, [acc[k] for k in keys])

    @classmethod
    def from_density(cls, samples, start, h):
        return cls(h, [], [], start, samples)

    @classmethod
    def density_from_function(cls, f, t0, t1, h):
        """Density of ``f`` on ``(t0, t1]``, sampled at right cell endpoints."""
        k0, k1 = to_index(t0, h, "t0"), to_index(t1, h, "t1")
        s = np.arange(k0 + 1, k1 + 1) * float(h)
        return cls(h, [], [], k0 + 1, [float(f(si)) for si in s])

    # -- queries ----------------------------------------------------------
    @property
    def is_zero(self):
        return self.atom_idx.size == 0 and self.dens.size == 0

    @property
    def has_density(self):
        return self.dens.size > 0

    def index_span(self):
        """Index range ``(lo, hi)`` (inclusive) carrying mass, or None."""
        lo, hi = [], []
        if self.atom_idx.size:
            lo.append(int(self.atom_idx[0]))
            hi.append(int(self.atom_idx[-1]))
        if self.dens.size:
            lo.append(self.dens_start)
            hi.append(self.dens_start + self.dens.size - 1)
        if not lo:
            return None
        return min(lo), max(hi)

    def support_inf(self):
        """Infimum of the support in seconds; ``+inf`` for the zero measure."""
        cands = []
        if self.atom_idx.size:
            cands.append(int(self.atom_idx[0]))
        if self.dens.size:
            cands.append(self.dens_start - 1)
        return min(cands) * self.h if cands else np.inf

    def support_sup(self):
        span = self.index_span()
        return -np.inf if span is None else span[1] * self.h

    def is_past_supported(self):
        span = self.index_span()
        return span is None or span[1] <= 0

    def atoms(self):
        return dict(zip(self.atom_idx.tolist(), self.atom_w.tolist()))

    def atom_at(self, k):
        hit = np.flatnonzero(self.atom_idx == k)
        return float(self.atom_w[hit[0]]) if hit.size else 0.0

    def norms(self):
        """``(max |atom weight|, density L1 mass)``."""
        a = float(np.abs(self.atom_w).max()) if self.atom_w.size else 0.0
        return a, self.h * float(np.abs(self.dens).sum())

    def total_mass(self):
        return float(self.atom_w.sum()) + self.h * float(self.dens.sum())

    # -- dense view -------------------------------------------------------
    def dense(self, lo, n):
        """Atom and density arrays on index window ``[lo, lo + n)``."""
        atoms, dens = np.zeros(n), np.zeros(n)
        sel = (self.atom_idx >= lo) & (self.atom_idx < lo + n)
        atoms[self.atom_idx[sel] - lo] = self.atom_w[sel]
        a, b = max(lo, self.dens_start), min(lo + n, self.dens_start + self.dens.size)
        if a < b:
            dens[a - lo:b - lo] = self.dens[a - self.dens_start:b - self.dens_start]
        return atoms, dens

    @classmethod
    def from_dense(cls, h, lo, atoms, dens, truncated_at=None):
        atoms = np.asarray(atoms, dtype=float)
        nz = np.flatnonzero(atoms)
        return cls(h, lo + nz, atoms[nz], lo, dens, truncated_at)

    def restrict(self, lo, hi):
        """Keep mass on index window ``[lo, hi]``."""
        if hi < lo:
            return ScalarMeasure.zero(self.h)
        a, d = self.dense(lo, hi - lo + 1)
        return ScalarMeasure.from_dense(self.h, lo, a, d)

    # -- arithmetic -------------------------------------------------------
    def _binary(self, other, op):
        same_step(self.h, other.h)
        spans = [s for s in (self.index_span(), other.index_span()) if s is not None]
        if not spans:
            return ScalarMeasure.zero(self.h)
        lo = min(s[0] for s in spans)
        n = max(s[1] for s in spans) - lo + 1
        a1, d1 = self.dense(lo, n)
        a2, d2 = other.dense(lo, n)
        trunc = [t for t in (self.truncated_at, other.truncated_at) if t is not None]
        return ScalarMeasure.from_dense(self.h, lo, op(a1, a2), op(d1, d2),
                                        min(trunc) if trunc else None)

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, c):
        c = float(c)
        return ScalarMeasure(self.h, self.atom_idx, self.atom_w * c, self.dens_start,
                             self.dens * c, self.truncated_at)

    def shift(self, k):
        """Translate by ``k`` grid cells (convolution with an atom at ``k``)."""
        t = None if self.truncated_at is None else self.truncated_at + k
        return ScalarMeasure(self.h, self.atom_idx + k, self.atom_w,
                             self.dens_start + k, self.dens, t)

    def allclose(self, other, atol=1e-12):
        d = self - other
        a, m = d.norms()
        return a <= atol and m <= atol

    def __repr__(self):
        parts = [f"{w:+.6g}δ[{k}]" for k, w in zip(self.atom_idx, self.atom_w)]
        if self.dens.size:
            parts.append(f"density[{self.dens_start}..{self.dens_start + self.dens.size - 1}]")
        return f"ScalarMeasure(h={self.h}, {' '.join(parts) or '0'})"


class MatrixMeasure:
    """Rectangular array of :class:`ScalarMeasure` on one grid step."""

    def __init__(self, entries, h=None):
        rows = [list(r) for r in entries]
        if not rows or not rows[0]:
            raise ValueError("matrix measure needs at least one entry")
        cols = len(rows[0])
        if any(len(r) != cols for r in rows):
            raise ValueError("ragged matrix measure")
        if h is None:
            h = rows[0][0].h
        for r in rows:
            for e in r:
                same_step(h, e.h)
        self._entries = tuple(tuple(r) for r in rows)
        self.h = float(h)
        self.rows, self.cols = len(rows), cols

    # -- constructors -----------------------------------------------------
    @classmethod
    def zeros(cls, rows, cols, h):
        z = ScalarMeasure.zero(h)
        return cls([[z] * cols for _ in range(rows)], h)

    @classmethod
    def identity(cls, d, h, index=0):
        return cls.from_atoms({index: np.eye(d)}, h)

    @classmethod
    def from_atoms(cls, atoms, h):
        """Build from ``{index: matrix}``."""
        items = sorted((int(k), np.atleast_2d(np.asarray(m, dtype=float)))
                       for k, m in atoms.items())
        if not items:
            raise ValueError("need at least one atom to infer the shape")
        shape = items[0][1].shape
        if any(m.shape != shape for _, m in items):
            raise ValueError("atom matrices differ in shape")
        lo = items[0][0]
        n = items[-1][0] - lo + 1
        a = np.zeros((n,) + shape)
        for k, m in items:
            a[k - lo] += m
        return cls.from_dense(h, lo, a, np.zeros_like(a))

    @classmethod
    def from_scalar(cls, mu):
        return cls([[mu]], mu.h)

    @classmethod
    def from_dense(cls, h, lo, atoms, dens, truncated_at=None):
        atoms, dens = np.asarray(atoms, dtype=float), np.asarray(dens, dtype=float)
        _, r, c = atoms.shape
        return cls([[ScalarMeasure.from_dense(h, lo, atoms[:, i, j], dens[:, i, j],
                                              truncated_at)
                     for j in range(c)] for i in range(r)], h)

    # -- access -----------------------------------------------------------
    @property
    def shape(self):
        return self.rows, self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self._entries[i][j]

    def entries(self):
        return self._entries

    @property
    def truncated_at(self):
        t = [e.truncated_at for r in self._entries for e in r if e.truncated_at is not None]
        return min(t) if t else None

    def index_span(self):
        spans = [e.index_span() for r in self._entries for e in r]
        spans = [s for s in spans if s is not None]
        if not spans:
            return None
        return min(s[0] for s in spans), max(s[1] for s in spans)

    def support_inf(self):
        return min(e.support_inf() for r in self._entries for e in r)

    def is_past_supported(self):
        return all(e.is_past_supported() for r in self._entries for e in r)

    def has_density(self):
        return any(e.has_density for r in self._entries for e in r)

    def dense(self, lo=None, n=None):
        """Return ``(lo, atoms, dens)`` with arrays of shape (n, rows, cols)."""
        if lo is None:
            span = self.index_span()
            lo, n = (0, 1) if span is None else (span[0], span[1] - span[0] + 1)
        atoms = np.zeros((n, self.rows, self.cols))
        dens = np.zeros_like(atoms)
        for i, j in product(range(self.rows), range(self.cols)):
            atoms[:, i, j], dens[:, i, j] = self._entries[i][j].dense(lo, n)
        return lo, atoms, dens

    def atom_matrix(self, k):
        return np.array([[e.atom_at(k) for e in r] for r in self._entries])

    def norms(self):
        """``(max atom weight, max entry density L1)`` over all entries."""
        ns = [e.norms() for r in self._entries for e in r]
        return max(n[0] for n in ns), max(n[1] for n in ns)

    def restrict(self, lo, hi):
        return MatrixMeasure([[e.restrict(lo, hi) for e in r] for r in self._entries], self.h)

    # -- arithmetic -------------------------------------------------------
    def _zip(self, other, op):
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return MatrixMeasure([[op(a, b) for a, b in zip(ra, rb)]
                              for ra, rb in zip(self._entries, other._entries)], self.h)

    def __add__(self, other):
        return self._zip(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._zip(other, lambda a, b: a - b)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, c):
        return MatrixMeasure([[e.scale(c) for e in r] for r in self._entries], self.h)

    def shift(self, k):
        return MatrixMeasure([[e.shift(k) for e in r] for r in self._entries], self.h)

    @property
    def T(self):
        return MatrixMeasure([list(c) for c in zip(*self._entries)], self.h)

    def allclose(self, other, atol=1e-12):
        a, m = (self - other).norms()
        return a <= atol and m <= atol

    def __repr__(self):
        return f"MatrixMeasure({self.rows}x{self.cols}, h={self.h}, span={self.index_span()})"


def _as_matrix(mu):
    return MatrixMeasure.from_scalar(mu) if isinstance(mu, ScalarMeasure) else mu


def _dense_conv(x, y):
    """Polynomial product of coefficient stacks (n1, r, c) and (n2, c, q)."""
    n1, n2 = x.shape[0], y.shape[0]
    out = np.zeros((n1 + n2 - 1, x.shape[1], y.shape[2]))
    if n1 <= n2:
        for a in range(n1):
            if np.any(x[a]):
                out[a:a + n2] += np.einsum("ij,njk->nik", x[a], y)
    else:
        for b in range(n2):
            if np.any(y[b]):
                out[b:b + n1] += np.einsum("nij,jk->nik", x, y[b])
    return out


def conv(mu, nu):
    """Convolution ``mu * nu`` of scalar or matrix measures.

    Atom*atom gives atoms, atom*density gives shifted scaled density and
    density*density is the discrete convolution scaled by ``h``.
    """
    scalar = isinstance(mu, ScalarMeasure) and isinstance(nu, ScalarMeasure)
    M, N = _as_matrix(mu), _as_matrix(nu)
    h = same_step(M.h, N.h)
    if M.cols != N.rows:
        raise ValueError(f"inner dimensions differ: {M.shape} * {N.shape}")
    if M.index_span() is None or N.index_span() is None:
        out = MatrixMeasure.zeros(M.rows, N.cols, h)
    else:
        lo1, a1, d1 = M.dense()
        lo2, a2, d2 = N.dense()
        atoms = _dense_conv(a1, a2)
        dens = _dense_conv(a1, d2) + _dense_conv(d1, a2)
        if np.any(d1) and np.any(d2):
            dens += h * _dense_conv(d1, d2)
        trunc = _conv_truncation(M, N)
        out = MatrixMeasure.from_dense(h, lo1 + lo2, atoms, dens, trunc)
    return out[0, 0] if scalar else out


def _conv_truncation(M, N):
    # a product is only known up to the first unknown coefficient of a factor
    t = []
    for X, Y in ((M, N), (N, M)):
        if X.truncated_at is not None:
            span = Y.index_span()
            t.append(X.truncated_at + span[0])
    return min(t) if t else None


def support_inf(mu):
    """Infimum of the support in seconds (``+inf`` for the zero measure)."""
    return mu.support_inf()


def _check_square(M):
    M = _as_matrix(M)
    if M.rows != M.cols:
        raise ValueError(f"matrix measure must be square, got {M.shape}")
    if M.rows > MAX_DET_DIM:
        raise ValueError(f"dimension {M.rows} exceeds the cofactor budget d <= {MAX_DET_DIM}")
    return M


def _minor_det(M, rows, cols):
    """Determinant of the submatrix on ``rows`` x ``cols`` with memoization."""

    @lru_cache(maxsize=None)
    def det(r, cs):
        if len(cs) == 1:
            return M[rows[r], cs[0]]
        acc = ScalarMeasure.zero(M.h)
        for pos, c in enumerate(cs):
            e = M[rows[r], c]
            if e.is_zero:
                continue
            term = conv(e, det(r + 1, cs[:pos] + cs[pos + 1:]))
            acc = acc + term if pos % 2 == 0 else acc - term
        return acc

    return det(0, tuple(cols))


def det_measure(M):
    """Determinant over the convolution algebra (cofactor expansion)."""
    M = _check_square(M)
    d = M.rows
    return _minor_det(M, tuple(range(d)), tuple(range(d)))


def adjugate(M):
    """Transposed cofactor matrix, so that ``adj(M) * M = det(M) I``."""
    M = _check_square(M)
    d = M.rows
    if d == 1:
        return MatrixMeasure.identity(1, M.h)
    out = [[None] * d for _ in range(d)]
    for i, j in product(range(d), range(d)):
        rows = tuple(r for r in range(d) if r != j)
        cols = tuple(c for c in range(d) if c != i)
        c = _minor_det(M, rows, cols)
        out[i][j] = c if (i + j) % 2 == 0 else -c
    return MatrixMeasure(out, M.h)


def _forward_solve(coef, n_out):
    """First ``n_out`` coefficients of the inverse of a matrix polynomial.

    ``coef[0]`` must be invertible. Solves ``sum_u coef[u] X[t-u] = [t==0] I``.
    """
    d = coef.shape[1]
    lead_inv = np.linalg.inv(coef[0])
    rest = coef[1:]
    span = rest.shape[0]
    X = np.zeros((n_out, d, d))
    for t in range(n_out):
        rhs = np.eye(d) if t == 0 else np.zeros((d, d))
        w = min(span, t)
        if w:
            # sum_{u=1..w} rest[u-1] @ X[t-u]
            rhs = rhs - np.einsum("uij,ujk->ik", rest[:w], X[t - 1::-1][:w])
        X[t] = lead_inv @ rhs
    return X


def causal_inverse(M, horizon):
    """Inverse over causal measures, truncated to ``[l, l + horizon]``.

    ``M`` must have an invertible leading atom (the atom coefficient at the
    smallest mass index) with no density mass at or before it. The result is
    exact on the grid: ``conv(M, result) - delta_0 I`` vanishes on the index
    window ``[0, horizon / h]`` and ``result.truncated_at`` records the last
    computed index.
    """
    scalar = isinstance(M, ScalarMeasure)
    M = _as_matrix(M)
    if M.rows != M.cols:
        raise ValueError(f"matrix measure must be square, got {M.shape}")
    horizon = float(horizon)
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    n_out = int(np.floor(horizon / M.h + 1e-9)) + 1
    span = M.index_span()
    if span is None:
        raise ValueError("the zero measure is not invertible")
    lo, atoms, dens = M.dense()
    lead = np.flatnonzero(np.any(atoms != 0, axis=(1, 2)))
    if lead.size == 0 or lead[0] != 0:
        raise ValueError("leading coefficient is not an atom (density precedes every atom)")
    c0 = atoms[0]
    if np.linalg.matrix_rank(c0) < M.rows or np.linalg.cond(c0) > 1e12:
        raise ValueError("leading atom is not an invertible matrix")
    if np.any(dens[0] != 0):
        raise ValueError("density mass at the leading atom location")
    X_atoms = _forward_solve(atoms, n_out)
    if M.has_density():
        X_total = _forward_solve(atoms + M.h * dens, n_out)
        X_dens = (X_total - X_atoms) / M.h
    else:
        X_dens = np.zeros_like(X_atoms)
    first = -lo
    out = MatrixMeasure.from_dense(M.h, first, X_atoms, X_dens, first + n_out - 1)
    return out[0, 0] if scalar else out


def inverse_window(M, horizon):
    """Index window ``(lo, hi)`` on which ``conv(M, causal_inverse(M, horizon))``
    equals ``delta_0 I`` exactly."""
    return 0, int(np.floor(float(horizon) / _as_matrix(M).h + 1e-9))


def apply_to_signal(M, f, truncate_to_nonneg=False):
    """``(M * f)`` sampled on the grid; optionally restricted to ``t >= 0``."""
    M = _as_matrix(M)
    same_step(M.h, f.h)
    if M.cols != f.dim:
        raise ValueError(f"measure has {M.cols} columns but signal dimension is {f.dim}")
    span = M.index_span()
    if span is None or f.values.shape[0] == 0:
        out = GridSignal.zeros(f.h, max(f.start, 0) if truncate_to_nonneg else f.start,
                               max(f.stop, 0) if truncate_to_nonneg else f.stop, M.rows)
        return out
    lo, atoms, dens = M.dense()
    mass = atoms + M.h * dens
    y = _dense_conv(mass, f.values[:, :, None])[:, :, 0]
    out = GridSignal(f.h, f.start + lo, y)
    if truncate_to_nonneg:
        out = out.restrict(max(out.start, 0), max(out.stop, 0))
    return out


def delta_residual(M, lo=None, hi=None):
    """Norm of ``M - delta_0 I`` on index window ``[lo, hi]``.

    Returns ``max atom weight + max entry density L1`` of the difference.
    """
    M = _as_matrix(M)
    d = M.rows
    D = M - MatrixMeasure.identity(d, M.h)
    span = D.index_span()
    if span is None:
        return 0.0
    lo = span[0] if lo is None else lo
    hi = span[1] if hi is None else hi
    a, m = D.restrict(lo, hi).norms()
    return a + m
