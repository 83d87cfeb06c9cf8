"""Difference delay systems with distributed delays and their (Q, P) pair."""

from dataclasses import dataclass
from math import gcd
from functools import reduce

import numpy as np

from ._validation import as_matrix, check_step, to_index
from .measure import MatrixMeasure


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """``x(t) = sum_j A_j x(t - delay_j) + int_0^{delay_N} g(s) x(t - s) ds + B u(t)``.

    Parameters
    ----------
    h : float
        Grid step in seconds.
    delays : sequence of float
        Strictly increasing positive delays, each a multiple of ``h``.
    A : array, shape (N, d, d)
        Matrices of the pointwise delays.
    B : array, shape (d, m)
        Input matrix.
    g : array, shape (L, d, d) or None
        Density samples at ``s = h, 2h, ..., delay_N`` (``L = delay_N / h``).
        None or an empty array means no distributed delay.
    """

    h: float
    delays: tuple
    A: np.ndarray
    B: np.ndarray
    g: np.ndarray = None

    def __post_init__(self):
        h = check_step(self.h)
        delays = tuple(float(x) for x in self.delays)
        if not delays:
            raise ValueError("at least one delay is required")
        idx = tuple(to_index(x, h, "delay") for x in delays)
        if idx[0] <= 0 or any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError(f"delays must be positive and strictly increasing, got {delays}")
        B = as_matrix(self.B, name="B")
        d = B.shape[0]
        A = np.asarray(self.A, dtype=float)
        if A.ndim == 2 and len(delays) == 1:
            A = A[None]
        if A.shape != (len(delays), d, d):
            raise ValueError(f"A must have shape {(len(delays), d, d)}, got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("A has non-finite entries")
        L = idx[-1]
        if self.g is None or np.size(self.g) == 0:
            g = None
        else:
            g = np.asarray(self.g, dtype=float)
            if g.ndim == 1 and d == 1:
                g = g[:, None, None]
            if g.shape != (L, d, d):
                raise ValueError(f"g must have shape {(L, d, d)} (delay_N / h samples), "
                                 f"got {g.shape}")
            if not np.all(np.isfinite(g)):
                raise ValueError("g has non-finite entries")
            if not np.any(g):
                g = None
        for a in (A, B) + ((g,) if g is not None else ()):
            a.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "delays", delays)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "delay_index", idx)

    @property
    def d(self):
        return self.B.shape[0]

    @property
    def m(self):
        return self.B.shape[1]

    @property
    def N(self):
        return len(self.delays)

    @property
    def L(self):
        """Largest delay in grid cells."""
        return self.delay_index[-1]

    @property
    def max_delay(self):
        return self.L * self.h

    @property
    def has_density(self):
        return self.g is not None

    def commensurate_base(self):
        """``(tau_index, K, k_j)``: common delay quantum in cells, ``delay_N / tau``
        and the multiples ``delay_j / tau``."""
        t = reduce(gcd, self.delay_index)
        return t, self.L // t, tuple(k // t for k in self.delay_index)

    def with_(self, **kw):
        args = dict(h=self.h, delays=self.delays, A=self.A, B=self.B, g=self.g)
        args.update(kw)
        return SystemSpec(**args)


def build_QP(spec):
    """Measures ``Q`` (d x d) and ``P`` (d x m) of the delay system.

    ``Q = delta_{-L} I - sum_j delta_{-L + L_j} A_j - delta_{-L} * g`` and
    ``P = B delta_0``, both supported in ``[-delay_N, 0]``.
    """
    h, L, d = spec.h, spec.L, spec.d
    n = L + 1
    atoms = np.zeros((n, d, d))
    atoms[0] = np.eye(d)
    for k, A in zip(spec.delay_index, spec.A):
        atoms[k] -= A
    dens = np.zeros_like(atoms)
    if spec.g is not None:
        # sample i (s = i h) lands at index -L + i
        dens[1:] = -spec.g
    Q = MatrixMeasure.from_dense(h, -L, atoms, dens)
    P = MatrixMeasure.from_dense(h, 0, spec.B[None], np.zeros((1,) + spec.B.shape))
    return Q, P

