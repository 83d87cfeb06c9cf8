"""Piecewise-constant vector signals on a uniform time grid."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_step, same_step, to_index


@dataclass(frozen=True, eq=False)
class GridSignal:
    """Vector-valued signal, constant on each cell ``[k h, (k+1) h)``.

    Parameters
    ----------
    h : float
        Grid step in seconds.
    start : int
        Grid index of the first stored cell.
    values : ndarray, shape (n_cells, dim)
        One row per cell. Cells outside the stored window are zero.
    """

    h: float
    start: int
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] < 1:
            raise ValueError(f"signal values must be (n_cells, dim), got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("signal has non-finite samples")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "h", check_step(self.h))
        object.__setattr__(self, "start", int(self.start))

    # -- constructors -----------------------------------------------------
    @classmethod
    def zeros(cls, h, start, stop, dim):
        return cls(h, start, np.zeros((max(stop - start, 0), dim)))

    @classmethod
    def from_function(cls, f, t0, t1, h):
        """Sample ``f`` at the left endpoint of every cell of ``[t0, t1)``."""
        k0, k1 = to_index(t0, h, "t0"), to_index(t1, h, "t1")
        t = np.arange(k0, k1) * float(h)
        vals = np.array([np.atleast_1d(f(ti)) for ti in t], dtype=float)
        if vals.size == 0:
            vals = np.zeros((0, np.atleast_1d(f(t0)).size))
        return cls(h, k0, vals)

    @classmethod
    def constant(cls, value, t0, t1, h):
        value = np.atleast_1d(np.asarray(value, dtype=float))
        k0, k1 = to_index(t0, h, "t0"), to_index(t1, h, "t1")
        return cls(h, k0, np.tile(value, (k1 - k0, 1)))

    # -- basic properties ---------------------------------------------------
    @property
    def dim(self):
        return self.values.shape[1]

    @property
    def stop(self):
        """One past the last stored cell index."""
        return self.start + self.values.shape[0]

    @property
    def times(self):
        return np.arange(self.start, self.stop) * self.h

    def nonzero_range(self):
        """Index range ``(first, last + 1)`` of nonzero cells, or None."""
        nz = np.flatnonzero(np.any(self.values != 0, axis=1))
        if nz.size == 0:
            return None
        return self.start + int(nz[0]), self.start + int(nz[-1]) + 1

    def support_inf(self):
        r = self.nonzero_range()
        return np.inf if r is None else r[0] * self.h

    def support_sup(self):
        r = self.nonzero_range()
        return -np.inf if r is None else r[1] * self.h

    def l1_norm(self):
        return self.h * float(np.abs(self.values).sum())

    # -- windowing --------------------------------------------------------
    def window(self, lo, hi):
        """Samples on index range ``[lo, hi)``, zero outside the stored cells."""
        out = np.zeros((max(hi - lo, 0), self.dim))
        a, b = max(lo, self.start), min(hi, self.stop)
        if a < b:
            out[a - lo:b - lo] = self.values[a - self.start:b - self.start]
        return out

    def restrict(self, lo=None, hi=None):
        lo = self.start if lo is None else lo
        hi = self.stop if hi is None else hi
        return GridSignal(self.h, lo, self.window(lo, hi))

    def restrict_time(self, t0=None, t1=None):
        lo = None if t0 is None else to_index(t0, self.h, "t0")
        hi = None if t1 is None else to_index(t1, self.h, "t1")
        return self.restrict(lo, hi)

    def trim(self):
        """Drop leading and trailing zero cells."""
        r = self.nonzero_range()
        if r is None:
            return GridSignal(self.h, self.start, np.zeros((0, self.dim)))
        return self.restrict(*r)

    def component(self, i):
        return GridSignal(self.h, self.start, self.values[:, [i]])

    @classmethod
    def stack(cls, parts):
        """Stack scalar signals into one vector signal on a common window."""
        h = parts[0].h
        for p in parts[1:]:
            same_step(h, p.h)
        lo = min(p.start for p in parts)
        hi = max(p.stop for p in parts)
        return cls(h, lo, np.hstack([p.window(lo, hi) for p in parts]))

    # -- arithmetic -------------------------------------------------------
    def _aligned(self, other):
        same_step(self.h, other.h)
        if self.dim != other.dim:
            raise ValueError(f"dimension mismatch {self.dim} != {other.dim}")
        lo, hi = min(self.start, other.start), max(self.stop, other.stop)
        return lo, self.window(lo, hi), other.window(lo, hi)

    def __add__(self, other):
        lo, a, b = self._aligned(other)
        return GridSignal(self.h, lo, a + b)

    def __sub__(self, other):
        lo, a, b = self._aligned(other)
        return GridSignal(self.h, lo, a - b)

    def __mul__(self, c):
        return GridSignal(self.h, self.start, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def distance_l1(self, other, lo=None, hi=None):
        """L1 distance on index window ``[lo, hi)`` (default: union of supports)."""
        same_step(self.h, other.h)
        if lo is None:
            lo = min(self.start, other.start)
        if hi is None:
            hi = max(self.stop, other.stop)
        return self.h * float(np.abs(self.window(lo, hi) - other.window(lo, hi)).sum())

    def __repr__(self):
        return (f"GridSignal(h={self.h}, cells=[{self.start}, {self.stop}), "
                f"dim={self.dim})")
