"""Input validation helpers shared by the compute modules."""

from fractions import Fraction

import numpy as np

# relative slack when deciding whether a float time is a grid multiple
GRID_RTOL = 1e-9


class GridError(ValueError):
    """A time value is not an integer multiple of the grid step."""


def to_index(t, h, what="time"):
    """Convert a time in seconds to an integer grid index.

    Raises GridError instead of snapping when ``t / h`` is not an integer.
    """
    if isinstance(t, (str, Fraction)) or isinstance(h, (str, Fraction)):
        q = Fraction(t) / Fraction(h)
        if q.denominator != 1:
            raise GridError(f"{what} {t} is not a multiple of grid step {h}")
        return int(q)
    q = float(t) / float(h)
    k = round(q)
    if abs(q - k) > GRID_RTOL * max(1.0, abs(q)):
        raise GridError(f"{what} {t} is not a multiple of grid step {h}")
    return int(k)


def check_step(h):
    h = float(h)
    if not np.isfinite(h) or h <= 0:
        raise ValueError(f"grid step must be positive and finite, got {h}")
    return h


def same_step(h1, h2):
    if h1 != h2 and abs(h1 - h2) > GRID_RTOL * max(abs(h1), abs(h2)):
        raise ValueError(f"mismatched grid steps {h1} and {h2}")
    return h1


def as_matrix(a, shape=None, name="matrix"):
    """Return ``a`` as a finite 2-D float array, optionally of fixed shape."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if shape is not None and a.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} has non-finite entries")
    return a


def check_positive(x, name):
    x = float(x)
    if not x > 0:
        raise ValueError(f"{name} must be positive, got {x}")
    return x


def check_spec(spec):
    """Raise TypeError unless ``spec`` is a :class:`SystemSpec`."""
    from .system import SystemSpec
    if not isinstance(spec, SystemSpec):
        raise TypeError(f"expected a SystemSpec, got {type(spec).__name__}")
    return spec


def check_signal_array(X, dim, name="X"):
    """2-D finite float array with ``dim`` columns; 1-D input is read as one
    column when ``dim == 1``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and dim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[1] != dim:
        raise ValueError(f"{name} must have shape (n, {dim}), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} has non-finite entries")
    return X
