"""scikit-learn style facade: fit on a system, transform targets into controls."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_signal_array, check_spec, to_index
from .bezout import BEZOUT_TOL, solve_bezout_commensurate, verify_bezout
from .hautus import hautus_exact_commensurate
from .reach import compress_control, minimal_time_bound, plan_control, simulate
from .signals import GridSignal
from .system import build_QP


class ReachabilityPlanner(TransformerMixin, BaseEstimator):
    """Plan compressed controls that steer a delay system onto state-space targets.

    ``fit`` takes a :class:`SystemSpec` (in place of a feature matrix) and
    finds the Bezout pair. ``transform`` maps a target sampled on
    ``[0, n h)``, shape ``(n, d)``, to the control on ``[-T, 0)``, shape
    ``(T / h, m)``. ``predict`` simulates such a control and returns the
    output on ``[0, window)``.

    Parameters
    ----------
    T : float, optional
        Control support length; default ``d * delay_N + h``.
    S : MatrixMeasure, optional
        Bezout factor to use instead of the solver (required when the
        system has a distributed delay). Needs ``R`` for verification.
    R : MatrixMeasure, optional
    window : float, optional
        Output window of :meth:`predict`; default ``10 * delay_N``.
    tol : float
        Bezout residual threshold.
    max_degree : int, optional
        Solver degree cap, default ``d K``.
    """

    def __init__(self, T=None, S=None, R=None, window=None, tol=BEZOUT_TOL,
                 max_degree=None, state_tol=1e-9, reject_tol=1e-6):
        self.T = T
        self.S = S
        self.R = R
        self.window = window
        self.tol = tol
        self.max_degree = max_degree
        self.state_tol = state_tol
        self.reject_tol = reject_tol

    def fit(self, X, y=None):
        spec = check_spec(X)
        Q, P = build_QP(spec)
        self.spec_ = spec
        self.Q_, self.P_ = Q, P
        self.bound_ = minimal_time_bound(spec, Q)
        T = self.T if self.T is not None else self.bound_ + spec.h
        if not T > self.bound_:
            raise ValueError(f"T = {T} must exceed the minimal-time bound {self.bound_}")
        self.T_ = T
        self.n_control_ = to_index(T, spec.h, "T")
        self.window_ = self.window if self.window is not None else 10 * spec.max_delay
        self.hautus_ = hautus_exact_commensurate(spec) if spec.g is None else None
        if self.S is not None:
            if self.R is None:
                raise ValueError("a user-supplied S needs its R for verification")
            ok, res = verify_bezout(Q, P, self.R, self.S, self.tol)
            if not ok:
                raise ValueError(f"supplied Bezout pair has residual {res:.3g} > {self.tol}")
            self.S_, self.bezout_residual_ = self.S, res
        else:
            if spec.g is not None:
                raise ValueError("distributed delay: supply S and R (no synthesis available)")
            pair = solve_bezout_commensurate(spec, self.max_degree, self.tol)
            if not pair.success:
                raise ValueError("no Bezout pair up to degree "
                                 f"{pair.max_degree} (best residual {pair.best_residual:.3g})")
            self.S_, self.bezout_residual_ = pair.S, pair.residual
        self.n_features_in_ = spec.d
        return self

    def _controls(self, X):
        check_is_fitted(self, "S_")
        spec = self.spec_
        psi = GridSignal(spec.h, 0, check_signal_array(X, spec.d))
        omega = plan_control(spec, self.S_, psi, state_tol=self.state_tol,
                             reject_tol=self.reject_tol, Q=self.Q_)
        return compress_control(spec, omega, self.T_, psi.stop * spec.h, self.Q_)

    def transform(self, X):
        """Compressed control on ``[-T, 0)`` for the target samples ``X``."""
        return self._controls(X).window(-self.n_control_, 0)

    def predict(self, U):
        """Output on ``[0, window)`` driven by a control ``U`` on ``[-T, 0)``."""
        check_is_fitted(self, "S_")
        spec = self.spec_
        U = check_signal_array(U, spec.m, "U")
        if U.shape[0] != self.n_control_:
            raise ValueError(f"U must have {self.n_control_} rows (T / h)")
        _, y = simulate(spec, GridSignal(spec.h, -self.n_control_, U), self.window_)
        return y.values

    def score(self, X, y=None):
        """Negative L1 distance between the target and the reproduced output."""
        check_is_fitted(self, "S_")
        spec = self.spec_
        X = check_signal_array(X, spec.d)
        u = GridSignal(spec.h, -self.n_control_, self.transform(X))
        _, out = simulate(spec, u, X.shape[0] * spec.h)
        return -spec.h * float(np.abs(out.values - X).sum())
