import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_spec, scalar_spec
from delay_reach import (GridSignal, MatrixMeasure, ScalarMeasure, SystemSpec, build_QP,
                         causal_inverse, compress_control, extend_to_state, kamen_compress,
                         minimal_time_bound, plan_control, reach_and_verify, simulate,
                         solve_bezout_commensurate, state_residual)
from delay_reach._validation import GridError

H = 0.25


# -- SystemSpec and build_QP ---------------------------------------------------

def test_spec_validation():
    with pytest.raises(GridError):
        SystemSpec(0.25, [0.3], [[0.5]], [[1.0]])
    with pytest.raises(ValueError):
        SystemSpec(0.25, [1.0, 0.5], np.zeros((2, 1, 1)), [[1.0]])
    with pytest.raises(ValueError):
        SystemSpec(0.25, [1.0], np.zeros((1, 2, 2)), [[1.0]])
    with pytest.raises(ValueError, match="delay_N / h"):
        SystemSpec(0.25, [1.0], [[0.5]], [[1.0]], g=np.ones((3, 1, 1)))
    with pytest.raises(ValueError):
        SystemSpec(0.25, [1.0], [[np.nan]], [[1.0]])


def test_build_QP_scalar_by_hand():
    Q, P = build_QP(scalar_spec())
    assert Q[0, 0].atoms() == {-4: 1.0, 0: -0.5}
    assert P[0, 0].atoms() == {0: 1.0}


def test_build_QP_pure_shift():
    s = SystemSpec(H, [0.5, 1.0], np.zeros((2, 2, 2)), np.eye(2))
    Q, _ = build_QP(s)
    assert Q.allclose(MatrixMeasure.identity(2, H, -4), 0)


def test_build_QP_support_and_leading_atom(rng):
    for _ in range(10):
        s = random_spec(rng)
        Q, P = build_QP(s)
        assert Q.support_inf() >= -s.max_delay
        for i in range(s.d):
            assert Q[i, i].atom_at(-s.L) == 1.0
        assert Q.is_past_supported() and P.is_past_supported()


def test_density_lands_after_leading_atom():
    s = SystemSpec(H, [1.0], [[0.0]], [[1.0]], g=np.arange(1, 5, dtype=float))
    Q, _ = build_QP(s)
    # sample i (s = i h) sits at index -L + i with the minus sign
    assert Q[0, 0].dens_start == -3
    np.testing.assert_array_equal(Q[0, 0].dens, -np.arange(1, 5))


# -- simulate -----------------------------------------------------------------------

def test_zero_input_gives_zero():
    s = random_spec(np.random.default_rng(0))
    x, y = simulate(s, GridSignal.zeros(s.h, -4, 0, s.m), 3.0)
    assert not np.any(x.values) and not np.any(y.values)


def test_scalar_recursion_by_hand():
    s = scalar_spec()
    x, y = simulate(s, GridSignal.constant([1.0], -1, 0, H), 2.0)
    np.testing.assert_array_equal(x.window(-4, 8)[:, 0], np.repeat([1.0, 0.5, 0.25], 4))
    np.testing.assert_array_equal(y.values[:, 0], np.repeat([1.0, 0.5], 4))


def test_density_term_by_hand():
    # x_k = h * sum_i g_i x_{k-i} + u_k with g = 1 on two cells
    s = SystemSpec(0.5, [1.0], [[0.0]], [[1.0]], g=[1.0, 1.0])
    x, _ = simulate(s, GridSignal(0.5, 0, [1.0]), 2.0)
    np.testing.assert_allclose(x.window(0, 4)[:, 0], [1.0, 0.5, 0.75, 0.625])


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(-12, 0), st.integers(1, 10))
def test_simulate_is_linear(seed, start, n):
    rng = np.random.default_rng(seed)
    s = random_spec(rng)
    u1 = GridSignal(s.h, start, rng.integers(-3, 4, (n, s.m)).astype(float))
    u2 = GridSignal(s.h, start - 2, rng.integers(-3, 4, (n, s.m)).astype(float))
    y = simulate(s, u1 + u2, 4.0)[1]
    y12 = simulate(s, u1, 4.0)[1] + simulate(s, u2, 4.0)[1]
    assert y.distance_l1(y12, 0, y.stop) <= 1e-12 * (1 + y.l1_norm())


def test_restart_matches_long_run(rng):
    # semigroup: run, store the window, restart, compare with one long run
    for _ in range(5):
        s = random_spec(rng)
        u = GridSignal(s.h, -10, rng.normal(size=(30, s.m)))
        x_long, y_long = simulate(s, u, 8.0)
        cut = 7
        x_part = x_long.restrict(x_long.start, cut)
        x_rest, y_rest = simulate(s, u, 8.0, x_past=x_part)
        assert y_rest.distance_l1(y_long) == 0.0
        assert x_rest.distance_l1(x_long) == 0.0


def test_dimension_checks():
    s = scalar_spec()
    with pytest.raises(ValueError):
        simulate(s, GridSignal.zeros(H, 0, 2, 2), 1.0)
    with pytest.raises(GridError):
        simulate(s, GridSignal.zeros(H, 0, 2, 1), 1.1)


# -- state space ------------------------------------------------------------------

def test_state_residual_examples():
    s = scalar_spec()
    assert state_residual(s, GridSignal.zeros(H, 0, 8, 1)) == 0.0
    y = GridSignal.constant([1.0], 0, 2, H)
    # |1 - 0.5| on [0, 1)
    assert state_residual(s, y) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        state_residual(s, GridSignal.zeros(H, 0, 2, 1))


def test_extend_to_state_examples(rng):
    s = scalar_spec()
    y = extend_to_state(s, GridSignal.constant([1.0], 0, 1, H), 3.0)
    np.testing.assert_array_equal(y.values[:, 0], np.repeat([1.0, 0.5, 0.25], 4))
    assert not np.any(extend_to_state(s, GridSignal.zeros(H, 0, 4, 1), 2.0).values)
    for _ in range(5):
        sp = random_spec(rng, d=2, density=False)
        y0 = GridSignal(sp.h, 0, rng.normal(size=(sp.L, 2)))
        y = extend_to_state(sp, y0, 6 * sp.max_delay)
        assert state_residual(sp, y) <= 1e-12


# -- minimal time bound -----------------------------------------------------------

def test_minimal_time_bound_examples():
    assert minimal_time_bound(scalar_spec()) == 1.0
    s2 = SystemSpec(H, [1.0, 2.0], np.full((2, 2, 2), 0.1), np.eye(2))
    assert minimal_time_bound(s2) == 4.0
    s3 = SystemSpec(H, [1.0], np.zeros((1, 3, 3)), np.eye(3))
    assert minimal_time_bound(s3) == 3.0


# -- Kamen compression -------------------------------------------------------------

def reconv_residual(omega, alpha, beta, r):
    lo_b, hi_b = beta.index_span()
    a, d = beta.dense(lo_b, hi_b - lo_b + 1)
    br = GridSignal(beta.h, r.start + lo_b, np.convolve(a + beta.h * d, r.values[:, 0]))
    return (omega - alpha - br).l1_norm()


def test_kamen_trivial_case():
    beta = ScalarMeasure.dirac(-1, H)
    omega = GridSignal.constant([1.0], -1, 0, H)
    alpha, r = kamen_compress(omega, beta, causal_inverse(beta, 2.0), -1.5)
    assert alpha.distance_l1(omega) == 0 and not np.any(r.values)


@pytest.mark.parametrize("atoms, tau, width", [({-4: 1.0}, -1.5, 2),
                                               ({-4: 1.0, 0: -0.5}, -1.2, 3)])
def test_kamen_examples(atoms, tau, width):
    beta = ScalarMeasure.from_atoms(atoms, H)
    omega = GridSignal.constant([1.0], -width, 0, H)
    alpha, r = kamen_compress(omega, beta, causal_inverse(beta, width + 1.0), tau)
    assert alpha.support_inf() > tau
    assert alpha.support_sup() <= 0
    assert reconv_residual(omega, alpha, beta, r) <= 1e-10


def test_kamen_errors():
    beta = ScalarMeasure.dirac(-1, H)
    omega = GridSignal.constant([1.0], -8, 0, H)
    with pytest.raises(ValueError):
        kamen_compress(omega, beta, causal_inverse(beta, 10.0), -1.0)
    with pytest.raises(ValueError, match="horizon"):
        kamen_compress(omega, beta, causal_inverse(beta, 1.0), -1.5)


def test_compress_control_examples():
    s = scalar_spec()
    omega = GridSignal.constant([1.0], -4, 0, H)
    alpha = compress_control(s, omega, 1.25, 6.0)
    assert alpha.support_inf() >= -1.25
    y0 = simulate(s, omega, 6.0)[1]
    y1 = simulate(s, alpha, 6.0)[1]
    assert y0.distance_l1(y1) <= 1e-9
    short = GridSignal.constant([1.0], -1, 0, H)
    assert compress_control(s, short, 1.25).distance_l1(short) == 0
    with pytest.raises(ValueError):
        compress_control(s, omega, 1.0)


def test_compress_control_d2(rng):
    s = SystemSpec(H, [0.5, 1.0], rng.uniform(-0.4, 0.4, (2, 2, 2)), rng.normal(size=(2, 1)))
    omega = GridSignal(H, -32, rng.normal(size=(32, 1)))
    T = s.d * s.max_delay + s.h
    T_check = 10 * s.max_delay
    alpha = compress_control(s, omega, T, T_check)
    assert alpha.support_inf() >= -T and alpha.support_sup() <= 0
    d = simulate(s, omega, T_check)[1].distance_l1(simulate(s, alpha, T_check)[1])
    assert d <= 1e-8


# -- planning -------------------------------------------------------------------------

def test_plan_examples():
    s = scalar_spec()
    S = MatrixMeasure.identity(1, H)
    assert not np.any(plan_control(s, S, GridSignal.zeros(H, 0, 8, 1)).values)
    psi = extend_to_state(s, GridSignal.constant([1.0], 0, 1, H), 6.0)
    omega = plan_control(s, S, psi)
    assert omega.start == -4 and np.all(omega.values == 1.0)
    assert simulate(s, omega, 6.0)[1].distance_l1(psi) == 0.0


def test_plan_rejects_off_state_targets():
    s = scalar_spec()
    S = MatrixMeasure.identity(1, H)
    with pytest.raises(ValueError, match="state space"):
        plan_control(s, S, GridSignal.constant([1.0], 0, 8, H))
    psi = extend_to_state(s, GridSignal.constant([1.0], 0, 1, H), 6.0)
    noisy = psi + GridSignal(H, 6, [1e-8])
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        plan_control(s, S, noisy)
    assert any("approximately" in str(x.message) for x in w)


def test_plan_d2_with_solver_pair(rng):
    s = SystemSpec(H, [0.5, 1.0], rng.uniform(-0.4, 0.4, (2, 2, 2)), rng.normal(size=(2, 1)))
    pair = solve_bezout_commensurate(s)
    psi = extend_to_state(s, GridSignal(H, 0, rng.normal(size=(4, 2))), 5 * s.max_delay)
    omega = plan_control(s, pair.S, psi)
    y = simulate(s, omega, 5 * s.max_delay)[1]
    assert y.distance_l1(psi) <= 1e-8


def test_reach_and_verify_cases(rng):
    s = scalar_spec()
    S = solve_bezout_commensurate(s).S
    rep = reach_and_verify(s, S, GridSignal.zeros(H, 0, 24, 1), 1.25)
    assert rep.passed and not np.any(rep.alpha.values)
    psi = extend_to_state(s, GridSignal.constant([1.0], 0, 1, H), 6.0)
    rep = reach_and_verify(s, S, psi, 1.25)
    assert rep.passed and rep.error <= 1e-9 and rep.alpha.support_inf() >= -1.25
    # B = 0 reaches only zero: the plan stage fails
    s0 = scalar_spec(b=0.0)
    rep = reach_and_verify(s0, S, psi, 1.25)
    assert rep.verdict == "fail" and rep.stage == "plan"


def test_error_bound_with_perturbed_pair(rng):
    # error <= C * (||Q R + P S - I|| + h) for the reported constant C
    s = SystemSpec(H, [0.5, 1.0], rng.uniform(-0.4, 0.4, (2, 2, 2)), rng.normal(size=(2, 1)))
    pair = solve_bezout_commensurate(s)
    psi = extend_to_state(s, GridSignal(H, 0, rng.normal(size=(4, 2))), 5.0)
    Q, P = build_QP(s)
    for eps in (1e-6, 1e-4):
        S = pair.S + MatrixMeasure.from_atoms({0: eps * np.ones((1, 2))}, H)
        D = conv_defect_tv(Q, P, pair.R, S)
        rep = reach_and_verify(s, S, psi, s.d + s.h, tol=1.0)
        assert rep.error <= rep.error_constant * (D + s.h)


def conv_defect_tv(Q, P, R, S):
    from delay_reach.bezout import bezout_defect
    E = bezout_defect(Q, P, R, S)
    return sum(np.abs(e.atom_w).sum() + e.h * np.abs(e.dens).sum()
               for row in E.entries() for e in row)
