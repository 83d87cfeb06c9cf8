import numpy as np
import pytest

from delay_reach import SystemSpec

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def record(num, ok, text):
    ACCEPTANCE_LINES[num] = f"acceptance {num}: {'PASS' if ok else 'FAIL'}  {text}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


def scalar_spec(a=0.5, b=1.0, h=0.25):
    return SystemSpec(h, [1.0], [[a]], [[b]])


def nilpotent_spec(h=0.25):
    return SystemSpec(h, [1.0], [[[0.0, 1.0], [0.0, 0.0]]], [[1.0], [0.0]])


def random_spec(rng, d=None, m=None, density=None, commensurate=None, scale=0.6):
    """Random valid spec on a dyadic grid.

    Delays are random grid indices (``commensurate`` forces a common
    multiple ``tau`` > h); ``scale`` bounds the total gain so inverses stay
    moderate.
    """
    d = int(rng.integers(1, 4)) if d is None else d
    m = int(rng.integers(1, d + 1)) if m is None else m
    h = float(rng.choice([0.125, 0.25, 0.5]))
    N = int(rng.integers(1, 4))
    if commensurate is None:
        commensurate = bool(rng.integers(0, 2))
    if commensurate:
        tau = int(rng.integers(1, 4))
        ks = np.sort(rng.choice(np.arange(1, 5), size=min(N, 4), replace=False))
        idx = ks * tau
    else:
        idx = np.sort(rng.choice(np.arange(1, 13), size=N, replace=False))
    delays = [int(k) * h for k in idx]
    N = len(delays)
    A = rng.uniform(-1, 1, (N, d, d))
    B = rng.uniform(-1, 1, (d, m))
    if density is None:
        density = bool(rng.integers(0, 2))
    g = None
    L = int(idx[-1])
    if density:
        g = rng.uniform(-1, 1, (L, d, d))
    # bound the total gain by `scale`
    gain = sum(np.linalg.norm(a, 2) for a in A)
    if g is not None:
        gain += h * sum(np.linalg.norm(x, 2) for x in g)
    A = A * scale / gain
    if g is not None:
        g = g * scale / gain
    return SystemSpec(h, delays, A, B, g)


def commensurate_family(rng, kind=None):
    """Commensurate spec with g = 0 (d <= 3, K <= 4) from one of four families.

    0: generic (coprime); 1: B = 0; 2: shared left eigenvector ``v`` of all
    ``A_j`` with ``v^T B = 0`` (fails at a finite ``z``); 3: as 2 with the
    eigenvalue of ``A_N`` set to zero (fails at the limit).
    """
    kind = int(rng.integers(0, 4)) if kind is None else kind
    d = int(rng.integers(1, 4))
    m = int(rng.integers(1, d + 1))
    K = int(rng.integers(1, 5))
    tau_idx = int(rng.integers(1, 4))
    h = 0.25
    ks = sorted(rng.choice(np.arange(1, K), size=int(rng.integers(0, K)), replace=False)
                .tolist()) + [K] if K > 1 else [1]
    A = rng.uniform(-1, 1, (len(ks), d, d)) * 0.6
    B = rng.uniform(-1, 1, (d, m))
    if kind == 1:
        B = np.zeros((d, m))
    elif kind >= 2:
        v = rng.normal(size=d)
        v /= np.linalg.norm(v)
        proj = np.eye(d) - np.outer(v, v)
        B = proj @ B
        lam = rng.uniform(-1, 1, len(ks))
        if kind == 3:
            lam[-1] = 0.0
        A = np.array([a - np.outer(v, v @ a) + l * np.outer(v, v) for a, l in zip(A, lam)])
    return SystemSpec(h, [k * tau_idx * h for k in ks], A, B), kind


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
