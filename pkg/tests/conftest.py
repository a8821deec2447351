"""Shared test helpers: independent little oracles, not package code."""

import numpy as np
import pytest


def mat_mul_2x2(a, b):
    """Independent 2x2 complex multiply, written out entry by entry."""
    return [[a[0][0] * b[0][0] + a[0][1] * b[1][0],
             a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0],
             a[1][0] * b[0][1] + a[1][1] * b[1][1]]]


def det_2x2(a):
    """Independent 2x2 determinant."""
    return a[0][0] * a[1][1] - a[0][1] * a[1][0]


def dist_up_to_phase(a, b):
    """Frobenius distance between matrices minimized over a global phase."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    tr = np.trace(b.conj().T @ a)
    phase = tr / abs(tr) if abs(tr) > 1e-300 else 1.0
    return np.linalg.norm(a - phase * b)


@pytest.fixture(scope="session")
def fib():
    from braidc.gateset import fibonacci_gateset
    return fibonacci_gateset()
