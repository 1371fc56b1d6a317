"""Independent reference solutions used by the tests.

Each oracle integrates the continuous problem with scipy's ODE solvers and
shares no code with the finite-volume package.
"""
import math

import numpy as np
from scipy.integrate import quad, solve_bvp, solve_ivp


def periodic_adjoint_1d(b, a=1.0, rtol=1e-12):
    """Periodic solution of (a p' + b p)' = 0 on (0, 1) with integral 1.

    a p' + b p = c is integrated for c = 0 and c = 1 from p(0) = 1 and p(0) = 0;
    periodicity fixes c. Returns (p callable on [0, 1], flux constant c); the
    flux constant is the effective drift.
    """
    def rhs(c):
        return lambda x, y: [(c - b(x) * y[0]) / a]

    s0 = solve_ivp(rhs(0.0), (0, 1), [1.0], rtol=rtol, atol=1e-14, dense_output=True)
    s1 = solve_ivp(rhs(1.0), (0, 1), [0.0], rtol=rtol, atol=1e-14, dense_output=True)
    c = (1.0 - s0.y[0, -1]) / s1.y[0, -1]

    def p_raw(x):
        return s0.sol(x)[0] + c * s1.sol(x)[0]

    mass = quad(p_raw, 0, 1, epsabs=1e-14, limit=200)[0]
    return (lambda x: p_raw(np.asarray(x)) / mass), c / mass


def example1_bvp(k, n=2001):
    """Zero-Dirichlet solution of -u'' + sign(x) u' = -1_{|x|<1} on (-k, k).

    The coefficients jump at -1, 0 and 1, so the four smooth pieces are mapped
    onto s in [0, 1] and glued by C^1 interface conditions.
    """
    edges = [-k, -1.0, 0.0, 1.0, k]
    lens = np.diff(edges)
    drift = [-1.0, -1.0, 1.0, 1.0]
    src = [0.0, 1.0, 1.0, 0.0]  # u'' = sign(x) u' + 1_{|x|<1}

    def f(s, y):
        out = np.empty_like(y)
        for i in range(4):
            u, du = y[2 * i], y[2 * i + 1]
            out[2 * i] = lens[i] * du
            out[2 * i + 1] = lens[i] * (drift[i] * du + src[i])
        return out

    def bc(ya, yb):
        res = [ya[0], yb[6]]
        for i in range(3):
            res += [yb[2 * i] - ya[2 * i + 2], yb[2 * i + 1] - ya[2 * i + 3]]
        return np.array(res)

    s = np.linspace(0.0, 1.0, n)
    sol = solve_bvp(f, bc, s, np.zeros((8, n)), tol=1e-9, max_nodes=1000000)
    assert sol.success, sol.message

    def evaluate(x):
        x = np.asarray(x, float)
        out = np.empty_like(x)
        piece = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, 3)
        for i in range(4):
            m = piece == i
            out[m] = sol.sol((x[m] - edges[i]) / lens[i])[2 * i]
        return out

    return evaluate


def two_parameter_toy(x):
    """Bounded solution of -u'' - sign(x) u' = 0 with limits -1 and +1."""
    return np.sign(x) * (1 - np.exp(-np.abs(x)))


def semi_negative_drift(x, k):
    """-v'' - v' = 0 on (0, k), v(0) = 1, v(k) = 0."""
    return (np.exp(-x) - math.exp(-k)) / (1 - math.exp(-k))
