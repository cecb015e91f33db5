"""Independent reference computations used by the unit and acceptance tests."""
import numpy as np
from scipy.optimize import brentq


def scalar_step(c, u0, v0, k, M=1e6):
    """Backward Euler step of the reaction ODE pair by nested bracketing.

    Inner solve: u(v) from the first equation. Outer solve: v from the
    second with u = u(v).
    """
    lam = lambda x: min(max(x, 0.0), M)

    def f1(u, v):
        return (u - u0) / k + (c.b1 * abs(u) + c.c1 * lam(v)) * u - c.a1 * lam(u)

    def f2(u, v):
        return (v - v0) / k + (c.b2 * lam(u) + c.c2 * abs(v)) * v - c.a2 * lam(v)

    def upper(x0, f):
        top = max(1.0, 2 * x0)
        while True:
            if f(top) > 0:
                return top
            top *= 2

    def u_of(v):
        if u0 == 0:
            return 0.0
        return brentq(lambda u: f1(u, v), 0.0, upper(u0, lambda u: f1(u, v)),
                      xtol=1e-15, rtol=1e-15, maxiter=500)

    if v0 == 0:
        return u_of(0.0), 0.0
    v = brentq(lambda v: f2(u_of(v), v), 0.0, upper(v0, lambda v: f2(u_of(v), v)),
               xtol=1e-15, rtol=1e-15, maxiter=500)
    return u_of(v), v


def dense_laplacian(g):
    """Dense 5-point (3-point) matrix assembled cell by cell."""
    nx, ny = g.nx, g.ny
    L = np.zeros((nx * ny, nx * ny))
    axes = [(g.hx, nx, (1, 0))] + ([(g.hy, ny, (0, 1))] if g.dim == 2 else [])
    for i in range(nx):
        for j in range(ny):
            row = i * ny + j
            for h, n, (di, dj) in axes:
                pos = i if di else j
                for step in (-1, 1):
                    q = pos + step
                    if 0 <= q < n:
                        col = (i + step * di) * ny + (j + step * dj)
                        L[row, col] += 1 / h ** 2
                        L[row, row] -= 1 / h ** 2
                    elif g.bc == "dirichlet":
                        L[row, row] -= 2 / h ** 2
    return L


def heat_step_dense(d, f0, k, g):
    A = np.eye(g.size) - k * d * dense_laplacian(g)
    return np.linalg.solve(A, f0.ravel()).reshape(g.shape)


def gronwall_recursion(a0, tau, lam, g, theta):
    """Equality case ``a_n = a_{n-1} + tau_n (g_n + (1-theta) lam_{n-1} a_{n-1} + theta lam_n a_n)``."""
    a = [a0]
    for n in range(1, len(tau) + 1):
        t = tau[n - 1]
        a.append((a[-1] * (1 + (1 - theta) * lam[n - 1] * t) + t * g[n - 1])
                 / (1 - theta * lam[n] * t))
    return np.array(a)
