"""Brute-force reference implementations used by the tests."""

import math

import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def scad_value(t, theta):
    a = abs(t)
    if a <= 1.0:
        return a
    if a <= theta:
        return (-a * a + 2.0 * theta * a - 1.0) / (2.0 * (theta - 1.0))
    return (theta + 1.0) / 2.0


def mcp_value(t, theta):
    a = abs(t)
    return a - a * a / (2.0 * theta) if a <= theta else theta / 2.0


def scalar_value(kind, theta):
    if kind == "l1":
        return abs
    if kind == "scad":
        return lambda t: scad_value(t, theta)
    return lambda t: mcp_value(t, theta)


def golden_section(f, a, b, tol=1e-12, max_iter=200):
    """Minimiser of a unimodal `f` on ``[a, b]``."""
    c, d = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def brute_prox(vec_loss, t, mu, lo=-20.0, hi=20.0, n=100_000):
    """``argmin_u l(u) + (u - t)^2 / (2 mu)`` by grid search plus golden refinement."""
    grid = np.linspace(lo, hi, n)
    obj = vec_loss(grid) + (grid - t) ** 2 / (2.0 * mu)
    k = int(np.argmin(obj))
    h = grid[1] - grid[0]
    f = lambda u: float(vec_loss(np.array([u]))[0] + (u - t) ** 2 / (2.0 * mu))
    return golden_section(f, grid[max(k - 1, 0)] - h * (k == 0), grid[min(k + 1, n - 1)])


def forward_loop(mats, x):
    """``<A_i, x>`` by explicit double loops."""
    m, n1, n2 = mats.shape
    out = np.zeros(m)
    for i in range(m):
        s = 0.0
        for j in range(n1):
            for k in range(n2):
                s += mats[i, j, k] * x[j, k]
        out[i] = s
    return out


def central_diff(f, x, h=1e-6):
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        e = np.zeros_like(x)
        e[idx] = h
        g[idx] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g


def random_orthogonal(rng, n):
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_members(rng, n1, n2, r, sigma, count, basis=None):
    """Members of the spectral set; `basis` = (U, V) pins the singular vectors."""
    out = []
    for _ in range(count):
        k = int(rng.integers(1, r + 1))
        if basis is None:
            u = random_orthogonal(rng, n1)[:, :k]
            v = random_orthogonal(rng, n2)[:, :k]
        else:
            idx = rng.choice(min(n1, n2), size=k, replace=False)
            u, v = basis[0][:, idx], basis[1][:, idx]
        s = sigma + rng.exponential(sigma, size=k) * rng.choice([0.0, 0.1, 1.0, 3.0])
        out.append((u * s) @ v.T)
    return out
