"""Independent reference computations shared by the test modules."""

import numpy as np


def brute_force_cov(samples):
    """Sample covariance by explicit double loop over entries and samples."""
    x = [list(map(float, row)) for row in np.asarray(samples)]
    n, dim = len(x), len(x[0])
    mean = [sum(row[c] for row in x) / n for c in range(dim)]
    out = np.zeros((dim, dim))
    for a in range(dim):
        for b in range(dim):
            acc = 0.0
            for row in x:
                acc += (row[a] - mean[a]) * (row[b] - mean[b])
            out[a, b] = acc / (n - 1)
    return out


def brute_force_mean(samples):
    x = np.asarray(samples, dtype=float)
    return np.array([sum(x[:, c]) / x.shape[0] for c in range(x.shape[1])])


def fd_jacobian(fun, x, h=1e-6):
    """Central finite-difference Jacobian of ``fun`` at ``x``."""
    n = x.size
    jac = np.empty((n, n))
    for c in range(n):
        e = np.zeros(n)
        e[c] = h
        jac[:, c] = (fun(x + e) - fun(x - e)) / (2 * h)
    return jac


def cost_gradient(x, xf, y, B, R, H):
    return np.linalg.inv(B) @ (x - xf) - H.T @ np.linalg.inv(R) @ (y - H @ x)


def gradient_descent_minimizer(xf, y, B, R, H, iters=5000):
    """Minimize the quadratic 3DVar cost by fixed-step gradient descent."""
    hess = np.linalg.inv(B) + H.T @ np.linalg.inv(R) @ H
    step = 1.0 / np.linalg.eigvalsh(hess).max()
    x = xf.copy()
    for _ in range(iters):
        x = x - step * cost_gradient(x, xf, y, B, R, H)
    return x


def random_spd(rng, n, lo=0.5, hi=2.0):
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return (q * rng.uniform(lo, hi, n)) @ q.T
