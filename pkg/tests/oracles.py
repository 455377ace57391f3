"""Independent reference implementations used only by tests."""

import numpy as np
from scipy.linalg import solve_banded


def batch_map_smoother(y, r, q, s0):
    """MAP of the random-walk chain with prior x_1 ~ N(y_1, s0), steps
    x_t - x_{t-1} ~ N(0, q) and observations y_t ~ N(x_t, r) for t >= 2.

    y_1 enters only through the prior, matching a filter initialized at the
    first measurement. Solved as one tridiagonal system.
    """
    y = np.asarray(y, float)
    n = y.size
    diag = np.full(n, 1.0 / r)
    rhs = y / r
    diag[0] = 1.0 / s0
    rhs[0] = y[0] / s0
    diag[:-1] += 1.0 / q
    diag[1:] += 1.0 / q
    off = np.full(n - 1, -1.0 / q)
    ab = np.zeros((3, n))
    ab[0, 1:] = off
    ab[1] = diag
    ab[2, :-1] = off
    return solve_banded((1, 1), ab, rhs)


def brute_prominence(x, i):
    """Topographic prominence by walking outward until a higher sample."""
    x = np.asarray(x, float)
    left = i
    lmin = x[i]
    while left > 0 and x[left - 1] <= x[i]:
        left -= 1
        lmin = min(lmin, x[left])
    right = i
    rmin = x[i]
    while right < x.size - 1 and x[right + 1] <= x[i]:
        right += 1
        rmin = min(rmin, x[right])
    return x[i] - max(lmin, rmin)


def dense_expansion(img, r, c, sigma, radius):
    """Weighted least-squares quadratic fit at one pixel with explicit normal equations."""
    ys, xs = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    w = np.exp(-(xs**2 + ys**2) / (2 * sigma**2)).ravel()
    B = np.column_stack([np.ones(xs.size), xs.ravel(), ys.ravel(), xs.ravel() ** 2, ys.ravel() ** 2, (xs * ys).ravel()])
    f = img[r + ys, c + xs].ravel()
    coef = np.linalg.solve(B.T @ (w[:, None] * B), B.T @ (w * f))
    c0, bx, by, axx, ayy, axy = coef
    return np.array([[axx, axy / 2], [axy / 2, ayy]]), np.array([bx, by]), c0


def blob(shape=(128, 128), center=(64.0, 64.0), sigma=12.0):
    yy, xx = np.mgrid[: shape[0], : shape[1]].astype(float)
    return np.exp(-((xx - center[0]) ** 2 + (yy - center[1]) ** 2) / (2 * sigma**2))
