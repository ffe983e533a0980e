"""Independent reference computations for the tests.

Nothing here calls into the package: distances are a plain double loop and
eigenvalues come from Householder tridiagonalisation plus Sturm-sequence
bisection, a different algorithm family from the Jacobi solver under test.
"""
import math

import numpy as np


def brute_distances(x):
    x = [list(map(float, row)) for row in x]
    b = len(x)
    out = np.zeros((b, b))
    for i in range(b):
        for j in range(b):
            out[i, j] = math.sqrt(sum((p - q) ** 2 for p, q in zip(x[i], x[j])))
    return out


def tridiagonalize(a):
    """Householder reduction; returns the diagonal and off-diagonal."""
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1 :, k].copy()
        alpha = -math.copysign(np.linalg.norm(x), x[0] if x[0] != 0 else 1.0)
        v = x.copy()
        v[0] -= alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        h = np.eye(n)
        h[k + 1 :, k + 1 :] -= 2.0 * np.outer(v, v)
        a = h @ a @ h
    return np.diag(a).copy(), np.array([a[i + 1, i] for i in range(n - 1)])


def _count_below(diag, off, sigma):
    count = 0
    q = 1.0
    for i in range(len(diag)):
        q = diag[i] - sigma - (off[i - 1] ** 2 / q if i > 0 else 0.0)
        if q == 0.0:
            q = -1e-300
        if q < 0.0:
            count += 1
    return count


def bisection_eigenvalues(a, tol=1e-15):
    """All eigenvalues of a symmetric matrix, descending."""
    a = np.asarray(a, dtype=np.float64)
    n = a.shape[0]
    if n == 1:
        return np.array([a[0, 0]])
    diag, off = tridiagonalize(a)
    radius = max(
        abs(diag[i]) + (abs(off[i - 1]) if i > 0 else 0.0) + (abs(off[i]) if i < n - 1 else 0.0)
        for i in range(n)
    )
    lo0, hi0 = -radius - 1e-300, radius + 1e-300
    vals = []
    for j in range(n):
        # j-th smallest: smallest sigma with count_below(sigma) > j
        lo, hi = lo0, hi0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if _count_below(diag, off, mid) > j:
                hi = mid
            else:
                lo = mid
            if hi - lo <= tol * max(1.0, radius):
                break
        vals.append(0.5 * (lo + hi))
    return np.array(sorted(vals, reverse=True))


def centered_gram_eigenvalues(points):
    """MDS eigenvalues from coordinates: spectrum of the centred Gram matrix."""
    x = np.asarray(points, dtype=np.float64)
    xc = x - x.mean(axis=0)
    return bisection_eigenvalues(xc @ xc.T)


def double_center_loop(d):
    """-1/2 J (D*D) J written out with explicit loops."""
    d = np.asarray(d, dtype=np.float64)
    b = len(d)
    sq = d * d
    row = [sum(sq[i]) / b for i in range(b)]
    col = [sum(sq[:, j]) / b for j in range(b)]
    grand = sum(row) / b
    out = np.zeros((b, b))
    for i in range(b):
        for j in range(b):
            out[i, j] = -0.5 * (sq[i, j] - row[i] - col[j] + grand)
    return out
