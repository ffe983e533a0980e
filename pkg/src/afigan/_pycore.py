"""Pure-Python implementations of the numerical kernels.

Mirrors ``_core.pyx`` function for function. The random-number kernels are
written with scalar ``math`` calls in the same operation order as the
compiled version so both backends emit bit-identical streams.
"""
import math

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
PCG_MULT = 6364136223846793005
TWO_PI = 6.283185307179586
INV_2_53 = 1.0 / 9007199254740992.0

BACKEND = "python"


def pcg32_next(state, inc):
    old = state
    state = (old * PCG_MULT + inc) & MASK64
    xorshifted = (((old >> 18) ^ old) >> 27) & 0xFFFFFFFF
    rot = old >> 59
    out = ((xorshifted >> rot) | (xorshifted << ((-rot) & 31))) & 0xFFFFFFFF
    return out, state


def _uniform(state, inc):
    a, state = pcg32_next(state, inc)
    b, state = pcg32_next(state, inc)
    return ((a >> 5) * 67108864.0 + (b >> 6)) * INV_2_53, state


def _normal(state, inc):
    u1, state = _uniform(state, inc)
    u2, state = _uniform(state, inc)
    return math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(TWO_PI * u2), state


def _log_gamma_ge1(alpha, state, inc):
    d = alpha - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x, state = _normal(state, inc)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u, state = _uniform(state, inc)
        u = 1.0 - u
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return math.log(d * v), state
        if math.log(u) < 0.5 * x2 + d * (1.0 - v + math.log(v)):
            return math.log(d * v), state


def log_gamma_draw(state, inc, alpha):
    """Log of one Gamma(alpha, 1) variate; returns ``(value, state)``."""
    if alpha >= 1.0:
        return _log_gamma_ge1(alpha, state, inc)
    lg, state = _log_gamma_ge1(alpha + 1.0, state, inc)
    u, state = _uniform(state, inc)
    return lg + math.log(1.0 - u) / alpha, state


def fill_uniform(state, inc, n):
    out = np.empty(n)
    for i in range(n):
        out[i], state = _uniform(state, inc)
    return out, state


def fill_normal(state, inc, n):
    out = np.empty(n)
    for i in range(n):
        out[i], state = _normal(state, inc)
    return out, state


def dirichlet_rows(state, inc, alphas, max_retries):
    """One Dirichlet draw per row of ``alphas``; returns ``(weights, state)``."""
    alphas = np.ascontiguousarray(alphas, dtype=np.float64)
    rows, k = alphas.shape
    out = np.empty((rows, k))
    logs = [0.0] * k
    for r in range(rows):
        for attempt in range(max_retries + 1):
            top = -math.inf
            for j in range(k):
                logs[j], state = log_gamma_draw(state, inc, float(alphas[r, j]))
                if logs[j] > top:
                    top = logs[j]
            total = 0.0
            for j in range(k):
                logs[j] = math.exp(logs[j] - top)
                total += logs[j]
            if total > 0.0 and math.isfinite(total):
                break
        else:
            raise FloatingPointError("dirichlet draw degenerate after retries")
        for j in range(k):
            out[r, j] = logs[j] / total
    return out, state


def pairwise_distances(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    diff = x[:, None, :] - x[None, :, :]
    d = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    # exact symmetry regardless of summation order
    d = np.triu(d, 1)
    return d + d.T


def jacobi_eigenvalues(a, tol, max_sweeps):
    """Cyclic Jacobi; returns ``(diagonal, sweeps)`` in original index order."""
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    scale = math.sqrt(float(np.sum(a * a)))
    for sweep in range(max_sweeps + 1):
        off = math.sqrt(float(np.sum(np.square(a - np.diag(np.diag(a))))))
        if off <= tol * scale:
            return np.diag(a).copy(), sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q]
                a[:, p] = c * colp - s * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :]
                a[p, :] = c * rowp - s * rowq
                a[q, :] = s * rowp + c * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
    raise ArithmeticError(f"Jacobi did not converge in {max_sweeps} sweeps")
