# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: PCG32 stream, gamma/Dirichlet sampling, pairwise
distances and cyclic Jacobi.

Operation order matches ``_pycore`` so the random kernels are bit-identical
across backends. Do not build with -ffast-math.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, log, exp, cos, fabs, INFINITY, isfinite
from libc.stdint cimport uint64_t, uint32_t

cnp.import_array()

BACKEND = "compiled"

cdef uint64_t PCG_MULT = 6364136223846793005ULL
cdef double TWO_PI = 6.283185307179586
cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef struct Pcg:
    uint64_t state
    uint64_t inc


cdef inline uint32_t _next(Pcg* g) nogil:
    cdef uint64_t old = g.state
    g.state = old * PCG_MULT + g.inc
    cdef uint32_t xorshifted = <uint32_t>(((old >> 18) ^ old) >> 27)
    cdef uint32_t rot = <uint32_t>(old >> 59)
    return (xorshifted >> rot) | (xorshifted << ((-rot) & 31))


cdef inline double _uniform(Pcg* g) nogil:
    cdef uint32_t a = _next(g)
    cdef uint32_t b = _next(g)
    return ((a >> 5) * 67108864.0 + (b >> 6)) * INV_2_53


cdef inline double _normal(Pcg* g) nogil:
    cdef double u1 = _uniform(g)
    cdef double u2 = _uniform(g)
    return sqrt(-2.0 * log(1.0 - u1)) * cos(TWO_PI * u2)


cdef double _log_gamma_ge1(double alpha, Pcg* g) nogil:
    cdef double d = alpha - 1.0 / 3.0
    cdef double c = 1.0 / sqrt(9.0 * d)
    cdef double x, v, u, x2
    while True:
        x = _normal(g)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = 1.0 - _uniform(g)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return log(d * v)
        if log(u) < 0.5 * x2 + d * (1.0 - v + log(v)):
            return log(d * v)


cdef inline double _log_gamma(double alpha, Pcg* g) nogil:
    cdef double lg
    if alpha >= 1.0:
        return _log_gamma_ge1(alpha, g)
    lg = _log_gamma_ge1(alpha + 1.0, g)
    return lg + log(1.0 - _uniform(g)) / alpha


def pcg32_next(uint64_t state, uint64_t inc):
    cdef Pcg g
    g.state = state
    g.inc = inc
    cdef uint32_t out = _next(&g)
    return out, g.state


def log_gamma_draw(uint64_t state, uint64_t inc, double alpha):
    cdef Pcg g
    g.state = state
    g.inc = inc
    cdef double v = _log_gamma(alpha, &g)
    return v, g.state


def fill_uniform(uint64_t state, uint64_t inc, Py_ssize_t n):
    cdef Pcg g
    g.state = state
    g.inc = inc
    out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = _uniform(&g)
    return out, g.state


def fill_normal(uint64_t state, uint64_t inc, Py_ssize_t n):
    cdef Pcg g
    g.state = state
    g.inc = inc
    out = np.empty(n)
    cdef double[::1] o = out
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = _normal(&g)
    return out, g.state


def dirichlet_rows(uint64_t state, uint64_t inc, alphas, int max_retries):
    cdef Pcg g
    g.state = state
    g.inc = inc
    cdef double[:, ::1] a = np.ascontiguousarray(alphas, dtype=np.float64)
    cdef Py_ssize_t rows = a.shape[0], k = a.shape[1]
    out = np.empty((rows, k))
    cdef double[:, ::1] o = out
    cdef double[::1] logs = np.empty(k)
    cdef Py_ssize_t r, j
    cdef int attempt
    cdef double top, total
    cdef bint ok
    for r in range(rows):
        ok = False
        for attempt in range(max_retries + 1):
            top = -INFINITY
            for j in range(k):
                logs[j] = _log_gamma(a[r, j], &g)
                if logs[j] > top:
                    top = logs[j]
            total = 0.0
            for j in range(k):
                logs[j] = exp(logs[j] - top)
                total += logs[j]
            if total > 0.0 and isfinite(total):
                ok = True
                break
        if not ok:
            raise FloatingPointError("dirichlet draw degenerate after retries")
        for j in range(k):
            o[r, j] = logs[j] / total
    return out, g.state


def pairwise_distances(x):
    cdef double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t b = X.shape[0], m = X.shape[1]
    out = np.zeros((b, b))
    cdef double[:, ::1] D = out
    cdef Py_ssize_t i, j, c
    cdef double acc, t
    for i in range(b):
        for j in range(i + 1, b):
            acc = 0.0
            for c in range(m):
                t = X[i, c] - X[j, c]
                acc += t * t
            D[i, j] = sqrt(acc)
            D[j, i] = D[i, j]
    return out


def jacobi_eigenvalues(a, double tol, int max_sweeps):
    A_arr = np.array(a, dtype=np.float64, order="C")
    cdef double[:, ::1] A = A_arr
    cdef Py_ssize_t n = A.shape[0]
    cdef Py_ssize_t p, q, k
    cdef double scale = 0.0, off, apq, theta, t, c, s, x, y
    cdef int sweep
    for p in range(n):
        for q in range(n):
            scale += A[p, q] * A[p, q]
    scale = sqrt(scale)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += A[p, q] * A[p, q]
        if sqrt(off) <= tol * scale:
            return np.diag(A_arr).copy(), sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if fabs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    x = A[k, p]
                    y = A[k, q]
                    A[k, p] = c * x - s * y
                    A[k, q] = s * x + c * y
                for k in range(n):
                    x = A[p, k]
                    y = A[q, k]
                    A[p, k] = c * x - s * y
                    A[q, k] = s * x + c * y
                A[p, q] = 0.0
                A[q, p] = 0.0
    raise ArithmeticError(f"Jacobi did not converge in {max_sweeps} sweeps")
