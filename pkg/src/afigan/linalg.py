"""Pairwise distances, max-normalisation and classical MDS spectra.

Eigenvalues come from a cyclic Jacobi solver (compiled kernel when
available); matrices here are small (b <= 64), dense and symmetric.
"""
import io
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InvalidInputError

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100
SYMMETRY_TOL = 1e-10


def as_batch(x, name="batch"):
    """Validate a 2-D finite float array (rows are points)."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1:
        raise InvalidInputError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return a


def pairwise_distance_matrix(batch):
    """Euclidean distance between every pair of rows; exact zero diagonal."""
    return _kernels.impl.pairwise_distances(as_batch(batch))


def normalize_distance_matrix(dist):
    """Divide by the largest entry so values lie in [0, 1].

    An all-zero matrix is returned unchanged.
    """
    d = np.asarray(dist, dtype=np.float64)
    top = d.max() if d.size else 0.0
    if top <= 0.0:
        return d.copy()
    return d / top


def symmetric_eigenvalues(a):
    """All eigenvalues of a real symmetric matrix, largest first.

    Ties keep the original diagonal order so the result is deterministic.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix contains non-finite values")
    if a.size and np.max(np.abs(a - a.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(a))):
        raise InvalidInputError("matrix is not symmetric")
    if a.shape[0] == 0:
        return np.empty(0)
    sym = 0.5 * (a + a.T)
    diag, _ = _kernels.impl.jacobi_eigenvalues(sym, JACOBI_TOL, JACOBI_MAX_SWEEPS)
    order = np.argsort(-diag, kind="stable")
    return diag[order]


def double_center(dist):
    """Classical-MDS Gram matrix ``-1/2 J (D*D) J`` with ``J = I - 11^T/b``."""
    d = np.asarray(dist, dtype=np.float64)
    sq = d * d
    # J S J expanded: subtract row and column means, add back the grand mean
    row = sq.mean(axis=1, keepdims=True)
    col = sq.mean(axis=0, keepdims=True)
    g = -0.5 * (sq - row - col + sq.mean())
    return 0.5 * (g + g.T)


@dataclass(frozen=True)
class MdsSpectrum:
    """Descending, non-negative MDS eigenvalues of one batch."""

    eigenvalues: np.ndarray
    negatives_clamped: int = 0

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def max(self):
        return float(self.eigenvalues[0]) if len(self.eigenvalues) else 0.0

    def trailing_mass(self, keep=3):
        """Share of the total spectrum beyond the first ``keep`` values."""
        total = float(np.sum(self.eigenvalues))
        if total <= 0.0:
            return 0.0
        return float(np.sum(self.eigenvalues[keep:])) / total


def mds_spectrum(dist):
    """Eigenvalues of the double-centred squared-distance matrix.

    Negative eigenvalues (non-Euclidean input) are clamped to zero and
    counted in ``negatives_clamped``.
    """
    vals = symmetric_eigenvalues(double_center(dist))
    neg = int(np.count_nonzero(vals < 0.0))
    return MdsSpectrum(np.where(vals <= 0.0, 0.0, vals), neg)  # also folds -0.0


def batch_spectrum(batch):
    """Distance matrix, normalised, then MDS: the per-batch flatness probe."""
    return mds_spectrum(normalize_distance_matrix(pairwise_distance_matrix(batch)))


def matrix_to_csv(a):
    """Serialise a matrix as CSV, one row per line, round-trippable floats."""
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    buf = io.StringIO()
    for row in a:
        buf.write(",".join(repr(float(v)) for v in row))
        buf.write("\n")
    return buf.getvalue()


def matrix_from_csv(text):
    rows = [line for line in text.splitlines() if line.strip()]
    return np.array([[float(v) for v in line.split(",")] for line in rows])
