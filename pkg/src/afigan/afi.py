"""Adaptive feature interpolation over a batch of feature vectors.

Each row is optionally replaced by a Dirichlet-weighted convex combination
of its k nearest neighbours (itself included). The neighbour count k comes
from how many MDS eigenvalues of the batch fall below a fraction of the
largest one, and the replacement probability from ``p = (k - 1) / b``.
"""
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import linalg
from .errors import InvalidInputError, InvalidParameterError
from .randsrc import dirichlet_rows

ADAPTIVE = "adaptive"
DEGENERATE_EIGEN = 1e-12

CONCENTRATION_FNS = {
    "reciprocal-one-plus": lambda d: 1.0 / (1.0 + d),
    "exp-neg": lambda d: np.exp(-d),
}


@dataclass(frozen=True)
class AfiConfig:
    """Augmentation knobs.

    ``k_mode`` / ``p_mode`` are either ``"adaptive"`` or a fixed number.
    ``p_cap`` bounds the adaptive probability so some original features
    always survive; ``None`` leaves ``p = (k - 1) / b`` untouched.
    """

    t: float = 1.0
    threshold_ratio: float = 0.1
    k_mode: object = ADAPTIVE
    p_mode: object = ADAPTIVE
    concentration_fn: str = "reciprocal-one-plus"
    p_cap: object = None

    def __post_init__(self):
        if not (self.t >= 0.0 and math.isfinite(self.t)):
            raise InvalidParameterError(f"t must be finite and >= 0, got {self.t}")
        if not 0.0 < self.threshold_ratio < 1.0:
            raise InvalidParameterError("threshold_ratio must lie in (0, 1)")
        if self.k_mode != ADAPTIVE:
            if isinstance(self.k_mode, bool) or int(self.k_mode) != self.k_mode or self.k_mode < 1:
                raise InvalidParameterError(f"fixed k must be an integer >= 1, got {self.k_mode!r}")
            object.__setattr__(self, "k_mode", int(self.k_mode))
        if self.p_mode != ADAPTIVE:
            if isinstance(self.p_mode, str) or not 0.0 <= float(self.p_mode) <= 1.0:
                raise InvalidParameterError(f"fixed p must lie in [0, 1], got {self.p_mode!r}")
            object.__setattr__(self, "p_mode", float(self.p_mode))
        if self.p_cap is not None and not 0.0 <= float(self.p_cap) <= 1.0:
            raise InvalidParameterError("p_cap must lie in [0, 1]")
        if self.concentration_fn not in CONCENTRATION_FNS:
            raise InvalidParameterError(
                f"unknown concentration_fn {self.concentration_fn!r}; "
                f"choose from {sorted(CONCENTRATION_FNS)}"
            )

    @property
    def adaptive_k(self):
        return self.k_mode == ADAPTIVE

    @property
    def adaptive_p(self):
        return self.p_mode == ADAPTIVE

    def fixed(self, k, p):
        """Copy with k and p pinned (used to reuse one batch's decision)."""
        return replace(self, k_mode=int(k), p_mode=float(p), p_cap=None)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class AfiDecision:
    """Everything ``afi_augment`` decided for one batch."""

    k: int
    p: float
    neighbor_indices: np.ndarray
    weights: np.ndarray
    replaced: np.ndarray
    alphas: np.ndarray = None
    spectrum: linalg.MdsSpectrum = None
    degenerate: bool = False
    extra: dict = field(default_factory=dict)

    def mixing_matrix(self):
        """``b x b`` matrix ``A`` with ``augmented = A @ batch``."""
        b = len(self.replaced)
        a = np.zeros((b, b))
        for i in range(b):
            if self.replaced[i]:
                np.add.at(a[i], self.neighbor_indices[i], self.weights[i])
            else:
                a[i, i] = 1.0
        return a

    def backprop(self, grad_out):
        """Route gradients of the augmented batch back to the input rows."""
        g = np.asarray(grad_out, dtype=np.float64)
        keep = ~self.replaced
        grad_in = g * keep[:, None]
        for i in np.flatnonzero(self.replaced):
            np.add.at(grad_in, self.neighbor_indices[i], self.weights[i][:, None] * g[i])
        return grad_in

    def to_record(self):
        rec = {
            "k": int(self.k),
            "p": float(self.p),
            "neighbor_indices": self.neighbor_indices.tolist(),
            "weights": self.weights.tolist(),
            "replaced": [bool(r) for r in self.replaced],
            "degenerate": bool(self.degenerate),
        }
        if self.spectrum is not None:
            rec["eigenvalues"] = self.spectrum.eigenvalues.tolist()
            rec["negatives_clamped"] = self.spectrum.negatives_clamped
        return rec

    def to_json(self):
        return json.dumps(self.to_record(), separators=(",", ":"))


def knn_indices(dist, i, k):
    """The k rows closest to row ``i``: ``i`` first, then by (distance, index)."""
    d = np.asarray(dist, dtype=np.float64)
    b = d.shape[0]
    if not 0 <= i < b:
        raise InvalidParameterError(f"row index {i} out of range for batch of {b}")
    if not 1 <= k <= b:
        raise InvalidParameterError(f"k must lie in [1, {b}], got {k}")
    others = np.delete(np.arange(b), i)
    order = np.lexsort((others, d[i, others]))
    return np.concatenate(([i], others[order[: k - 1]])).astype(np.intp)


def knn_table(dist, k):
    b = np.asarray(dist).shape[0]
    return np.stack([knn_indices(dist, i, k) for i in range(b)])


def alpha_weights(distances, cfg=AfiConfig()):
    """Dirichlet concentrations ``T(d) ** t``; T(0) = 1 so self gets 1."""
    d = np.asarray(distances, dtype=np.float64)
    if not np.all(np.isfinite(d)) or np.any(d < 0.0):
        raise InvalidInputError("distances must be finite and non-negative")
    if cfg.t == 0.0:
        return np.ones_like(d)
    return CONCENTRATION_FNS[cfg.concentration_fn](d) ** cfg.t


def effective_k(spectrum, b, threshold_ratio=0.1):
    """Count eigenvalues strictly below ``threshold_ratio * max``, in [1, b].

    A batch whose spectrum is numerically zero is maximally flat: k = b.
    """
    lam = np.asarray(getattr(spectrum, "eigenvalues", spectrum), dtype=np.float64)
    if len(lam) == 0 or lam.max() <= DEGENERATE_EIGEN:
        return int(b)
    k = int(np.count_nonzero(lam < threshold_ratio * lam.max()))
    return min(max(k, 1), int(b))


def augmentation_probability(k, b):
    if not 1 <= k <= b:
        raise InvalidParameterError(f"k must lie in [1, b={b}], got {k}")
    return (k - 1) / b


def interpolate_feature(neighbors, weights):
    nb = np.asarray(neighbors, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if nb.ndim != 2 or w.ndim != 1 or nb.shape[0] != w.shape[0]:
        raise InvalidInputError(
            f"need k neighbour rows for k weights, got {nb.shape} and {w.shape}"
        )
    return w @ nb


def _resolve_k(cfg, spectrum, b):
    if cfg.adaptive_k:
        return effective_k(spectrum, b, cfg.threshold_ratio)
    if cfg.k_mode > b:
        raise InvalidParameterError(f"fixed k={cfg.k_mode} exceeds batch size {b}")
    return cfg.k_mode


def _resolve_p(cfg, k, b):
    if not cfg.adaptive_p:
        return cfg.p_mode
    p = augmentation_probability(k, b)
    if cfg.p_cap is not None:
        p = min(p, float(cfg.p_cap))
    return p


def _identity_decision(b, k, p, spectrum, degenerate):
    idx = np.arange(b)[:, None]
    return AfiDecision(
        k=k,
        p=p,
        neighbor_indices=idx.astype(np.intp),
        weights=np.ones((b, 1)),
        replaced=np.zeros(b, dtype=bool),
        alphas=np.ones((b, 1)),
        spectrum=spectrum,
        degenerate=degenerate,
    )


def resolve_parameters(batch, cfg):
    """Normalised distances, MDS spectrum, k and p for one batch."""
    y = linalg.as_batch(batch)
    b = y.shape[0]
    dist = linalg.normalize_distance_matrix(linalg.pairwise_distance_matrix(y))
    spectrum = linalg.mds_spectrum(dist)
    k = _resolve_k(cfg, spectrum, b)
    return dist, spectrum, k, _resolve_p(cfg, k, b)


def augment_with(batch, dist, k, p, cfg, rng, spectrum=None):
    """Interpolate with k and p already chosen; ``dist`` must be normalised."""
    y = linalg.as_batch(batch)
    b = y.shape[0]
    if not 1 <= k <= b:
        raise InvalidParameterError(f"k must lie in [1, {b}], got {k}")
    if b == 1 or not np.any(dist > 0.0):
        return y.copy(), _identity_decision(b, k, p, spectrum, True)

    nbrs = knn_table(dist, k)
    alphas = alpha_weights(np.take_along_axis(dist, nbrs, axis=1), cfg)
    weights = dirichlet_rows(alphas, rng)
    replaced = rng.uniform(b) < p

    out = y.copy()
    if np.any(replaced):
        rows = np.flatnonzero(replaced)
        out[rows] = np.einsum("rk,rkn->rn", weights[rows], y[nbrs[rows]])
    decision = AfiDecision(
        k=k,
        p=p,
        neighbor_indices=nbrs,
        weights=weights,
        replaced=replaced,
        alphas=alphas,
        spectrum=spectrum,
    )
    return out, decision


def afi_augment(batch, cfg, rng):
    """Augment one feature batch; returns ``(augmented, decision)``.

    Steps: distance matrix, max-normalised; MDS spectrum; k and p; per-row
    Dirichlet weights over the k nearest neighbours; then each row is
    replaced by its interpolation with probability p. Replaced rows take
    fresh weights on every call. Single-row and all-identical batches come
    back unchanged.
    """
    y = linalg.as_batch(batch)
    if y.shape[0] == 1:
        return y.copy(), _identity_decision(1, 1, 0.0, linalg.MdsSpectrum(np.zeros(1)), True)
    dist, spectrum, k, p = resolve_parameters(y, cfg)
    return augment_with(y, dist, k, p, cfg, rng, spectrum)
