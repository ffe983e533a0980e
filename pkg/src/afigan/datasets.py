"""Synthetic point clouds: disc, ellipsoid, ring and a ring of Gaussians."""
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError
from .randsrc import Rng

SHAPES = ("ellipsoid", "disc", "ring", "gaussian-mixture")
_MIN_DIM = {"ellipsoid": 3, "disc": 2, "ring": 2, "gaussian-mixture": 2}
_DEFAULT_RADII = {
    "ellipsoid": [2.0, 1.5, 1.0],
    "disc": [1.0],
    "ring": [1.0],
    "gaussian-mixture": [1.0],
}


@dataclass
class DatasetSpec:
    shape: str = "ring"
    n: int = 64
    ambient_dim: int = 2
    radii: list = field(default_factory=list)
    noise_sigma: float = 0.0
    seed: int = 0
    components: int = 8
    component_sigma: float = 0.05

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigError(f"unknown shape {self.shape!r}; choose from {SHAPES}")
        if self.n < 1:
            raise ConfigError("dataset needs at least one point")
        if self.ambient_dim < _MIN_DIM[self.shape]:
            raise ConfigError(
                f"{self.shape} needs ambient_dim >= {_MIN_DIM[self.shape]}, got {self.ambient_dim}"
            )
        if not self.radii:
            self.radii = list(_DEFAULT_RADII[self.shape])
        self.radii = [float(r) for r in self.radii]
        want = 3 if self.shape == "ellipsoid" else 1
        if len(self.radii) != want or min(self.radii) <= 0.0:
            raise ConfigError(f"{self.shape} takes {want} positive radii, got {self.radii}")
        if self.noise_sigma < 0.0:
            raise ConfigError("noise_sigma must be >= 0")

    def to_dict(self):
        return asdict(self)


def _unit_sphere(rng, count, dim):
    v = rng.normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _ellipsoid(rng, n, axes):
    # sphere points stretched onto the ellipsoid, accepted in proportion to
    # the local area stretch so the surface density is uniform
    a = np.asarray(axes)
    accept_scale = a.min()
    out = np.empty((0, 3))
    while len(out) < n:
        u = _unit_sphere(rng, 2 * (n - len(out)) + 8, 3)
        stretch = np.prod(a) * np.sqrt(np.sum((u / a) ** 2, axis=1))
        bound = np.prod(a) / accept_scale
        keep = rng.uniform(len(u)) < stretch / bound
        out = np.vstack([out, u[keep] * a])
    return out[:n]


def generate_dataset(spec, rng=None):
    """``spec.n`` points on the named shape, embedded in ``spec.ambient_dim``.

    Deterministic per ``spec.seed`` unless an explicit ``rng`` is passed.
    """
    rng = Rng(spec.seed) if rng is None else rng
    n, dim = spec.n, spec.ambient_dim
    pts = np.zeros((n, dim))
    if spec.shape == "disc":
        r = spec.radii[0] * np.sqrt(rng.uniform(n))
        ang = 2.0 * np.pi * rng.uniform(n)
        pts[:, 0] = r * np.cos(ang)
        pts[:, 1] = r * np.sin(ang)
    elif spec.shape == "ring":
        ang = 2.0 * np.pi * rng.uniform(n)
        pts[:, 0] = spec.radii[0] * np.cos(ang)
        pts[:, 1] = spec.radii[0] * np.sin(ang)
    elif spec.shape == "ellipsoid":
        pts[:, :3] = _ellipsoid(rng, n, spec.radii)
    else:
        comp = np.array([rng.integer(spec.components) for _ in range(n)])
        ang = 2.0 * np.pi * comp / spec.components
        pts[:, 0] = spec.radii[0] * np.cos(ang)
        pts[:, 1] = spec.radii[0] * np.sin(ang)
        pts[:, :2] += spec.component_sigma * rng.normal((n, 2))
    if spec.noise_sigma > 0.0:
        pts += spec.noise_sigma * rng.normal((n, dim))
    return pts
