"""Finite signed atomic measures on the sphere and on a tangent space."""

from dataclasses import dataclass

import numpy as np

from .geometry import SpherePoint

MASS_TOL = 1e-12


def _freeze(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DiscreteSphereMeasure:
    """``sum_i w_i delta_{z_i}`` on the unit n-sphere.

    ``points`` has shape (m, n + 1) (unit vectors), ``weights`` shape (m,).
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        w = np.array(self.weights, dtype=float).reshape(-1)
        if pts.ndim != 2 or pts.shape[0] != w.size:
            raise ValueError("points and weights must have matching lengths")
        if pts.shape[0] and np.any(np.abs(np.linalg.norm(pts, axis=1) - 1.0) > 1e-12):
            raise ValueError("atoms must be unit vectors")
        object.__setattr__(self, "points", _freeze(pts))
        object.__setattr__(self, "weights", _freeze(w))

    @classmethod
    def from_atoms(cls, atoms):
        """Build from ``[(SpherePoint or vector, weight), ...]``."""
        pts = [p.coords if isinstance(p, SpherePoint) else np.asarray(p, float) for p, _ in atoms]
        return cls(np.array(pts), np.array([w for _, w in atoms], dtype=float))

    @classmethod
    def dirac(cls, z, weight=1.0):
        return cls.from_atoms([(z, weight)])

    @classmethod
    def increment(cls, z, z_prime):
        """``delta_z - delta_{z'}``."""
        return cls.from_atoms([(z, 1.0), (z_prime, -1.0)])

    @property
    def n(self):
        return self.points.shape[1] - 1

    @property
    def total_mass(self):
        return float(self.weights.sum())

    @property
    def total_variation(self):
        return float(np.abs(self.weights).sum())

    def is_centered(self, tol=MASS_TOL):
        return abs(self.total_mass) <= tol * max(1.0, self.total_variation)

    def scaled(self, c):
        return DiscreteSphereMeasure(self.points, c * self.weights)

    def __add__(self, other):
        if other.n != self.n:
            raise ValueError("measures live on spheres of different dimensions")
        return DiscreteSphereMeasure(np.vstack([self.points, other.points]),
                                     np.concatenate([self.weights, other.weights]))

    def __len__(self):
        return self.weights.size


@dataclass(frozen=True, eq=False)
class TangentMeasure:
    """Zero-mass atomic measure ``sum_i w_i delta_{x_i}`` on R^n."""

    vectors: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.array(self.vectors, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        w = np.array(self.weights, dtype=float).reshape(-1)
        if x.shape[0] != w.size:
            raise ValueError("vectors and weights must have matching lengths")
        if abs(w.sum()) > MASS_TOL * max(1.0, np.abs(w).sum()):
            raise ValueError(f"tangent measures must have zero total mass (got {w.sum()!r})")
        object.__setattr__(self, "vectors", _freeze(x))
        object.__setattr__(self, "weights", _freeze(w))

    @classmethod
    def from_atoms(cls, atoms):
        return cls(np.array([np.atleast_1d(np.asarray(x, float)) for x, _ in atoms]),
                   np.array([w for _, w in atoms], dtype=float))

    @classmethod
    def increment(cls, x):
        """``delta_x - delta_0``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(np.stack([x, np.zeros_like(x)]), np.array([1.0, -1.0]))

    @property
    def n(self):
        return self.vectors.shape[1]

    def dilated(self, eps):
        """Image under ``x -> eps * x`` (the measure ``B -> tau(B / eps)``)."""
        return TangentMeasure(eps * self.vectors, self.weights)
