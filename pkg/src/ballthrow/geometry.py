"""Geometry of the unit n-sphere embedded in R^(n+1).

Points are unit vectors.  Most functions accept either :class:`SpherePoint`
objects or raw arrays whose last axis holds the ambient coordinates, so the
samplers can work on whole batches at once.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, betaincinv, gammaln

DEFAULT_CHART_RADIUS = 3.0
_UNIT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SpherePoint:
    """A point of the unit n-sphere, stored as its ambient unit vector."""

    coords: np.ndarray

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).reshape(-1)
        if c.size < 2:
            raise ValueError("a point of S^n needs at least 2 coordinates")
        if abs(np.linalg.norm(c) - 1.0) > _UNIT_TOL:
            raise ValueError(f"coordinates are not a unit vector (norm {np.linalg.norm(c)!r})")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self):
        return self.coords.size - 1

    @classmethod
    def from_vector(cls, v):
        v = np.asarray(v, dtype=float)
        return cls(v / np.linalg.norm(v))

    @classmethod
    def from_angles(cls, angles):
        """Build a point from spherical angles ``(phi_1, ..., phi_n)``.

        ``x_1 = cos phi_1``, ``x_2 = sin phi_1 cos phi_2``, ...,
        ``x_{n+1} = sin phi_1 ... sin phi_n``.
        """
        return cls.from_vector(angles_to_cartesian(angles))

    def __repr__(self):
        return f"SpherePoint({np.array2string(self.coords, precision=6)})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Coordinates of a tangent vector in the standard frame at ``base``."""

    components: np.ndarray
    base: SpherePoint

    def __post_init__(self):
        c = np.array(self.components, dtype=float).reshape(-1)
        if c.size != self.base.n:
            raise ValueError(f"tangent vector needs {self.base.n} components, got {c.size}")
        c.setflags(write=False)
        object.__setattr__(self, "components", c)

    @property
    def norm(self):
        return float(np.linalg.norm(self.components))


def _coords(p):
    return p.coords if isinstance(p, SpherePoint) else np.asarray(p, dtype=float)


def angles_to_cartesian(angles):
    """Spherical angles (last axis, length n) to unit vectors (length n + 1)."""
    angles = np.asarray(angles, dtype=float)
    n = angles.shape[-1]
    out = np.empty(angles.shape[:-1] + (n + 1,))
    s = np.ones(angles.shape[:-1])
    for i in range(n):
        out[..., i] = s * np.cos(angles[..., i])
        s = s * np.sin(angles[..., i])
    out[..., n] = s
    return out


def north_pole(n):
    """The point with all spherical angles zero, ``e_1``."""
    e = np.zeros(n + 1)
    e[0] = 1.0
    return SpherePoint(e)


def geodesic_distance(p, q):
    """Great-circle distance (the angle between the radii) in ``[0, pi]``.

    Uses ``2 atan2(|p - q|, |p + q|)``, which agrees with the arccos of the
    clamped inner product but keeps full relative accuracy for nearly
    coincident and nearly antipodal points.
    """
    x, y = _coords(p), _coords(q)
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(f"dimension mismatch: S^{x.shape[-1] - 1} vs S^{y.shape[-1] - 1}")
    d = 2.0 * np.arctan2(np.linalg.norm(x - y, axis=-1), np.linalg.norm(x + y, axis=-1))
    return float(d) if np.ndim(d) == 0 else d


def pairwise_distances(xs, ys=None):
    """Matrix of geodesic distances between two stacks of unit vectors."""
    xs = np.atleast_2d(np.asarray([_coords(p) for p in xs]) if isinstance(xs, list) else xs)
    ys = xs if ys is None else np.atleast_2d(
        np.asarray([_coords(p) for p in ys]) if isinstance(ys, list) else ys)
    return geodesic_distance(xs[:, None, :], ys[None, :, :])


def sphere_area(n):
    """Surface measure of the unit n-sphere, ``2 pi^((n+1)/2) / Gamma((n+1)/2)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(2.0 * np.exp(0.5 * (n + 1) * np.log(np.pi) - gammaln(0.5 * (n + 1))))


def unit_ball_volume(n):
    """Lebesgue volume of the unit ball of R^n."""
    return float(np.exp(0.5 * n * np.log(np.pi) - gammaln(0.5 * n + 1.0)))


def cap_area(n, r):
    """Surface measure of a geodesic ball of radius ``r`` on the unit n-sphere.

    Vectorised over ``r``; the whole sphere is returned for ``r >= pi``.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("cap radius must be nonnegative")
    sigma = sphere_area(n)
    if n == 1:
        out = np.minimum(2.0 * r, sigma)
    else:
        rc = np.minimum(r, np.pi)
        half = 0.5 * sigma * betainc(0.5 * n, 0.5, np.sin(rc) ** 2)
        out = np.where(rc <= 0.5 * np.pi, half, sigma - half)
    return float(out) if out.ndim == 0 else out


def cap_area_ratio(n, r):
    """``cap_area(n, r) / r**n``, continuous at ``r = 0``."""
    r = np.asarray(r, dtype=float)
    small = r <= 0.0
    safe = np.where(small, 1.0, r)
    out = np.where(small, unit_ball_volume(n), cap_area(n, safe) / safe**n)
    return float(out) if out.ndim == 0 else out


def tangent_frame(base):
    """Orthonormal basis of the tangent space at ``base``, shape (n + 1, n).

    Gram-Schmidt on the standard basis, skipping the axis along which
    ``base`` is largest; deterministic for a given base point.
    """
    b = _coords(base)
    dim = b.size
    pivot = int(np.argmax(np.abs(b)))
    vecs = []
    for i in range(dim):
        if i == pivot:
            continue
        v = np.zeros(dim)
        v[i] = 1.0
        v -= (v @ b) * b
        for w in vecs:
            v -= (v @ w) * w
        vecs.append(v / np.linalg.norm(v))
    return np.stack(vecs, axis=1)


def exp_map(base, y, delta=DEFAULT_CHART_RADIUS):
    """Exponential map at ``base`` applied to tangent coordinates ``y``.

    ``y`` may be a :class:`TangentVector` or an array of shape (..., n).
    Returns a :class:`SpherePoint` for a single vector, otherwise an array
    of unit vectors.
    """
    b = _coords(base)
    if isinstance(y, TangentVector):
        y = y.components
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != b.size - 1:
        raise ValueError("tangent vector has the wrong dimension")
    t = np.linalg.norm(y, axis=-1)
    if not delta < np.pi:
        raise ValueError("chart radius must be below pi")
    if np.any(t >= delta):
        raise ValueError(f"tangent vector norm must be < {delta}")
    frame = tangent_frame(b)
    ambient = y @ frame.T
    safe = np.where(t > 0, t, 1.0)
    sinc = np.where(t > 0, np.sin(t) / safe, 1.0)
    p = np.cos(t)[..., None] * b + sinc[..., None] * ambient
    p = p / np.linalg.norm(p, axis=-1, keepdims=True)
    if p.ndim == 1:
        return SpherePoint(p)
    return p


def log_map(base, p):
    """Inverse of :func:`exp_map`: tangent coordinates of ``p`` at ``base``."""
    b = _coords(base)
    x = _coords(p)
    d = geodesic_distance(b, x)
    if np.any(np.asarray(d) >= np.pi - 1e-12):
        raise ValueError("log map undefined at the antipode of the base point")
    frame = tangent_frame(b)
    v = (x - (x @ b)[..., None] * b) @ frame
    nv = np.linalg.norm(v, axis=-1)
    scale = np.where(nv > 0, np.asarray(d) / np.where(nv > 0, nv, 1.0), 0.0)
    out = v * scale[..., None]
    if out.ndim == 1 and isinstance(base, SpherePoint):
        return TangentVector(out, base)
    return out


def exp_chart_density(n, t):
    """Density of the surface measure in exponential coordinates at radius ``t``.

    ``(sin t / t)**(n - 1)``; equals 1 at the origin.
    """
    t = np.asarray(t, dtype=float)
    s = np.where(t > 0, np.sin(t) / np.where(t > 0, t, 1.0), 1.0)
    return s ** (n - 1)


def sample_uniform(n, rng, size=None):
    """Uniform points on the n-sphere (normalised Gaussian vectors)."""
    shape = (n + 1,) if size is None else (size, n + 1)
    g = rng.standard_normal(shape)
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    return SpherePoint(g) if size is None else g


def sample_cap_colatitude(n, r, rng, size=None):
    """Colatitudes with density proportional to ``sin^(n-1)`` on ``[0, r]``.

    Inverts the cap-area function exactly with the inverse regularised
    incomplete beta function.  ``r`` may be an array (one radius per draw).
    """
    r = np.asarray(r, dtype=float)
    u = rng.random(size if size is not None else r.shape)
    if n == 1:
        return u * r
    sigma = sphere_area(n)
    target = u * cap_area(n, r)
    lower = target <= 0.5 * sigma
    x = np.where(lower, 2.0 * target / sigma, 2.0 * (sigma - target) / sigma)
    s = np.sqrt(np.clip(betaincinv(0.5 * n, 0.5, np.clip(x, 0.0, 1.0)), 0.0, 1.0))
    theta = np.arcsin(s)
    return np.where(lower, theta, np.pi - theta)


def sample_uniform_cap(center, r, rng, size=None):
    """Uniform points in the geodesic ball ``B(center, r)``, ``0 < r <= pi``.

    ``center`` may be a single point or an array of shape (k, n + 1), in
    which case ``r`` broadcasts against the k centres and one point is drawn
    per centre.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0) or np.any(r_arr > np.pi):
        raise ValueError("cap radius must lie in (0, pi]")
    c = _coords(center)
    single = c.ndim == 1
    if single:
        k = 1 if size is None else size
        centers = np.broadcast_to(c, (k, c.size))
    else:
        centers = c
        k = c.shape[0]
    n = centers.shape[1] - 1
    theta = sample_cap_colatitude(n, np.broadcast_to(r_arr, (k,)), rng)
    direction = rng.standard_normal((k, n + 1))
    direction -= np.sum(direction * centers, axis=1, keepdims=True) * centers
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    p = np.cos(theta)[:, None] * centers + np.sin(theta)[:, None] * direction
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    if single and size is None:
        return SpherePoint(p[0])
    return p
