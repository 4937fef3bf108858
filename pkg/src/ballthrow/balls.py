"""Poisson random balls on the unit n-sphere.

The intensity of the scaled model is ``lambda(rho) rho^-1 f(r / rho)
sigma(dx) dr`` with the truncated power law ``f(r) = r^(2H-n-1)`` on
``(r_min, c_f pi)`` and ``lambda(rho) = rho^theta``.  For this law the radius
density is ``rho^(theta+n-2H) r^(2H-n-1)`` on ``(rho r_min, rho c_f pi)``.

Balls of radius ``>= pi`` cover the whole sphere.  They are never drawn
one by one: samplers record only how many there are (``n_whole``).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .geometry import (
    cap_area, cap_area_ratio, sample_uniform, sample_uniform_cap, sphere_area,
    unit_ball_volume, pairwise_distances,
)
from .kernel import cap_power_moment, deficit_power_moment
from .overlap import psi, psi_circle


@dataclass(frozen=True)
class RadiusLaw:
    """Power law ``r^(2H-n-1)`` on ``(r_min, cutoff * pi)``.

    ``cutoff=None`` gives the pure power law on ``(r_min, inf)``, which has
    finitely many whole-sphere balls only when 2H < n.
    """

    n: int
    H: float
    cutoff: float = 0.9
    r_min: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.H > 0:
            raise ValueError("H must be positive")
        if 2.0 * self.H == self.n:
            raise ValueError("2H = n is excluded")
        if self.cutoff is None:
            if 2.0 * self.H > self.n:
                raise ValueError("the pure power law needs 2H < n (else infinitely many large balls)")
        elif not 0.0 < self.cutoff < 1.0:
            raise ValueError("cutoff fraction must lie in (0, 1)")
        if not 0.0 <= self.r_min < self.r_max:
            raise ValueError("r_min must lie in [0, cutoff * pi)")

    @property
    def r_max(self):
        return np.inf if self.cutoff is None else self.cutoff * np.pi

    @property
    def alpha(self):
        return 2.0 * self.H - self.n - 1.0

    def density(self, r):
        r = np.asarray(r, dtype=float)
        inside = (r > self.r_min) & (r < self.r_max)
        out = np.where(inside, np.where(r > 0, r, 1.0) ** self.alpha, 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ModelSpec:
    """Radius law, scale ``rho`` and intensity exponent ``theta`` (lambda = rho^theta)."""

    law: RadiusLaw
    rho: float = 1.0
    theta: float = 0.0

    def __post_init__(self):
        if not self.rho >= 1.0:
            raise ValueError("rho must be >= 1")
        if not self.theta > 2.0 * self.law.H - self.law.n:
            raise ValueError(
                "need lambda(rho) rho^(n-2H) -> infinity, i.e. theta > 2H - n "
                f"(theta={self.theta}, 2H-n={2 * self.law.H - self.law.n})")

    @property
    def n(self):
        return self.law.n

    @property
    def H(self):
        return self.law.H

    @property
    def intensity(self):
        """Prefactor ``rho^(theta + n - 2H)`` of ``r^(2H-n-1)``."""
        return self.rho ** (self.theta + self.n - 2.0 * self.H)

    @property
    def band(self):
        return self.rho * self.law.r_min, self.rho * self.law.r_max

    @property
    def partial_band(self):
        """Radius range of balls that do not cover the whole sphere."""
        a, b = self.band
        return min(a, np.pi), min(b, np.pi)

    def whole_sphere_rate(self):
        """Expected number of balls with radius >= pi."""
        a, b = self.band
        lo = max(a, np.pi)
        if b <= lo:
            return 0.0
        e = 2.0 * self.H - self.n
        top = 0.0 if np.isinf(b) else b**e
        return self.intensity * sphere_area(self.n) * (top - lo**e) / e


def scaled_radius_density(spec, r):
    """``lambda(rho) rho^-1 f(r / rho)``."""
    r = np.asarray(r, dtype=float)
    return spec.rho**spec.theta / spec.rho * spec.law.density(r / spec.rho)


def normalizer(spec):
    """``sqrt(lambda(rho) rho^(n - 2H))``."""
    return float(np.sqrt(spec.rho**spec.theta * spec.rho ** (spec.n - 2.0 * spec.H)))


@dataclass
class BallConfiguration:
    """One Poisson sample: partial balls plus a count of whole-sphere balls."""

    centers: np.ndarray
    radii: np.ndarray
    n_whole: int = 0
    sampler: str = ""
    seed: object = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.centers = np.atleast_2d(np.asarray(self.centers, dtype=float))
        self.radii = np.asarray(self.radii, dtype=float).reshape(-1)
        if self.centers.shape[0] != self.radii.size:
            raise ValueError("one radius per centre is required")
        if np.any(self.radii <= 0):
            raise ValueError("ball radii must be positive")
        if self.n_whole < 0:
            raise ValueError("n_whole must be >= 0")

    @property
    def n(self):
        return self.centers.shape[1] - 1

    def __len__(self):
        return self.radii.size


def coverage(config, points):
    """Boolean matrix: ball j covers point i (partial balls only)."""
    pts = np.atleast_2d(points)
    if len(config) == 0:
        return np.zeros((0, pts.shape[0]), dtype=bool)
    whole = (config.radii >= np.pi)[:, None]
    return (config.centers @ pts.T > np.cos(config.radii)[:, None]) | whole


def field_value(config, mu):
    """``X(mu) = sum_balls mu(ball)``; for ``mu = delta_z`` the covering count."""
    if mu.n != config.n:
        raise ValueError("configuration and measure live on different spheres")
    covered = coverage(config, mu.points)
    return float((covered @ mu.weights).sum()) + config.n_whole * mu.total_mass


def _power_law_draw(a, b, power, rng, size):
    """Draws with density proportional to ``r^(power - 1)`` on ``(a, b)``, power != 0."""
    u = rng.random(size)
    return (a**power + u * (b**power - a**power)) ** (1.0 / power)


def sample_covering_balls(spec, points, rng, seed=None):
    """Exact draw of the balls that cover at least one of ``points``.

    Proposals: pick a point uniformly, a radius with density proportional to
    ``r^(2H-1)`` (thinned by ``phi(r) / (omega_n r^n)`` to get
    ``phi(r) r^(2H-n-1)``), a centre uniform in the cap around the point.
    Each proposal is kept with probability ``1 / (number of points it
    covers)``, which removes the multiple counting.
    """
    pts = np.atleast_2d(np.array([p.coords if hasattr(p, "coords") else p for p in points], float))
    m, dim = pts.shape
    n = dim - 1
    if n != spec.n:
        raise ValueError("points live on a sphere of the wrong dimension")
    a, b = spec.partial_band
    H = spec.H
    omega = unit_ball_volume(n)
    mass = m * spec.intensity * omega * (b ** (2 * H) - a ** (2 * H)) / (2 * H) if b > a else 0.0
    k = rng.poisson(mass)
    idx = rng.integers(0, m, size=k)
    radii = _power_law_draw(a, b, 2 * H, rng, k)
    if n > 1:
        keep = rng.random(k) < cap_area_ratio(n, radii) / omega
        idx, radii = idx[keep], radii[keep]
    centers = sample_uniform_cap(pts[idx], radii, rng) if radii.size else np.zeros((0, dim))
    if radii.size:
        hits = (centers @ pts.T > np.cos(radii)[:, None]).sum(axis=1)
        # the proposal's own point is covered up to rounding at the rim
        hits = np.maximum(hits, 1)
        keep = rng.random(radii.size) * hits < 1.0
        centers, radii = centers[keep], radii[keep]
    n_whole = int(rng.poisson(spec.whole_sphere_rate()))
    return BallConfiguration(centers, radii, n_whole, "covering", seed,
                             {"proposal_mass": mass})


def sample_truncated_global(spec, rng, seed=None):
    """Draw the full process when radii are bounded below (``r_min > 0``)."""
    if spec.law.r_min <= 0:
        raise ValueError("the global sampler needs r_min > 0 (finite intensity)")
    if spec.law.cutoff is None:
        raise ValueError("the global sampler needs a finite cutoff")
    n = spec.n
    a, b = spec.band
    e = 2.0 * spec.H - n
    total = spec.intensity * sphere_area(n) * (b**e - a**e) / e
    k = rng.poisson(total)
    radii = _power_law_draw(a, b, e, rng, k)
    centers = sample_uniform(n, rng, size=k)
    whole = radii >= np.pi
    return BallConfiguration(centers[~whole], radii[~whole], int(whole.sum()),
                             "global", seed, {"expected_count": total})


def _pair_overlap_moment(n, H, d, a, b):
    """``int_a^b psi(d, r) r^(2H-n-1) dr`` by direct adaptive quadrature."""
    alpha = 2.0 * H - n - 1.0
    if b <= a:
        return 0.0
    if d == 0.0:
        g = (lambda r: cap_area_ratio(n, r))
        if a == 0.0:
            return integrate.quad(g, 0.0, b, weight="alg", wvar=(2 * H - 1.0, 0.0),
                                  epsabs=1e-12, epsrel=1e-10, limit=200)[0]
        return integrate.quad(lambda r: cap_area(n, r) * r**alpha, a, b,
                              epsabs=1e-12, epsrel=1e-10, limit=200)[0]
    lo = max(a, 0.5 * d)
    if b <= lo:
        return 0.0
    if n == 1:
        def f(r):
            return psi_circle(d, r) * r**alpha
    else:
        def f(r):
            return psi(n, d, r, tol=1e-11) * r**alpha
    pts = [p for p in (np.pi - 0.5 * d, 0.5 * np.pi) if lo < p < b]
    return integrate.quad(f, lo, b, points=pts or None, epsabs=1e-12, epsrel=1e-10, limit=200)[0]


def moments_exact(spec, mu):
    """Exact mean and variance of ``X_rho(mu)`` (Campbell formulas).

    Integrates ``sum_ij w_i w_j psi(d_ij, r)`` against the radius density;
    independent of the kernel module's quadrature.
    """
    if mu.n != spec.n:
        raise ValueError("measure lives on a sphere of the wrong dimension")
    n, H = spec.n, spec.H
    a, b = spec.partial_band
    c = spec.intensity
    whole = spec.whole_sphere_rate()
    mass = mu.total_mass
    mean = mass * (c * _pair_overlap_moment(n, H, 0.0, a, b) + whole)

    d = pairwise_distances(mu.points)
    w = mu.weights
    uniq, inv = np.unique(np.round(d, 15).ravel(), return_inverse=True)
    moments = np.array([_pair_overlap_moment(n, H, float(x), a, b) for x in uniq])
    var = c * float(w @ moments[inv].reshape(d.shape) @ w) + mass**2 * whole
    return float(mean), float(var)


def _circle_pattern_lengths(angles, r):
    """Arc lengths of centre positions grouped by the set of points covered.

    Returns a dict ``bitmask -> length`` for arcs of half-length ``r < pi``.
    """
    m = angles.size
    two_pi = 2.0 * np.pi
    events = np.sort(np.concatenate([(angles - r) % two_pi, (angles + r) % two_pi]))
    gaps = np.diff(np.concatenate([events, [events[0] + two_pi]]))
    mids = (events + 0.5 * gaps) % two_pi
    dist = np.abs((mids[:, None] - angles[None, :] + np.pi) % two_pi - np.pi)
    covered = dist < r
    masks = covered.astype(np.int64) @ (1 << np.arange(m, dtype=np.int64))
    out = {}
    for mask, g in zip(masks.tolist(), gaps.tolist()):
        if mask:
            out[mask] = out.get(mask, 0.0) + g
    return out


def _power_segment(r0, r1, l0, l1, alpha):
    """``int_{r0}^{r1} L(r) r^alpha dr`` for ``L`` linear with ``L(r0)=l0, L(r1)=l1``."""
    slope = (l1 - l0) / (r1 - r0)

    def mom(k):
        e = alpha + 1.0 + k
        return (r1**e - r0**e) / e

    value = slope * mom(1)
    if r0 > 0:
        value += (l0 - slope * r0) * mom(0)
    return value


def coverage_pattern_masses(spec, points):
    """Poisson means of the number of balls covering exactly each subset.

    Returns ``(patterns, masses)``: ``patterns`` is a boolean array of shape
    (P, m) and ``masses`` the intensity of balls whose covered subset of
    ``points`` is that pattern.  Exact on the circle for any number of
    points, and on any sphere for one or two points.
    """
    pts = np.atleast_2d(np.array([p.coords if hasattr(p, "coords") else p for p in points], float))
    m = pts.shape[0]
    n, H = spec.n, spec.H
    a, b = spec.partial_band
    c = spec.intensity
    full = (1 << m) - 1
    masses = {}
    if n == 1:
        angles = np.arctan2(pts[:, 1], pts[:, 0]) % (2 * np.pi)
        gaps = (angles[:, None] - angles[None, :]) % (2 * np.pi)
        cuts = np.concatenate([gaps.ravel() / 2, np.pi - gaps.ravel() / 2, [a, b]])
        cuts = np.unique(cuts[(cuts >= a) & (cuts <= b)])
        prev = None
        for r0, r1 in zip(cuts[:-1], cuts[1:]):
            if r1 <= r0:
                continue
            l0 = prev if prev is not None and prev[0] == r0 else (r0, _circle_pattern_lengths(angles, r0))
            l1 = (r1, _circle_pattern_lengths(angles, r1))
            for mask in set(l0[1]) | set(l1[1]):
                v = _power_segment(r0, r1, l0[1].get(mask, 0.0), l1[1].get(mask, 0.0), 2 * H - 2)
                masses[mask] = masses.get(mask, 0.0) + c * v
            prev = l1
    elif m == 1:
        masses[1] = c * cap_power_moment(n, H, a, b)
    elif m == 2:
        u = float(pairwise_distances(pts)[0, 1])
        only = c * deficit_power_moment(n, H, u, a, b)
        masses[1] = only
        masses[2] = only
        masses[3] = c * cap_power_moment(n, H, a, b) - only
    else:
        raise NotImplementedError("coverage patterns need n = 1 or at most two points")
    masses[full] = masses.get(full, 0.0) + spec.whole_sphere_rate()
    keys = sorted(k for k, v in masses.items() if v > 0)
    patterns = np.array([[(k >> i) & 1 for i in range(m)] for k in keys], dtype=bool)
    return patterns.reshape(len(keys), m), np.array([masses[k] for k in keys])


def pattern_cumulants(spec, points, weights, orders=(1, 2, 3, 4)):
    """Exact cumulants of ``X_rho(mu)``: ``kappa_k = sum_S mu(S)^k mass_S``."""
    patterns, masses = coverage_pattern_masses(spec, points)
    values = patterns @ np.asarray(weights, dtype=float)
    return {k: float(np.sum(values**k * masses)) for k in orders}


def sample_pattern_fields(spec, points, weights, replicates, rng):
    """Exact joint draws of ``X_rho(mu_1), ..., X_rho(mu_k)``.

    ``weights`` has shape (k, m): one row per measure on the common atoms
    ``points``.  The count of balls covering exactly a subset ``S`` is
    Poisson with the mean from :func:`coverage_pattern_masses`, independently
    over subsets, and ``X(mu) = sum_S mu(S) N_S``.
    """
    patterns, masses = coverage_pattern_masses(spec, points)
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    counts = rng.poisson(masses, size=(replicates, masses.size))
    return counts @ (patterns.astype(float) @ w.T)


def measure_values(configs, measures):
    """Matrix of ``field_value`` over configurations (rows) and measures (columns)."""
    return np.array([[field_value(c, mu) for mu in measures] for c in configs])


__all__ = [
    "RadiusLaw", "ModelSpec", "BallConfiguration", "scaled_radius_density", "normalizer",
    "sample_covering_balls", "sample_truncated_global", "field_value", "moments_exact",
    "coverage_pattern_masses", "pattern_cumulants", "sample_pattern_fields",
]
