"""Experiments on the Gaussian scaling limit and its tangent (lass) limit."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .balls import (
    coverage_pattern_masses, field_value, moments_exact, normalizer, pattern_cumulants,
    sample_covering_balls, sample_pattern_fields,
)
from .geometry import DEFAULT_CHART_RADIUS, exp_map, north_pole
from .kernel import (
    KernelSpec, covariance_matrix, k2_constant, psd_factorize, quadratic_form,
)
from .measures import DiscreteSphereMeasure, TangentMeasure

DEFAULT_EPS_GRID = (1e-1, 1e-2, 1e-3, 1e-4)
DEFAULT_CHUNK = 256


def _coords(p):
    return p.coords if hasattr(p, "coords") else np.asarray(p, dtype=float)


# ---------------------------------------------------------------- seeding

def chunk_rng(seed, index):
    """Generator for replicate chunk ``index``: ``SeedSequence(seed, spawn_key=(index,))``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def run_chunked(task, replicates, seed, chunk=DEFAULT_CHUNK, workers=1):
    """Run ``task(rng, count)`` over fixed-size chunks and stack the results.

    Chunk boundaries and streams depend only on ``seed`` and ``chunk``, so
    the output is identical for any number of workers.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    sizes = [min(chunk, replicates - s) for s in range(0, replicates, chunk)]
    jobs = [(chunk_rng(seed, i), k) for i, k in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: task(*job), jobs))
    else:
        parts = [task(*job) for job in jobs]
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------- moments

@dataclass
class MomentStats:
    """Unbiased sample moments with leave-one-out jackknife standard errors."""

    count: int
    mean: float
    variance: float
    skewness: float
    excess_kurtosis: float
    se_mean: float
    se_variance: float
    se_skewness: float
    se_kurtosis: float
    degenerate: bool = False

    def as_dict(self):
        return dict(self.__dict__)


def _moments_from_sums(s1, s2, s3, s4, n):
    """Unbiased variance, G1 and G2 from power sums of (roughly centred) data."""
    m = s1 / n
    m2 = s2 / n - m**2
    m3 = s3 / n - 3 * m * s2 / n + 2 * m**3
    m4 = s4 / n - 4 * m * s3 / n + 6 * m**2 * s2 / n - 3 * m**4
    var = m2 * n / (n - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        g1 = m3 / m2**1.5
        g2 = m4 / m2**2 - 3.0
    skew = g1 * np.sqrt(n * (n - 1.0)) / (n - 2.0)
    kurt = (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0)
    return var, skew, kurt


def moment_stats(samples, min_count=100):
    """Mean, variance, skewness and excess kurtosis of a 1-D sample.

    Constant samples are flagged (``degenerate``) and get zero variance and
    undefined (``None``) shape statistics.
    """
    x = np.asarray(samples, dtype=float).ravel()
    n = x.size
    if n < min_count:
        raise ValueError(f"need at least {min_count} samples, got {n}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")
    mean = float(x.mean())
    y = x - mean
    if np.all(y == 0):
        return MomentStats(n, mean, 0.0, None, None, 0.0, 0.0, None, None, True)
    p = [np.sum(y**k) for k in (1, 2, 3, 4)]
    var, skew, kurt = _moments_from_sums(*p, n)
    loo = _moments_from_sums(p[0] - y, p[1] - y**2, p[2] - y**3, p[3] - y**4, n - 1)
    jack = [float(np.sqrt((n - 1) / n * np.sum((t - t.mean()) ** 2))) for t in loo]
    return MomentStats(n, mean, float(var), float(skew), float(kurt),
                       float(np.sqrt(var / n)), jack[0], jack[1], jack[2])


# ---------------------------------------------------------------- tangent side

def tangent_covariance(tau, tau_prime, k2, H):
    """``-K_2 sum_ij w_i w'_j |x_i - x'_j|^(2H)`` for zero-mass tangent measures."""
    if tau.n != tau_prime.n:
        raise ValueError("tangent measures live in different dimensions")
    d = np.linalg.norm(tau.vectors[:, None, :] - tau_prime.vectors[None, :, :], axis=-1)
    return float(-k2 * tau.weights @ d ** (2.0 * H) @ tau_prime.weights)


def dilate_to_sphere(base, tau, eps, delta=DEFAULT_CHART_RADIUS):
    """Push ``tau`` dilated by ``eps`` through the exponential chart at ``base``."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    b = _coords(base)
    if tau.n != b.size - 1:
        raise ValueError("tangent measure and base point dimensions differ")
    y = eps * tau.vectors
    if np.any(np.linalg.norm(y, axis=1) >= delta):
        raise ValueError(f"an atom leaves the chart: eps * |x| must stay below {delta}")
    pts = np.atleast_2d(exp_map(b, y, delta))
    return DiscreteSphereMeasure(pts, tau.weights)


def chart_escape_mass(tau, eps, delta=DEFAULT_CHART_RADIUS):
    """Total variation of ``tau`` outside the ball ``|x| < delta / eps``."""
    outside = np.linalg.norm(tau.vectors, axis=1) >= delta / eps
    return float(np.abs(tau.weights[outside]).sum())


@dataclass
class LassReport:
    eps: np.ndarray
    ratios: np.ndarray
    target: float
    rel_errors: np.ndarray

    def tail_decreasing(self, count=3):
        """Relative errors decrease along the last ``count`` grid points."""
        e = self.rel_errors[-count:]
        return bool(np.all(np.diff(e) < 0))

    def as_dict(self):
        return {"eps": self.eps.tolist(), "ratios": self.ratios.tolist(),
                "target": self.target, "rel_errors": self.rel_errors.tolist()}


def lass_experiment(spec, tau, eps_grid=DEFAULT_EPS_GRID, base=None):
    """Compare ``var(W_H(mu_eps)) / eps^(2H)`` with the tangent-field variance."""
    if not 0.0 < spec.H < 0.5:
        raise ValueError("the lass limit is defined for 0 < H < 1/2")
    eps = np.asarray(eps_grid, dtype=float)
    if np.any(np.diff(eps) >= 0):
        raise ValueError("eps grid must be strictly decreasing")
    base = north_pole(spec.n) if base is None else base
    target = tangent_covariance(tau, tau, k2_constant(spec.n, spec.H), spec.H)
    ratios = np.array([quadratic_form(spec, dilate_to_sphere(base, tau, e)) / e ** (2 * spec.H)
                       for e in eps])
    if not np.all(np.isfinite(ratios)):
        raise FloatingPointError("non-finite lass ratio")
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(target != 0, np.abs(ratios / target - 1.0), np.abs(ratios))
    return LassReport(eps, ratios, target, rel)


def tangent_increment_covariance(vectors, H, k2):
    """Covariance of ``T_H(delta_x - delta_0)`` over the rows ``x`` of ``vectors``."""
    x = np.atleast_2d(np.asarray(vectors, dtype=float))
    r = np.linalg.norm(x, axis=1) ** (2 * H)
    d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1) ** (2 * H)
    return k2 * (r[:, None] + r[None, :] - d)


def sample_tangent_field(vectors, H, k2, replicates, rng):
    """Exact draws of ``T_H(delta_x - delta_0)``, shape (replicates, len(vectors))."""
    f = psd_factorize(tangent_increment_covariance(vectors, H, k2))
    return rng.standard_normal((replicates, f.shape[1])) @ f.T


# ---------------------------------------------------------------- sphere side

def sample_limit_field(spec, points, replicates, rng, basepoint=None):
    """Exact Gaussian draws of the limit field at ``points``."""
    f = psd_factorize(covariance_matrix(spec, points, basepoint))
    return rng.standard_normal((replicates, f.shape[1])) @ f.T


@dataclass
class GaussianityReport:
    rho: float
    theta: float
    normalizer: float
    replicates: int
    sampler: str
    seed: int
    stats: list
    limit_variance: np.ndarray
    exact_variance: np.ndarray
    exact_skewness: np.ndarray = None
    exact_kurtosis: np.ndarray = None
    covariance: np.ndarray = None
    limit_covariance: np.ndarray = None
    samples: np.ndarray = field(default=None, repr=False)

    def variance_z(self):
        """(empirical - limit) / standard error, per measure."""
        return np.array([(s.variance - t) / s.se_variance if s.se_variance > 0 else np.inf
                         for s, t in zip(self.stats, self.limit_variance)])

    def as_dict(self):
        def arr(a):
            return None if a is None else np.asarray(a).tolist()
        return {"rho": self.rho, "theta": self.theta, "normalizer": self.normalizer,
                "replicates": self.replicates, "sampler": self.sampler, "seed": self.seed,
                "stats": [s.as_dict() for s in self.stats],
                "limit_variance": arr(self.limit_variance),
                "exact_variance": arr(self.exact_variance),
                "exact_skewness": arr(self.exact_skewness),
                "exact_kurtosis": arr(self.exact_kurtosis),
                "covariance": arr(self.covariance),
                "limit_covariance": arr(self.limit_covariance)}


def default_increments(m):
    """Weights of ``delta_{z_i} - delta_{z_0}``, i = 1..m-1 (or ``delta_{z_0}`` if m = 1)."""
    if m == 1:
        return np.ones((1, 1))
    w = np.zeros((m - 1, m))
    w[:, 0] = -1.0
    w[np.arange(m - 1), np.arange(1, m)] = 1.0
    return w


def _pattern_supported(spec, m):
    return spec.n == 1 or m <= 2


def simulate_fields(spec, points, weights, replicates, seed, sampler="auto",
                    chunk=DEFAULT_CHUNK, workers=1):
    """Raw draws of ``X_rho(mu_k)``; returns (samples, sampler used)."""
    pts = np.atleast_2d(np.array([_coords(p) for p in points], dtype=float))
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    if w.shape[1] != pts.shape[0]:
        raise ValueError("weights must have one column per point")
    if sampler == "auto":
        sampler = "pattern" if _pattern_supported(spec, pts.shape[0]) else "balls"
    if sampler == "pattern":
        if not _pattern_supported(spec, pts.shape[0]):
            raise ValueError("the pattern sampler needs n = 1 or at most two points")
        coverage_pattern_masses(spec, pts)  # fail early on bad input

        def task(rng, k):
            return sample_pattern_fields(spec, pts, w, k, rng)
    elif sampler == "balls":
        measures = [DiscreteSphereMeasure(pts, row) for row in w]

        def task(rng, k):
            out = np.empty((k, len(measures)))
            for i in range(k):
                cfg = sample_covering_balls(spec, pts, rng)
                out[i] = [field_value(cfg, mu) for mu in measures]
            return out
    else:
        raise ValueError(f"unknown sampler {sampler!r}")
    return run_chunked(task, replicates, seed, chunk, workers), sampler


def scaling_experiment(spec, points, replicates, seed, weights=None, sampler="auto",
                       chunk=DEFAULT_CHUNK, workers=1, keep_samples=False):
    """Simulate normalised ``X_rho(mu)`` and compare with the Gaussian limit.

    ``weights`` (k, m) defines k measures on the m points; by default the
    increments ``delta_{z_i} - delta_{z_0}``.  Measures with nonzero mass are
    centred with their exact mean.
    """
    pts = np.atleast_2d(np.array([_coords(p) for p in points], dtype=float))
    w = default_increments(pts.shape[0]) if weights is None else np.atleast_2d(
        np.asarray(weights, dtype=float))
    measures = [DiscreteSphereMeasure(pts, row) for row in w]
    kspec = KernelSpec(spec.n, spec.H)
    for mu in measures:
        if kspec.centered_only and not mu.is_centered():
            raise ValueError("for 2H > n only zero-mass measures have a limit")
    raw, used = simulate_fields(spec, pts, w, replicates, seed, sampler, chunk, workers)
    norm = normalizer(spec)
    exact = [moments_exact(spec, mu) for mu in measures]
    centred = (raw - np.array([m for m, _ in exact])) / norm
    stats = [moment_stats(centred[:, j]) for j in range(len(measures))]
    limit_cov = np.array([[quadratic_form(kspec, a, b) for b in measures] for a in measures])
    exact_var = np.array([v for _, v in exact]) / norm**2
    ex_skew = ex_kurt = None
    if _pattern_supported(spec, pts.shape[0]):
        cum = [pattern_cumulants(spec, pts, row) for row in w]
        ex_skew = np.array([c[3] / c[2] ** 1.5 if c[2] > 0 else 0.0 for c in cum])
        ex_kurt = np.array([c[4] / c[2] ** 2 if c[2] > 0 else 0.0 for c in cum])
    cov = np.atleast_2d(np.cov(centred, rowvar=False))
    return GaussianityReport(
        spec.rho, spec.theta, norm, replicates, used, int(seed), stats,
        np.diag(limit_cov).copy(), exact_var, ex_skew, ex_kurt, cov, limit_cov,
        centred if keep_samples else None)
