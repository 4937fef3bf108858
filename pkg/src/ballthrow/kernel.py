"""The limit covariance kernel K_H and quantities built from it.

With ``alpha = 2H - n - 1`` the kernel is

    K_H(u) = int_0^pi psi(u, r) r^alpha dr + area(S^n) pi^(2H-n) / (n - 2H),

valid in both regimes (for 2H > n the constant absorbs the subtraction of
``area(S^n)`` on (0, pi) and there is no tail).  We never evaluate it as a
difference of large numbers: ``K_H(u) = K_H(0) - G(u)`` where the increment
``G(u) = int_0^pi (phi(r) - psi(u, r)) r^alpha dr`` is integrated directly
from the cap-overlap deficit.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import betainc

from .geometry import pairwise_distances, sphere_area, unit_ball_volume, cap_area_ratio
from .measures import DiscreteSphereMeasure
from .overlap import deficit_circle, deficit_fixed
from .quadrature import QuadratureError, gauss_jacobi_power, panel_rule

_ORDER = 20
_CHECK_ORDER = 28


@dataclass(frozen=True)
class KernelSpec:
    """Sphere dimension ``n``, index ``H`` (2H != n) and relative tolerance."""

    n: int
    H: float
    tol: float = 1e-9

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.H > 0:
            raise ValueError("H must be positive")
        if 2.0 * self.H == self.n:
            raise ValueError(f"2H = n is excluded (n={self.n}, H={self.H})")
        if not self.tol > 0:
            raise ValueError("tol must be positive")

    @property
    def alpha(self):
        """Exponent of the radius weight ``r**alpha``."""
        return 2.0 * self.H - self.n - 1.0

    @property
    def centered_only(self):
        """True when only zero-mass measures are admissible (2H > n)."""
        return 2.0 * self.H > self.n


def cap_power_moment(n, H, a, b):
    """``int_a^b cap_area(n, r) r^(2H-n-1) dr`` for ``0 <= a <= b <= pi``."""
    if b <= a:
        return 0.0

    def g(r):
        return cap_area_ratio(n, r)

    hi = gauss_jacobi_power(g, b, 2.0 * H - 1.0)
    lo = gauss_jacobi_power(g, a, 2.0 * H - 1.0) if a > 0 else 0.0
    return hi - lo


def _radius_breaks(u, a, b):
    """Panel edges on [max(a, u/2), b]: geometric near u/2 plus the kinks."""
    start = max(a, 0.5 * u)
    if b <= start:
        return np.array([start, start])
    edges = [start, b, 0.5 * np.pi, np.pi - 0.5 * u]
    if u > 0:
        edges.extend(0.5 * u * 2.0 ** np.arange(1, 64))
    edges = np.array(edges)
    edges = edges[(edges >= start) & (edges <= b)]
    return np.unique(edges)


def _deficit_band(n, H, u, a, b, order):
    if b <= a or u == 0.0:
        return 0.0
    alpha = 2.0 * H - n - 1.0
    total = cap_power_moment(n, H, min(a, 0.5 * u), min(b, 0.5 * u))
    breaks = _radius_breaks(u, a, b)
    if breaks[-1] > breaks[0]:
        r, w = panel_rule(breaks, order)
        if n == 1:
            d = deficit_circle(u, r)
        else:
            d = deficit_fixed(n, np.full_like(r, u), r, order)
        total += float(np.sum(w * d * r**alpha))
    return total


def deficit_power_moment(n, H, u, a=0.0, b=np.pi, order=_ORDER):
    """``int_a^b (phi(r) - psi(u, r)) r^(2H-n-1) dr`` over ``[a, b] ⊂ [0, pi]``."""
    return _deficit_band(n, H, float(u), float(a), float(min(b, np.pi)), order)


def overlap_power_moment(n, H, u, a, b):
    """``int_a^b psi(u, r) r^(2H-n-1) dr`` over ``[a, b] ⊂ (0, pi]``."""
    return cap_power_moment(n, H, a, b) - deficit_power_moment(n, H, u, a, b)


def kernel_at_zero(spec):
    """``K_H(0)``."""
    n, H = spec.n, spec.H
    return cap_power_moment(n, H, 0.0, np.pi) + sphere_area(n) * np.pi ** (2 * H - n) / (n - 2 * H)


def increment_with_error(spec, u):
    """``G(u) = K_H(0) - K_H(u)`` together with a quadrature error estimate."""
    u = float(u)
    if not 0.0 <= u <= np.pi:
        raise ValueError("u must lie in [0, pi]")
    g = _deficit_band(spec.n, spec.H, u, 0.0, np.pi, _CHECK_ORDER)
    g_low = _deficit_band(spec.n, spec.H, u, 0.0, np.pi, _ORDER)
    return g, abs(g - g_low)


def kernel_increment(spec, u):
    """``K_H(0) - K_H(u)``, vectorised over ``u``; raises on poor accuracy."""
    u_arr = np.asarray(u, dtype=float)
    flat = u_arr.ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    scale = abs(kernel_at_zero(spec))
    vals = np.empty(uniq.size)
    for i, ui in enumerate(uniq):
        g, err = increment_with_error(spec, ui)
        if err > spec.tol * max(abs(g), 1e-3 * scale):
            raise QuadratureError(f"kernel increment at u={ui!r}: error {err:.3g} too large")
        vals[i] = g
    out = vals[inv].reshape(u_arr.shape)
    return float(out) if out.ndim == 0 else out


def kernel_value(spec, u):
    """``K_H(u)`` for ``u`` in ``[0, pi]`` (vectorised)."""
    return kernel_at_zero(spec) - kernel_increment(spec, u)


def increment_variance(spec, u):
    """Variance of ``W_H(z) - W_H(z')`` at distance ``u``: ``2 (K_H(0) - K_H(u))``."""
    return 2.0 * kernel_increment(spec, u)


def kernel_closed_form_circle(H, u):
    """Closed-form ``K_H`` on the circle for ``0 < H < 1/2``.

    ``(2 (2 pi)^(2H) - u^(2H) - (2 pi - u)^(2H)) / (H (1 - 2H) 2^(2H))``.
    """
    if not 0.0 < H < 0.5:
        raise ValueError("closed form needs 0 < H < 1/2")
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u > np.pi):
        raise ValueError("u must lie in [0, pi]")
    c = 1.0 / (H * (1.0 - 2.0 * H) * 2.0 ** (2 * H))
    two_pi = 2.0 * np.pi
    out = c * (2.0 * two_pi ** (2 * H) - u ** (2 * H) - (two_pi - u) ** (2 * H))
    return float(out) if out.ndim == 0 else out


def kernel_circle_2h_variant(H, u):
    """Variant of the circle formula with ``2 (2H)^(2H)`` as leading term; disagrees with quadrature."""
    u = np.asarray(u, dtype=float)
    c = 1.0 / (H * (1.0 - 2.0 * H) * 2.0 ** (2 * H))
    return c * (2.0 * (2.0 * H) ** (2 * H) - u ** (2 * H) - (2.0 * np.pi - u) ** (2 * H))


def _check_measure(spec, mu):
    if mu.n != spec.n:
        raise ValueError(f"measure lives on S^{mu.n}, kernel on S^{spec.n}")
    if spec.centered_only and not mu.is_centered():
        raise ValueError("for 2H > n only measures with zero total mass are admissible")


def quadratic_form(spec, mu, nu=None):
    """``sum_ij mu_i nu_j K_H(d(z_i, z'_j))``, the covariance of ``W_H(mu)`` and ``W_H(nu)``."""
    nu = mu if nu is None else nu
    _check_measure(spec, mu)
    _check_measure(spec, nu)
    if len(mu) == 0 or len(nu) == 0:
        return 0.0
    d = pairwise_distances(mu.points, nu.points)
    g = kernel_increment(spec, d)
    # K = K(0) - G; the constant drops out when either measure is centred.
    value = -mu.weights @ g @ nu.weights
    if not (mu.is_centered() and nu.is_centered()):
        value += kernel_at_zero(spec) * mu.total_mass * nu.total_mass
    return float(value)


def covariance_matrix(spec, points, basepoint=None):
    """Covariance of the limit field at ``points``.

    For 2H < n the stationary field, ``K_H(d(z, z'))``; for 2H > n the field
    pinned at ``basepoint``, ``K(d(z,z')) - K(d(z,z0)) - K(d(z',z0)) + K(0)``.
    """
    pts = np.array([p.coords if hasattr(p, "coords") else p for p in points], dtype=float)
    if spec.centered_only:
        if basepoint is None:
            raise ValueError("2H > n: a base point z0 is required")
        z0 = basepoint.coords if hasattr(basepoint, "coords") else np.asarray(basepoint, float)
        g = kernel_increment(spec, pairwise_distances(pts))
        g0 = kernel_increment(spec, pairwise_distances(pts, z0[None, :])[:, 0])
        cov = g0[:, None] + g0[None, :] - g
    else:
        if basepoint is not None:
            raise ValueError("2H < n: the stationary field takes no base point")
        cov = kernel_at_zero(spec) - kernel_increment(spec, pairwise_distances(pts))
    return 0.5 * (cov + cov.T)


def psd_factorize(matrix, tol=1e-10):
    """Factor ``F`` with ``F @ F.T ≈ matrix`` from the eigendecomposition.

    Eigenvalues below ``tol * ||matrix||`` are clipped to zero; a clearly
    negative eigenvalue means the matrix is not a covariance and raises.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.abs(a).max())):
        raise ValueError("matrix must be symmetric")
    lam, vec = np.linalg.eigh(0.5 * (a + a.T))
    norm = np.abs(lam).max() if lam.size else 0.0
    if lam.size and lam.min() < -tol * norm:
        raise np.linalg.LinAlgError(
            f"matrix is not positive semidefinite: eigenvalue {lam.min():.3g} (norm {norm:.3g})")
    lam = np.where(lam < tol * norm, 0.0, lam)
    return vec * np.sqrt(lam)


def lens_deficit_volume(n, r):
    """``vol(B(0, r)) - vol(B(0, r) ∩ B(v, r))`` in R^n with ``|v| = 1``."""
    r = np.asarray(r, dtype=float)
    vn = unit_ball_volume(n)
    safe = np.maximum(r, 0.5)
    tail = vn * safe**n * betainc(0.5, 0.5 * (n + 1), 1.0 / (4.0 * safe**2))
    out = np.where(r <= 0.5, vn * r**n, tail)
    return float(out) if out.ndim == 0 else out


def k2_constant(n, H):
    """Small-distance coefficient ``K_2`` with ``K_H(u) = K_1 - K_2 u^(2H) + o(u^(2H))``.

    ``int_0^inf L(r) r^(2H-n-1) dr`` with ``L`` the Euclidean ball/lens
    deficit of :func:`lens_deficit_volume` (the exponential chart has unit
    density at its origin).
    """
    if not 0.0 < H < 0.5:
        raise ValueError("K_2 is defined for 0 < H < 1/2")
    vn = unit_ball_volume(n)
    inner = vn * 0.5 ** (2 * H) / (2 * H)
    b = 0.5 * (n + 1)

    # r = 1/(2s) on (1/2, inf); betainc(1/2, b, s^2) / s is even and smooth.
    def h(s):
        return vn * 2.0 ** (1 - 2 * H) * betainc(0.5, b, s**2) / (2.0 * s)

    return inner + gauss_jacobi_power(h, 1.0, -2.0 * H, m=64)


def k2_monte_carlo(n, H, samples, rng, chunk=1_000_000):
    """Monte Carlo estimate of ``K_2`` and its standard error.

    Integrates over r analytically, which leaves
    ``int_{|y| < |v - y|} (|y|^(2H-n) - |v - y|^(2H-n)) / (n - 2H) dy``;
    ``y`` is drawn with a radial density matching the integrand at 0 and
    at infinity so the weights stay bounded.
    """
    if not 0.0 < H < 0.5:
        raise ValueError("K_2 is defined for 0 < H < 1/2")
    a1 = 1.0 / (2 * H)          # int_0^1 t^(2H-1)
    a2 = 1.0 / (1 - 2 * H)      # int_1^inf t^(2H-2)
    p_inner = a1 / (a1 + a2)
    sigma_dir = sphere_area(n - 1) if n > 1 else 2.0
    v = np.zeros(n)
    v[0] = 1.0
    total = 0.0
    total_sq = 0.0
    left = samples
    while left > 0:
        k = min(chunk, left)
        inner = rng.random(k) < p_inner
        u = rng.random(k)
        t = np.where(inner, u ** (1.0 / (2 * H)), (1.0 - u) ** (-1.0 / (1 - 2 * H)))
        direction = rng.standard_normal((k, n))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        y = t[:, None] * direction
        dv = np.linalg.norm(y - v, axis=1)
        f = np.where(t < dv, (t ** (2 * H - n) - dv ** (2 * H - n)) / (n - 2 * H), 0.0)
        radial = np.where(t <= 1.0, t ** (2 * H - 1), t ** (2 * H - 2)) / (a1 + a2)
        q = radial / (sigma_dir * t ** (n - 1))
        w = f / q
        total += w.sum()
        total_sq += (w**2).sum()
        left -= k
    mean = total / samples
    var = total_sq / samples - mean**2
    return mean, float(np.sqrt(var / samples))


@dataclass
class AsymptoteFit:
    exponent: float
    k2: float
    k1: float
    u_grid: np.ndarray = field(repr=False)
    increments: np.ndarray = field(repr=False)


def asymptote_fit(spec, u_grid):
    """Least-squares fit of ``log(K_1 - K_H(u))`` against ``log u``.

    The slope estimates the small-distance exponent (2H when H < 1/2, 1 when
    H > 1/2) and ``exp(intercept)`` the coefficient ``K_2``.
    """
    u = np.asarray(u_grid, dtype=float)
    if np.any(u <= 0) or np.any(u > 0.1):
        raise ValueError("asymptote grid must lie in (0, 0.1]")
    g = kernel_increment(spec, u)
    if np.any(g <= 0):
        raise ValueError("K_H(0) - K_H(u) must be positive on the grid")
    slope, intercept = np.polyfit(np.log(u), np.log(g), 1)
    return AsymptoteFit(float(slope), float(np.exp(intercept)), kernel_at_zero(spec), u, g)


class KernelTable:
    """Memoised ``K_H`` on a grid with monotone interpolation.

    The grid is uniform in ``s = u**p`` with ``p = min(2H, 1)`` so the cusp
    of the kernel at the origin is resolved.
    """

    def __init__(self, spec, size=2048):
        self.spec = spec
        self.power = min(2.0 * spec.H, 1.0)
        s = np.linspace(0.0, np.pi**self.power, size)
        self.u_grid = s ** (1.0 / self.power)
        self.u_grid[-1] = np.pi
        self.k0 = kernel_at_zero(spec)
        self._interp = PchipInterpolator(s, kernel_increment(spec, self.u_grid))

    def increment(self, u):
        return self._interp(np.asarray(u, dtype=float) ** self.power)

    def __call__(self, u):
        return self.k0 - self.increment(u)


def measure_from_points(points, weights):
    """Small convenience wrapper used by the CLI and experiments."""
    return DiscreteSphereMeasure(np.asarray(points, float), np.asarray(weights, float))
