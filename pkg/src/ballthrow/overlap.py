"""Surface measure of the intersection of two equal geodesic balls.

``psi(n, u, r)`` is the area of ``B(z, r) ∩ B(z', r)`` on the unit n-sphere
when ``d(z, z') = u``.  On the circle it is piecewise linear.  For n >= 2 we
slice the sphere by the hyperplanes ``x_{n+1} = sin(beta)``: each slice is a
copy of S^{n-1} of radius ``cos(beta)``, the two caps cut it in caps of
angular radius ``arccos(cos r / cos beta)`` whose centres are still ``u``
apart, and the slice carries the surface element ``cos^{n-1}(beta) dbeta``
(after rescaling S^{n-1}(cos beta) to the unit sphere).  This gives

    psi_n(u, r) = 2 int_0^{pi/2} cos^{n-1}(beta)
                  psi_{n-1}(u, arccos(cos r / cos beta)) dbeta,

with the arccos argument clamped to [-1, 1] (slices that miss the cap
contribute 0, slices entirely inside it contribute the full S^{n-1}).

The same recursion, applied to the deficit ``phi(r) - psi(u, r)``, gives a
cancellation-free route to small differences; the kernel code relies on it.
"""

import numpy as np

from .geometry import cap_area, sphere_area
from .quadrature import adaptive_gk, panel_rule

DEFAULT_TOL = {2: 1e-8, 3: 1e-6}
_FIXED_ORDER = 20


def _check_u(u):
    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u > np.pi):
        raise ValueError("centre distance u must lie in [0, pi]")
    return u


def psi_circle(u, r):
    """Closed-form overlap of two arcs of half-length ``r`` at distance ``u``."""
    u = _check_u(u)
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be nonnegative")
    out = np.where(
        r < 0.5 * u, 0.0,
        np.where(r <= np.pi - 0.5 * u, 2.0 * r - u,
                 np.where(r <= np.pi, 4.0 * r - 2.0 * np.pi, 2.0 * np.pi)))
    return float(out) if out.ndim == 0 else out


def deficit_circle(u, r):
    """``cap_area(1, r) - psi_circle(u, r)`` evaluated without cancellation."""
    u = np.asarray(u, dtype=float)
    r = np.asarray(r, dtype=float)
    out = np.clip(np.minimum(np.minimum(2.0 * r, u), 2.0 * np.pi - 2.0 * r), 0.0, None)
    return float(out) if out.ndim == 0 else out


def _slice_breaks(u, r):
    """Breakpoints in beta on [0, pi/2] for the slicing integral, shape (N, 4).

    One kink (where the slice radius crosses u/2 or pi - u/2) and one
    square-root point (where the slice radius reaches 0 or pi).  Both are
    located with half-angle products so tiny ``u`` keeps full accuracy.
    """
    u = np.asarray(u, dtype=float)
    r = np.asarray(r, dtype=float)
    rr = np.minimum(r, np.pi - r)
    h = 0.5 * u
    half = 0.5 * np.pi
    # cos(beta) = |cos r| / cos(u/2): sin(beta)^2 cos(u/2)^2 = (cu - c)(cu + c)
    minus = 2.0 * np.sin(0.5 * (rr + h)) * np.sin(0.5 * (rr - h))
    plus = 2.0 * np.cos(0.5 * (rr + h)) * np.cos(0.5 * (rr - h))
    kink = np.where(rr > h, np.arctan2(np.sqrt(np.clip(minus * plus, 0.0, None)), np.cos(rr)), half)
    edge = np.broadcast_to(rr, kink.shape)
    breaks = np.stack([np.zeros_like(kink), kink, edge, np.full_like(kink, half)], axis=-1)
    return np.sort(np.clip(breaks, 0.0, half), axis=-1)


def _slice_radius(r, beta):
    """``arccos(clip(cos r / cos beta))`` via ``tan^2(rho/2) = A / B``."""
    a = np.sin(0.5 * (r + beta)) * np.sin(0.5 * (r - beta))
    b = np.cos(0.5 * (r + beta)) * np.cos(0.5 * (r - beta))
    return 2.0 * np.arctan2(np.sqrt(np.clip(a, 0.0, None)), np.sqrt(np.clip(b, 0.0, None)))


def _overlap_fixed(n, u, r, m, deficit):
    """Batched fixed-rule evaluation; ``u`` and ``r`` are flat arrays."""
    if n == 1:
        return deficit_circle(u, r) if deficit else psi_circle(u, np.minimum(r, 2 * np.pi))
    full = r >= np.pi
    rc = np.minimum(r, np.pi)
    beta, w = panel_rule(_slice_breaks(u, rc), m)
    rho = _slice_radius(rc[:, None], beta)
    uu = np.broadcast_to(u[:, None], rho.shape)
    inner = _overlap_fixed(n - 1, uu.ravel(), rho.ravel(), m, deficit).reshape(rho.shape)
    val = 2.0 * np.sum(w * np.cos(beta) ** (n - 1) * inner, axis=-1)
    if deficit:
        return np.where(full, 0.0, val)
    return np.where(full, sphere_area(n), val)


def psi_fixed(n, u, r, order=_FIXED_ORDER):
    """Vectorised cap overlap with a fixed composite rule (no error control).

    Accurate to near machine precision for the default order; used where
    many evaluations are needed (kernel quadrature).  ``psi`` is the
    tolerance-controlled reference.
    """
    u, r = np.broadcast_arrays(_check_u(u), np.asarray(r, dtype=float))
    out = _overlap_fixed(n, u.ravel(), r.ravel(), order, deficit=False).reshape(u.shape)
    return float(out) if out.ndim == 0 else out


def deficit_fixed(n, u, r, order=_FIXED_ORDER):
    """Vectorised ``cap_area(n, r) - psi(n, u, r)`` with a fixed rule."""
    u, r = np.broadcast_arrays(_check_u(u), np.asarray(r, dtype=float))
    out = _overlap_fixed(n, u.ravel(), r.ravel(), order, deficit=True).reshape(u.shape)
    return float(out) if out.ndim == 0 else out


def psi_with_error(n, u, r, tol=None):
    """Tolerance-controlled cap overlap; returns ``(value, error_estimate)``.

    Raises :class:`~ballthrow.quadrature.QuadratureError` if ``tol`` cannot
    be met.
    """
    u = float(_check_u(u))
    r = float(r)
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return psi_circle(u, r), 0.0
    sigma = sphere_area(n)
    if r >= np.pi:
        return sigma, 0.0
    if r < 0.5 * u or r == 0.0:
        return 0.0, 0.0
    if tol is None:
        tol = DEFAULT_TOL.get(n, 1e-6)
    if tol <= 0:
        raise ValueError("tol must be positive")

    if n == 2:
        def inner(s):
            return psi_circle(u, s)
    else:
        inner_tol = tol / (2.0 * np.pi)

        def inner(s):
            return np.array([psi_with_error(n - 1, u, si, inner_tol)[0] for si in s])

    def integrand(beta):
        return 2.0 * np.cos(beta) ** (n - 1) * inner(_slice_radius(r, beta))

    val, err = adaptive_gk(integrand, _slice_breaks(np.array(u), np.array(r)), tol=tol)
    upper = min(sigma, cap_area(n, r))
    return float(np.clip(val, 0.0, upper)), err


def psi(n, u, r, tol=None):
    """Area of the intersection of two radius-``r`` caps at distance ``u``."""
    return psi_with_error(n, u, r, tol)[0]


def psi_h(n, H, u, r, tol=None):
    """Regime-shifted overlap: ``psi`` if 2H < n, ``psi - area(S^n)`` if 2H > n."""
    if 2.0 * H == n:
        raise ValueError("2H = n is excluded")
    value = psi(n, u, r, tol)
    if 2.0 * H > n:
        value -= sphere_area(n)
    return value


def psi_mc(n, u, r, samples, rng, chunk=1_000_000):
    """Monte Carlo estimate of the cap overlap and its binomial standard error."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    u = float(_check_u(u))
    sigma = sphere_area(n)
    if r >= np.pi:
        return sigma, 0.0
    a = np.zeros(n + 1)
    a[0] = 1.0
    b = np.zeros(n + 1)
    b[0], b[1] = np.cos(u), np.sin(u)
    cr = np.cos(r)
    hits = 0
    left = samples
    while left > 0:
        k = min(chunk, left)
        x = rng.standard_normal((k, n + 1))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        hits += int(np.count_nonzero((x @ a > cr) & (x @ b > cr)))
        left -= k
    p = hits / samples
    return sigma * p, sigma * np.sqrt(p * (1.0 - p) / samples)
