import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ballthrow.geometry import cap_area, sphere_area
from ballthrow.overlap import (
    deficit_circle, deficit_fixed, psi, psi_circle, psi_fixed, psi_h, psi_mc, psi_with_error,
)
from oracles import psi_latitude


def test_circle_branches():
    u = 1.0
    assert psi_circle(u, 0.3) == 0.0
    assert psi_circle(u, 1.0) == pytest.approx(1.0)
    assert psi_circle(u, np.pi - 0.2) == pytest.approx(4 * (np.pi - 0.2) - 2 * np.pi)
    assert psi_circle(u, 4.0) == pytest.approx(2 * np.pi)
    assert psi_circle(0.0, 1.0) == pytest.approx(2.0)


def test_circle_deficit_consistent():
    u = np.linspace(0, np.pi, 7)[:, None]
    r = np.linspace(0, np.pi, 11)[None, :]
    assert np.allclose(deficit_circle(u, r), np.minimum(2 * r, 2 * np.pi) - psi_circle(u, r))


def test_rejects_bad_distance():
    with pytest.raises(ValueError):
        psi_circle(-0.1, 1.0)
    with pytest.raises(ValueError):
        psi(2, 3.5, 1.0)


@pytest.mark.parametrize("r", [0.3, 1.0, 2.5])
def test_two_sphere_coincident_caps(r):
    assert psi(2, 0.0, r) == pytest.approx(2 * np.pi * (1 - np.cos(r)), abs=1e-10)


def test_reference_value_two_sphere():
    assert psi(2, 0.0, 1.0) == pytest.approx(2.888366, abs=1e-6)


def test_orthogonal_hemispheres_form_a_lune():
    assert psi(2, np.pi / 2, np.pi / 2) == pytest.approx(np.pi, abs=1e-10)
    # on S^3 a quarter of the sphere
    assert psi(3, np.pi / 2, np.pi / 2, tol=1e-10) == pytest.approx(np.pi**2 / 2, abs=1e-8)


@pytest.mark.parametrize("r", [0.4, 1.3, 2.8])
def test_three_sphere_coincident_caps(r):
    assert psi(3, 0.0, r) == pytest.approx(2 * np.pi * (r - np.sin(r) * np.cos(r)), abs=1e-7)


@pytest.mark.parametrize("n,u,r", [
    (2, 1.0, 1.2), (2, 0.3, 2.9), (2, 2.9, 1.6), (2, 0.05, 0.03), (3, 0.8, 0.9),
    (3, 2.5, 2.0), (3, 1.0, 3.0), (4, 1.0, 1.5),
])
def test_matches_latitude_oracle(n, u, r):
    assert psi(n, u, r, tol=1e-10) == pytest.approx(psi_latitude(n, u, r), abs=1e-9)


def test_fixed_rule_matches_adaptive():
    u = np.array([0.1, 0.7, 2.0, 3.0])
    r = np.array([0.06, 1.1, 1.5, 2.9])
    ref = np.array([psi(2, a, b, tol=1e-12) for a, b in zip(u, r)])
    assert np.allclose(psi_fixed(2, u, r), ref, atol=1e-11)
    assert np.allclose(deficit_fixed(2, u, r), cap_area(2, r) - ref, atol=1e-11)


def test_small_distance_deficit_is_relatively_accurate():
    # phi - psi ~ u * (perimeter-type term) as u -> 0; no cancellation
    d1 = deficit_fixed(2, 1e-6, 1.0)
    d2 = deficit_fixed(2, 2e-6, 1.0)
    assert d2 / d1 == pytest.approx(2.0, rel=1e-5)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 3), u=st.floats(0.0, np.pi), r=st.floats(0.0, 3.5))
def test_bounds_and_symmetry(n, u, r):
    v = psi(n, u, r)
    assert -1e-12 <= v <= min(cap_area(n, r), sphere_area(n)) + 1e-9


@settings(max_examples=30, deadline=None)
@given(u=st.floats(0.0, np.pi), r1=st.floats(0.0, np.pi), r2=st.floats(0.0, np.pi))
def test_monotone_in_radius(u, r1, r2):
    lo, hi = sorted((r1, r2))
    assert psi(2, u, lo) <= psi(2, u, hi) + 1e-9


@settings(max_examples=30, deadline=None)
@given(u1=st.floats(0.0, np.pi), u2=st.floats(0.0, np.pi), r=st.floats(0.0, np.pi))
def test_monotone_in_distance(u1, u2, r):
    lo, hi = sorted((u1, u2))
    assert psi(2, hi, r) <= psi(2, lo, r) + 1e-9


def test_whole_sphere_radius():
    assert psi(2, 1.0, 3.5) == pytest.approx(4 * np.pi)
    assert psi_with_error(3, 2.0, np.pi) == (sphere_area(3), 0.0)


def test_regime_shift():
    assert psi_h(2, 0.25, 1.0, 1.0) == pytest.approx(psi(2, 1.0, 1.0))
    assert psi_h(2, 1.5, 1.0, 1.0) == pytest.approx(psi(2, 1.0, 1.0) - 4 * np.pi)
    with pytest.raises(ValueError):
        psi_h(2, 1.0, 1.0, 1.0)


def test_monte_carlo_estimator(rng):
    est, se = psi_mc(2, 1.0, 1.2, 200_000, rng)
    assert abs(est - psi(2, 1.0, 1.2)) < 4 * se
    est, se = psi_mc(2, 1.0, 3.3, 10, rng)
    assert est == pytest.approx(4 * np.pi) and se == 0.0
    with pytest.raises(ValueError):
        psi_mc(2, 1.0, 1.0, 0, rng)
