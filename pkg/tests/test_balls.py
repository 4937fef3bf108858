import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from ballthrow.balls import (
    BallConfiguration, ModelSpec, RadiusLaw, coverage_pattern_masses, field_value,
    moments_exact, normalizer, pattern_cumulants, sample_covering_balls, sample_pattern_fields,
    sample_truncated_global, scaled_radius_density,
)
from ballthrow.geometry import SpherePoint, cap_area, north_pole, sample_uniform, sphere_area
from ballthrow.kernel import KernelSpec, deficit_power_moment, increment_variance, quadratic_form
from ballthrow.measures import DiscreteSphereMeasure
from ballthrow.overlap import psi
from oracles import NORMALIZER_CIRCLE_RHO100, cap_moment_circle


def circle(a):
    return np.array([np.cos(a), np.sin(a)])


def sphere2(a):
    return np.array([np.cos(a), np.sin(a), 0.0])


def test_law_validation():
    with pytest.raises(ValueError):
        RadiusLaw(1, 0.5)
    with pytest.raises(ValueError):
        RadiusLaw(1, 0.25, cutoff=1.2)
    with pytest.raises(ValueError):
        RadiusLaw(1, 0.25, r_min=3.0)
    with pytest.raises(ValueError):
        RadiusLaw(1, 0.75, cutoff=None)
    with pytest.raises(ValueError):
        RadiusLaw(2, -1.0)


def test_model_validation():
    law = RadiusLaw(1, 0.25)
    with pytest.raises(ValueError, match="theta > 2H - n"):
        ModelSpec(law, rho=10.0, theta=-0.5)
    with pytest.raises(ValueError):
        ModelSpec(law, rho=0.5)
    ModelSpec(law, rho=10.0, theta=-0.4)


def test_density_unscaled_recovers_law():
    law = RadiusLaw(2, 0.4)
    spec = ModelSpec(law, rho=1.0, theta=0.0)
    r = np.array([0.01, 0.5, 2.0, 2.9])
    assert np.allclose(scaled_radius_density(spec, r), law.density(r))
    assert law.density(2.9) == 0.0


def test_density_scaling_algebra():
    spec = ModelSpec(RadiusLaw(2, 0.4), rho=7.0, theta=1.3)
    r = np.array([0.1, 1.0, 10.0, 19.0])
    expected = 7.0**1.3 * 7.0 ** (2 - 0.8) * r ** (0.8 - 3)
    assert np.allclose(scaled_radius_density(spec, r), expected)
    assert scaled_radius_density(spec, 7.0 * 0.9 * np.pi + 0.1) == 0.0


def test_cap_weighted_mass_finite():
    spec = ModelSpec(RadiusLaw(2, 0.25), rho=5.0, theta=1.0)
    b = 5.0 * 0.9 * np.pi
    val = integrate.quad(lambda r: cap_area(2, r) * scaled_radius_density(spec, r), 0, b,
                         points=[np.pi], limit=200)[0]
    assert np.isfinite(val) and val > 0


def test_normalizer_examples():
    assert normalizer(ModelSpec(RadiusLaw(2, 0.25), rho=1.0, theta=0.3)) == 1.0
    spec = ModelSpec(RadiusLaw(1, 0.25), rho=100.0, theta=1.0)
    assert normalizer(spec) == pytest.approx(NORMALIZER_CIRCLE_RHO100, rel=1e-12)
    assert normalizer(spec) == pytest.approx(31.6228, abs=1e-4)


def test_configuration_validation():
    with pytest.raises(ValueError):
        BallConfiguration(np.array([[1.0, 0.0]]), [0.0])
    with pytest.raises(ValueError):
        BallConfiguration(np.array([[1.0, 0.0]]), [0.1, 0.2])


def test_field_value_trivial_cases():
    z = north_pole(2)
    mu = DiscreteSphereMeasure.dirac(z)
    empty = BallConfiguration(np.zeros((0, 3)), np.zeros(0))
    assert field_value(empty, mu) == 0.0
    one = BallConfiguration(np.array([sphere2(0.2)]), [0.5])
    assert field_value(one, mu) == 1.0
    miss = BallConfiguration(np.array([sphere2(1.0)]), [0.5])
    assert field_value(miss, mu) == 0.0


def test_increment_invariant_under_whole_sphere_balls():
    mu = DiscreteSphereMeasure.increment(sphere2(0.0), sphere2(2.0))
    cfg = BallConfiguration(np.array([sphere2(0.1), sphere2(1.9)]), [0.3, 0.4])
    big = BallConfiguration(np.array([sphere2(0.1), sphere2(1.9), sphere2(-2.0)]),
                            [0.3, 0.4, 3.5], n_whole=3)
    assert field_value(cfg, mu) == field_value(big, mu)
    assert field_value(big, DiscreteSphereMeasure.dirac(sphere2(np.pi))) == 4.0


def test_field_value_dimension_check():
    cfg = BallConfiguration(np.array([sphere2(0.0)]), [0.3])
    with pytest.raises(ValueError):
        field_value(cfg, DiscreteSphereMeasure.dirac(circle(0.0)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_field_value_linear(seed):
    rng = np.random.default_rng(seed)
    spec = ModelSpec(RadiusLaw(2, 0.25), rho=1.0, theta=0.0)
    pts = sample_uniform(2, rng, size=4)
    cfg = sample_covering_balls(spec, pts, rng)
    mu1 = DiscreteSphereMeasure(pts[:2], rng.standard_normal(2))
    mu2 = DiscreteSphereMeasure(pts[1:], rng.standard_normal(3))
    assert field_value(cfg, mu1 + mu2) == pytest.approx(
        field_value(cfg, mu1) + field_value(cfg, mu2), abs=1e-12)


def test_covering_sampler_single_point_count(rng):
    spec = ModelSpec(RadiusLaw(1, 0.25), rho=1.0, theta=0.0)
    z = circle(0.4)
    counts = np.array([len(sample_covering_balls(spec, [z], rng)) for _ in range(10_000)])
    mean = cap_moment_circle(0.25, 0.0, 0.9 * np.pi)
    assert abs(counts.mean() - mean) < 3 * np.sqrt(mean / counts.size)
    # Poisson dispersion
    assert 0.95 <= counts.var(ddof=1) / counts.mean() <= 1.05


def test_covering_sampler_balls_cover_a_point(rng):
    spec = ModelSpec(RadiusLaw(2, 0.25), rho=2.0, theta=1.0)
    pts = sample_uniform(2, rng, size=3)
    for _ in range(20):
        cfg = sample_covering_balls(spec, pts, rng)
        covered = (cfg.centers @ pts.T > np.cos(cfg.radii)[:, None]).any(axis=1)
        assert covered.all()


def test_covering_sampler_covariance(rng):
    spec = ModelSpec(RadiusLaw(2, 0.25), rho=1.0, theta=0.0)
    z, zp = sphere2(0.0), sphere2(0.8)
    x = np.array([[field_value(c, DiscreteSphereMeasure.dirac(p)) for p in (z, zp)]
                  for c in (sample_covering_balls(spec, [z, zp], rng) for _ in range(10_000))])
    target = integrate.quad(lambda r: psi(2, 0.8, r) * r ** (0.5 - 3), 0.4, 0.9 * np.pi)[0]
    prod = (x[:, 0] - x[:, 0].mean()) * (x[:, 1] - x[:, 1].mean())
    assert abs(prod.mean() - target) < 3 * prod.std() / np.sqrt(prod.size)


def test_global_sampler_count_and_rejections(rng):
    spec = ModelSpec(RadiusLaw(1, 0.25, r_min=0.05), rho=1.0, theta=0.0)
    counts = np.array([len(sample_truncated_global(spec, rng)) for _ in range(10_000)])
    expected = 2 * np.pi * (0.05**-0.5 - (0.9 * np.pi) ** -0.5) / 0.5
    assert abs(counts.mean() - expected) < 3 * np.sqrt(expected / counts.size)
    with pytest.raises(ValueError):
        sample_truncated_global(ModelSpec(RadiusLaw(1, 0.25)), rng)


def test_samplers_agree_on_covering_counts(rng):
    spec = ModelSpec(RadiusLaw(1, 0.25, r_min=0.05), rho=1.0, theta=0.0)
    z = circle(1.0)
    mu = DiscreteSphereMeasure.dirac(z)
    a = [field_value(sample_covering_balls(spec, [z], rng), mu) for _ in range(6000)]
    b = [field_value(sample_truncated_global(spec, rng), mu) for _ in range(6000)]
    edges = np.array([0, 2, 3, 4, 5, 6, 7, 100])
    table = np.array([np.histogram(a, edges)[0], np.histogram(b, edges)[0]])
    assert stats.chi2_contingency(table)[1] > 0.05 / 20


def test_samplers_agree_on_joint_law(rng):
    spec = ModelSpec(RadiusLaw(2, 0.25, r_min=0.1), rho=1.0, theta=0.0)
    pts = np.array([sphere2(0.0), sphere2(0.7)])
    mus = [DiscreteSphereMeasure.dirac(p) for p in pts]
    a = np.array([[field_value(c, m) for m in mus]
                  for c in (sample_covering_balls(spec, pts, rng) for _ in range(3000))])
    b = np.array([[field_value(c, m) for m in mus]
                  for c in (sample_truncated_global(spec, rng) for _ in range(3000))])
    for stat in (lambda x: x[:, 0] + x[:, 1], lambda x: x[:, 0] - x[:, 1]):
        sa, sb = stat(a), stat(b)
        se = np.sqrt(sa.var() / sa.size + sb.var() / sb.size)
        assert abs(sa.mean() - sb.mean()) < 4 * se


def test_moments_exact_examples():
    spec = ModelSpec(RadiusLaw(1, 0.25), rho=1.0, theta=0.0)
    mean, var = moments_exact(spec, DiscreteSphereMeasure.dirac(circle(0.0)))
    phi_f = cap_moment_circle(0.25, 0.0, 0.9 * np.pi)
    assert mean == pytest.approx(phi_f, rel=1e-10)
    assert var == pytest.approx(phi_f, rel=1e-10)
    mean, _ = moments_exact(spec, DiscreteSphereMeasure.increment(circle(0.0), circle(1.0)))
    assert mean == 0.0


@pytest.mark.parametrize("n,H,u", [(1, 0.25, 1.0), (2, 0.25, 0.6), (2, 0.75, 1.3)])
@pytest.mark.parametrize("rho", [1 / 0.9, 10.0, 300.0])
def test_exact_variance_identity(n, H, u, rho):
    spec = ModelSpec(RadiusLaw(n, H), rho=rho, theta=1.0)
    a = np.zeros(n + 1)
    b = np.zeros(n + 1)
    a[0] = 1.0
    b[0], b[1] = np.cos(u), np.sin(u)
    _, var = moments_exact(spec, DiscreteSphereMeasure(np.array([a, b]), [1.0, -1.0]))
    assert var / normalizer(spec) ** 2 == pytest.approx(
        increment_variance(KernelSpec(n, H), u), rel=1e-6)


def test_truncation_bias_is_the_small_radius_band():
    n, H, u, r_min = 2, 0.25, 0.5, 0.1
    mu = DiscreteSphereMeasure(np.array([sphere2(0.0), sphere2(u)]), [1.0, -1.0])
    full = moments_exact(ModelSpec(RadiusLaw(n, H)), mu)[1]
    cut = moments_exact(ModelSpec(RadiusLaw(n, H, r_min=r_min)), mu)[1]
    assert full - cut == pytest.approx(2 * deficit_power_moment(n, H, u, 0.0, r_min), rel=1e-8)


def test_pattern_masses_marginals():
    spec = ModelSpec(RadiusLaw(1, 0.25), rho=30.0, theta=1.0)
    pts = np.array([circle(0.0), circle(0.4), circle(2.5), circle(-1.0)])
    patterns, masses = coverage_pattern_masses(spec, pts)
    for i in range(len(pts)):
        mean, _ = moments_exact(spec, DiscreteSphereMeasure.dirac(pts[i]))
        assert masses[patterns[:, i]].sum() == pytest.approx(mean, rel=1e-10)


def test_pattern_cumulants_match_exact_variance():
    spec = ModelSpec(RadiusLaw(1, 0.25), rho=20.0, theta=1.0)
    pts = np.array([circle(0.0), circle(0.4), circle(2.5)])
    w = [1.0, -2.0, 1.0]
    c = pattern_cumulants(spec, pts, w)
    assert c[1] == pytest.approx(0.0, abs=1e-8)
    assert c[2] == pytest.approx(moments_exact(spec, DiscreteSphereMeasure(pts, w))[1], rel=1e-9)
    pts2 = np.array([sphere2(0.0), sphere2(0.3)])
    spec2 = ModelSpec(RadiusLaw(2, 0.25), rho=3.0, theta=1.0)
    c2 = pattern_cumulants(spec2, pts2, [1.0, -1.0])
    assert c2[2] == pytest.approx(
        moments_exact(spec2, DiscreteSphereMeasure(pts2, [1.0, -1.0]))[1], rel=1e-9)
    with pytest.raises(NotImplementedError):
        coverage_pattern_masses(spec2, np.array([sphere2(0.0), sphere2(0.3), sphere2(1.0)]))


def test_pattern_sampler_matches_ball_sampler(rng):
    spec = ModelSpec(RadiusLaw(1, 0.25), rho=3.0, theta=1.0)
    pts = np.array([circle(0.0), circle(0.7), circle(-0.3)])
    w = np.array([[1.0, -1.0, 0.0], [2.0, -1.0, -1.0]])
    mus = [DiscreteSphereMeasure(pts, row) for row in w]
    a = np.array([[field_value(c, m) for m in mus]
                  for c in (sample_covering_balls(spec, pts, rng) for _ in range(4000))])
    b = sample_pattern_fields(spec, pts, w, 4000, rng)
    for j in range(2):
        va, vb = a[:, j].var(ddof=1), b[:, j].var(ddof=1)
        assert abs(va - vb) < 4 * np.sqrt(2.0 / 4000) * max(va, vb)
    cov_a, cov_b = np.cov(a.T)[0, 1], np.cov(b.T)[0, 1]
    assert abs(cov_a - cov_b) < 0.15 * np.sqrt(np.cov(a.T)[0, 0] * np.cov(a.T)[1, 1])


def test_limit_variance_from_quadratic_form():
    spec = ModelSpec(RadiusLaw(1, 0.25, cutoff=None), rho=10.0, theta=1.0)
    pts = np.array([circle(0.0), circle(1.0), circle(2.0)])
    mu = DiscreteSphereMeasure(pts, [1.0, -2.0, 1.0])
    _, var = moments_exact(spec, mu)
    assert var / normalizer(spec) ** 2 == pytest.approx(
        quadratic_form(KernelSpec(1, 0.25), mu), rel=1e-9)


def test_whole_sphere_rate():
    spec = ModelSpec(RadiusLaw(2, 0.25), rho=10.0, theta=0.0)
    e = 0.5 - 2
    expected = spec.intensity * sphere_area(2) * ((9 * np.pi) ** e - np.pi**e) / e
    assert spec.whole_sphere_rate() == pytest.approx(expected)
    assert ModelSpec(RadiusLaw(2, 0.25), rho=1.0).whole_sphere_rate() == 0.0
