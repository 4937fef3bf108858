"""Poisson random balls on the unit n-sphere and their Gaussian scaling limits."""

__version__ = "0.1.0"

from .geometry import (  # noqa: E402
    SpherePoint, TangentVector, cap_area, exp_map, geodesic_distance, log_map,
    north_pole, sample_uniform, sample_uniform_cap, sphere_area,
)
from .overlap import psi, psi_circle, psi_h, psi_mc  # noqa: E402
from .measures import DiscreteSphereMeasure, TangentMeasure  # noqa: E402
from .kernel import (  # noqa: E402
    KernelSpec, asymptote_fit, covariance_matrix, increment_variance, k2_constant,
    kernel_value, psd_factorize, quadratic_form,
)
from .balls import (  # noqa: E402
    BallConfiguration, ModelSpec, RadiusLaw, field_value, moments_exact, normalizer,
    sample_covering_balls, sample_truncated_global, scaled_radius_density,
)
from .limits import (  # noqa: E402
    dilate_to_sphere, lass_experiment, moment_stats, sample_limit_field,
    scaling_experiment, tangent_covariance,
)
