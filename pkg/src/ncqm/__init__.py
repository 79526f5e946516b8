"""Exact engine for quantum mechanics on coordinate-dependent
noncommutative spaces: Darboux coordinate construction, star products,
trace functionals, and the worked free-particle / oscillator checks.

All arithmetic is exact (Gaussian rationals); identities are verified per
grade of the deformation parameter with zero tolerance.
"""

from .exact_algebra import (
    GaussianFunction,
    GaussianIntegral,
    GaussianRational,
    RationalFunction,
    ThetaPoly,
    gaussian_integrate,
    parse_polynomial,
)
from .moyal import moyal_product
from .operators import (
    DiffOperator,
    Gamma1Tensor,
    build_gamma1,
    build_phat,
    build_xhat,
    subalgebra_defect,
)
from .poisson import (
    DarbouxMap,
    GammaTower,
    JacobiDefect,
    NotPoissonError,
    PoissonBivector,
    assemble_darboux,
    build_gamma,
    canonical_bracket,
    fuzzy_sphere_bivector,
    general_brackets,
    jacobi_defect,
    verify_darboux,
)
from .qm_examples import (
    build_fuzzy_oscillator,
    energy_correction,
    free_particle_check,
    l_squared_eigencheck,
    rotation_covariance_check,
)
from .star import (
    GaugeCorrection,
    Measure,
    StarProduct,
    assoc_defect,
    cyclicity_defect,
    gauge_b,
    hermiticity_defect,
    measure_defect,
    star,
    star_prime,
    trace,
)

__all__ = [
    "GaussianRational",
    "ThetaPoly",
    "RationalFunction",
    "GaussianFunction",
    "GaussianIntegral",
    "gaussian_integrate",
    "parse_polynomial",
    "PoissonBivector",
    "JacobiDefect",
    "NotPoissonError",
    "jacobi_defect",
    "canonical_bracket",
    "GammaTower",
    "build_gamma",
    "DarbouxMap",
    "assemble_darboux",
    "verify_darboux",
    "general_brackets",
    "fuzzy_sphere_bivector",
    "DiffOperator",
    "Gamma1Tensor",
    "build_xhat",
    "build_gamma1",
    "build_phat",
    "subalgebra_defect",
    "StarProduct",
    "star",
    "star_prime",
    "assoc_defect",
    "Measure",
    "measure_defect",
    "GaugeCorrection",
    "gauge_b",
    "trace",
    "cyclicity_defect",
    "hermiticity_defect",
    "moyal_product",
    "build_fuzzy_oscillator",
    "energy_correction",
    "free_particle_check",
    "l_squared_eigencheck",
    "rotation_covariance_check",
]
