"""Pseudo-spectral Navier-Stokes laboratory.

Computes mild solutions of the incompressible Navier-Stokes equations on a
periodic cube, builds Picard (Duhamel) iterates, measures Lebesgue / Lorentz /
mixed space-time norms, and fits empirical separation rates between the
solution and its iterates against a scheduled exponent ladder.
"""

from .errors import (
    ConfigurationError,
    DegenerateFitError,
    GridMismatchError,
    NslabError,
    RepresentationError,
    StabilityError,
)
from .norms import (
    KatoSpec,
    LorentzSpec,
    MixedNormSpec,
    gn_ratio,
    kato_norm,
    lebesgue_norm,
    lorentz_norm,
    mixed_norm,
    mixed_norm_from_samples,
)
from .picard import (
    Trajectory,
    bilinear_B,
    picard_ladder,
    picard_step,
    splitting_residual,
)
from .spectral import (
    PHYSICAL,
    SPECTRAL,
    Ball,
    Grid3,
    VectorField,
    divergence_defect,
    grad_l2_norm,
    heat_semigroup,
    l2_norm_spectral,
    leray_project,
    nonlinear_divergence,
    oseen_center_magnitude,
    oseen_kernel,
    oseen_kernel_ratio,
    to_physical,
    to_spectral,
)

__version__ = "0.1.0"
