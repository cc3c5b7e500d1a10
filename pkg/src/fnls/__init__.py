"""Pseudospectral toolkit for the energy-critical fractional NLS on a
periodic box: spectral operators, the explicit ground state and its
calibration, split-step/exponential time integrators, conservation and
virial diagnostics, and Strichartz exponent algebra."""

from .grids import (
    CutoffSpec,
    Field,
    Grid,
    PhysicsParams,
    bump,
    field_from_function,
)
from .ground_state import (
    GroundStateConstants,
    GroundStateSpec,
    calibrate,
    calibrated_spec,
    elliptic_residual,
    in_subthreshold_set,
    kappa_quadrature,
    petviashvili_solve,
    profile,
    sobolev_constant,
)
from .dynamics import (
    EvolveResult,
    IntegratorConfig,
    SpongeSpec,
    evolve,
    linear_propagator,
    nonlinear_phase_step,
    strang_step,
)
from .admissibility import (
    INF,
    ExponentPair,
    enumerate_admissible,
    gap_condition,
    is_alpha_admissible,
    is_radial_admissible,
    strichartz_exponents,
)

__version__ = "0.1.0"

__all__ = [
    "CutoffSpec",
    "EvolveResult",
    "ExponentPair",
    "Field",
    "Grid",
    "GroundStateConstants",
    "GroundStateSpec",
    "INF",
    "IntegratorConfig",
    "PhysicsParams",
    "SpongeSpec",
    "bump",
    "calibrate",
    "calibrated_spec",
    "elliptic_residual",
    "enumerate_admissible",
    "evolve",
    "field_from_function",
    "gap_condition",
    "in_subthreshold_set",
    "is_alpha_admissible",
    "is_radial_admissible",
    "kappa_quadrature",
    "linear_propagator",
    "nonlinear_phase_step",
    "petviashvili_solve",
    "profile",
    "sobolev_constant",
    "strang_step",
    "strichartz_exponents",
]
