"""Elimination-template forward kinematics for general Stewart-Gough platforms."""
from .errors import (
    DegenerateInstanceError,
    InputValidationError,
    SGPError,
    SingularParametrizationError,
    SolverFailureError,
    StructureError,
)
from .kinematics import (
    LegMeasurements,
    PlatformGeometry,
    Pose,
    PolynomialSystem,
    Variant,
    build_polynomial_system,
    cayley_rotation,
    inverse_cayley,
    leg_lengths_from_pose,
    normalized_residual,
)
from .pencil import SolutionSet, forward_kinematics
from .structure import TemplateStructure, build_structure, default_structure

__all__ = [
    "DegenerateInstanceError",
    "InputValidationError",
    "LegMeasurements",
    "PlatformGeometry",
    "PolynomialSystem",
    "Pose",
    "SGPError",
    "SingularParametrizationError",
    "SolutionSet",
    "SolverFailureError",
    "StructureError",
    "TemplateStructure",
    "Variant",
    "build_polynomial_system",
    "build_structure",
    "cayley_rotation",
    "default_structure",
    "forward_kinematics",
    "inverse_cayley",
    "leg_lengths_from_pose",
    "normalized_residual",
]
