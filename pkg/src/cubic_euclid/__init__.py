"""Certified Euclidean minima of cubic number fields."""

from .covering import CoverState, Cube, InvalidK, cube_bound, find_translation, init_state, subdivide_filter, tentative_filter
from .exactfield import CubicField, FieldElement, FieldError, IrreducibilityError, UnitError
from .minima import (
    CoeffBounds,
    MinimumReport,
    coeff_bounds,
    coeff_bounds_complex,
    coeff_bounds_real,
    conjecture_check,
    euclidean_min_at,
    lin_bound,
    orbit,
)
from .pipeline import RunReport, find_minimum, run_pipeline, verify_tables
from .unitaction import box_image, candidate_from_chain, detect_chains, unit_eliminate

__all__ = [
    "CoeffBounds",
    "CoverState",
    "Cube",
    "CubicField",
    "FieldElement",
    "FieldError",
    "InvalidK",
    "IrreducibilityError",
    "MinimumReport",
    "RunReport",
    "UnitError",
    "box_image",
    "candidate_from_chain",
    "coeff_bounds",
    "coeff_bounds_complex",
    "coeff_bounds_real",
    "conjecture_check",
    "cube_bound",
    "detect_chains",
    "euclidean_min_at",
    "find_minimum",
    "find_translation",
    "init_state",
    "lin_bound",
    "orbit",
    "run_pipeline",
    "subdivide_filter",
    "tentative_filter",
    "unit_eliminate",
    "verify_tables",
]
