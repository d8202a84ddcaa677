"""DoE-based polynomial surrogates and minimum-mass sizing for box-wing structures."""

from .design_space import (
    DesignSpace,
    DesignVariable,
    LinkageRule,
    TaperLaw,
    codify,
    codify_point,
    decode,
    decode_point,
    load_space,
    taper_value,
)
from .doe import DesignMatrix, ccf, deduplicate, full_factorial
from .empirical import WingDescription, jemitola_wing_mass
from .ingestion import BuiltinEvaluator, ExternalCSVEvaluator, evaluate_design
from .optimizer import (
    Constraint,
    SizingProblem,
    SizingResult,
    SolverOptions,
    admissible_stress,
    deflection_limit,
    mass_report,
    solve,
)
from .published_models import PUBLISHED_MODEL_IDS, load_published_model
from .surrogate import (
    PolynomialSurrogate,
    ResponseDataset,
    Term,
    curvature_check,
    fit,
    residual_diagnostics,
    term,
)
from .sensitivity import compute_effects, pareto

__version__ = "0.1.0"
