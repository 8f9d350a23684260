"""Symbolic multimomentum geometry for first-order field theories.

Expression algebra, natural charts on the jet and multimomentum bundles,
exterior calculus, Poincare-Cartan forms, Legendre maps and their
verification.
"""

from jetcalc._rng import PRNG_ID
from jetcalc.charts import BundleSpec, CoordMap, canonical_map, compose, dimension_table, make_chart
from jetcalc.expr import Verdict, differentiate, equivalence_check, evaluate, normalize, substitute
from jetcalc.forms import DiffForm, canonical_form, d, interior_product, pullback, wedge
from jetcalc.lagrangian import LagrangianSystem, classify_regularity, load_system, poincare_cartan
from jetcalc.legendre import (
    LegendreKind,
    hamiltonian_value,
    invert_reduced,
    legendre_map,
    verify_diagram,
    verify_pullbacks,
    verify_tautology,
)
from jetcalc.numeric import finite_difference_check, nondegeneracy_check, numeric_rank
from jetcalc.parser import parse_expr
from jetcalc.sampling import SampleConfig, sample_points

__version__ = "0.1.0"

__all__ = [
    "PRNG_ID", "BundleSpec", "CoordMap", "canonical_map", "compose", "dimension_table",
    "make_chart", "Verdict", "differentiate", "equivalence_check", "evaluate", "normalize",
    "substitute", "DiffForm", "canonical_form", "d", "interior_product", "pullback", "wedge",
    "LagrangianSystem", "classify_regularity", "load_system", "poincare_cartan",
    "LegendreKind", "hamiltonian_value", "invert_reduced", "legendre_map", "verify_diagram",
    "verify_pullbacks", "verify_tautology", "finite_difference_check", "nondegeneracy_check",
    "numeric_rank", "parse_expr", "SampleConfig", "sample_points", "__version__",
]
