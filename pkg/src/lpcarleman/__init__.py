"""Numerical toolkit for Littlewood-Paley analysis and parabolic Carleman estimates
with non-Lipschitz coefficients."""

__version__ = "0.1.0"

from .errors import (ConfigError, DegenerateInputError, DomainError, GridMismatchError,
                     InternalError, LPCarlemanError, NonOsgoodRangeError, ResolutionError,
                     SupportError, TableRangeError)
from .grid import GridFunction, load_grid_function, mode, random_field, save_grid_function
from .modulus import (ConditionReport, ModulusSpec, check_osgood, derive_omega, log_lipschitz,
                      parse_modulus, power, tabulated)
from .weight import WeightTable, build_phi, build_weight_table
from .lp_core import SobolevSpec, decompose, delta_q, dyadic_sobolev_norm, q_max, s_q
from .paraproduct import decompose_product, multiply, verify_remainder_estimate
from .verifiers import (EstimateReport, verify_bernstein, verify_commutator,
                        verify_mollifier)
from .carleman import (CarlemanConfig, CarlemanReport, CoefficientField, evaluate_carleman)

__all__ = [
    "__version__", "LPCarlemanError", "ConfigError", "DegenerateInputError", "DomainError",
    "GridMismatchError", "InternalError", "NonOsgoodRangeError", "ResolutionError",
    "SupportError", "TableRangeError", "GridFunction", "load_grid_function", "mode",
    "random_field", "save_grid_function", "ConditionReport", "ModulusSpec", "check_osgood",
    "derive_omega", "log_lipschitz", "parse_modulus", "power", "tabulated", "WeightTable",
    "build_phi", "build_weight_table", "SobolevSpec", "decompose", "delta_q",
    "dyadic_sobolev_norm", "q_max", "s_q", "decompose_product", "multiply",
    "verify_remainder_estimate", "EstimateReport", "verify_bernstein", "verify_commutator",
    "verify_mollifier", "CarlemanConfig", "CarlemanReport", "CoefficientField",
    "evaluate_carleman",
]
