"""Generalized almost complex structures on TM + T*M in local coordinates."""
from .chart import (Chart, EndoField, MatrixField, MetricField, OneForm, VectorField,
                    musical, pullback_metric)
from .dorfman import dorfman_bracket, gen_nijenhuis, tensoriality_probe
from .exprcore import DomainError, ParseError, eval_dual, evaluate, parse
from .genbundle import (BlockEndo, GenSection, classify, compose, hypercomplex_check,
                        make_J_g, make_J_lambda, make_J_omega, pairing_G0,
                        spherical_combination, weak_example)
from .integrability import (ResidualReport, condition_residuals, oracle_frame_nijenhuis,
                            strong_sufficiency_check, symmetrized_conditions)
from .sphere6 import (CrossTable, build_J, calibrate_table, octonion_cross, ac_identity,
                      scan_nonexistence, sphere6, b_identity)

__version__ = "0.1.0"

__all__ = [
    "Chart", "EndoField", "MatrixField", "MetricField", "OneForm", "VectorField", "musical",
    "pullback_metric", "dorfman_bracket", "gen_nijenhuis", "tensoriality_probe", "DomainError",
    "ParseError", "eval_dual", "evaluate", "parse", "BlockEndo", "GenSection", "classify",
    "compose", "hypercomplex_check", "make_J_g", "make_J_lambda", "make_J_omega", "pairing_G0",
    "spherical_combination", "weak_example", "ResidualReport", "condition_residuals",
    "oracle_frame_nijenhuis", "strong_sufficiency_check", "symmetrized_conditions",
    "CrossTable", "build_J", "calibrate_table", "octonion_cross", "ac_identity",
    "scan_nonexistence", "sphere6", "b_identity",
]
