"""Compilers from logics and graphs to feature-expression classifiers."""

from .common import ALLOWED, CompileError, CompileTarget, audit_primitives
from .fixtures import FIXTURES, TRIANGLE_FORMULA, fixture_classifier
from .isotype import (compile_isotype_globalsum, compile_isotype_localmax,
                      compile_isotype_localsum_square, cs_detect, cs_detector, cs_detector_expr)
from .logic import (compile_gml_localsum, compile_lddl_semilinear, compile_ml_localmax,
                    compile_wgml_modal, compile_wgml_top, gml_feature, lddl_feature, ml_feature)
from .unique_address import (AddressMode, addressed_node, compile_unique_address,
                             unique_address_separated, uniqueness_formula)

__all__ = [
    "ALLOWED", "AddressMode", "CompileError", "CompileTarget", "FIXTURES", "TRIANGLE_FORMULA",
    "addressed_node", "audit_primitives", "compile_gml_localsum", "compile_isotype_globalsum",
    "compile_isotype_localmax", "compile_isotype_localsum_square", "compile_lddl_semilinear",
    "compile_ml_localmax", "compile_unique_address", "compile_wgml_modal", "compile_wgml_top",
    "cs_detect", "cs_detector", "cs_detector_expr", "fixture_classifier", "gml_feature",
    "lddl_feature", "ml_feature", "unique_address_separated", "uniqueness_formula",
]
