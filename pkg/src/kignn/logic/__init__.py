"""Modal, graded and dynamic logics over pointed graphs."""

from .ast import *  # noqa: F401,F403
from .ast import Logic, format_formula, format_program
from .gml import (LogicError, WgmlClass, WgmlMembership, modelcheck_gml, sample_gml, sample_ml,
                  sample_wgml, sat_gml, wgml_membership)
from .lddl import (is_normal, modelcheck_lddl, normalize_lddl, program_relation, sample_lddl,
                   sat_lddl)
from .parser import FormulaSyntaxError, parse_formula
