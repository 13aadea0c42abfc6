"""Compile targets, the primitive audit and small feature helpers shared by
every compiler."""

from __future__ import annotations

import enum
from fractions import Fraction

from .. import features as F
from ..features import FeatureExpr, GnnClassifier
from ..graphs import KEY_SCALE


class CompileError(ValueError):
    pass


class CompileTarget(enum.Enum):
    GML_LOCALSUM_RELU = "gml_localsum_relu"
    ML_LOCALMAX_RELU = "ml_localmax_relu"
    WGML_TOP_LOCALMAX_RELU = "wgml_top_localmax_relu"
    WGML_MODAL_LOCALMAX_SIGMOID = "wgml_modal_localmax_sigmoid"
    LDDL_LOCALMAX_SEMILINEAR = "lddl_localmax_semilinear"
    ISOTYPE_LOCALMAX_SEMILINEAR = "isotype_localmax_semilinear"
    UNIQADDR_LOCALSUM = "uniqaddr_localsum"
    ISOTYPE_LOCALSUM_SQUARE = "isotype_localsum_square"
    ISOTYPE_GLOBALSUM_SEMILINEAR = "isotype_globalsum_semilinear"


_ATOMS = {"prop", "affine", "const"}
# ReLU(x) = ifPos(x, x, 0), so semilinear targets may keep the ReLU-based macros.
_SEMILINEAR = {"ifpos", "relu"}

ALLOWED = {
    CompileTarget.GML_LOCALSUM_RELU: _ATOMS | {"localsum", "relu"},
    CompileTarget.ML_LOCALMAX_RELU: _ATOMS | {"localmax", "relu"},
    CompileTarget.WGML_TOP_LOCALMAX_RELU: _ATOMS | {"val", "localmax", "relu"},
    CompileTarget.WGML_MODAL_LOCALMAX_SIGMOID: _ATOMS | {"val", "localmax", "relu", "sigmoid"},
    CompileTarget.LDDL_LOCALMAX_SEMILINEAR: _ATOMS | _SEMILINEAR | {"val", "localmax"},
    CompileTarget.ISOTYPE_LOCALMAX_SEMILINEAR: _ATOMS | _SEMILINEAR | {"val", "localmax"},
    CompileTarget.UNIQADDR_LOCALSUM: _ATOMS | _SEMILINEAR | {"val", "localsum", "sigmoid"},
    CompileTarget.ISOTYPE_LOCALSUM_SQUARE: _ATOMS | _SEMILINEAR | {"val", "localsum", "square"},
    CompileTarget.ISOTYPE_GLOBALSUM_SEMILINEAR: _ATOMS | _SEMILINEAR | {"val", "localsum",
                                                                        "globalsum"},
}


def audit_primitives(expr: FeatureExpr, target: CompileTarget) -> set:
    """Primitives in `expr` that `target` does not permit (empty when clean)."""
    return F.feature_primitives(expr) - ALLOWED[target]


def finish(expr: FeatureExpr, target: CompileTarget, policy, mode, source: str) -> GnnClassifier:
    bad = audit_primitives(expr, target)
    if bad:
        raise CompileError(f"{target.value} output uses forbidden primitives {sorted(bad)}")
    return GnnClassifier(expr, policy, mode, f"target={target.value}; source={source}")


ONE = F.const(1)
ZERO = F.const(0)


def sigmoid_key() -> FeatureExpr:
    """sigmoid(val / KEY_SCALE): keys are spread over (-1000, 1000), so the raw
    sigmoid would saturate in floating point."""
    return F.sigmoid(F.scale(F.Val(), Fraction(1, KEY_SCALE)))


def nonzero_key() -> FeatureExpr:
    """ifPos(-val, val, val + 1): an injective relabelling of keys avoiding 0."""
    v = F.Val()
    return F.ifpos(F.neg(v), v, F.shift(v, 1))


def indicator(x: FeatureExpr) -> FeatureExpr:
    """1 where x != 0, else 0."""
    return F.ifpos(F.fabs(x), ONE, ZERO)


def equals(x: FeatureExpr, y: FeatureExpr) -> FeatureExpr:
    """1 where x == y, else 0."""
    return F.ifpos(F.fabs(F.sub(x, y)), ZERO, ONE)


def at_least(terms, k: int) -> FeatureExpr:
    """ReLU(sum(terms) - (k - 1)): 1 when k of the 0/1 terms hold."""
    terms = list(terms)
    return F.relu(F.affine([1] * len(terms), terms, -(k - 1)))
