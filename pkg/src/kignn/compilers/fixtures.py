"""Named example classifiers."""

from __future__ import annotations

from .. import features as F
from ..features import AcceptancePolicy, GnnClassifier
from ..logic import parse_formula
from ..scalar import Mode
from .common import ONE, CompileError, sigmoid_key
from .logic import gml_feature

FIXTURES = ("diamond2top", "q_even", "triangle_complement")

TRIANGLE_FORMULA = ("<>{=2}top & <>(~p1 & <>{=2}top & <>p1 & <>~p1) & "
                    "<>(p1 & <>{=2}top & []~p1)")


def _diamond2top() -> GnnClassifier:
    # |largest neighbor key - smallest neighbor key|
    v = F.Val()
    expr = F.fabs(F.sub(F.LocalMax(v), F.local_min(v)))
    return GnnClassifier(expr, AcceptancePolicy.POS_NONPOS, Mode.EXACT, "fixture=diamond2top")


def _q_even() -> GnnClassifier:
    # TriWave is 1 on even integers and 0 on odd ones
    expr = F.triwave(F.LocalSum(ONE))
    return GnnClassifier(expr, AcceptancePolicy.ONE_ZERO, Mode.EXACT, "fixture=q_even")


def _triangle_complement() -> GnnClassifier:
    """x + |y - z|: x = 0 iff the point looks like the triangle locally, y and
    z are the (sigmoid) keys of the p-node one step and two steps away."""
    x = F.affine([-1], [gml_feature(parse_formula(TRIANGLE_FORMULA))], 1)
    sent = F.relu(F.affine([1, 1], [sigmoid_key(), F.Prop(1)], -1))
    y = F.LocalSum(sent)
    z = F.LocalSum(F.LocalSum(sent))
    expr = F.add(x, F.fabs(F.sub(y, z)))
    return GnnClassifier(expr, AcceptancePolicy.POS_NONPOS, Mode.FLOAT,
                         "fixture=triangle_complement")


def fixture_classifier(name: str) -> GnnClassifier:
    builders = {"diamond2top": _diamond2top, "q_even": _q_even,
                "triangle_complement": _triangle_complement}
    if name not in builders:
        raise CompileError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}")
    return builders[name]()
