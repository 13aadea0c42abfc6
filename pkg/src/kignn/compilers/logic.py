"""Translations from ML, GML, WGML and LDDL formulas to feature expressions."""

from __future__ import annotations

from .. import features as F
from ..features import AcceptancePolicy, FeatureExpr, GnnClassifier
from ..logic import ast as L
from ..logic.ast import format_formula
from ..logic.gml import WgmlClass, wgml_membership
from ..logic.lddl import normalize_lddl
from ..scalar import Mode
from .common import ONE, ZERO, CompileError, CompileTarget, finish, sigmoid_key


# ---------------------------------------------------------------- GML / ML

def _boolean(phi, go, diamond) -> FeatureExpr:
    if isinstance(phi, L.Top):
        return ONE
    if isinstance(phi, L.Prop):
        return F.Prop(phi.index)
    if isinstance(phi, L.Not):
        return F.affine([-1], [go(phi.arg)], 1)
    if isinstance(phi, L.And):
        return F.clip01(F.affine([1, 1], [go(phi.left), go(phi.right)], -1))
    if isinstance(phi, L.Or):
        return F.clip01(F.add(go(phi.left), go(phi.right)))
    if isinstance(phi, L.DiamondGeq):
        return diamond(phi, go(phi.arg))
    raise CompileError(f"not a GML formula: {format_formula(phi)}")


def _memo(build):
    memo: dict = {}

    def go(phi):
        if phi not in memo:
            memo[phi] = build(phi, go)
        return memo[phi]
    return go


def gml_feature(phi: L.Formula) -> FeatureExpr:
    """0/1 feature for a GML formula, counting with LocalSum."""
    def dia(f, arg):
        return F.clip01(F.shift(F.LocalSum(arg), -(f.grade - 1)))
    return _memo(lambda f, go: _boolean(f, go, dia))(phi)


def ml_feature(phi: L.Formula) -> FeatureExpr:
    """0/1 feature for an ML formula, with LocalMax."""
    if not L.is_ml(phi):
        raise CompileError(f"not an ML formula (grade above 1): {format_formula(phi)}")
    return _memo(lambda f, go: _boolean(f, go, lambda _, arg: F.LocalMax(arg)))(phi)


def compile_gml_localsum(phi: L.Formula) -> GnnClassifier:
    return finish(gml_feature(phi), CompileTarget.GML_LOCALSUM_RELU, AcceptancePolicy.ONE_ZERO,
                  Mode.EXACT, format_formula(phi))


def compile_ml_localmax(phi: L.Formula) -> GnnClassifier:
    return finish(ml_feature(phi), CompileTarget.ML_LOCALMAX_RELU, AcceptancePolicy.ONE_ZERO,
                  Mode.EXACT, format_formula(phi))


# ---------------------------------------------------------------- WGML

def _wgml_feature(phi: L.Formula, modal: bool) -> FeatureExpr:
    """Truthiness is strict positivity.  ML subformulas become 0/1 features;
    the rest is closed under ReLU-sum (or), min (and) and LocalMax (diamond)."""
    sig = sigmoid_key() if modal else None

    def build(f, go):
        if L.is_ml(f):
            return ml_feature(f)
        if isinstance(f, L.And):
            return F.fmin(go(f.left), go(f.right))
        if isinstance(f, L.Or):
            return F.add(F.relu(go(f.left)), F.relu(go(f.right)))
        if isinstance(f, L.DiamondGeq) and f.grade == 1:
            return F.LocalMax(go(f.arg))
        if isinstance(f, L.DiamondGeq) and f.grade == 2:
            if not modal:
                v = F.Val()
                return F.add(F.LocalMax(v), F.LocalMax(F.neg(v)))
            chi = ml_feature(f.arg)
            hi = F.LocalMax(F.relu(F.affine([1, 1], [sig, chi], -1)))
            lo = F.LocalMax(F.shift(F.relu(F.sub(chi, sig)), -1))
            return F.add(hi, lo)
        raise CompileError(f"outside the weakly graded fragment: {format_formula(f)}")

    return _memo(build)(phi)


def compile_wgml_top(phi: L.Formula) -> GnnClassifier:
    m = wgml_membership(phi)
    if not m.in_top:
        raise CompileError(f"not in WGML(top): {format_formula(m.witness or phi)}")
    return finish(_wgml_feature(phi, modal=False), CompileTarget.WGML_TOP_LOCALMAX_RELU,
                  AcceptancePolicy.POS_NONPOS, Mode.EXACT, format_formula(phi))


def compile_wgml_modal(phi: L.Formula) -> GnnClassifier:
    m = wgml_membership(phi)
    if m.kind is WgmlClass.NOT_WGML:
        raise CompileError(f"not in WGML(modal): {format_formula(m.witness or phi)}")
    return finish(_wgml_feature(phi, modal=True), CompileTarget.WGML_MODAL_LOCALMAX_SIGMOID,
                  AcceptancePolicy.POS_NONPOS, Mode.FLOAT, format_formula(phi))


# ---------------------------------------------------------------- LDDL

class _Lddl:
    """The three mutually recursive families: F_phi (0/1), and for programs
    F_pi (is the program's domain hit), F_pi^min and F_pi^max (least and
    greatest key reachable through pi; junk where F_pi = 0)."""

    def __init__(self):
        self.formulas: dict = {}
        self.programs: dict = {}
        self.val = F.Val()

    def formula(self, phi) -> FeatureExpr:
        if phi not in self.formulas:
            self.formulas[phi] = self._formula(phi)
        return self.formulas[phi]

    def _formula(self, phi) -> FeatureExpr:
        if isinstance(phi, L.Top):
            return ONE
        if isinstance(phi, L.Prop):
            return F.Prop(phi.index)
        if isinstance(phi, L.Not):
            return F.affine([-1], [self.formula(phi.arg)], 1)
        if isinstance(phi, L.And):
            return F.relu(F.affine([1, 1], [self.formula(phi.left), self.formula(phi.right)], -1))
        if isinstance(phi, L.DiamondProg) and phi.arg == L.TOP:
            return self.program(phi.program)[0]
        if isinstance(phi, L.UniqueProg) and phi.arg == L.TOP:
            f, lo, hi = self.program(phi.program)
            return F.if_zero(f, ZERO, F.if_zero(F.sub(hi, lo), ONE, ZERO))
        raise CompileError(f"formula is not in LDDL normal form: {format_formula(phi)}")

    def program(self, pi) -> tuple:
        if pi not in self.programs:
            self.programs[pi] = self._program(pi)
        return self.programs[pi]

    def _program(self, pi) -> tuple:
        if pi == L.STAY:
            return ONE, self.val, self.val
        if isinstance(pi, L.Union):
            f1, lo1, hi1 = self.program(pi.left)
            f2, lo2, hi2 = self.program(pi.right)
            lo = F.if_zero(f1, lo2, F.if_zero(f2, lo1, F.fmin(lo1, lo2)))
            hi = F.if_zero(f1, hi2, F.if_zero(f2, hi1, F.fmax(hi1, hi2)))
            return F.fmax(f1, f2), lo, hi
        if isinstance(pi, L.Seq) and isinstance(pi.first, L.Test):
            c = self.formula(pi.first.cond)
            f, lo, hi = self.program(pi.second)
            return F.if_zero(c, ZERO, f), F.if_zero(c, ZERO, lo), F.if_zero(c, ZERO, hi)
        if isinstance(pi, L.Seq) and isinstance(pi.first, L.Step):
            f, lo, hi = self.program(pi.second)
            # neighbors outside the domain are padded with values that cannot win
            pad_lo = F.LocalMax(F.LocalMax(lo))
            pad_hi = F.local_min(F.local_min(hi))
            return (F.LocalMax(f),
                    F.local_min(F.if_zero(f, pad_lo, lo)),
                    F.LocalMax(F.if_zero(f, pad_hi, hi)))
        raise CompileError(f"program is not in normal form: {L.format_program(pi)}")


def lddl_feature(phi: L.Formula) -> FeatureExpr:
    return _Lddl().formula(normalize_lddl(phi))


def compile_lddl_semilinear(phi: L.Formula) -> GnnClassifier:
    """Keyed inputs only: uniqueness reads as 'least key = greatest key'."""
    return finish(lddl_feature(phi), CompileTarget.LDDL_LOCALMAX_SEMILINEAR,
                  AcceptancePolicy.POS_NONPOS, Mode.EXACT, format_formula(phi))
