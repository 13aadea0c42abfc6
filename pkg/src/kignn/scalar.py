"""Combination functions: trees over affine maps, ifPos, ReLU, Heaviside,
squaring, the triangle wave and the sigmoid.

Scalars are `Fraction` in EXACT mode and `float` in FLOAT mode.  Nodes
compare by identity; use `fn_text` for structural comparison.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .rational import format_rational
from .vectors import sigmoid_scalar


class Mode(enum.Enum):
    EXACT = "exact"
    FLOAT = "float"


class ScalarFn:
    __slots__ = ()

    def children(self) -> tuple:
        return ()


class Arg(ScalarFn):
    __slots__ = ("index",)

    def __init__(self, index: int):
        if index < 0:
            raise ValueError("argument index must be nonnegative")
        self.index = index


class Const(ScalarFn):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = Fraction(value)


class Affine(ScalarFn):
    """sum(c_i * t_i) + bias over sub-functions t_i."""

    __slots__ = ("coeffs", "bias", "terms")

    def __init__(self, coeffs: Sequence, bias, terms: Sequence[ScalarFn]):
        if len(coeffs) != len(terms):
            raise ValueError("affine needs one coefficient per term")
        self.coeffs = tuple(Fraction(c) for c in coeffs)
        self.bias = Fraction(bias)
        self.terms = tuple(terms)

    def children(self):
        return self.terms


class IfPos(ScalarFn):
    """then_ if cond > 0 else else_."""

    __slots__ = ("cond", "then_", "else_")

    def __init__(self, cond: ScalarFn, then_: ScalarFn, else_: ScalarFn):
        self.cond, self.then_, self.else_ = cond, then_, else_

    def children(self):
        return (self.cond, self.then_, self.else_)


class Unary(ScalarFn):
    __slots__ = ("x",)
    op = ""

    def __init__(self, x: ScalarFn):
        self.x = x

    def children(self):
        return (self.x,)


class ReLU(Unary):
    __slots__ = ()
    op = "relu"


class Heaviside(Unary):
    __slots__ = ()
    op = "heaviside"


class Square(Unary):
    __slots__ = ()
    op = "square"


class TriWave(Unary):
    __slots__ = ()
    op = "triwave"


class Sigmoid(Unary):
    __slots__ = ()
    op = "sigmoid"


UNARY = {cls.op: cls for cls in (ReLU, Heaviside, Square, TriWave, Sigmoid)}


def _walk(fn: ScalarFn):
    seen = set()
    stack = [fn]
    while stack:
        f = stack.pop()
        if id(f) in seen:
            continue
        seen.add(id(f))
        yield f
        stack.extend(f.children())


def arity(fn: ScalarFn) -> int:
    """One more than the largest argument index used (0 for closed trees)."""
    return max((f.index + 1 for f in _walk(fn) if isinstance(f, Arg)), default=0)


def primitive_names(fn: ScalarFn) -> set:
    names = set()
    for f in _walk(fn):
        if isinstance(f, Unary):
            names.add(f.op)
        elif isinstance(f, Affine):
            names.add("affine")
        elif isinstance(f, IfPos):
            names.add("ifpos")
        elif isinstance(f, Const):
            names.add("const")
    return names


def is_exact_capable(fn: ScalarFn) -> bool:
    return "sigmoid" not in primitive_names(fn)


# ---------------------------------------------------------------- evaluation

def eval_scalar_fn(fn: ScalarFn, args: Sequence, mode: Mode = Mode.EXACT):
    """Evaluate on scalar inputs. EXACT gives Fractions, FLOAT gives floats."""
    if len(args) != arity(fn):
        raise ValueError(f"arity mismatch: function takes {arity(fn)} inputs, got {len(args)}")
    if mode is Mode.EXACT:
        if not is_exact_capable(fn):
            raise ValueError("sigmoid cannot be evaluated in exact mode")
        if any(isinstance(a, float) for a in args):
            raise ValueError("exact mode needs rational inputs")
        vals = [Fraction(a) for a in args]
    else:
        vals = [float(a) for a in args]
    return _eval(fn, vals, mode is Mode.EXACT, {})


def _eval(fn, args, exact, memo):
    key = id(fn)
    if key in memo:
        return memo[key]
    if isinstance(fn, Arg):
        r = args[fn.index]
    elif isinstance(fn, Const):
        r = fn.value if exact else float(fn.value)
    elif isinstance(fn, Affine):
        if exact:
            r = fn.bias + sum((c * _eval(t, args, exact, memo) for c, t in zip(fn.coeffs, fn.terms)),
                              Fraction(0))
        else:
            r = float(fn.bias)
            for c, t in zip(fn.coeffs, fn.terms):
                if c != 0:
                    r += float(c) * _eval(t, args, exact, memo)
    elif isinstance(fn, IfPos):
        c = _eval(fn.cond, args, exact, memo)
        r = _eval(fn.then_ if c > 0 else fn.else_, args, exact, memo)
    else:
        x = _eval(fn.x, args, exact, memo)
        if isinstance(fn, ReLU):
            r = x if x > 0 else x * 0
        elif isinstance(fn, Heaviside):
            r = (Fraction(1) if x >= 0 else Fraction(0)) if exact else (1.0 if x >= 0 else 0.0)
        elif isinstance(fn, Square):
            r = x * x
        elif isinstance(fn, TriWave):
            r = abs((x % 2) - 1)
        elif isinstance(fn, Sigmoid):
            if exact:
                raise ValueError("sigmoid cannot be evaluated in exact mode")
            r = sigmoid_scalar(x)
        else:
            raise TypeError(f"unknown scalar node {fn!r}")
    memo[key] = r
    return r


def eval_fn_arrays(fn: ScalarFn, args: Sequence, backend, shape, memo=None):
    """Evaluate a tree over array arguments using a vectors backend."""
    memo = {} if memo is None else memo
    key = id(fn)
    if key in memo:
        return memo[key]
    if isinstance(fn, Arg):
        r = args[fn.index]
    elif isinstance(fn, Const):
        r = backend.const(fn.value, shape)
    elif isinstance(fn, Affine):
        xs = [eval_fn_arrays(t, args, backend, shape, memo) for t in fn.terms]
        r = backend.affine(fn.coeffs, xs, fn.bias, shape)
    elif isinstance(fn, IfPos):
        r = backend.ifpos(eval_fn_arrays(fn.cond, args, backend, shape, memo),
                          eval_fn_arrays(fn.then_, args, backend, shape, memo),
                          eval_fn_arrays(fn.else_, args, backend, shape, memo))
    else:
        x = eval_fn_arrays(fn.x, args, backend, shape, memo)
        r = getattr(backend, fn.op)(x)
    memo[key] = r
    return r


# ---------------------------------------------------------------- building

def substitute(fn: ScalarFn, inputs: Sequence[ScalarFn], memo=None) -> ScalarFn:
    """Replace Arg(i) by inputs[i], keeping shared subtrees shared."""
    memo = {} if memo is None else memo
    key = id(fn)
    if key in memo:
        return memo[key]
    if isinstance(fn, Arg):
        r = inputs[fn.index]
    elif isinstance(fn, Const):
        r = fn
    elif isinstance(fn, Affine):
        r = Affine(fn.coeffs, fn.bias, [substitute(t, inputs, memo) for t in fn.terms])
    elif isinstance(fn, IfPos):
        r = IfPos(*(substitute(t, inputs, memo) for t in fn.children()))
    else:
        r = type(fn)(substitute(fn.x, inputs, memo))
    memo[key] = r
    return r


def neg(x: ScalarFn) -> ScalarFn:
    return Affine([-1], 0, [x])


def lin(coeffs, terms, bias=0) -> ScalarFn:
    return Affine(coeffs, bias, terms)


MACRO_ARITY = {"min": 2, "max": 2, "abs": 1, "ifZero": 3, "clip01": 1}


def build_macro(name: str, inputs: Sequence[ScalarFn]) -> ScalarFn:
    """Expand a named macro over the given input trees."""
    if name not in MACRO_ARITY:
        raise ValueError(f"unknown macro {name!r}")
    if len(inputs) != MACRO_ARITY[name]:
        raise ValueError(f"macro {name} takes {MACRO_ARITY[name]} inputs")
    if name == "min":
        x, y = inputs
        return Affine([1, -1], 0, [x, ReLU(Affine([1, -1], 0, [x, y]))])
    if name == "max":
        x, y = inputs
        return neg(build_macro("min", [neg(x), neg(y)]))
    if name == "abs":
        (x,) = inputs
        return Affine([1, 1], 0, [ReLU(x), ReLU(neg(x))])
    if name == "ifZero":
        x, a, b = inputs
        return IfPos(build_macro("abs", [x]), b, a)
    (x,) = inputs
    return Affine([1, -1], 0, [ReLU(x), ReLU(Affine([1], -1, [x]))])


def macro_fn(name: str) -> ScalarFn:
    """The macro as a function of Arg(0), Arg(1), ..."""
    return build_macro(name, [Arg(i) for i in range(MACRO_ARITY[name])])


# ---------------------------------------------------------------- piecewise

@dataclass(frozen=True)
class Interval:
    lo: Fraction | None          # None = -infinity
    hi: Fraction | None          # None = +infinity
    lo_closed: bool = False
    hi_closed: bool = False

    def contains(self, x) -> bool:
        if self.lo is not None and (x < self.lo or (x == self.lo and not self.lo_closed)):
            return False
        if self.hi is not None and (x > self.hi or (x == self.hi and not self.hi_closed)):
            return False
        return True


def eval_piecewise(pieces, x):
    for iv, (slope, icept) in pieces:
        if iv.contains(x):
            return Fraction(slope) * x + Fraction(icept)
    raise ValueError(f"{x} not covered")


def _validate_pieces(pieces):
    if not pieces:
        raise ValueError("need at least one piece")
    if pieces[0][0].lo is not None:
        raise ValueError("gap: first piece must start at -infinity")
    if pieces[-1][0].hi is not None:
        raise ValueError("gap: last piece must end at +infinity")
    for (a, _), (b, _) in zip(pieces, pieces[1:]):
        if a.hi is None or b.lo is None:
            raise ValueError("overlap: an unbounded piece is followed by another piece")
        if a.hi < b.lo:
            raise ValueError(f"gap between {a.hi} and {b.lo}")
        if a.hi > b.lo:
            raise ValueError(f"overlap between pieces ending at {a.hi} and starting at {b.lo}")
        if a.hi_closed and b.lo_closed:
            raise ValueError(f"overlap at {a.hi}")
        if not a.hi_closed and not b.lo_closed:
            raise ValueError(f"gap at {a.hi}")
    for iv, _ in pieces:
        if iv.lo is not None and iv.hi is not None:
            if iv.lo > iv.hi or (iv.lo == iv.hi and not (iv.lo_closed and iv.hi_closed)):
                raise ValueError(f"empty interval {iv}")


def compile_unary_piecewise_to_ffn(pieces) -> ScalarFn:
    """Turn a piecewise-affine unary function into an Affine/ReLU/Heaviside tree.

    `pieces` is a sorted list of (Interval, (slope, intercept)).  Each piece
    contributes f_k(clamp(x)) minus correction terms that cancel it outside
    its interval; the corrections are Heaviside steps whose boundary side
    follows the open/closed ends.
    """
    pieces = [(iv, (Fraction(s), Fraction(c))) for iv, (s, c) in pieces]
    _validate_pieces(pieces)
    x = Arg(0)
    if len(pieces) == 1:
        s, c = pieces[0][1]
        return Affine([s], c, [x])

    coeffs, terms, bias = [], [], Fraction(0)
    for iv, (s, c) in pieces:
        a, b = iv.lo, iv.hi
        if a is None:
            clamp = Affine([-1], b, [ReLU(Affine([-1], b, [x]))])           # min(x, b)
        elif b is None:
            clamp = Affine([1], a, [ReLU(Affine([1], -a, [x]))])            # max(x, a)
        else:
            inner = ReLU(Affine([1], -a, [x]))
            clamp = Affine([-1], b, [ReLU(Affine([-1], b - a, [inner]))])   # b - ReLU(b-a-ReLU(x-a))
        coeffs.append(s)
        terms.append(clamp)
        bias += c
        for end, is_lo in ((a, True), (b, False)):
            if end is None:
                continue
            fv = s * end + c
            if fv == 0:
                continue
            closed = iv.lo_closed if is_lo else iv.hi_closed
            # step argument: x-a / a-x on the left end, b-x / x-b on the right end
            t = Affine([1], -end, [x]) if is_lo == closed else Affine([-1], end, [x])
            if closed:          # outside indicator is 1 - H(t)
                coeffs.append(fv)
                bias -= fv
            else:               # outside indicator is H(t)
                coeffs.append(-fv)
            terms.append(Heaviside(t))
    return Affine(coeffs, bias, terms)


# ---------------------------------------------------------------- text

def fn_text(fn: ScalarFn, names: Sequence[str] | None = None) -> str:
    """S-expression rendering; Arg(i) prints as names[i] or `#i`."""
    if isinstance(fn, Arg):
        return names[fn.index] if names else f"#{fn.index}"
    if isinstance(fn, Const):
        return f"(const {format_rational(fn.value)})"
    if isinstance(fn, Affine):
        cs = " ".join(format_rational(c) for c in fn.coeffs)
        ts = "".join(" " + fn_text(t, names) for t in fn.terms)
        return f"(affine ({cs}) {format_rational(fn.bias)}{ts})"
    if isinstance(fn, IfPos):
        return "(ifpos " + " ".join(fn_text(t, names) for t in fn.children()) + ")"
    return f"({fn.op} {fn_text(fn.x, names)})"
