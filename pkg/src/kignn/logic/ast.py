"""Formula and program ASTs shared by ML, GML, WGML and LDDL, plus printing.

ASTs are frozen dataclasses, so structural equality is parse-equality.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass


class Logic(enum.Enum):
    ML = "ml"
    GML = "gml"
    LDDL = "lddl"


class Formula:
    __slots__ = ()


class Program:
    __slots__ = ()


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Prop(Formula):
    index: int          # numbered from 1

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("props are numbered from 1")


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class DiamondGeq(Formula):
    grade: int
    arg: Formula

    def __post_init__(self):
        if self.grade < 1:
            raise ValueError("grade must be >= 1")


@dataclass(frozen=True)
class DiamondProg(Formula):
    program: Program
    arg: Formula


@dataclass(frozen=True)
class BoxProg(Formula):
    program: Program
    arg: Formula


@dataclass(frozen=True)
class UniqueProg(Formula):
    program: Program
    arg: Formula


@dataclass(frozen=True)
class Step(Program):
    pass


@dataclass(frozen=True)
class Test(Program):
    cond: Formula


@dataclass(frozen=True)
class Seq(Program):
    first: Program
    second: Program


@dataclass(frozen=True)
class Union(Program):
    left: Program
    right: Program


TOP = Top()
BOT = Not(TOP)
STEP = Step()
STAY = Test(TOP)


# ---------------------------------------------------------------- derived forms

def diamond(phi: Formula) -> Formula:
    return DiamondGeq(1, phi)


def box(phi: Formula) -> Formula:
    return Not(DiamondGeq(1, Not(phi)))


def diamond_leq(k: int, phi: Formula) -> Formula:
    return Not(DiamondGeq(k + 1, phi))


def diamond_eq(k: int, phi: Formula) -> Formula:
    return And(DiamondGeq(k, phi), Not(DiamondGeq(k + 1, phi)))


def lor(a: Formula, b: Formula) -> Formula:
    """Disjunction inside LDDL, which has no Or node."""
    return Not(And(Not(a), Not(b)))


def seq(*programs: Program) -> Program:
    """Right-nested sequence."""
    out = programs[-1]
    for p in reversed(programs[:-1]):
        out = Seq(p, out)
    return out


# ---------------------------------------------------------------- traversal

def subformulas(phi: Formula):
    """Every formula node (including those inside tests), parents first."""
    stack = [phi]
    while stack:
        f = stack.pop()
        yield f
        if isinstance(f, (Not, DiamondGeq)):
            stack.append(f.arg)
        elif isinstance(f, (And, Or)):
            stack += [f.right, f.left]
        elif isinstance(f, (DiamondProg, BoxProg, UniqueProg)):
            stack.append(f.arg)
            stack += [t.cond for t in program_atoms(f.program) if isinstance(t, Test)]


def program_atoms(pi: Program) -> list:
    if isinstance(pi, Seq):
        return program_atoms(pi.first) + program_atoms(pi.second)
    if isinstance(pi, Union):
        return program_atoms(pi.left) + program_atoms(pi.right)
    return [pi]


def max_prop(phi: Formula) -> int:
    return max((f.index for f in subformulas(phi) if isinstance(f, Prop)), default=0)


def is_ml(phi: Formula) -> bool:
    return all(f.grade == 1 for f in subformulas(phi) if isinstance(f, DiamondGeq))


def is_gml(phi: Formula) -> bool:
    return not any(isinstance(f, (DiamondProg, BoxProg, UniqueProg)) for f in subformulas(phi))


def is_lddl(phi: Formula) -> bool:
    return not any(isinstance(f, (Or, DiamondGeq)) for f in subformulas(phi))


def modal_depth(phi: Formula) -> int:
    if isinstance(phi, (Top, Prop)):
        return 0
    if isinstance(phi, Not):
        return modal_depth(phi.arg)
    if isinstance(phi, (And, Or)):
        return max(modal_depth(phi.left), modal_depth(phi.right))
    if isinstance(phi, DiamondGeq):
        return 1 + modal_depth(phi.arg)
    tests = [modal_depth(t.cond) for t in program_atoms(phi.program) if isinstance(t, Test)]
    return 1 + max([modal_depth(phi.arg)] + tests)


# ---------------------------------------------------------------- printing

def format_formula(phi: Formula) -> str:
    if isinstance(phi, Top):
        return "top"
    if isinstance(phi, Prop):
        return f"p{phi.index}"
    if isinstance(phi, Not):
        if phi.arg == TOP:
            return "bot"
        return "~" + format_formula(phi.arg)
    if isinstance(phi, And):
        return f"({format_formula(phi.left)} & {format_formula(phi.right)})"
    if isinstance(phi, Or):
        return f"({format_formula(phi.left)} | {format_formula(phi.right)})"
    if isinstance(phi, DiamondGeq):
        head = "<>" if phi.grade == 1 else f"<>{{>={phi.grade}}}"
        return head + format_formula(phi.arg)
    if isinstance(phi, DiamondProg):
        return f"<{format_program(phi.program)}>{format_formula(phi.arg)}"
    if isinstance(phi, BoxProg):
        return f"[{format_program(phi.program)}]{format_formula(phi.arg)}"
    if isinstance(phi, UniqueProg):
        return f"<{format_program(phi.program)}>=1 {format_formula(phi.arg)}"
    raise TypeError(f"not a formula: {phi!r}")


def format_program(pi: Program) -> str:
    if isinstance(pi, Step):
        return "step"
    if isinstance(pi, Test):
        return "stay" if pi.cond == TOP else f"test({format_formula(pi.cond)})"
    if isinstance(pi, Seq):
        left = format_program(pi.first)
        if isinstance(pi.first, (Seq, Union)):
            left = f"({left})"
        right = format_program(pi.second)
        if isinstance(pi.second, Union):
            right = f"({right})"
        return f"{left};{right}"
    if isinstance(pi, Union):
        right = format_program(pi.right)
        if isinstance(pi.right, Union):
            right = f"({right})"
        return f"{format_program(pi.left)} + {right}"
    raise TypeError(f"not a program: {pi!r}")
