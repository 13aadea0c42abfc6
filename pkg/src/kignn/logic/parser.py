"""Recursive-descent parser for the ML / GML / LDDL surface syntax.

    phi  ::= top | bot | pN | ~phi | phi & phi | phi | phi | <>phi | []phi
           | <>{>=N}phi | <>{<=N}phi | <>{=N}phi | (phi)
           | <prog>phi | [prog]phi | <prog>=1 phi          (LDDL only)
    prog ::= step | stay | test(phi) | prog;prog | prog + prog | (prog)

`~` and modalities bind tightest, then `&`, then `|`; `;` binds tighter than
`+`.  Binary operators are left-associative except `;`, which nests to the
right.  In LDDL, `<>`/`[]` abbreviate `<step>`/`[step]`, and `|` is expanded
since the LDDL AST has no disjunction.
"""

from __future__ import annotations

from .ast import (BOT, STAY, STEP, TOP, And, BoxProg, DiamondGeq, DiamondProg, Formula, Logic,
                  Not, Or, Program, Prop, Seq, Test, Union, UniqueProg, diamond_eq,
                  diamond_leq, is_ml, lor)


class FormulaSyntaxError(ValueError):
    def __init__(self, message: str, pos: int):
        self.pos = pos
        super().__init__(f"col {pos + 1}: {message}")


class _Parser:
    def __init__(self, text: str, logic: Logic):
        self.text, self.logic, self.i = text, logic, 0

    # -- lexing helpers
    def ws(self):
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def peek(self, s: str) -> bool:
        self.ws()
        return self.text.startswith(s, self.i)

    def eat(self, s: str) -> bool:
        if self.peek(s):
            self.i += len(s)
            return True
        return False

    def expect(self, s: str):
        if not self.eat(s):
            raise self.err(f"expected {s!r}")

    def err(self, msg: str, pos: int | None = None):
        return FormulaSyntaxError(msg, self.i if pos is None else pos)

    def word(self, w: str) -> bool:
        """Keyword match that does not swallow a longer identifier."""
        if self.peek(w):
            end = self.i + len(w)
            if end == len(self.text) or not self.text[end].isalnum():
                self.i = end
                return True
        return False

    def number(self) -> int:
        self.ws()
        start = self.i
        while self.i < len(self.text) and self.text[self.i].isdigit():
            self.i += 1
        if start == self.i:
            raise self.err("expected a number")
        return int(self.text[start:self.i])

    # -- formulas
    def formula(self) -> Formula:
        left = self.conj()
        while self.eat("|"):
            right = self.conj()
            left = lor(left, right) if self.logic is Logic.LDDL else Or(left, right)
        return left

    def conj(self) -> Formula:
        left = self.unary()
        while self.eat("&"):
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        self.ws()
        start = self.i
        if self.eat("~"):
            return Not(self.unary())
        if self.eat("<>"):
            if self.eat("{"):
                return self.graded(start)
            return self.step_modal(diamond=True)
        if self.eat("[]"):
            return self.step_modal(diamond=False)
        if self.logic is Logic.LDDL and self.peek("<"):
            self.i += 1
            pi = self.program()
            self.expect(">")
            if self.text.startswith("=1", self.i):
                self.i += 2
                return UniqueProg(pi, self.unary())
            return DiamondProg(pi, self.unary())
        if self.logic is Logic.LDDL and self.peek("["):
            self.i += 1
            pi = self.program()
            self.expect("]")
            return BoxProg(pi, self.unary())
        return self.atom()

    def step_modal(self, diamond: bool) -> Formula:
        arg = self.unary()
        if self.logic is Logic.LDDL:
            return DiamondProg(STEP, arg) if diamond else BoxProg(STEP, arg)
        return DiamondGeq(1, arg) if diamond else Not(DiamondGeq(1, Not(arg)))

    def graded(self, start: int) -> Formula:
        if self.logic is Logic.LDDL:
            raise self.err("graded modalities are not part of LDDL", start)
        if self.eat(">=") or self.eat("≥"):
            op = ">="
        elif self.eat("<=") or self.eat("≤"):
            op = "<="
        elif self.eat("="):
            op = "="
        else:
            raise self.err("expected >=, <= or = in grade")
        npos = self.i
        k = self.number()
        if k < 1:
            raise self.err("grade must be >= 1", npos)
        self.expect("}")
        arg = self.unary()
        if op == ">=":
            return DiamondGeq(k, arg)
        if op == "<=":
            return diamond_leq(k, arg)
        return diamond_eq(k, arg)

    def atom(self) -> Formula:
        self.ws()
        if self.word("top"):
            return TOP
        if self.word("bot"):
            return BOT
        if self.peek("p") and self.i + 1 < len(self.text) and self.text[self.i + 1].isdigit():
            pos = self.i
            self.i += 1
            n = self.number()
            if n < 1:
                raise self.err("props are numbered from 1", pos)
            return Prop(n)
        if self.eat("("):
            f = self.formula()
            self.expect(")")
            return f
        if self.i >= len(self.text):
            raise self.err("unexpected end of input")
        raise self.err(f"unexpected {self.text[self.i]!r}")

    # -- programs
    def program(self) -> Program:
        left = self.seq()
        while self.eat("+"):
            left = Union(left, self.seq())
        return left

    def seq(self) -> Program:
        # right-nested: a;b;c is a;(b;c)
        items = [self.patom()]
        while self.eat(";"):
            items.append(self.patom())
        out = items[-1]
        for p in reversed(items[:-1]):
            out = Seq(p, out)
        return out

    def patom(self) -> Program:
        if self.word("step"):
            return STEP
        if self.word("stay"):
            return STAY
        if self.word("test"):
            self.expect("(")
            f = self.formula()
            self.expect(")")
            return Test(f)
        if self.eat("("):
            p = self.program()
            self.expect(")")
            return p
        raise self.err("expected a program (step, stay, test(...))")


def parse_formula(text: str, logic: Logic | str = Logic.GML) -> Formula:
    logic = Logic(logic)
    p = _Parser(text, logic)
    f = p.formula()
    p.ws()
    if p.i != len(text):
        raise p.err(f"unexpected {text[p.i]!r}")
    if logic is Logic.ML and not is_ml(f):
        raise FormulaSyntaxError("ML allows only grade 1 diamonds", 0)
    return f
