"""The .kir model format.

    (classifier policy=">=1/<=0" mode=exact [meta="..."] EXPR)

EXPR is built from (prop i), (val), (const q), (affine (c..) b e..), (ifpos a b c),
(relu e), (heaviside e), (square e), (triwave e), (sigmoid e), (localmax e),
(localsum e) and (globalsum e).  Subterms used more than once are written once
inside a `(let ((s0 EXPR) ...) BODY)` wrapper and referenced as `(ref s0)`.

Both directions are iterative so that deep compiled models do not hit the
recursion limit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import scalar as S
from .features import (AGGREGATES, AcceptancePolicy, Aggregate, Apply, FeatureExpr,
                       GnnClassifier, Prop, Val, feature_primitives)
from .rational import format_rational, parse_rational
from .scalar import Mode

UNARY_OPS = ("relu", "heaviside", "square", "triwave", "sigmoid")


class KirError(ValueError):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(where + message)


# ---------------------------------------------------------------- writing

@dataclass(eq=False)
class _Flat:
    head: str
    payload: tuple      # numbers / prop index, rendered before the children
    kids: list


def _flatten(expr: FeatureExpr) -> _Flat:
    """Expand every Apply into one node per scalar primitive, keeping sharing."""
    done: dict = {}
    stack = [(expr, False)]
    while stack:
        node, ready = stack.pop()
        if id(node) in done:
            continue
        if not ready:
            stack.append((node, True))
            stack.extend((c, False) for c in reversed(node.children()))
            continue
        if isinstance(node, Prop):
            done[id(node)] = _Flat("prop", (node.index,), [])
        elif isinstance(node, Val):
            done[id(node)] = _Flat("val", (), [])
        elif isinstance(node, Aggregate):
            done[id(node)] = _Flat(node.kind, (), [done[id(node.arg)]])
        else:
            done[id(node)] = _flatten_fn(node.fn, [done[id(a)] for a in node.args])
    return done[id(expr)]


def _flatten_fn(fn: S.ScalarFn, args: list) -> _Flat:
    memo: dict = {}
    stack = [(fn, False)]
    while stack:
        f, ready = stack.pop()
        if id(f) in memo:
            continue
        if isinstance(f, S.Arg):
            memo[id(f)] = args[f.index]
            continue
        kids = _fn_kids(f)
        if not ready:
            stack.append((f, True))
            stack.extend((k, False) for k in reversed(kids))
            continue
        sub = [memo[id(k)] for k in kids]
        if isinstance(f, S.Const):
            memo[id(f)] = _Flat("const", (f.value,), [])
        elif isinstance(f, S.Affine):
            memo[id(f)] = _Flat("affine", (tuple(f.coeffs), f.bias), sub)
        elif isinstance(f, S.IfPos):
            memo[id(f)] = _Flat("ifpos", (), sub)
        else:
            memo[id(f)] = _Flat(f.op, (), sub)
    return memo[id(fn)]


def _fn_kids(f) -> list:
    if isinstance(f, S.Affine):
        return list(f.terms)
    if isinstance(f, S.IfPos):
        return [f.cond, f.then_, f.else_]
    if isinstance(f, (S.Arg, S.Const)):
        return []
    return [f.x]


def _render_payload(node: _Flat) -> str:
    if node.head == "prop":
        return f" {node.payload[0]}"
    if node.head == "const":
        return " " + format_rational(node.payload[0])
    if node.head == "affine":
        coeffs, bias = node.payload
        return " (" + " ".join(format_rational(c) for c in coeffs) + ") " + format_rational(bias)
    return ""


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def write_expr(expr: FeatureExpr) -> str:
    root = _flatten(expr)
    # post-order from the root, first visit wins; counts edge multiplicity
    order, indeg, seen = [], {}, set()
    stack = [(root, False)]
    while stack:
        node, ready = stack.pop()
        if ready:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for k in reversed(node.kids):
            indeg[id(k)] = indeg.get(id(k), 0) + 1
            if id(k) not in seen:
                stack.append((k, False))
    shared = [n for n in order
              if indeg.get(id(n), 0) > 1 and n.kids and n is not root]
    names = {id(n): f"s{i}" for i, n in enumerate(shared)}

    text: dict = {}

    def ref(k: _Flat) -> str:
        return f"(ref {names[id(k)]})" if id(k) in names else text[id(k)]

    for node in order:
        parts = "".join(" " + ref(k) for k in node.kids)
        text[id(node)] = f"({node.head}{_render_payload(node)}{parts})"
    body = text[id(root)]
    if not shared:
        return body
    binds = "\n".join(f"  ({names[id(n)]} {text[id(n)]})" for n in shared)
    return f"(let (\n{binds})\n  {body})"


def write_model(c: GnnClassifier) -> str:
    head = f"(classifier policy={_quote(c.policy.value)} mode={c.mode.value}"
    if c.metadata:
        head += f" meta={_quote(c.metadata)}"
    body = write_expr(c.expr)
    sep = "\n" if "\n" in body else " "
    return f"{head}{sep}{body})"


# ---------------------------------------------------------------- reading

_TOKEN = re.compile(r'''
    (?P<ws>\s+|;[^\n]*)
  | (?P<open>\()
  | (?P<close>\))
  | (?P<attr>[a-z_]+=(?:"(?:[^"\\]|\\.)*"|[^\s()"]+))
  | (?P<atom>[^\s()"]+)
''', re.X)


@dataclass
class _Tok:
    kind: str
    text: str
    pos: int


def _position(text: str, pos: int) -> tuple:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _tokenize(text: str) -> list:
    toks, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise KirError("unexpected character", *_position(text, pos))
        if m.lastgroup != "ws":
            toks.append(_Tok(m.lastgroup, m.group(), pos))
        pos = m.end()
    return toks


@dataclass
class _List:
    items: list
    pos: int


def _read_sexpr(text: str):
    toks = _tokenize(text)
    if not toks:
        raise KirError("empty model", 1, 1)
    stack: list = []
    root = None
    for i, t in enumerate(toks):
        if root is not None:
            raise KirError("trailing input after model", *_position(text, t.pos))
        if t.kind == "open":
            stack.append(_List([], t.pos))
        elif t.kind == "close":
            if not stack:
                raise KirError("unbalanced ')'", *_position(text, t.pos))
            done = stack.pop()
            if stack:
                stack[-1].items.append(done)
            else:
                root = done
        else:
            if not stack:
                raise KirError("expected '('", *_position(text, t.pos))
            stack[-1].items.append(t)
    if stack:
        raise KirError("unterminated '('", *_position(text, stack[-1].pos))
    return root


def _unquote(raw: str) -> str:
    out, i = [], 1
    while i < len(raw) - 1:
        ch = raw[i]
        if ch == "\\":
            nxt = raw[i + 1]
            out.append("\n" if nxt == "n" else nxt)
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.bindings: dict = {}

    def err(self, msg: str, pos: int):
        return KirError(msg, *_position(self.text, pos))

    def head(self, node) -> str:
        if not isinstance(node, _List) or not node.items or not isinstance(node.items[0], _Tok) \
                or node.items[0].kind != "atom":
            pos = node.pos
            raise self.err("expected a (keyword ...) form", pos)
        return node.items[0].text

    def number(self, tok):
        if not isinstance(tok, _Tok) or tok.kind != "atom":
            raise self.err("expected a rational literal", tok.pos)
        try:
            return parse_rational(tok.text)
        except ValueError as e:
            raise self.err(str(e), tok.pos) from None

    def expr(self, root) -> FeatureExpr:
        """Convert an s-expression into a FeatureExpr, iteratively."""
        built: dict = {}
        stack = [(root, False)]
        while stack:
            node, ready = stack.pop()
            if id(node) in built:
                continue
            if not isinstance(node, _List):
                raise self.err("expected an expression", node.pos)
            h = self.head(node)
            kids = self.expr_children(node, h)
            if not ready:
                stack.append((node, True))
                stack.extend((k, False) for k in reversed(kids) if id(k) not in built)
                continue
            built[id(node)] = self.build(node, h, [built[id(k)] for k in kids])
        return built[id(root)]

    def expr_children(self, node: _List, h: str) -> list:
        items = node.items[1:]
        if h in ("prop", "const", "ref", "val"):
            return []
        if h == "affine":
            return items[2:]
        return items

    def expect(self, node: _List, n: int, h: str):
        if len(node.items) - 1 != n:
            raise self.err(f"({h} ...) takes {n} argument(s), got {len(node.items) - 1}", node.pos)

    def build(self, node: _List, h: str, kids: list) -> FeatureExpr:
        items = node.items[1:]
        if h == "prop":
            self.expect(node, 1, h)
            q = self.number(items[0])
            if q.denominator != 1 or q < 1:
                raise self.err("prop index must be a positive integer", items[0].pos)
            return Prop(int(q))
        if h == "val":
            self.expect(node, 0, h)
            return Val()
        if h == "const":
            self.expect(node, 1, h)
            return Apply(S.Const(self.number(items[0])), [])
        if h == "ref":
            self.expect(node, 1, h)
            name = items[0].text if isinstance(items[0], _Tok) else ""
            if name not in self.bindings:
                raise self.err(f"undefined reference {name!r}", node.pos)
            return self.bindings[name]
        if h == "affine":
            if len(items) < 2 or not isinstance(items[0], _List):
                raise self.err("(affine (c1 .. ck) b e1 .. ek) expected", node.pos)
            coeffs = [self.number(t) for t in items[0].items]
            bias = self.number(items[1])
            if len(coeffs) != len(kids):
                raise self.err(f"affine has {len(coeffs)} coefficients but {len(kids)} terms", node.pos)
            return Apply(S.Affine(coeffs, bias, [S.Arg(i) for i in range(len(kids))]), kids)
        if h == "ifpos":
            self.expect(node, 3, h)
            return Apply(S.IfPos(S.Arg(0), S.Arg(1), S.Arg(2)), kids)
        if h in UNARY_OPS:
            self.expect(node, 1, h)
            return Apply(S.UNARY[h](S.Arg(0)), kids)
        if h in AGGREGATES:
            self.expect(node, 1, h)
            return AGGREGATES[h](kids[0])
        raise self.err(f"unknown form {h!r}", node.pos)

    def body(self, node) -> FeatureExpr:
        if isinstance(node, _List) and node.items and isinstance(node.items[0], _Tok) \
                and node.items[0].text == "let":
            if len(node.items) != 3 or not isinstance(node.items[1], _List):
                raise self.err("(let ((name expr) ...) body) expected", node.pos)
            for b in node.items[1].items:
                if not (isinstance(b, _List) and len(b.items) == 2 and isinstance(b.items[0], _Tok)):
                    raise self.err("malformed let binding", getattr(b, "pos", node.pos))
                name = b.items[0].text
                if name in self.bindings:
                    raise self.err(f"duplicate binding {name!r}", b.pos)
                self.bindings[name] = self.expr(b.items[1])
            return self.expr(node.items[2])
        return self.expr(node)


def parse_expr(text: str) -> FeatureExpr:
    root = _read_sexpr(text)
    return _Reader(text).body(root)


def parse_model(text: str) -> GnnClassifier:
    root = _read_sexpr(text)
    r = _Reader(text)
    if r.head(root) != "classifier":
        raise r.err("model must start with (classifier ...)", root.pos)
    attrs, rest = {}, []
    for item in root.items[1:]:
        if isinstance(item, _Tok) and item.kind == "attr":
            key, raw = item.text.split("=", 1)
            if key in attrs:
                raise r.err(f"duplicate attribute {key!r}", item.pos)
            attrs[key] = (_unquote(raw) if raw.startswith('"') else raw, item.pos)
        else:
            rest.append(item)
    for key, (_, pos) in attrs.items():
        if key not in ("policy", "mode", "meta"):
            raise r.err(f"unknown attribute {key!r}", pos)
    if "policy" not in attrs or "mode" not in attrs:
        raise r.err("classifier needs policy= and mode=", root.pos)
    bands = {p.value: p for p in AcceptancePolicy}
    policy_text, ppos = attrs["policy"]
    if policy_text not in bands:
        raise r.err(f"unknown policy band {policy_text!r}", ppos)
    mode_text, mpos = attrs["mode"]
    modes = {m.value: m for m in Mode}
    if mode_text not in modes:
        raise r.err(f"mode must be exact or float, got {mode_text!r}", mpos)
    if len(rest) != 1:
        raise r.err("classifier takes exactly one expression", root.pos)
    expr = r.body(rest[0])
    mode = modes[mode_text]
    if mode is Mode.EXACT and "sigmoid" in feature_primitives(expr):
        raise r.err("sigmoid is not allowed in exact mode", root.pos)
    return GnnClassifier(expr, bands[policy_text], mode, attrs.get("meta", ("", 0))[0])
