"""The `kignn` command line.

Exit codes: 0 when everything checked holds, 1 when a mismatch or
counterexample is found, 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import compilers as C
from . import workbench as wb
from .equivalence import (bisimilar, cr_signature, find_covering, r_bisimilar, verify_covering)
from .features import FeatureError, classify, uses_val
from .graphs import GraphError, as_keyed, parse_graph, random_keying
from .kir import KirError, parse_model, write_model
from .logic import (FormulaSyntaxError, Logic, LogicError, format_formula,
                    modelcheck_gml, modelcheck_lddl, normalize_lddl, parse_formula, wgml_membership)
from .rational import format_rational

FORMULA_TARGETS = {
    "gml_localsum_relu": (C.compile_gml_localsum, Logic.GML),
    "ml_localmax_relu": (C.compile_ml_localmax, Logic.ML),
    "wgml_top_localmax_relu": (C.compile_wgml_top, Logic.GML),
    "wgml_modal_localmax_sigmoid": (C.compile_wgml_modal, Logic.GML),
    "lddl_localmax_semilinear": (C.compile_lddl_semilinear, Logic.LDDL),
}
GRAPH_TARGETS = {
    "isotype_localmax_semilinear": C.compile_isotype_localmax,
    "isotype_localsum_square": C.compile_isotype_localsum_square,
    "isotype_globalsum_semilinear": C.compile_isotype_globalsum,
}
ADDRESS_TARGET = "uniqaddr_localsum"
ALL_TARGETS = sorted(FORMULA_TARGETS) + sorted(GRAPH_TARGETS) + [ADDRESS_TARGET] + \
    [f"fixture:{name}" for name in C.FIXTURES]

ERRORS = (KirError, GraphError, FormulaSyntaxError, LogicError, C.CompileError, FeatureError,
          wb.WorkbenchError, OSError, ValueError)


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _graph(path: str):
    return parse_graph(_read(path))


def _emit(args, text: str, data: dict):
    if args.json:
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------- commands

def cmd_parse(args) -> int:
    logic = Logic(args.logic)
    phi = parse_formula(args.formula, logic)
    data = {"logic": logic.value, "formula": format_formula(phi)}
    lines = [f"formula: {data['formula']}"]
    if logic is Logic.LDDL:
        data["normal_form"] = format_formula(normalize_lddl(phi))
        lines.append(f"normal form: {data['normal_form']}")
    else:
        data["wgml"] = wgml_membership(phi).kind.value
        lines.append(f"weakly graded: {data['wgml']}")
    _emit(args, "\n".join(lines), data)
    return 0


def cmd_check(args) -> int:
    logic = Logic(args.logic)
    phi = parse_formula(args.formula, logic)
    g = _graph(args.graph)
    holds = modelcheck_lddl(g, phi) if logic is Logic.LDDL else modelcheck_gml(g, phi)
    _emit(args, "true" if holds else "false", {"formula": format_formula(phi), "holds": holds})
    return 0


def _parse_addresses(text: str) -> tuple:
    """`<f1, f2> != <g1>` into two formula lists."""
    parts = text.split("!=")
    if len(parts) != 2:
        raise UsageError("address formula must look like '<f1, f2> != <g1, g2>'")
    out = []
    for part in parts:
        part = part.strip()
        if not (part.startswith("<") and part.endswith(">")):
            raise UsageError("each address must be written <f1, ..., fn>")
        out.append([parse_formula(f.strip(), Logic.GML) for f in part[1:-1].split(",")])
    return tuple(out)


def cmd_compile(args) -> int:
    t = args.target
    if t in FORMULA_TARGETS:
        if args.formula is None:
            raise UsageError(f"target {t} needs --formula")
        comp, logic = FORMULA_TARGETS[t]
        c = comp(parse_formula(args.formula, logic))
    elif t in GRAPH_TARGETS:
        if args.graph is None:
            raise UsageError(f"target {t} needs --graph")
        c = GRAPH_TARGETS[t](_graph(args.graph).pointed)
    elif t == ADDRESS_TARGET:
        if args.formula is None:
            raise UsageError(f"target {t} needs --formula '<f1,..> != <g1,..>'")
        a, b = _parse_addresses(args.formula)
        c = C.compile_unique_address(a, b, args.submode)
    elif t.startswith("fixture:"):
        c = C.fixture_classifier(t.split(":", 1)[1])
    else:
        raise UsageError(f"unknown target {t!r}; choose from {', '.join(ALL_TARGETS)}")
    text = write_model(c)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    _emit(args, text if not args.output else f"wrote {args.output}",
          {"target": t, "metadata": c.metadata, "output": args.output, "model": text})
    return 0


def cmd_eval(args) -> int:
    c = parse_model(_read(args.model))
    g = _graph(args.graph)
    if args.keying_seed is not None or (g.keying is None and uses_val(c.expr)):
        g = as_keyed(g.pointed, random_keying(g.graph, args.keying_seed or 0))
    d = classify(c, g)
    out = format_rational(d.output) if c.mode.value == "exact" else repr(float(d.output))
    keys = None if g.keying is None else [format_rational(q) for q in g.keying.values]
    _emit(args, f"output: {out}\ndecision: {'accept' if d.accept else 'reject'}",
          {"output": out, "accept": d.accept, "keys": keys})
    return 0


def cmd_cr(args) -> int:
    sig = cr_signature(_graph(args.graph), args.rounds)
    _emit(args, f"point colors: {' '.join(map(str, sig.colors))}\nstable round: {sig.stable_round}",
          {"colors": list(sig.colors), "stable_round": sig.stable_round})
    return 0


def cmd_bisim(args) -> int:
    g, h = _graph(args.g), _graph(args.h)
    if args.rounds is not None:
        ok = r_bisimilar(g, h, args.rounds)
        _emit(args, f"{args.rounds}-bisimilar: {'yes' if ok else 'no'}",
              {"rounds": args.rounds, "bisimilar": ok})
        return 0
    rel = bisimilar(g, h)
    pairs = sorted(rel.pairs) if rel else []
    text = "bisimilar: no" if rel is None else \
        "bisimilar: yes\npairs: " + " ".join(f"{x}-{y}" for x, y in pairs)
    _emit(args, text, {"bisimilar": rel is not None, "pairs": [list(p) for p in pairs]})
    return 0


def cmd_cover(args) -> int:
    g, h = _graph(args.g), _graph(args.h)
    w = find_covering(g, h)
    if w is None:
        _emit(args, "covering: none", {"covering": None})
        return 0
    ok = verify_covering(g, h, w)
    _emit(args, "covering: " + " ".join(f"{x}->{y}" for x, y in sorted(w.mapping.items()))
          + f"\nverified: {'yes' if ok else 'no'}",
          {"covering": [[x, y] for x, y in sorted(w.mapping.items())], "verified": ok})
    return 0 if ok else 1


def cmd_invariance(args) -> int:
    c = parse_model(_read(args.model))
    r = wb.test_key_invariance(c, args.max_nodes, args.props, args.keyings, args.seed,
                               args.connected)
    _emit(args, r.text(), r.to_json())
    return 0 if r.ok else 1


def cmd_oracle(args) -> int:
    try:
        target = C.CompileTarget(args.target)
    except ValueError:
        raise UsageError(f"unknown target {args.target!r}; choose from "
                         f"{', '.join(t.value for t in C.CompileTarget)}") from None
    corpus = wb.default_corpus(target, args.max_nodes, args.count)
    r = wb.oracle_agreement(target, corpus, args.seed)
    _emit(args, r.text(), r.to_json())
    return 0 if r.passed else 1


def cmd_report(args) -> int:
    r = wb.separation_report(args.name, args.seed)
    _emit(args, r.text(), r.to_json())
    return 0 if r.passed else 1


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    # --json may come before or after the subcommand; SUPPRESS keeps the
    # subparser from resetting a flag given before it
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help="machine-readable output")
    p = argparse.ArgumentParser(prog="kignn", description=__doc__.splitlines()[0])
    p.add_argument("--json", action="store_true", help="machine-readable output")
    sub = p.add_subparsers(dest="command", required=True)
    logics = [lg.value for lg in Logic]

    s = sub.add_parser("parse", parents=[common], help="parse and pretty-print a formula")
    s.add_argument("--logic", choices=logics, default="gml")
    s.add_argument("formula")
    s.set_defaults(func=cmd_parse)

    s = sub.add_parser("check", parents=[common], help="model-check a formula on a graph")
    s.add_argument("--logic", choices=logics, default="gml")
    s.add_argument("--graph", required=True)
    s.add_argument("formula")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("compile", parents=[common], help="compile to a .kir classifier")
    s.add_argument("--target", required=True, help=", ".join(ALL_TARGETS))
    s.add_argument("--formula")
    s.add_argument("--graph")
    s.add_argument("--submode", choices=[m.value for m in C.AddressMode], default="semilinear")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_compile)

    s = sub.add_parser("eval", parents=[common], help="evaluate a classifier on a graph")
    s.add_argument("--model", required=True)
    s.add_argument("--graph", required=True)
    s.add_argument("--keying-seed", type=int)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("cr", parents=[common], help="color-refinement signature of the point")
    s.add_argument("--graph", required=True)
    s.add_argument("--rounds", type=int)
    s.set_defaults(func=cmd_cr)

    s = sub.add_parser("bisim", parents=[common], help="bisimilarity of two pointed graphs")
    s.add_argument("g")
    s.add_argument("h")
    s.add_argument("--rounds", type=int)
    s.set_defaults(func=cmd_bisim)

    s = sub.add_parser("cover", parents=[common], help="search a covering map g -> h")
    s.add_argument("g")
    s.add_argument("h")
    s.set_defaults(func=cmd_cover)

    s = sub.add_parser("invariance", parents=[common], help="look for key-dependent decisions")
    s.add_argument("--model", required=True)
    s.add_argument("--max-nodes", type=int, default=3)
    s.add_argument("--props", type=int, default=1)
    s.add_argument("--keyings", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--connected", action="store_true", help="connected graphs only")
    s.set_defaults(func=cmd_invariance)

    s = sub.add_parser("oracle", parents=[common], help="compiler vs semantic oracle")
    s.add_argument("--target", required=True, help=", ".join(t.value for t in C.CompileTarget))
    s.add_argument("--max-nodes", type=int, default=4)
    s.add_argument("--count", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("report", parents=[common], help="separation reports")
    s.add_argument("name", choices=wb.REPORTS)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"kignn {args.command}: {exc}", file=sys.stderr)
        return 2
    except ERRORS as exc:
        print(f"kignn {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
