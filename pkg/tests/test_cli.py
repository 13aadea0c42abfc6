import json

import pytest

from kignn.cli import main
from kignn.graphs import as_keyed, builtin_graph, write_graph


@pytest.fixture
def gfile(tmp_path):
    def make(name, keys=None, prop_count=None):
        g = builtin_graph(name, prop_count=prop_count)
        if keys is not None:
            g = as_keyed(g.pointed, keys)
        path = tmp_path / f"{name.replace('(', '_').replace(')', '')}{'_k' if keys else ''}.graph"
        path.write_text(write_graph(g))
        return str(path)
    return make


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse(capsys):
    code, out, _ = run(capsys, "parse", "<>{>=2}p1")
    assert code == 0 and "formula: <>{>=2}p1" in out and "weakly graded" in out
    code, out, _ = run(capsys, "parse", "--logic", "lddl", "[step]p1")
    assert code == 0 and "normal form" in out


@pytest.mark.parametrize("argv", [["--json", "parse", "<>p1"], ["parse", "<>p1", "--json"]])
def test_json_flag_either_side(capsys, argv):
    code, out, _ = run(capsys, *argv)
    assert code == 0 and json.loads(out)["formula"] == "<>p1"


def test_parse_error_exit_2(capsys):
    code, _, err = run(capsys, "parse", "<>{>=0}p1")
    assert code == 2 and "error" in err


def test_usage_error_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_check(capsys, gfile):
    code, out, _ = run(capsys, "check", "--graph", gfile("star(2)"), "<>{>=2}top")
    assert code == 0 and out.strip() == "true"
    code, out, _ = run(capsys, "--json", "check", "--graph", gfile("star(1)"), "<>{>=2}top")
    assert json.loads(out)["holds"] is False


def test_compile_and_eval(capsys, gfile, tmp_path):
    model = str(tmp_path / "m.kir")
    code, out, _ = run(capsys, "compile", "--target", "gml_localsum_relu", "--formula",
                       "<>{>=2}top", "-o", model)
    assert code == 0 and "wrote" in out
    code, out, _ = run(capsys, "eval", "--model", model, "--graph", gfile("star(2)"))
    assert code == 0 and "output: 1" in out and "accept" in out
    code, out, _ = run(capsys, "--json", "eval", "--model", model, "--graph", gfile("star(1)"))
    assert json.loads(out) == {"output": "0", "accept": False, "keys": None}


def test_compile_graph_and_fixture_targets(capsys, gfile):
    code, out, _ = run(capsys, "compile", "--target", "isotype_localmax_semilinear",
                       "--graph", gfile("path(3)"))
    assert code == 0 and out.startswith("(classifier")
    code, out, _ = run(capsys, "compile", "--target", "fixture:q_even")
    assert code == 0 and "classifier" in out


@pytest.mark.parametrize("submode", ["semilinear", "sigmoid"])
def test_compile_unique_address(capsys, submode):
    code, out, _ = run(capsys, "--json", "compile", "--target", "uniqaddr_localsum",
                       "--formula", "<p1> != <top, p1>", "--submode", submode)
    assert code == 0 and json.loads(out)["model"].startswith("(classifier")


@pytest.mark.parametrize("argv", [
    ["compile", "--target", "gml_localsum_relu"],
    ["compile", "--target", "nope"],
    ["compile", "--target", "uniqaddr_localsum", "--formula", "p1"],
    ["compile", "--target", "isotype_localsum_square"],
])
def test_compile_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err


def test_eval_with_keys(capsys, gfile, tmp_path):
    model = tmp_path / "m.kir"
    model.write_text('(classifier policy=">0/<=0" mode=exact (localmax (val)))')
    code, out, _ = run(capsys, "eval", "--model", str(model), "--graph", gfile("star(2)", [0, 1, 3]))
    assert code == 0 and "output: 3" in out
    code, out, _ = run(capsys, "--json", "eval", "--model", str(model), "--graph",
                       gfile("star(2)"), "--keying-seed", "4")
    assert len(json.loads(out)["keys"]) == 3


def test_cr_bisim_cover(capsys, gfile):
    code, out, _ = run(capsys, "cr", "--graph", gfile("cycle(6)"))
    assert code == 0 and "stable round" in out
    code, out, _ = run(capsys, "bisim", gfile("star(1)"), gfile("star(2)"))
    assert code == 0 and "bisimilar: yes" in out
    code, out, _ = run(capsys, "bisim", gfile("star(1)"), gfile("single_node"), "--rounds", "1")
    assert code == 0 and "no" in out
    code, out, _ = run(capsys, "--json", "cover", gfile("cycle(6)"), gfile("cycle(3)"))
    assert code == 0 and json.loads(out)["verified"] is True
    code, out, _ = run(capsys, "cover", gfile("cycle(3)"), gfile("cycle(6)"))
    assert code == 0 and "none" in out


def test_invariance_exit_codes(capsys, tmp_path):
    leak = tmp_path / "leak.kir"
    leak.write_text('(classifier policy=">0/<=0" mode=exact (val))')
    code, out, _ = run(capsys, "invariance", "--model", str(leak), "--max-nodes", "1",
                       "--props", "0", "--keyings", "20")
    assert code == 1 and "COUNTEREXAMPLE" in out
    ok = tmp_path / "ok.kir"
    ok.write_text('(classifier policy=">=1/<=0" mode=exact (localmax (prop 1)))')
    code, out, _ = run(capsys, "invariance", "--model", str(ok), "--connected")
    assert code == 0 and "NO_VIOLATION_FOUND" in out
    code, _, _ = run(capsys, "invariance", "--model", str(ok), "--keyings", "1")
    assert code == 2


def test_oracle(capsys):
    code, out, _ = run(capsys, "oracle", "--target", "ml_localmax_relu", "--max-nodes", "3",
                       "--count", "10")
    assert code == 0 and "result: PASS" in out
    code, _, err = run(capsys, "oracle", "--target", "nope")
    assert code == 2 and "unknown target" in err


def test_report(capsys):
    code, out, _ = run(capsys, "--json", "report", "q_even_positive")
    assert code == 0 and json.loads(out)["result"] == "PASS"


def test_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "check", "--graph", str(tmp_path / "none.graph"), "top")
    assert code == 2 and "error" in err
