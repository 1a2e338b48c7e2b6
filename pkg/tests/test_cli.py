import json
import subprocess
import sys

import pytest

from twospin.acceptance import run_cli
from twospin.gadgets import example_pair, expr_to_json


def out(*argv):
    code, text = run_cli(argv)
    assert code == 0, text
    return json.loads(text)


def test_eval_example():
    assert out("eval", "--example", "t1") == {"R": "2/3", "M": "5/6"}


def test_eval_inline_json():
    t2 = json.dumps(expr_to_json(example_pair()[1]))
    assert out("eval", "--gadget", t2) == {"R": "2/3", "M": "3/4"}
    assert out("eval", "--gadget", t2, "--oracle") == {"R": "2/3", "M": "3/4"}


def test_eval_from_file(tmp_path):
    f = tmp_path / "t1.json"
    f.write_text(json.dumps(expr_to_json(example_pair()[0])))
    assert out("eval", "--gadget", str(f), "--lambda", "2")["R"] == "3/5"


def test_critical():
    assert out("critical", "--delta", "6")["lambda_c"] == "3125/4096"
    assert out("critical", "--delta", "3") == {"lambda_c": "4", "beta_c": "1/3"}


def test_oracle_k4():
    assert out("oracle", "--builtin", "K4") == {"Z": "5"}


def test_oracle_stats():
    assert out("oracle", "--builtin", "path:2", "--stat", "marginals") == {"marginals": ["1/3", "1/3"]}
    res = out("oracle", "--builtin", "path:3", "--stat", "conditional", "--pin", "0=1", "--indicator", "2")
    assert res["conditional"] == "1/2"


def test_flags_before_subcommand():
    assert out("--delta", "6", "critical")["lambda_c"] == "3125/4096"
    assert out("--lambda", "2", "eval", "--example", "t1")["R"] == "3/5"


def test_fixpoint_verdicts():
    assert out("fixpoint", "--delta", "5")["verdict"] == "no"
    res = out("fixpoint", "--delta", "6", "--precision", "64")
    assert res["verdict"] == "yes" and res["q_plus"].startswith("0.4233")


def test_find_pair_and_crossing_chain(tmp_path):
    pairs = out("find-pair", "--shortcut", "--k", "2")
    assert [p["R_hat"] for p in pairs["pairs"]] == ["2/3", "3/5"]
    f = tmp_path / "pairs.json"
    f.write_text(json.dumps(pairs))
    res = out("crossing", "--pair", str(f), "--index", "1", "--lambda0", "1")
    assert res["lambda_hat"] == "1" and res["residual"] == "0"


def test_reduce_outputs():
    res = out("reduce", "--H", "K4", "--complete-bipartite", "3", "3", "--tree", "t1")
    assert res["problems"] == [] and res["graph"]["n"] == 96 and res["max_degree"] == 3
    code, text = run_cli(["reduce", "--H", "K4", "--complete-bipartite", "3", "3", "--format", "edgelist"])
    assert code == 0 and text.splitlines()[0] == "96 " + str(len(text.splitlines()) - 1)


def test_verify_subset():
    code, text = run_cli(["verify", "1", "criticality"])
    assert code == 0
    assert [r["criterion"] for r in json.loads(text)] == [1, 5]


@pytest.mark.parametrize("argv, code", [
    (["eval", "--gadget", "{bad"], 2),
    (["eval"], 2),
    (["nonsense"], 2),
    (["critical"], 2),
    (["verify", "no-such-criterion"], 2),
    (["oracle", "--builtin", "K30"], 3),
    (["eval", "--example", "t1", "--beta", "2", "--gamma", "1"], 3),
    (["crossing", "--example", "--lambda0", "3", "--eps", "1/100"], 4),
])
def test_exit_codes(argv, code):
    assert run_cli(argv)[0] == code


def test_verify_failure_exit_code():
    assert run_cli(["verify", "trivial-ising"])[0] == 1


def test_stdin_and_module_entry():
    t1 = json.dumps(expr_to_json(example_pair()[0]))
    proc = subprocess.run([sys.executable, "-m", "twospin", "eval", "--gadget", "-"],
                          input=t1, capture_output=True, text=True, check=True)
    assert proc.stdout == '{"M":"5/6","R":"2/3"}\n'


def test_output_is_byte_stable():
    argv = ["oracle", "--builtin", "cycle:14", "--stat", "marginals", "--lambda", "3/2"]
    assert run_cli(argv + ["--jobs", "1"]) == run_cli(argv + ["--jobs", "4"])
