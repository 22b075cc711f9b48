import io
import json
import subprocess
import sys

import numpy as np
import pytest

from expert_lab.cli import main


def run(*argv):
    buf = io.StringIO()
    code = main(list(argv), stdout=buf)
    return code, buf.getvalue()


def run_json(*argv):
    code, out = run(*argv)
    assert code == 0, out
    return json.loads(out)


def test_eval_example():
    out = run_json("eval", "--n", "4", "--t", "0", "--T", "1", "--x", "0,0,0,0")
    assert out["value"] == 0.6266570687


def test_ratio_and_dp_examples():
    out = run_json("ratio")
    assert out["n4"] == pytest.approx(1.1283792, abs=1e-7)
    assert out["n3"] == pytest.approx(1.1283792, abs=1e-7)
    assert run_json("dp", "--n", "4", "--M", "1")["value"] == 0.75


def test_full_precision_round_trip():
    out = run_json("eval", "--x", "0.1,0.7,1.3,2.9", "--t", "0.25", "--precision", "full")
    again = run_json("eval", "--x", ",".join(out["x"]), "--t", out["t"], "--T", out["T"],
                     "--precision", "full")
    assert again["value"] == out["value"]
    from expert_lab.value4 import value4
    assert float.fromhex(out["value"]) == value4(0.25, 1.0, [0.1, 0.7, 1.3, 2.9])


def test_grad_hess_residual():
    g = run_json("grad", "--x", "0,0.5,1,2")["gradient"]
    assert sum(g) == pytest.approx(1, abs=1e-9)
    g3 = run_json("grad", "--n", "3", "--x", "0,0.5,2")["gradient"]
    assert sum(g3) == pytest.approx(1, abs=1e-9)
    H = np.array(run_json("hess", "--x", "0,0.5,1,2")["hessian"])
    assert np.abs(H.sum(1)).max() < 1e-8
    res = run_json("residual", "--x", "0,0.5,1,2")
    assert len(res["rows"]) == 16 and res["max_scaled"] < 1e-9 and res["comb"] == [1, 3]


def test_csv_tables():
    code, out = run("sandwich", "--Ms", "1,2", "--format", "csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].startswith("M,V,V_lower,V_upper") and len(lines) == 3
    code, out = run("ratio", "--format", "csv")
    assert out.splitlines()[0] == "key,value"


def test_terminal_laplace_tables():
    rows = run_json("terminal", "--x", "0,0,0,0")["rows"]
    assert rows[1][1] == pytest.approx(0.5 * np.sqrt(0.01 * np.pi / 2), abs=1e-9)
    rows = run_json("laplace", "--x", "0,0,0,1")["rows"]
    assert max(r[3] for r in rows) < 1e-4


def test_simulate_and_sde():
    a = run_json("simulate", "--M", "16", "--paths", "2000", "--seed", "4")
    b = run_json("simulate", "--M", "16", "--paths", "2000", "--seed", "4")
    assert a["mean"] == b["mean"] and a["clamps"] == 0
    c = run_json("simulate", "--M", "1", "--paths", "1000", "--player", "uniform",
                 "--adversary", "fixed-subset:0")
    assert c["mean"] > 0
    rows = run_json("simulate", "--Ms", "4,9", "--paths", "1000")["rows"]
    assert [r[0] for r in rows] == [4, 9]
    run_json("simulate", "--M", "4", "--paths", "500", "--player", "multiplicative-weights:0.3")
    s = run_json("sde", "--steps", "50", "--paths", "2000", "--threads", "2")
    assert 0.4 < s["mean"] < 0.8


@pytest.mark.parametrize("argv", [
    ("eval", "--x", "1,2"),                         # wrong length
    ("eval", "--t", "2", "--x", "0,0,0,0"),         # t > T
    ("eval", "--x", "0,a,0,0"),                     # not a number
    ("eval", "--bogus",),                           # unknown flag
    ("frobnicate",),                                # unknown verb
    ("hess", "--n", "3", "--x", "0,1,2"),
    ("simulate", "--M", "4", "--player", "greedy"),
    ("simulate", "--M", "4", "--adversary", "uniform-subset:1"),
    ("dp",),
    ("sde", "--threads", "0"),
])
def test_validation_errors_exit_2(argv):
    assert run(*argv)[0] == 2


def test_budget_error_exits_3():
    assert run("dp", "--M", "500")[0] == 3


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "expert_lab", "ratio"], capture_output=True, text=True)
    assert p.returncode == 0 and "n4" in json.loads(p.stdout)


def test_verify_quick_is_deterministic():
    code1, out1 = run("verify", "--quick", "--seed", "3")
    code2, out2 = run("verify", "--quick", "--seed", "3")
    strip = lambda o: [{k: v for k, v in c.items() if k != "seconds"} for c in json.loads(o)["checks"]]
    assert strip(out1) == strip(out2)
    checks = {c["name"]: c for c in json.loads(out1)["checks"]}
    failing = [n for n, c in checks.items() if not c["passed"]]
    # the only failure is the monotone trend of the lower game (see the exact rationals)
    assert code1 == 1 and failing == ["7 exact DP sandwich"]
    assert checks["7 exact DP sandwich"]["values"]["lower_increasing"] is False
