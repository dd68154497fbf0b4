import json

import numpy as np
import pytest

from phibvp.cli import main, verify_document
from phibvp.reports import HOLDS, INCONCLUSIVE, VIOLATED, HypothesisReport
from phibvp.sampling import SamplingConfig
from phibvp.scenarios import Scenario

FAST = {"sampling": {"n_time": 16, "n_lambda": 4}}


def write(tmp_path, name, cfg):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return str(p)


def box_system(f, lo=-1.0, hi=1.0):
    return dict(FAST, system={"n": 1, "f": [f]}, bound_set={"box": {"lo": [lo], "hi": [hi]}},
                solver={"N": 32})


def test_verify_scenario_exit_zero(tmp_path):
    assert main(["verify", "--scenario", "hartman_knobloch", "-o", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["schema"] == 1 and doc["status"] == "as_expected"
    assert doc["conditions"]["hartman"]["verdict"] == HOLDS
    assert doc["degree"]["value"] == "=1 certified"


def test_verify_violation_exits_two(tmp_path):
    cfg = write(tmp_path, "bad.json", box_system("-x1"))
    assert main(["verify", "-c", cfg, "-o", str(tmp_path / "out")]) == 2


def test_inconclusive_only_exits_three():
    reports = {"H_H_plus": HypothesisReport("H_H_plus", INCONCLUSIVE), "H_H": HypothesisReport("H_H", HOLDS)}
    sc = Scenario("toy", "field", 1, expected={"H_H_plus": HOLDS, "H_H": HOLDS}, checks=lambda s: reports)
    doc, code = verify_document(sc, SamplingConfig(), {})
    assert code == 3 and doc["status"] == "inconclusive"
    reports["H_H"] = HypothesisReport("H_H", VIOLATED)
    assert verify_document(sc, SamplingConfig(), {})[1] == 2


@pytest.mark.parametrize("text", ["", "{}", "[1, 2]", "{not json", '{"scenario": "nope"}',
                                  '{"scenario": "hartman_knobloch", "colour": 1}',
                                  '{"scenario": "hartman_knobloch", "sampling": {"bogus": 1}}',
                                  '{"system": {"n": 1, "f": ["x1 + z"]}, "bound_set": {"box": {"lo": [-1], "hi": [1]}}}',
                                  '{"system": {"n": 2, "f": ["x1"]}, "bound_set": {"ball": {"R": 1}}}'])
def test_malformed_config_exits_64(tmp_path, text):
    assert main(["verify", "-c", write(tmp_path, "c.json", text)]) == 64


def test_bad_arguments_exit_64():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 64


def test_solve_contained_and_outputs(tmp_path):
    cfg = write(tmp_path, "pm.json", dict(box_system("x1**3 - cos(2*pi*t)", -2.0, 2.0)))
    out = tmp_path / "out"
    assert main(["solve", "-c", cfg, "-o", str(out), "--trace"]) == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["conclusion"]["contained"]
    lines = (out / "solution.csv").read_text().splitlines()
    assert lines[0] == "t,x_1,dx_1,y_1" and len(lines) == 33
    assert (out / "trace" / "index.csv").exists()


def test_solve_refuses_failed_verification_unless_forced(tmp_path):
    cfg = write(tmp_path, "bad.json", box_system("x1 - 3"))
    assert main(["solve", "-c", cfg, "-o", str(tmp_path / "a")]) == 2
    assert not (tmp_path / "a" / "solution.csv").exists()
    # forced: the periodic solution x = 3 exists but leaves the box
    assert main(["solve", "-c", cfg, "-o", str(tmp_path / "b"), "--force"]) == 2
    doc = json.loads((tmp_path / "b" / "report.json").read_text())
    assert doc["status"] == "containment_violated"


def test_solve_stall_exits_four(tmp_path):
    # x'' = lam + (1-lam) x loses its periodic solution as lam -> 1
    cfg = write(tmp_path, "stall.json", box_system("1"))
    assert main(["solve", "-c", cfg, "-o", str(tmp_path / "s"), "--force"]) == 4
    doc = json.loads((tmp_path / "s" / "report.json").read_text())
    assert doc["status"] == "stalled"


@pytest.mark.parametrize("name", ["blowup", "remark33_1"])
def test_solve_rejects_non_periodic_scenarios(name):
    assert main(["solve", "--scenario", name]) == 64


def test_blowup_csv(tmp_path):
    assert main(["verify", "--scenario", "blowup", "-o", str(tmp_path)]) == 0
    rows = (tmp_path / "blowup.csv").read_text().splitlines()
    assert rows[0] == "t,x,dx"
    t, x, dx = map(float, rows[-1].split(","))
    assert x == pytest.approx(2 * (1 - np.sqrt(1 - t)), abs=1e-10)


def test_report_summary_and_input_errors(tmp_path, capsys):
    main(["verify", "--scenario", "remark33_2", "-o", str(tmp_path / "r")])
    capsys.readouterr()
    assert main(["report", str(tmp_path / "r")]) == 0
    text = capsys.readouterr().out
    assert "lienard_ii" in text and "holds_at_samples" in text and "shifted sign condition" in text
    assert main(["report", str(tmp_path / "missing.json")]) == 66
    assert main(["report", write(tmp_path, "corrupt.json", "{oops")]) == 66
    assert main(["report", write(tmp_path, "other.json", '{"schema": 99}')]) == 66


def test_missing_config_file_exits_66(tmp_path):
    assert main(["verify", "-c", str(tmp_path / "nowhere.json")]) == 66


def test_sublevel_system_with_sympy_gradient(tmp_path, capsys):
    cfg = dict(FAST, system={"n": 2, "f": ["x1 - 0.5*cos(2*pi*t)", "x2 - 0.5*sin(2*pi*t)"]},
               bound_set={"sublevel": {"V": "x1**2/4 + x2**2", "level": 1}}, phi={"kind": "radial", "p": 3})
    assert main(["verify", "-c", write(tmp_path, "s.json", cfg)]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["convexity"]["verdict"] == "convex_at_samples"
    assert doc["conditions"]["cond_C"]["margin"] > 0


def test_y_dependent_system_needs_nagumo_bound(tmp_path):
    cfg = dict(FAST, system={"n": 2, "f": ["x1 + 0.1*y1", "x2"]}, bound_set={"ball": {"R": 1}})
    assert main(["verify", "-c", write(tmp_path, "y.json", cfg)]) == 64
    cfg["nagumo"] = {"K": 5.0}
    assert main(["verify", "-c", write(tmp_path, "y.json", cfg), "-o", str(tmp_path / "o")]) == 0


@pytest.mark.parametrize("name", ["hartman_knobloch", "poincare_miranda", "lienard_iii"])
def test_runs_are_byte_identical(tmp_path, name):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        assert main(["solve", "--scenario", name, "--seed", "5", "--N", "32", "-o", str(d)]) == 0
        outs.append(((d / "report.json").read_bytes(), (d / "solution.csv").read_bytes()))
    assert outs[0] == outs[1]
