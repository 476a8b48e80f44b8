import csv
import io
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from cyclicprox import shipped_scenario
from cyclicprox.cli import main
from cyclicprox.scenario import (
    MACHINE_MARKER,
    ScenarioError,
    ScenarioSyntaxError,
    dumps,
    emit,
    fmt,
    load_scenario,
    parse_scenario,
    run_scenario,
    scenario_to_dict,
    to_canonical,
    with_overrides,
)

NAMES = ["two_interval", "intersecting", "ball_valued", "violating", "three_box"]


def doc(name="two_interval"):
    return json.loads(shipped_scenario(name))


def parse(d):
    return parse_scenario(json.dumps(d))


# -- parsing ---------------------------------------------------------------

def test_two_interval_parses():
    s = parse_scenario(shipped_scenario("two_interval"))
    assert s.system.p == 2
    assert s.system.constants == (0.5, 0.5)
    assert s.system.D == (1.0, 1.0)
    assert s.thresholds.d0 == 1.5


@pytest.mark.parametrize("mutate,field,message", [
    (lambda d: d.update(constants=[1.0, 1.0]), "constants", "product of constants >= 1"),
    (lambda d: d["thresholds"].update(d0i=[1.5]), "thresholds.d0i", "expected 2"),
    (lambda d: d.update(colour="red"), "colour", "unknown field"),
    (lambda d: d["map"].update(extra=1), "map.extra", "unknown field"),
    (lambda d: d.pop("map"), "map", "missing"),
    (lambda d: d["subsets"][0].update(lower=5), "subsets[0]", "lower <= upper"),
    (lambda d: d.update(dimension=2), "subsets[0]", "dimension"),
    (lambda d: d["map"].update(kind="spline"), "map.kind", "unknown map kind"),
    (lambda d: d.update(tol=-1), "tol", "> 0"),
    (lambda d: d.update(seeds=[[1.5]]), "seeds[0]", "outside cyclic union"),
    (lambda d: d.update(seeds=[[0, 1]]), "seeds[0]", ""),
    (lambda d: d["thresholds"].update(d0=0), "thresholds", "d0"),
    (lambda d: d.update(max_steps=1), "max_steps", ">= 2"),
    (lambda d: d.update(order={"kind": "coordinate", "axis": 4}), "order", ""),
    (lambda d: d.update(strategy={"kind": "best"}), "strategy", ""),
])
def test_semantic_errors_name_their_field(mutate, field, message):
    d = doc()
    mutate(d)
    with pytest.raises(ScenarioError) as info:
        parse(d)
    assert info.value.field.startswith(field)
    assert message in str(info.value)


def test_syntax_error_has_position():
    with pytest.raises(ScenarioSyntaxError) as info:
        parse_scenario('{"name": "x",\n  "dimension": 1,,}')
    assert (info.value.line, info.value.column) == (2, 18)
    assert "line 2, column 18" in str(info.value)


def test_top_level_must_be_object():
    with pytest.raises(ScenarioError):
        parse_scenario("[1, 2]")


def test_load_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_scenario(tmp_path / "nope.json")


def test_fmt_is_round_trip_exact():
    for x in (0.1, 1 / 3, 2.0 ** -1074, 1e308, -0.0, 12345678.9):
        assert float(fmt(x)) == x
    assert fmt(0.1) == "0.10000000000000001"


def test_dumps_is_valid_json():
    obj = {"a": [1.5, None, True, "s\"q"], "b": {"c": []}, "d": 3}
    assert json.loads(dumps(obj)) == obj


@pytest.mark.parametrize("name", NAMES)
def test_canonical_round_trip(name):
    s = parse_scenario(shipped_scenario(name))
    text = to_canonical(s)
    again = parse_scenario(text)
    assert to_canonical(again) == text
    assert json.loads(text) == json.loads(dumps(scenario_to_dict(s)))
    assert again.system.D == s.system.D


def test_overrides():
    s = with_overrides(parse_scenario(shipped_scenario("two_interval")), tol=1e-6, max_steps=50, seed=3)
    assert (s.tol, s.max_steps, s.rng_seed) == (1e-6, 50, 3)
    assert s.system.tol == 1e-6


# -- runs and artifacts ---------------------------------------------------------

@pytest.fixture(scope="module")
def runs():
    return {n: run_scenario(parse_scenario(shipped_scenario(n))) for n in NAMES}


def test_two_interval_run(runs):
    art = runs["two_interval"]
    assert art.hypotheses["all_met"]
    status = {v.name: v.status for v in art.verdicts}
    for name in ("containment", "contraction", "seed_pair", "threshold"):
        assert status[name] == "PASS"
    data = art.report_data
    for t in data["trajectories"]:
        np.testing.assert_allclose(t["limits"], [[1.0], [2.0]], atol=1e-8)
    assert max(data["uniqueness"]["max_pairwise"]) <= 1e-8
    assert "best proximity reading" in art.report_text


def test_violating_run_is_traced(runs):
    art = runs["violating"]
    v = next(v for v in art.verdicts if v.name == "contraction")
    assert v.status == "FAIL" and v.witness["slack"] < 0
    assert "contraction" in art.hypotheses["unmet"]
    assert len(art.traces) == len(art.starts) > 0


def test_intersecting_run(runs):
    art = runs["intersecting"]
    assert art.hypotheses["all_met"]
    for t in art.report_data["trajectories"]:
        assert abs(t["fixed_point"][0]) <= 1e-8
        assert t["band"]["status"] == "asymptotic"


@pytest.mark.parametrize("name", NAMES)
def test_trace_contract(runs, name):
    art = runs[name]
    sys_ = art.scenario.system
    for k, traj in enumerate(art.trajectories):
        rows = list(csv.reader(io.StringIO(art.traces[f"trace_{k:02d}.csv"])))
        header = rows[0]
        assert header == ["step", "subset"] + [f"x{i + 1}" for i in range(sys_.dim)] + \
            ["d_n", "order_certified", "in_band"]
        body = rows[1:]
        assert len(body) == len(traj) - 1
        assert all(r[-1] in "01" and r[-2] in "01" for r in body)
        if not traj.converged:
            continue
        # the final cycle of steps sits at its edge distance D_i: within tol when
        # every hypothesis holds, within the 10 tol pairing bound otherwise
        # (the violating map never reaches D at all)
        if name != "violating":
            bound = traj.tol if art.hypotheses["all_met"] or name == "ball_valued" else 10 * traj.tol
            for r in body[-sys_.p:]:
                assert abs(float(r[-3]) - sys_.D[int(r[1]) - 1]) <= bound
        # every claimed limit is within tol of the last trace row of its subset
        limits = art.reports[k].limits
        for j in range(1, sys_.p + 1):
            last = [r for r in body if int(r[1]) == j][-1]
            pt = np.array([float(c) for c in last[2:2 + sys_.dim]])
            assert np.linalg.norm(pt - limits[j - 1]) <= traj.tol


def test_machine_block_mirrors_report_fields(runs):
    data = runs["two_interval"].report_data
    t = data["trajectories"][0]
    for key in ("limits", "adjacent_distances", "residuals", "composite_residuals", "band", "chains",
                "subset_status", "status"):
        assert key in t
    assert [v["name"] for v in data["verdicts"]][:5] == [
        "containment", "contraction", "seed_pair", "threshold", "strong_threshold"]


@pytest.mark.parametrize("name", NAMES)
def test_runs_are_byte_identical(runs, name, tmp_path):
    art = run_scenario(parse_scenario(shipped_scenario(name)), parallel=True)
    assert art.report_text == runs[name].report_text
    assert art.traces == runs[name].traces
    a, b = tmp_path / "a", tmp_path / "b"
    emit(art, a)
    emit(runs[name], b)
    for f in sorted(os.listdir(a)):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def test_empty_seed_list_writes_report_only(tmp_path):
    d = doc()
    d["seeds"] = []
    art = run_scenario(parse(d))
    paths = emit(art, tmp_path)
    assert [p.name for p in paths] == ["report.txt"]
    assert os.listdir(tmp_path) == ["report.txt"]
    assert art.report_data["uniqueness"] is None


def test_emit_io_error_surfaces(runs, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        emit(runs["two_interval"], blocker / "sub")


# -- CLI -------------------------------------------------------------------------

def scenario_path(name):
    import cyclicprox
    return os.path.join(os.path.dirname(cyclicprox.__file__), "scenarios", f"{name}.json")


@pytest.mark.parametrize("name,code", [("two_interval", 0), ("intersecting", 0), ("violating", 1),
                                       ("ball_valued", 1), ("three_box", 1)])
def test_check_exit_codes(name, code, capsys):
    assert main(["check", "--scenario", scenario_path(name)]) == code
    out = capsys.readouterr().out
    assert "contraction" in out


def test_check_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": ')
    assert main(["check", "--scenario", str(bad)]) == 2
    assert main(["check", "--scenario", str(tmp_path / "missing.json")]) == 2
    d = doc()
    d["constants"] = [1.0, 1.0]
    bad.write_text(json.dumps(d))
    assert main(["run", "--scenario", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "product of constants >= 1" in capsys.readouterr().err


def test_run_writes_files_with_overrides(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--scenario", scenario_path("two_interval"), "--out", str(out),
                 "--tol", "1e-10", "--max-steps", "500", "--seed", "7", "--parallel"])
    assert code == 0
    assert sorted(os.listdir(out)) == ["report.txt", "trace_00.csv", "trace_01.csv", "trace_02.csv"]
    report = (out / "report.txt").read_text()
    data = json.loads(report.split(MACHINE_MARKER, 1)[1])
    assert data["trajectories"][0]["status"] == "converged"
    assert "hypotheses: all met" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "cyclicprox", "check", "--scenario", scenario_path("violating")],
                       capture_output=True, text=True)
    assert r.returncode == 1
    assert "FAIL" in r.stdout
