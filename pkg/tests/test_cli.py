import json
import math

import numpy as np
import pytest
import yaml

from fairincome.cli import example_config_text, main
from fairincome.commands import cmd_simulate, cmd_solve, cmd_sweep, cmd_sweep_report, cmd_verify
from fairincome.config import DEFAULT_TOLERANCES, config_from_dict, parse_config
from fairincome.errors import ParseError, ReportIOError, ValidationError
from fairincome.reporting import dumps, read_report, write_report

MINIMAL = """
params: {alpha: 3.0, beta: 1.0, gamma: 1.0}
grid: {salaries: [2.718281828459045, 7.38905609893065]}
n_total: 10
"""


def doc(**overrides):
    base = yaml.safe_load(MINIMAL)
    base.update(overrides)
    return base


def strip_timing(report):
    report = json.loads(json.dumps(report))
    report.pop("duration_seconds", None)
    for point in report.get("results", {}).get("points", []):
        point.pop("duration_seconds", None)
    return report


class TestParse:
    def test_minimal_defaults(self):
        cfg = parse_config("params: {alpha: 1, beta: 0.5, gamma: 1}\ngrid: {min: 1, max: 100}\nn_total: 50\n")
        assert cfg.method == "all"
        assert cfg.grid.n == 32
        assert cfg.tolerances == DEFAULT_TOLERANCES
        assert cfg.sim is None
        assert cfg.verify["samples"] == 10_000

    def test_beta_zero(self):
        with pytest.raises(ValidationError) as exc:
            parse_config(MINIMAL.replace("beta: 1.0", "beta: 0"))
        assert exc.value.field == "beta"

    def test_both_grid_forms(self):
        with pytest.raises(ValidationError) as exc:
            config_from_dict(doc(grid={"salaries": [1.0, 2.0], "min": 1, "max": 2}))
        assert exc.value.field == "grid"

    @pytest.mark.parametrize(
        "overrides, field",
        [({"colour": 1}, "colour"), ({"method": "magic"}, "method"), ({"n_total": -3}, "n_total"),
         ({"grid": {"salaries": [2.0, 1.0]}}, "grid"), ({"tolerances": {"bogus": 1}}, "tolerances.bogus"),
         ({"simulation": {"protocol": "telepathy"}}, "simulation.protocol")],
    )
    def test_invalid(self, overrides, field):
        with pytest.raises(ValidationError) as exc:
            config_from_dict(doc(**overrides))
        assert exc.value.field == field

    def test_parse_error_line(self):
        with pytest.raises(ParseError) as exc:
            parse_config("params:\n  alpha: [1, 2\n  beta: 1\n")
        assert exc.value.line is not None and exc.value.line >= 2

    def test_json_accepted(self):
        assert parse_config(json.dumps(doc())).n_total == 10.0

    def test_echo_round_trip(self):
        cfg = parse_config(example_config_text())
        again = config_from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg


class TestCommands:
    def test_solve_symmetric(self):
        rep = cmd_solve(parse_config(MINIMAL))
        eq = rep["results"]["equivalence"]
        assert eq["pass"]
        np.testing.assert_allclose(rep["results"]["closed"]["counts"], [5, 5], rtol=1e-14)
        assert rep["artifact"]["name"] == "fairincome"

    def test_reproducible_from_echo(self):
        rep = cmd_solve(parse_config(example_config_text()))
        again = cmd_solve(config_from_dict(rep["config"]))
        assert strip_timing(again) == strip_timing(rep)

    def test_verify_nonpositive(self):
        z = 2 * math.e ** 2
        rep, status = cmd_verify(config_from_dict(doc(n_total=2 * z)))
        assert status != 0
        details = [c["detail"] or "" for c in rep["results"]["checks"]]
        assert any("NonpositiveUtility" in d for d in details)

    def test_sweep_gamma_entropy(self):
        cfg = parse_config(example_config_text())
        reps = cmd_sweep(cfg, "gamma", [0.5, 1.0, 2.0])
        assert len(reps) == 3
        ent = [r["results"]["closed"]["entropy"] for r in reps]
        assert ent[0] < ent[1] < ent[2]

    def test_sweep_bad_value_kept(self):
        rep = cmd_sweep_report(parse_config(MINIMAL), "beta", [1.0, -1.0])
        rows = rep["results"]["rows"]
        assert {r["status"] for r in rows} == {"ok", "error"}

    def test_simulate(self):
        text = MINIMAL + "simulation: {steps: 2000, snapshot_every: 100, burn_in: 5, seed: 3}\n"
        rep = cmd_simulate(parse_config(text))
        res = rep["results"]
        assert res["summary"]["final_step"] == 2000
        assert res["tv_to_closed_form"] < 0.2
        assert cmd_simulate(parse_config(text))["results"]["trace"] == res["trace"]

    def test_simulate_logit_reports_rest_point(self):
        text = MINIMAL + "simulation: {protocol: logit, steps: 2000, snapshot_every: 100, burn_in: 5}\n"
        res = cmd_simulate(parse_config(text))["results"]
        assert "tv_to_logit_rest_point" in res


class TestReporting:
    def test_json_round_trip(self, tmp_path):
        rep = cmd_solve(parse_config(example_config_text()))
        [path] = write_report(rep, "json", tmp_path / "r.json")
        assert read_report(path) == rep
        assert dumps(read_report(path)) == dumps(rep)

    def test_csv_occupancy(self, tmp_path):
        rep = cmd_solve(parse_config(MINIMAL.replace("n_total: 10", "n_total: 10\nmethod: closed")))
        [path] = write_report(rep, "csv", tmp_path / "out.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "level_index,salary,log_salary,count,fraction,effective_utility"
        assert len(lines) == 3
        assert [float(l.split(",")[4]) for l in lines[1:]] == [0.5, 0.5]

    def test_csv_empty_trace(self, tmp_path):
        rep = {"command": "simulate", "results": {"trace": {"steps": [], "counts": []}}}
        [path] = write_report(rep, "csv", tmp_path / "t.csv")
        assert path.read_text() == "step,level_index,count\n"

    def test_unwritable(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(ReportIOError):
            write_report({"command": "solve", "results": {}}, "json", blocker / "sub" / "r.json")


class TestMain:
    def test_verify_bundled(self, capsys):
        assert main(["verify"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["results"]["passed"]

    def test_solve_deterministic_bytes(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["solve", "--out", str(a)]) == 0
        assert main(["solve", "--out", str(b)]) == 0
        assert strip_timing(read_report(a)) == strip_timing(read_report(b))

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("FAIRINCOME_OUTPUT_DIR", str(tmp_path))
        assert main(["solve", "--method", "closed"]) == 0
        assert (tmp_path / "solve.json").exists()

    def test_config_error_exit(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text(MINIMAL.replace("beta: 1.0", "beta: 0"))
        assert main(["solve", "--config", str(bad)]) == 2
        assert "beta" in capsys.readouterr().err

    def test_io_error_exit(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["solve", "--out", str(blocker / "x" / "r.json")]) == 3

    def test_verify_failure_exit(self, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text(MINIMAL.replace("n_total: 10", "n_total: 100"))
        assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "v.json")]) == 1

    def test_sweep_csv(self, tmp_path):
        assert main(["sweep", "--sweep-param", "gamma", "--sweep-values", "0.5,1,2",
                     "--format", "csv", "--out", str(tmp_path / "s.csv")]) == 0
        lines = (tmp_path / "s_sweep.csv").read_text().splitlines()
        assert lines[0] == "param,value,status,quantity,result,error"
        assert len(lines) > 3

    def test_simulate_steps_override(self, capsys):
        assert main(["simulate", "--steps", "60000", "--seed", "2"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["config"]["simulation"]["steps"] == 60000
        assert rep["config"]["simulation"]["seed"] == 2

    def test_steps_too_short_for_burn_in(self, capsys):
        # the bundled burn-in of 50 snapshots needs more than 500 steps
        assert main(["simulate", "--steps", "500"]) == 2
        assert "burn_in" in capsys.readouterr().err
