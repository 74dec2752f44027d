# -*- coding: utf-8 -*-

"""
	'cli' test set : tests regarding the pytandem.cli submodule
	Test 7 : solve / table / simulate / sweep / validate commands, artifacts, manifests and exit codes.
"""


# Standard modules
#-----------------
import sys
import os
import csv
import json

# Third party modules
#--------------------
import pytest

# Internal modules
#-----------------
if __name__ == '__main__':
	sys.path.append(os.path.join(os.path.dirname(__file__),'..'))
from pytandem.cli import main as cli_main, sweep_grid, EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_RESOURCE
from pytandem.model import ParameterError

# Global constants
#-----------------
EXAMPLE = ["--lambda", "1", "--mu1", "1", "--mu2", "1", "--R", "4", "--c1", "1", "--c2", "1"]

# Functions
#----------
def _run(tmp_path, command, *arguments):
	return cli_main([command, *arguments, "--out", str(tmp_path)])

def _read_csv(path):
	with open(path, newline = "") as stream:
		return list(csv.DictReader(stream))

def _manifest(tmp_path, command):
	return json.loads((tmp_path / f"{command}.manifest.json").read_text())

def test_solve(tmp_path, capsys):
	assert _run(tmp_path, "solve", *EXAMPLE) == EXIT_OK
	document = json.loads((tmp_path / "solve.json").read_text())
	assert document["outcome"] == "finite"
	assert document["K"] == 3
	assert [row["profit"] for row in document["profile"]] == pytest.approx([2, 1, 0, -1], abs = 1e-10)
	manifest = _manifest(tmp_path, "solve")
	assert [entry["path"] for entry in manifest["outputs"]] == ["solve.json"]
	assert manifest["params"]["R"] == 4
	assert "K=3" in capsys.readouterr().out

def test_solve_not_viable(tmp_path):
	assert _run(tmp_path, "solve", "--lambda", "1", "--R", "1", "--c1", "1", "--c2", "1", "--mu1", "1", "--mu2", "1") == EXIT_OK
	assert json.loads((tmp_path / "solve.json").read_text())["K"] == 0

def test_solve_csv(tmp_path):
	assert _run(tmp_path, "solve", *EXAMPLE, "--format", "csv") == EXIT_OK
	text = (tmp_path / "solve.csv").read_bytes().decode()
	assert text.startswith("k,t1,t2,profit\n")
	assert "\r" not in text
	assert len(_read_csv(tmp_path / "solve.csv")) == 4

def test_solve_invalid(tmp_path, capsys):
	arguments = list(EXAMPLE)
	arguments[3] = "0"
	assert _run(tmp_path, "solve", *arguments) == EXIT_USAGE
	assert "mu1 must be > 0" in capsys.readouterr().err
	assert _run(tmp_path, "solve", "--mu1", "1") == EXIT_USAGE
	assert cli_main(["solve", "--mu1", "abc"]) == EXIT_USAGE
	assert cli_main([]) == EXIT_USAGE

def test_solve_unresolved(tmp_path):
	assert _run(tmp_path, "solve", "--lambda", "1", "--mu1", "2", "--mu2", "1", "--R", "0.9", "--c1", "1", "--c2", "0", "--cap", "1") == EXIT_RESOURCE
	assert json.loads((tmp_path / "solve.json").read_text())["outcome"] == "unresolved"

def test_config_file(tmp_path):
	config = tmp_path / "params.json"
	config.write_text(json.dumps({"lambda": 1, "mu1": 1, "mu2": 1, "R": 1, "c1": 1, "c2": 1}))
	assert _run(tmp_path, "solve", "--config", str(config), "--R", "4") == EXIT_OK
	assert json.loads((tmp_path / "solve.json").read_text())["K"] == 3
	config.write_text(json.dumps({"lambda": 1, "speed": 3}))
	assert _run(tmp_path, "solve", "--config", str(config)) == EXIT_USAGE
	assert _run(tmp_path, "solve", "--config", str(tmp_path / "missing.json")) == EXIT_USAGE

def test_table(tmp_path):
	assert _run(tmp_path, "table", "--mu1", "1", "--mu2", "1", "--nmax", "2") == EXIT_OK
	rows = _read_csv(tmp_path / "table.csv")
	assert len(rows) == 6
	cells = {(int(row["n"]), int(row["m"])): row for row in rows}
	assert float(cells[(0, 2)]["t"]) == 2.0
	assert float(cells[(1, 1)]["t"]) == 2.5
	assert (tmp_path / "table.csv").read_bytes().startswith(b"n,m,t1,t2,t\n")

def test_table_errors(tmp_path):
	assert _run(tmp_path, "table", "--mu1", "1", "--mu2", "1", "--nmax", "-1") == EXIT_USAGE
	assert _run(tmp_path, "table", "--nmax", "-1") == EXIT_USAGE
	assert _run(tmp_path, "table", "--mu1", "1", "--mu2", "1", "--nmax", "5000") == EXIT_RESOURCE

def test_table_decision(tmp_path):
	assert _run(tmp_path, "table", *EXAMPLE, "--nmax", "4", "--verify", "--decision") == EXIT_OK
	rows = _read_csv(tmp_path / "decision.csv")
	decisions = {(int(row["n"]), int(row["m"])): row["joins"] for row in rows}
	assert decisions[(0, 0)] == "1"
	assert decisions[(2, 0)] == "0"
	outputs = sorted(entry["path"] for entry in _manifest(tmp_path, "table")["outputs"])
	assert outputs == ["decision.csv", "table.csv"]

def test_simulate_deterministic(tmp_path):
	arguments = [*EXAMPLE, "--K", "3", "--seed", "7", "--events", "20000", "--warmup", "1000"]
	assert _run(tmp_path / "first", "simulate", *arguments) == EXIT_OK
	assert _run(tmp_path / "second", "simulate", *arguments) == EXIT_OK
	first = (tmp_path / "first" / "simulate.json").read_bytes()
	assert first == (tmp_path / "second" / "simulate.json").read_bytes()
	document = json.loads(first)
	assert document["seed"] == 7
	assert sum(cell["p"] for cell in document["occupancy"]) == pytest.approx(1.0)
	assert len(document["empirical_profit"]) == 3
	assert _manifest(tmp_path / "first", "simulate")["seeds"] == [7]

def test_simulate_invalid_threshold(tmp_path):
	assert _run(tmp_path, "simulate", *EXAMPLE, "--K", "-1", "--seed", "7", "--events", "100") == EXIT_USAGE
	assert _run(tmp_path, "simulate", *EXAMPLE, "--seed", "7") == EXIT_USAGE

def test_sweep_lambda(tmp_path):
	assert _run(tmp_path, "sweep", "--mu1", "1", "--mu2", "1", "--R", "4", "--c1", "1", "--c2", "1", "--param", "lambda", "--from", "0.25", "--to", "4", "--step", "0.25") == EXIT_OK
	rows = _read_csv(tmp_path / "sweep.csv")
	assert len(rows) == 16
	assert all(row["K"] == "3" and row["outcome"] == "finite" for row in rows)

def test_sweep_reward(tmp_path):
	assert _run(tmp_path, "sweep", "--lambda", "1", "--mu1", "1", "--mu2", "1", "--c1", "1", "--c2", "1", "--param", "R", "--from", "0", "--to", "6", "--step", "0.5") == EXIT_OK
	rows = _read_csv(tmp_path / "sweep.csv")
	values = [float(row["value"]) for row in rows]
	thresholds = [int(row["K"]) for row in rows]
	assert all(K == 0 for value, K in zip(values, thresholds) if value < 2)
	assert thresholds[values.index(2.0)] >= 1
	assert all(row["monotone"] == "true" for row in rows)
	assert thresholds == sorted(thresholds)

def test_sweep_errors(tmp_path):
	base = ["--lambda", "1", "--mu1", "1", "--mu2", "1", "--c1", "1", "--c2", "1", "--param", "R"]
	assert _run(tmp_path, "sweep", *base, "--from", "2", "--to", "1", "--step", "0.5") == EXIT_USAGE
	assert _run(tmp_path, "sweep", *base, "--from", "0", "--to", "1", "--step", "0") == EXIT_USAGE
	assert _run(tmp_path, "sweep", *base[:-1], "mu1", "--R", "4", "--from", "0", "--to", "1", "--step", "0.5") == EXIT_USAGE

def test_sweep_grid():
	assert sweep_grid(0, 2, 0.5) == [0.0, 0.5, 1.0, 1.5, 2.0]
	assert sweep_grid(0.1, 0.3, 0.1) == [0.1, 0.2, 0.3]
	with pytest.raises(ParameterError):
		sweep_grid(0, 1, -0.1)

def test_validate_quick(tmp_path, capsys):
	assert _run(tmp_path, "validate", "--quick") == EXIT_OK
	out = capsys.readouterr().out
	assert "FAIL" not in out
	assert "product_form_vs_solver" in out
	assert all(item["passed"] for item in json.loads((tmp_path / "validate.json").read_text()))

def test_validate_fault_injection(tmp_path, capsys):
	assert _run(tmp_path, "validate", "--quick", "--self-test-negative") == EXIT_FAILURE
	assert "closed_form_vs_direct_sum" in capsys.readouterr().err

@pytest.mark.slow
def test_validate_default_grid(tmp_path):
	assert _run(tmp_path, "validate") == EXIT_OK

def test_log_level_from_environment(tmp_path, monkeypatch):
	monkeypatch.setenv("TANDEM_LOG", "debug")
	assert _run(tmp_path, "table", "--mu1", "2", "--mu2", "1", "--nmax", "3") == EXIT_OK

def test_config_quoted_numbers(tmp_path, capsys):
	config = tmp_path / "params.json"
	config.write_text(json.dumps({"lambda": 1, "mu1": "1", "mu2": 1, "R": 4, "c1": 1, "c2": 1}))
	assert _run(tmp_path, "solve", "--config", str(config)) == EXIT_USAGE
	assert "mu1 must be a number" in capsys.readouterr().err
	config.write_text(json.dumps({"mu1": 1, "mu2": "2", "nmax": 3}))
	assert _run(tmp_path, "table", "--config", str(config)) == EXIT_USAGE
	assert "mu2 must be a number" in capsys.readouterr().err

def test_repeated_runs_with_a_new_stderr(tmp_path, monkeypatch):
	monkeypatch.setenv("TANDEM_LOG", "info")
	arguments = ["--mu1", "1", "--mu2", "2", "--nmax", "3"]
	first = open(tmp_path / "first.log", "w")
	monkeypatch.setattr(sys, "stderr", first)
	assert _run(tmp_path, "table", *arguments) == EXIT_OK
	first.close()
	second = open(tmp_path / "second.log", "w")
	monkeypatch.setattr(sys, "stderr", second)
	assert _run(tmp_path, "table", *arguments) == EXIT_OK
	second.close()
	assert "table.csv" in (tmp_path / "first.log").read_text()
	assert "table.csv" in (tmp_path / "second.log").read_text()

# Main function
#--------------
def main():
	""" Main program execution"""
	return pytest.main([__file__])

if __name__ == '__main__':
	sys.exit(main())
