# -*- coding: utf-8 -*-

"""
Module cli : command-line front end.

Commands:
	solve		equilibrium threshold of one parameter set
	table		full-information sojourn-time grid (and join decisions)
	simulate	Monte Carlo estimate under a threshold strategy
	sweep		equilibrium threshold along a grid of one parameter
	validate	cross-oracle suite

Every command writes its artifacts and a run manifest in the --out directory. Exit codes: 0 success, 1 cross-check failure, 2 usage or parameter error, 3 size budget exceeded or unresolved threshold. The log verbosity is read from the environment variable TANDEM_LOG (error, info or debug).
"""


# Standard modules
#------------------
import os
import sys
import csv
import json
import math
import time
import hashlib
import logging
import argparse
from pathlib import Path
from dataclasses import dataclass, field

# Third party modules
#--------------------

# Internal modules
#-----------------
import pytandem
from pytandem.model import ModelParams, ParameterError, BudgetExceededError, InconsistencyError, PARAMETER_KEYS, create_log, require_valid
from pytandem.sojourn import SojournTable, full_information_decision
from pytandem.equilibrium import find_threshold, UNRESOLVED
from pytandem.simulator import SimConfig, simulate, estimate_profit_empirical
from pytandem.oracles import run_suite, format_results

# Global constants
#-----------------
PROG = "pytandem"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3

LOG_LEVELS = {
				'error':	logging.ERROR,
				'info':		logging.INFO,
				'debug':	logging.DEBUG
				}

# Keys accepted in a --config file, identical to the flag names
CONFIG_KEYS = tuple(PARAMETER_KEYS) + ("cap", "K", "seed", "events", "warmup", "reps", "nmax")
SWEEP_PARAMETERS = ("R", "c1", "c2", "mu1", "mu2", "lambda")
SWEEP_CSV_HEADER = ("value", "outcome", "K", "monotone")
DECISION_CSV_HEADER = ("n", "m", "profit", "joins")

# Dataclasses
#------------
@dataclass
class RunManifest:
	"""
	Record of one command run.

	Attributes
	----------
	command : str
		command name.
	params : dict
		resolved parameters (flags over config file).
	seeds : list
		seeds used, empty for deterministic commands.
	outputs : list
		one {path, sha256} entry per artifact written, paths relative to the output directory.
	version : str
		pytandem version.
	duration : float
		wall-clock duration in seconds.
	"""
	command: str
	params: dict = field(default_factory = dict)
	seeds: list = field(default_factory = list)
	outputs: list = field(default_factory = list)
	version: str = pytandem.__VERSION__
	duration: float = 0.0

	def to_document(self):
		return {
			"command": self.command,
			"params": self.params,
			"seeds": self.seeds,
			"outputs": self.outputs,
			"version": self.version,
			"duration": self.duration,
		}

# Classes
#--------
class RunContext():
	"""
	Output directory, logger and manifest shared by the command handlers.
	"""

	def __init__(self, command, out, logger):
		self.out = Path(out)
		self.log = logger
		self.manifest = RunManifest(command)
		self._start = time.perf_counter()

	def write_json(self, name, document):
		text = json.dumps(document, indent = 2, sort_keys = True) + "\n"
		return self._write(name, text)

	def write_csv(self, name, fill):
		"""
		Write a CSV artifact; `fill(stream)` writes the rows.
		"""
		path = self._path(name)
		with open(path, "w", newline = "", encoding = "utf-8") as stream:
			fill(stream)
		return self._register(name, path)

	def close(self):
		"""
		Write the manifest next to the artifacts.
		"""
		self.manifest.duration = time.perf_counter() - self._start
		path = self._path(f"{self.manifest.command}.manifest.json")
		with open(path, "w", newline = "\n", encoding = "utf-8") as stream:
			stream.write(json.dumps(self.manifest.to_document(), indent = 2, sort_keys = True) + "\n")
		self.log.info(f"Manifest written to {path}")
		return path

	def _path(self, name):
		self.out.mkdir(parents = True, exist_ok = True)
		return self.out / name

	def _write(self, name, text):
		path = self._path(name)
		with open(path, "w", newline = "\n", encoding = "utf-8") as stream:
			stream.write(text)
		return self._register(name, path)

	def _register(self, name, path):
		digest = hashlib.sha256(path.read_bytes()).hexdigest()
		self.manifest.outputs = [entry for entry in self.manifest.outputs if entry["path"] != name]
		self.manifest.outputs.append({"path": name, "sha256": digest})
		self.log.info(f"Wrote {path}")
		return path

# Functions
#----------
def _model_arguments(parser):
	group = parser.add_argument_group("model parameters")
	group.add_argument("--lambda", dest = "lambda", type = float, help = "arrival rate")
	group.add_argument("--mu1", type = float, help = "service rate of node 1")
	group.add_argument("--mu2", type = float, help = "service rate of node 2")
	group.add_argument("--R", dest = "R", type = float, help = "reward for service")
	group.add_argument("--c1", type = float, help = "cost per unit time at node 1")
	group.add_argument("--c2", type = float, help = "cost per unit time at node 2")
	group.add_argument("--allow-degenerate", action = "store_true", help = "accept c1 = c2 = 0")

def _common_arguments(parser):
	parser.add_argument("--config", help = "JSON file whose keys mirror the flag names; flags override its values")
	parser.add_argument("--out", default = "out", help = "output directory (default: ./out)")

def build_parser():
	"""
	Return the argparse parser of the pytandem command.
	"""
	parser = argparse.ArgumentParser(
		prog = PROG,
		description = "Sojourn times and join/balk equilibrium of a two-node tandem queue whose arrivals observe only the total number of customers.",
		epilog = "Log verbosity: environment variable TANDEM_LOG = error | info | debug.",
	)
	parser.add_argument("--version", action = "version", version = f"%(prog)s {pytandem.__VERSION__}")
	commands = parser.add_subparsers(dest = "command", required = True)

	solve = commands.add_parser("solve", help = "equilibrium threshold")
	_model_arguments(solve)
	_common_arguments(solve)
	solve.add_argument("--cap", type = int, help = "largest k scanned")
	solve.add_argument("--format", choices = ("json", "csv"), default = "json", help = "result document (json) or profit profile (csv)")

	table = commands.add_parser("table", help = "full-information sojourn-time grid")
	_model_arguments(table)
	_common_arguments(table)
	table.add_argument("--nmax", type = int, help = "largest anti-diagonal n + m")
	table.add_argument("--verify", action = "store_true", help = "check the fill against first-step analysis")
	table.add_argument("--decision", action = "store_true", help = "also write the full-information join decisions (needs every model flag)")

	sim = commands.add_parser("simulate", help = "Monte Carlo estimate under a threshold strategy")
	_model_arguments(sim)
	_common_arguments(sim)
	sim.add_argument("--K", dest = "K", type = int, help = "threshold of the population")
	sim.add_argument("--seed", type = int, help = "64-bit seed (default 0)")
	sim.add_argument("--events", type = int, help = f"measured events per replication (default {SimConfig.measured_events})")
	sim.add_argument("--warmup", type = int, help = f"discarded events per replication (default {SimConfig.warmup_events})")
	sim.add_argument("--reps", type = int, help = "replications (default 1)")
	sim.add_argument("--workers", type = int, default = 1, help = "threads running the replications")
	sim.add_argument("--batches", type = int, default = SimConfig.batches, help = "batches per replication for the standard errors")
	sim.add_argument("--confidence", type = float, default = 0.997, help = "level of the empirical profit intervals")

	sweep = commands.add_parser("sweep", help = "equilibrium threshold along a parameter grid")
	_model_arguments(sweep)
	_common_arguments(sweep)
	sweep.add_argument("--param", required = True, choices = SWEEP_PARAMETERS, help = "swept parameter")
	sweep.add_argument("--from", dest = "start", type = float, required = True, help = "first value")
	sweep.add_argument("--to", dest = "stop", type = float, required = True, help = "last value (included when on the grid)")
	sweep.add_argument("--step", type = float, required = True, help = "grid step (> 0)")
	sweep.add_argument("--cap", type = int, help = "largest k scanned")

	check = commands.add_parser("validate", help = "cross-oracle suite")
	check.add_argument("--out", default = "out", help = "output directory (default: ./out)")
	check.add_argument("--quick", action = "store_true", help = "restrict the grids to K <= 10")
	check.add_argument("--self-test-negative", action = "store_true", help = argparse.SUPPRESS)
	return parser

def resolve_values(args):
	"""
	Merge the --config file (if any) and the flags; flags win.
	"""
	values = {}
	config = getattr(args, "config", None)
	if config:
		try:
			with open(config, encoding = "utf-8") as stream:
				loaded = json.load(stream)
		except (OSError, ValueError) as error:
			raise ParameterError(f"cannot read config file {config}: {error}") from None
		if not isinstance(loaded, dict):
			raise ParameterError(f"config file {config} must hold a JSON object")
		unknown = sorted(set(loaded) - set(CONFIG_KEYS))
		if unknown:
			raise ParameterError(f"unknown config key(s): {', '.join(unknown)}")
		values.update(loaded)
	flags = vars(args)
	for key in CONFIG_KEYS:
		if flags.get(key) is not None:
			values[key] = flags[key]
	return values

def _model_params(values, args, logger):
	params = ModelParams.from_mapping(values, allow_degenerate = getattr(args, "allow_degenerate", False))
	return require_valid(params, logger)

def _model_values(values):
	return {key: values[key] for key in PARAMETER_KEYS if key in values}

def cmd_solve(args, context):
	values = resolve_values(args)
	params = _model_params(values, args, context.log)
	result = find_threshold(params, cap = values.get("cap"), logger = context.log)
	context.manifest.params = dict(_model_values(values), cap = result.cap)
	if args.format == "csv":
		context.write_csv("solve.csv", result.profile.to_csv)
	else:
		context.write_json("solve.json", result.to_document())
	print(f"outcome={result.outcome} K={'' if result.K is None else result.K} monotone={result.monotone}")
	return EXIT_RESOURCE if result.outcome == UNRESOLVED else EXIT_OK

def cmd_table(args, context):
	values = resolve_values(args)
	for key in ("mu1", "mu2", "nmax"):
		if values.get(key) is None:
			raise ParameterError(f"--{key} is required")
	table = SojournTable(values["mu1"], values["mu2"], values["nmax"], verify = args.verify, logger = context.log)
	context.manifest.params = {"mu1": values["mu1"], "mu2": values["mu2"], "nmax": values["nmax"], "verify": args.verify}
	context.write_csv("table.csv", table.to_csv)
	if args.decision:
		params = _model_params(values, args, context.log)
		policy = full_information_decision(params, table, logger = context.log)
		context.manifest.params.update(_model_values(values))

		def fill(stream):
			writer = csv.writer(stream, lineterminator = "\n")
			writer.writerow(DECISION_CSV_HEADER)
			for n in range(policy.size + 1):
				for m in range(policy.size - n + 1):
					writer.writerow((n, m, float(policy.profits[n][m]), int(policy.joins(n, m))))

		context.write_csv("decision.csv", fill)
	return EXIT_OK

def cmd_simulate(args, context):
	values = resolve_values(args)
	params = _model_params(values, args, context.log)
	if values.get("K") is None:
		raise ParameterError("--K is required")
	settings = {"seed": values.get("seed"), "measured_events": values.get("events"), "warmup_events": values.get("warmup"), "replications": values.get("reps")}
	config = SimConfig(workers = args.workers, batches = args.batches, **{key: value for key, value in settings.items() if value is not None})
	estimate = simulate(params, values["K"], config, logger = context.log)
	profits = estimate_profit_empirical(params, values["K"], config, confidence = args.confidence, estimate = estimate)
	document = estimate.to_document()
	document["params"] = params.to_mapping()
	document["confidence"] = args.confidence
	document["empirical_profit"] = [row._asdict() for row in profits]
	context.manifest.params = dict(_model_values(values), K = values["K"], events = config.measured_events, warmup = config.warmup_events, reps = config.replications, batches = config.batches)
	context.manifest.seeds = [config.seed]
	context.write_json("simulate.json", document)
	return EXIT_OK

def sweep_grid(start, stop, step):
	"""
	Return the grid start, start + step, ... up to stop (included within 1e-9 steps).
	"""
	if not all(math.isfinite(value) for value in (start, stop, step)):
		raise ParameterError("sweep bounds must be finite")
	if step <= 0:
		raise ParameterError("--step must be > 0")
	if stop < start:
		raise ParameterError("empty sweep grid: --to is below --from")
	count = int(math.floor((stop - start) / step + 1e-9)) + 1
	return [round(start + index * step, 12) for index in range(count)]

def cmd_sweep(args, context):
	values = resolve_values(args)
	grid = sweep_grid(args.start, args.stop, args.step)
	rows = []
	unresolved = False
	for value in grid:
		point = dict(values)
		point[args.param] = value
		params = _model_params(point, args, context.log)
		result = find_threshold(params, cap = values.get("cap"), logger = context.log)
		unresolved = unresolved or result.outcome == UNRESOLVED
		rows.append((value, result.outcome, "" if result.K is None else result.K, str(result.monotone).lower()))
	fixed = {key: item for key, item in _model_values(values).items() if key != args.param}
	context.manifest.params = dict(fixed, param = args.param, start = args.start, stop = args.stop, step = args.step, cap = values.get("cap"))

	def fill(stream):
		writer = csv.writer(stream, lineterminator = "\n")
		writer.writerow(SWEEP_CSV_HEADER)
		writer.writerows(rows)

	context.write_csv("sweep.csv", fill)
	return EXIT_RESOURCE if unresolved else EXIT_OK

def cmd_validate(args, context):
	results = run_suite(quick = args.quick, fault = args.self_test_negative, logger = context.log)
	print(format_results(results))
	context.manifest.params = {"quick": args.quick}
	context.write_json("validate.json", [{"name": item.name, "passed": item.passed, "max_error": item.max_error, "tolerance": item.tolerance, "cases": item.cases} for item in results])
	failed = [item for item in results if not item.passed]
	for item in failed:
		print(f"{PROG}: check {item.name} failed, max error {item.max_error:.3e}", file = sys.stderr)
	return EXIT_FAILURE if failed else EXIT_OK

COMMANDS = {
	"solve":	cmd_solve,
	"table":	cmd_table,
	"simulate":	cmd_simulate,
	"sweep":	cmd_sweep,
	"validate":	cmd_validate,
}

def main(argv = None):
	"""
	Run the pytandem command and return its exit code.
	"""
	parser = build_parser()
	try:
		args = parser.parse_args(argv)
	except SystemExit as stop:
		return EXIT_USAGE if stop.code else EXIT_OK

	level = LOG_LEVELS.get(os.environ.get("TANDEM_LOG", "error").strip().lower(), logging.ERROR)
	logger = create_log(PROG, level = level, writestream = sys.stderr)
	context = RunContext(args.command, args.out, logger)
	try:
		code = COMMANDS[args.command](args, context)
	except ParameterError as error:
		print(f"{PROG} {args.command}: error: {error}", file = sys.stderr)
		parser.print_usage(sys.stderr)
		return EXIT_USAGE
	except BudgetExceededError as error:
		print(f"{PROG} {args.command}: budget exceeded: {error}", file = sys.stderr)
		return EXIT_RESOURCE
	except InconsistencyError as error:
		print(f"{PROG} {args.command}: inconsistency: {error}", file = sys.stderr)
		return EXIT_FAILURE
	else:
		context.close()
		return code
	finally:
		for handler in list(logger.handlers):
			handler.flush()
			logger.removeHandler(handler)
