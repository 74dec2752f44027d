# -*- coding: utf-8 -*-

"""
Module model : parameters of the two-node tandem network and the economic preconditions shared by the other modules.
"""


# Standard modules
#------------------
import sys
import math
import numbers
import logging
from collections import namedtuple
from dataclasses import dataclass, asdict, replace

# Third party modules
#--------------------
from colorlog import ColoredFormatter

# Internal modules
#-----------------

# Global constants
#-----------------
TIE_TOLERANCE = 1e-12 # relative slack under which an expected profit counts as 0
LOG_FORMAT = '%(log_color)s[%(asctime)s][%(levelname)s][%(name)s]:%(message)s'
LOG_COLOURS = {
				'DEBUG':	'cyan',
				'INFO':		'green',
				'WARNING':	'yellow',
				'ERROR':	'red',
				'CRITICAL':	'red,bg_white'
				}

# Names of the JSON keys, identical to the CLI flags
PARAMETER_KEYS = {
				'lambda':	'lam',
				'mu1':		'mu1',
				'mu2':		'mu2',
				'R':		'reward',
				'c1':		'cost1',
				'c2':		'cost2'
				}

# namedtuples
#------------
ValidationReport = namedtuple("ValidationReport", "valid checks base_profit viable")

# Exceptions
#-----------
class TandemError(Exception):
	"""
	Base class of all errors raised by pytandem.
	"""

class ParameterError(TandemError, ValueError):
	"""
	Invalid rates, economic constants, grid sizes or thresholds.
	"""

class GridTooSmallError(TandemError, IndexError):
	"""
	A SojournTable does not cover the anti-diagonal required by a computation.
	"""

class BudgetExceededError(TandemError, MemoryError):
	"""
	A configured size cap would be exceeded.
	"""

class InconsistencyError(TandemError, AssertionError):
	"""
	Two independent computations of the same quantity disagree.
	"""

# Functions
#----------
def create_log(name, level = logging.DEBUG, writestream = sys.stdout):
	"""
	Return a logger with the specified name, level and output stream.

	This function wraps the logging.getLogger() function, adding colorization for ECMA-48 compliant terminals. All calls to this function with a given name return the same logger instance.

	Parameters
	----------
	name : str
		The name of the logger
	level : int, optional
		The threshold of the logger (default is logging.DEBUG)
	writestream : writable text file-like object, optional
		Output stream where logging messages should be printed. Can also be None. In this case, no logging messages will be printed (default is sys.stdout).
	"""
	formatter = ColoredFormatter(
		LOG_FORMAT,
		datefmt='%Y-%m-%d %H:%M:%S',
		reset=True,
		log_colors=LOG_COLOURS,
		secondary_log_colors={},
		style='%'
	)

	if writestream is None:
		handler = logging.NullHandler()
	else:
		handler = logging.StreamHandler(writestream)
	handler.setLevel(level)
	handler.setFormatter(formatter)

	log = logging.getLogger(name)
	log.setLevel(level)
	# The previous stream may be closed already: drop its handler without flushing it.
	for existing in [item for item in log.handlers if type(item) is type(handler)]:
		log.removeHandler(existing)
	log.addHandler(handler)

	return log

def child_log(logger, name):
	"""
	Return the child `name` of `logger`, or a silent logger if `logger` is None.
	"""
	if logger is None:
		return create_log(f"pytandem.{name}", writestream = None)
	return logger.getChild(name)

def _field_check(name, value, allow_zero):
	"""
	Return None if `value` is an acceptable finite number, or a diagnostic message.
	"""
	if isinstance(value, bool) or not isinstance(value, numbers.Real):
		return f"{name} must be a number, got {value!r}"
	number = float(value)
	if not math.isfinite(number):
		return f"{name} must be finite, got {value!r}"
	if allow_zero and number < 0:
		return f"{name} must be >= 0"
	if not allow_zero and number <= 0:
		return f"{name} must be > 0"
	return None

def validate(params):
	"""
	Check every field of `params` and return a ValidationReport.

	The report holds `valid` (bool), `checks` (dict field name -> None or diagnostic message), `base_profit` (profit of an arrival finding the network empty, None if a rate is invalid) and `viable` (see `viability()`, None if a rate is invalid). This function has no side effect.

	Parameters
	----------
	params : ModelParams
		parameters to check
	"""
	checks = {
		'lambda':	_field_check('lambda', params.lam, False),
		'mu1':		_field_check('mu1', params.mu1, False),
		'mu2':		_field_check('mu2', params.mu2, False),
		'R':		_field_check('R', params.reward, True),
		'c1':		_field_check('c1', params.cost1, True),
		'c2':		_field_check('c2', params.cost2, True),
	}
	rates_ok = all(checks[key] is None for key in ('mu1', 'mu2', 'R', 'c1', 'c2'))
	if rates_ok and not params.allow_degenerate:
		if float(params.cost1) == 0 and float(params.cost2) == 0:
			checks['c2'] = "c1 and c2 cannot both be 0 unless degenerate economics are allowed"

	base_profit = params.base_profit() if rates_ok else None
	viable = joins(base_profit, params.reward) if rates_ok else None
	valid = all(message is None for message in checks.values())
	return ValidationReport(valid, checks, base_profit, viable)

def require_valid(params, logger = None):
	"""
	Raise ParameterError carrying the first failed check if `params` is not valid. Return `params` otherwise.
	"""
	report = validate(params)
	if not report.valid:
		message = "; ".join(msg for msg in report.checks.values() if msg is not None)
		child_log(logger, "model").warning(f"Invalid parameters {params}: {message}")
		raise ParameterError(message)
	return params

def joins(profit, scale):
	"""
	True if an expected profit leads to joining.

	A profit of 0 joins. Rounding noise is absorbed: profits down to -1e-12 * max(1, |scale|) count as 0, `scale` being the size of the terms the profit was computed from (typically R).
	"""
	return profit >= -TIE_TOLERANCE * max(1.0, abs(scale))

def viability(params):
	"""
	Return True if an arrival finding the network empty joins, i.e. R - C1/mu1 - C2/mu2 >= 0.

	An expected profit of exactly 0 counts as joining, so R = C1/mu1 + C2/mu2 is viable.
	"""
	require_valid(params)
	return joins(params.base_profit(), params.reward)

# Dataclasses
#------------
@dataclass(frozen=True)
class ModelParams:
	"""
	Rates and economic constants of the tandem network.

	Attributes
	----------
	lam : float
		arrival rate (lambda), in events per unit time.
	mu1 : float
		service rate of node 1.
	mu2 : float
		service rate of node 2.
	reward : float
		reward R earned by a customer who joins.
	cost1 : float
		cost C1 per unit of sojourn time at node 1.
	cost2 : float
		cost C2 per unit of sojourn time at node 2.
	allow_degenerate : bool
		if True, cost1 = cost2 = 0 is accepted (default False).

	Instances are immutable and are not validated on construction: call `validate()` or `require_valid()`.
	"""
	lam: float
	mu1: float
	mu2: float
	reward: float = 0.0
	cost1: float = 0.0
	cost2: float = 0.0
	allow_degenerate: bool = False

	@classmethod
	def from_mapping(cls, mapping, allow_degenerate = False):
		"""
		Build a ModelParams object from a mapping using the JSON/CLI key names (lambda, mu1, mu2, R, c1, c2).

		Missing keys raise ParameterError.
		"""
		missing = [key for key in PARAMETER_KEYS if key not in mapping]
		if missing:
			raise ParameterError(f"missing parameter(s): {', '.join(missing)}")
		values = {attr: mapping[key] for key, attr in PARAMETER_KEYS.items()}
		return cls(allow_degenerate = allow_degenerate, **values)

	def to_mapping(self):
		"""
		Return the parameters as a dict keyed by the JSON/CLI names.
		"""
		fields = asdict(self)
		return {key: fields[attr] for key, attr in PARAMETER_KEYS.items()}

	def base_profit(self):
		"""
		Expected profit of an arrival finding the network empty: R - C1/mu1 - C2/mu2.
		"""
		return self.reward - self.cost1 / self.mu1 - self.cost2 / self.mu2

	def with_values(self, **changes):
		"""
		Return a copy with some fields replaced.
		"""
		return replace(self, **changes)

	@property
	def rho1(self):
		"""
		Utilisation ratio lambda/mu1 of node 1.
		"""
		return self.lam / self.mu1

	@property
	def rho2(self):
		"""
		Utilisation ratio lambda/mu2 of node 2.
		"""
		return self.lam / self.mu2
