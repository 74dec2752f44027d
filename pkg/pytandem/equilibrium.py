# -*- coding: utf-8 -*-

"""
Module equilibrium : expected net profit P(k) of an arrival who observes k customers, and the equilibrium threshold.

P(k) = R - C1 T1(k) - C2 T2(k) depends neither on the arrival rate nor on the threshold used by the other customers. The equilibrium threshold is the least k with P(k) < 0 (possibly infinite): an arrival joins iff there are fewer than K customers.
"""


# Standard modules
#------------------
import csv
import math
import operator
from collections import namedtuple
from dataclasses import dataclass, field

# Third party modules
#--------------------

# Internal modules
#-----------------
from pytandem.model import ParameterError, BudgetExceededError, InconsistencyError, child_log, require_valid, joins
from pytandem.sojourn import SojournTable
from pytandem.partial import t1_cond, t2_cond, t1_limit, equal_rates

# Global constants
#-----------------
FINITE = "finite"
INFINITE = "infinite"
UNRESOLVED = "unresolved"
PROFILE_CSV_HEADER = ("k", "t1", "t2", "profit")

# namedtuples
#------------
ProfitRow = namedtuple("ProfitRow", "k t1 t2 profit")
ConditionReport = namedtuple("ConditionReport", "mu1_greater c1_not_less monotone")

# Functions
#----------
def profit(params, table, k):
	"""
	Expected net profit R - C1 T1(k) - C2 T2(k) of an arrival who finds k customers in the network.

	`table` must be built for (mu1, mu2) and cover the anti-diagonal k+1.
	"""
	return params.reward - params.cost1 * t1_cond(params.mu1, params.mu2, k) - params.cost2 * t2_cond(table, params.mu1, params.mu2, k)

def profit_alternative(params, table, k):
	"""
	Same profit, written R - (C1 - C2) T1(k) - C2 T(k).
	"""
	t1 = t1_cond(params.mu1, params.mu2, k)
	total = t1 + t2_cond(table, params.mu1, params.mu2, k)
	return params.reward - (params.cost1 - params.cost2) * t1 - params.cost2 * total

def monotone_conditions(params):
	"""
	Sufficient conditions for P(k) to be non-increasing in k: mu1 > mu2, or C1 >= C2.

	Return a ConditionReport(mu1_greater, c1_not_less, monotone).
	"""
	require_valid(params)
	mu1_greater = params.mu1 > params.mu2
	c1_not_less = params.cost1 >= params.cost2
	return ConditionReport(mu1_greater, c1_not_less, mu1_greater or c1_not_less)

def certified_bound(params):
	"""
	Return (k_bound, certificate): P(k) < 0 is guaranteed for every k >= k_bound, or (None, None) if no bound is known.

	- min(C1, C2) > 0: the tagged customer leaves node 2 after k+1 node-2 services, so T(k) >= (k+1)/mu2 and P(k) <= R - min(C1,C2) T(k). k_bound = ceil(R mu2 / min(C1,C2)) + 1.
	- C2 = 0 < C1 and mu1 <= mu2: p1(.|k) is non-decreasing, so T1(k) >= (1 + k/2)/mu1. k_bound = ceil(2 (R mu1/C1 - 1)) + 1.
	"""
	lowest = min(params.cost1, params.cost2)
	if lowest > 0:
		return math.ceil(params.reward * params.mu2 / lowest) + 1, "sequential node-2 services"
	if params.cost2 == 0 and params.cost1 > 0 and (params.mu1 <= params.mu2 or equal_rates(params.mu1, params.mu2)):
		return max(0, math.ceil(2.0 * (params.reward * params.mu1 / params.cost1 - 1.0))) + 1, "node-1 queue at least uniform"
	return None, None

def find_threshold(params, cap = None, max_n = None, logger = None):
	"""
	Compute the equilibrium threshold. See ThresholdSearch.

	The scan never goes beyond the SojournTable budget: with the defaults, k <= SojournTable.DEFAULT_MAX_N - 1 = 1999 although ThresholdSearch.DEFAULT_CAP is 10000. The cap reported in the result is the one actually reached.
	"""
	return ThresholdSearch(params, cap = cap, max_n = max_n, logger = logger).run()

def threshold_is_lambda_invariant(params, lambdas, cap = None, logger = None):
	"""
	True if the equilibrium outcome and threshold are the same for every arrival rate in `lambdas`.
	"""
	outcomes = set()
	for lam in lambdas:
		result = find_threshold(params.with_values(lam = lam), cap = cap, logger = logger)
		outcomes.add((result.outcome, result.K))
	return len(outcomes) == 1

# Dataclasses
#------------
@dataclass
class ProfitProfile:
	"""
	Rows (k, t1, t2, profit) for k = 0..k_max.
	"""
	rows: list = field(default_factory = list)

	def profits(self):
		return [row.profit for row in self.rows]

	@property
	def k_max(self):
		return len(self.rows) - 1

	def to_records(self):
		return [row._asdict() for row in self.rows]

	def to_csv(self, stream):
		"""
		Write the profile as CSV with header k,t1,t2,profit and LF line endings.
		"""
		writer = csv.writer(stream, lineterminator = "\n")
		writer.writerow(PROFILE_CSV_HEADER)
		writer.writerows(self.rows)

@dataclass
class ThresholdResult:
	"""
	Outcome of the equilibrium threshold search.

	Attributes
	----------
	outcome : str
		'finite' (K found), 'infinite' (P(k) >= 0 for every k is certified) or 'unresolved' (no negative profit up to `cap`).
	K : int or None
		equilibrium threshold when the outcome is finite.
	cap : int
		largest k the search was allowed to reach.
	conditions : ConditionReport
		sufficient conditions for a non-increasing profit.
	profile : ProfitProfile
		profits computed during the search.
	certificate : str or None
		argument used to stop the search early or to certify an infinite threshold.
	diagnostic : str
		human-readable summary.
	"""
	outcome: str
	K: object
	cap: int
	conditions: ConditionReport
	profile: ProfitProfile
	certificate: object = None
	diagnostic: str = ""

	@property
	def monotone(self):
		return self.conditions.monotone

	@property
	def resolved(self):
		return self.outcome != UNRESOLVED

	@property
	def subgame_perfect_hint(self):
		"""
		True when the sufficient condition for a non-increasing profit holds. No stronger certificate is attempted.
		"""
		return self.conditions.monotone

	def to_document(self):
		"""
		JSON-ready dict: outcome, K, cap, monotone, profile, plus the diagnostics.
		"""
		return {
			"outcome": self.outcome,
			"K": self.K,
			"cap": self.cap,
			"monotone": self.monotone,
			"profile": self.profile.to_records(),
			"diagnostics": {
				"mu1_greater": self.conditions.mu1_greater,
				"c1_not_less": self.conditions.c1_not_less,
				"certificate": self.certificate,
				"message": self.diagnostic,
			},
		}

# Classes
#--------
class ThresholdSearch():
	"""
	Scan k = 0, 1, 2, ... for the least k with P(k) < 0.

	The scan stops:
		- at the first negative profit (outcome 'finite');
		- at once, with outcome 'infinite', when C1 = C2 = 0 (P(k) = R) or when C2 = 0, mu1 > mu2 and R - C1/(mu1-mu2) >= 0 (T1(k) increases towards 1/(mu1-mu2));
		- at `cap` otherwise, with outcome 'unresolved'.
	When a certified bound is known (see `certified_bound()`), the scan never goes beyond it, and reaching it without a negative profit raises InconsistencyError.

	The SojournTable is grown geometrically as k increases; if its budget is smaller than the cap, the cap is reduced accordingly and a warning is logged.
	"""

	DEFAULT_CAP = 10000
	DEFAULT_INFINITE_PROFILE = 200 # length of the profile reported with an infinite threshold
	INITIAL_GRID = 64

	def __init__(self, params, cap = None, max_n = None, logger = None):
		"""
		Parameters
		----------
		params : pytandem.model.ModelParams
			model parameters
		cap : int, optional
			largest k scanned (>= 1, default is ThresholdSearch.DEFAULT_CAP), lowered to max_n - 1 if needed
		max_n : int, optional
			SojournTable budget (default is SojournTable.DEFAULT_MAX_N)
		logger : logging.Logger object, optional
			parent logger (default is None)
		"""
		self.log = child_log(logger, "ThresholdSearch")
		self._logger = logger
		self.params = require_valid(params, logger)
		cap = ThresholdSearch.DEFAULT_CAP if cap is None else cap
		try:
			cap = operator.index(cap)
		except TypeError:
			raise ParameterError(f"cap must be an integer, got {cap!r}") from None
		if cap < 1:
			self.log.warning(f"Invalid cap {cap}")
			raise ParameterError("cap must be >= 1")
		self.cap = cap
		self.max_n = SojournTable.DEFAULT_MAX_N if max_n is None else max_n
		self._table = None

	#############################################################
	# Public methods

	def run(self):
		"""
		Perform the search and return a ThresholdResult.
		"""
		params = self.params
		conditions = monotone_conditions(params)
		self.log.info(f"Threshold search for {params}, cap {self.cap}")

		if params.cost1 == 0 and params.cost2 == 0:
			profile = self._scan(self._infinite_profile_length(), stop_on_negative = False)
			return self._result(INFINITE, None, conditions, profile, "zero costs", "P(k) = R >= 0 for every k")

		if params.cost2 == 0 and params.mu1 > params.mu2 and not equal_rates(params.mu1, params.mu2):
			limit = params.reward - params.cost1 * t1_limit(params.mu1, params.mu2)
			if limit >= 0:
				profile = self._scan(self._infinite_profile_length(), stop_on_negative = False)
				if not all(joins(value, params.reward) for value in profile.profits()):
					raise InconsistencyError(f"negative profit found although its limit {limit} is non-negative")
				return self._result(INFINITE, None, conditions, profile, "node-1 sojourn limit", f"P(k) decreases towards {limit} >= 0")

		bound, certificate = certified_bound(params)
		limit = self.cap if bound is None else min(self.cap, bound)
		effective_cap = min(self.cap, self.max_n - 1)
		clipped = limit > effective_cap
		if clipped:
			self.log.warning(f"Table budget {self.max_n} limits the scan to k <= {effective_cap} (requested {limit})")
			limit = effective_cap
		profile = self._scan(limit, stop_on_negative = True)

		last = profile.rows[-1]
		if not joins(last.profit, params.reward):
			return self._result(FINITE, last.k, conditions, profile, certificate, f"P({last.k}) = {last.profit} < 0")
		if bound is not None and limit >= bound:
			self.log.error(f"Certified bound {bound} reached without a negative profit")
			raise InconsistencyError(f"P(k) >= 0 up to the certified bound {bound}")
		diagnostic = f"no negative profit for k <= {limit}"
		if clipped:
			diagnostic += f" (scan limited by the table budget {self.max_n})"
		return self._result(UNRESOLVED, None, conditions, profile, certificate, diagnostic, cap = limit)

	#############################################################
	# Private methods

	def _infinite_profile_length(self):
		return min(self.cap, ThresholdSearch.DEFAULT_INFINITE_PROFILE, self.max_n - 1)

	def _result(self, outcome, K, conditions, profile, certificate, diagnostic, cap = None):
		result = ThresholdResult(outcome, K, self.cap if cap is None else cap, conditions, profile, certificate, diagnostic)
		if outcome == UNRESOLVED:
			self.log.warning(f"Threshold unresolved: {diagnostic}")
		else:
			self.log.info(f"Threshold outcome {outcome} (K = {K}): {diagnostic}")
		return result

	def _ensure_table(self, k):
		"""
		Make sure the table covers anti-diagonal k+1.
		"""
		if self._table is not None and self._table.covers(k + 1):
			return self._table
		size = ThresholdSearch.INITIAL_GRID if self._table is None else 2 * self._table.n_max
		size = min(max(size, k + 1), self.max_n)
		if size < k + 1:
			raise BudgetExceededError(f"k = {k} needs a table beyond the budget {self.max_n}")
		self._table = SojournTable(self.params.mu1, self.params.mu2, size, max_n = self.max_n, logger = self._logger)
		return self._table

	def _scan(self, limit, stop_on_negative):
		params = self.params
		profile = ProfitProfile()
		for k in range(limit + 1):
			table = self._ensure_table(k)
			t1 = t1_cond(params.mu1, params.mu2, k)
			t2 = t2_cond(table, params.mu1, params.mu2, k)
			value = params.reward - params.cost1 * t1 - params.cost2 * t2
			profile.rows.append(ProfitRow(k, t1, t2, value))
			self.log.debug(f"P({k}) = {value}")
			if stop_on_negative and not joins(value, params.reward):
				break
		return profile
