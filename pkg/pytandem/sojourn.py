# -*- coding: utf-8 -*-

"""
Module sojourn : full-information expected sojourn times of a tagged customer in the tandem network.

T1(n,m), T2(n,m) and T(n,m) are the expected times spent at node 1, at node 2 and in total by a customer who takes position n in queue 1 while m customers are in queue 2.
"""


# Standard modules
#------------------
import csv
import numbers
import operator
from collections import namedtuple

# Third party modules
#--------------------
import numpy as np
from scipy.signal import lfilter

# Internal modules
#-----------------
from pytandem.model import ParameterError, GridTooSmallError, BudgetExceededError, InconsistencyError, child_log, require_valid, joins

# Global constants
#-----------------
CSV_HEADER = ("n", "m", "t1", "t2", "t")
DUAL_PATH_TOLERANCE = 1e-10
MONOTONICITY_TOLERANCE = 1e-12

# namedtuples
#------------
GridPoint = namedtuple("GridPoint", "n m")
Counterexample = namedtuple("Counterexample", "first second first_value second_value")
MonotonicityReport = namedtuple("MonotonicityReport", "t1_in_n t_antidiagonal t2_in_n t1_counterexample t_counterexample t2_counterexample")

# Functions
#----------
def check_rates(mu1, mu2):
	"""
	Raise ParameterError unless both service rates are finite and strictly positive.
	"""
	for name, rate in (("mu1", mu1), ("mu2", mu2)):
		if isinstance(rate, bool) or not isinstance(rate, numbers.Real):
			raise ParameterError(f"{name} must be a number, got {rate!r}")
		if not np.isfinite(rate) or rate <= 0:
			raise ParameterError(f"{name} must be > 0")

def delta1_t2_row0(mu1, mu2, m):
	"""
	Closed form of T2(1,m) - T2(0,m).

	With alpha = mu1/mu2 the difference equals (alpha - 1 + (alpha+1)**(-m)) / (alpha * mu2). It decreases in m towards (alpha-1)/(alpha*mu2), so T2 is non-decreasing in n exactly when mu1 >= mu2.
	"""
	check_rates(mu1, mu2)
	if m < 0:
		raise ParameterError("m must be >= 0")
	alpha = mu1 / mu2
	return (alpha - 1.0 + (alpha + 1.0) ** (-m)) / alpha / mu2

def build_table(mu1, mu2, n_max, max_n = None, verify = False, logger = None):
	"""
	Return a SojournTable covering every grid point n + m <= n_max.

	See SojournTable for the parameters.
	"""
	return SojournTable(mu1, mu2, n_max, max_n = max_n, verify = verify, logger = logger)

def check_monotonicity(table):
	"""
	Scan `table` for the three monotonicity properties of the full-information sojourn times.

	Return a MonotonicityReport with:
		- t1_in_n: T1(n,m) non-decreasing in n
		- t_antidiagonal: T(n,k-n) non-decreasing in n along every anti-diagonal k <= n_max
		- t2_in_n: T2(n,m) non-decreasing in n
	and, for every property found false, the first Counterexample (pair of grid points and their values), None otherwise.
	"""
	t1_cex = _scan_in_n(table, table.t1_at)
	t2_cex = _scan_in_n(table, table.t2_at)
	t_cex = None
	for k in range(1, table.n_max + 1):
		diagonal = table.anti_diagonal(k, "t")
		index = _first_decrease(diagonal)
		if index is not None:
			t_cex = Counterexample(GridPoint(index, k - index), GridPoint(index + 1, k - index - 1), diagonal[index], diagonal[index + 1])
			break
	report = MonotonicityReport(t1_cex is None, t_cex is None, t2_cex is None, t1_cex, t_cex, t2_cex)
	table.log.info(f"Monotonicity scan: T1 in n {report.t1_in_n}, T along anti-diagonals {report.t_antidiagonal}, T2 in n {report.t2_in_n}")
	return report

def _first_decrease(values):
	"""
	Return the first index i such that values[i+1] < values[i] beyond the tolerance, or None.
	"""
	if len(values) < 2:
		return None
	slack = MONOTONICITY_TOLERANCE * np.maximum(1.0, np.abs(values[:-1]))
	drops = np.nonzero(values[1:] < values[:-1] - slack)[0]
	return int(drops[0]) if drops.size else None

def _scan_in_n(table, getter):
	"""
	Return the first Counterexample to `getter(n,m) <= getter(n+1,m)`, scanning m then n, or None.
	"""
	for m in range(table.n_max):
		column = np.array([getter(n, m) for n in range(table.n_max - m + 1)])
		index = _first_decrease(column)
		if index is not None:
			return Counterexample(GridPoint(index, m), GridPoint(index + 1, m), column[index], column[index + 1])
	return None

def full_information_decision(params, table, logger = None):
	"""
	Return the join/balk decision of an arrival who observes the full state (n,m).

	The arrival takes position n+1 in queue 1 and joins iff R - C1*T1(n+1,m) - C2*T2(n+1,m) >= 0. Decisions are given for every state with n + m <= table.n_max - 1.

	Parameters
	----------
	params : pytandem.model.ModelParams
		model parameters, with rates matching the table
	table : SojournTable
		full-information sojourn times
	logger : logging.Logger object, optional
		parent logger (default is None)
	"""
	require_valid(params, logger)
	if (params.mu1, params.mu2) != (table.mu1, table.mu2):
		raise ParameterError(f"table was built for rates ({table.mu1}, {table.mu2}), not ({params.mu1}, {params.mu2})")
	if table.n_max < 1:
		raise GridTooSmallError("a full-information decision needs a table with n_max >= 1")
	profits = []
	for n in range(table.n_max):
		t1 = table.t1_row(n + 1)
		t2 = table.t2_row(n + 1)
		profits.append(params.reward - params.cost1 * t1 - params.cost2 * t2)
	policy = FullInformationPolicy(profits, params.reward)
	child_log(logger, "sojourn").info(f"Full-information decision computed on {table.n_max} anti-diagonals; largest total always joined: {policy.max_joining_total()}")
	return policy

# Classes
#--------
class FullInformationPolicy():
	"""
	Join region of arrivals who observe the full state (n,m).

	Attributes
	----------
	profits : list of numpy.ndarray
		profits[n][m] is the expected profit of an arrival finding state (n,m).
	size : int
		largest total n + m covered.
	"""

	def __init__(self, profits, scale = 1.0):
		self.profits = profits
		self.scale = scale
		self.size = len(profits) - 1

	def __repr__(self):
		return f"<FullInformationPolicy covering totals up to {self.size}>"

	def joins(self, n, m):
		"""
		True if an arrival finding state (n,m) joins (an expected profit of 0 joins).
		"""
		if n < 0 or m < 0 or n + m > self.size:
			raise GridTooSmallError(f"state ({n},{m}) is outside the decision grid (n+m <= {self.size})")
		return joins(float(self.profits[n][m]), self.scale)

	def diagonal(self, k):
		"""
		Join decisions along the anti-diagonal n + m = k, ordered by n.
		"""
		return [self.joins(n, k - n) for n in range(k + 1)]

	def max_joining_total(self):
		"""
		Largest k such that every state with n + m <= k joins, or -1 if the empty network is not joined.
		"""
		for k in range(self.size + 1):
			if not all(self.diagonal(k)):
				return k - 1
		return self.size

class SojournTable():
	"""
	Triangular tables of the expected sojourn times T1(n,m), T2(n,m) and T(n,m) for n + m <= n_max.

	T1(n,m) = n/mu1. T2 is filled row by row in n with the recursion
		T2(n,m) = b**m T2(n-1,1) + a * sum_{j<m} b**j T2(n-1,m+1-j),	a = mu1/(mu1+mu2), b = mu2/(mu1+mu2)
	from T2(0,m) = m/mu2, the inner sum being the first-order prefix recurrence S(m) = T2(n-1,m+1) + b*S(m-1). T = T1 + T2.

	In verification mode, T is also filled independently by first-step analysis along the anti-diagonals,
		T(n,m) = 1/(mu1+mu2) + a*T(n-1,m+1) + b*T(n,m-1),	T(0,m) = m/mu2,	T(n,0) = 1/mu1 + T(n-1,1),
	and both fills must agree within 1e-10.

	Attributes
	----------
	mu1, mu2 : float
		service rates. Read-only.
	n_max : int
		largest anti-diagonal covered. Read-only.
	log : logging.Logger object
		logger used to track the construction.

	Methods
	-------
	t1_at(n, m), t2_at(n, m), t_at(n, m)
		single entries.
	t1_row(n), t2_row(n), t_row(n)
		row n, indexed by m = 0..n_max-n.
	anti_diagonal(k, which)
		entries (n, k-n) for n = 0..k.
	delta1_t2(n, m)
		T2(n+1,m) - T2(n,m).
	covers(k)
		True if the anti-diagonal k is in the table.
	rows()
		iterator over (n, m, t1, t2, t) tuples.
	to_csv(stream)
		CSV dump of the table.
	"""

	DEFAULT_MAX_N = 2000

	def __init__(self, mu1, mu2, n_max, max_n = None, verify = False, logger = None):
		"""
		Parameters
		----------
		mu1 : float
			service rate of node 1 (> 0).
		mu2 : float
			service rate of node 2 (> 0).
		n_max : int
			largest anti-diagonal n + m to fill (>= 0).
		max_n : int, optional
			fill budget: largest accepted n_max (default is SojournTable.DEFAULT_MAX_N).
		verify : bool, optional
			if True, fill T a second time by first-step analysis and raise InconsistencyError on disagreement (default False).
		logger : logging.Logger object, optional
			parent logger (default is None).
		"""
		self.log = child_log(logger, "SojournTable")
		check_rates(mu1, mu2)
		try:
			n_max = operator.index(n_max)
		except TypeError:
			raise ParameterError(f"n_max must be an integer, got {n_max!r}") from None
		if n_max < 0:
			self.log.warning(f"Negative grid size requested: {n_max}")
			raise ParameterError("n_max must be >= 0")
		budget = SojournTable.DEFAULT_MAX_N if max_n is None else max_n
		if n_max > budget:
			self.log.warning(f"Grid size {n_max} exceeds the fill budget {budget}")
			raise BudgetExceededError(f"n_max = {n_max} exceeds the fill budget of {budget}")

		self._mu1 = float(mu1)
		self._mu2 = float(mu2)
		self._n_max = n_max
		self.log.info(f"Filling sojourn table for mu1={self._mu1}, mu2={self._mu2}, n_max={n_max}")
		self._t2 = self._fill_t2()
		self._t1 = [np.full(n_max - n + 1, n / self._mu1) for n in range(n_max + 1)]
		self._t = [t1 + t2 for t1, t2 in zip(self._t1, self._t2)]
		if verify:
			self.verify()

	def __repr__(self):
		return f"<SojournTable mu1={self._mu1} mu2={self._mu2} n_max={self._n_max}>"

	#############################################################
	# Public attributes

	@property
	def mu1(self):
		"""
		Service rate of node 1. Read-only attribute.
		"""
		return self._mu1

	@property
	def mu2(self):
		"""
		Service rate of node 2. Read-only attribute.
		"""
		return self._mu2

	@property
	def n_max(self):
		"""
		Largest anti-diagonal covered. Read-only attribute.
		"""
		return self._n_max

	#############################################################
	# Public methods

	def covers(self, k):
		"""
		True if every grid point with n + m = k is in the table.
		"""
		return 0 <= k <= self._n_max

	def t1_at(self, n, m):
		return self._entry(self._t1, n, m)

	def t2_at(self, n, m):
		return self._entry(self._t2, n, m)

	def t_at(self, n, m):
		return self._entry(self._t, n, m)

	def t1_row(self, n):
		return self._row(self._t1, n)

	def t2_row(self, n):
		return self._row(self._t2, n)

	def t_row(self, n):
		return self._row(self._t, n)

	def delta1_t2(self, n, m):
		"""
		Difference T2(n+1,m) - T2(n,m).
		"""
		return self.t2_at(n + 1, m) - self.t2_at(n, m)

	def anti_diagonal(self, k, which = "t"):
		"""
		Return the numpy array of the entries (n, k-n), n = 0..k, of table `which` ('t1', 't2' or 't').
		"""
		if not self.covers(k):
			raise GridTooSmallError(f"anti-diagonal {k} is outside the table (n_max = {self._n_max})")
		rows = {"t1": self._t1, "t2": self._t2, "t": self._t}[which]
		return np.array([rows[n][k - n] for n in range(k + 1)])

	def rows(self):
		"""
		Iterate over (n, m, t1, t2, t), n outermost.
		"""
		for n in range(self._n_max + 1):
			for m in range(self._n_max - n + 1):
				yield (n, m, float(self._t1[n][m]), float(self._t2[n][m]), float(self._t[n][m]))

	def to_csv(self, stream):
		"""
		Write the table to the text stream `stream` as CSV with header n,m,t1,t2,t and LF line endings.
		"""
		writer = csv.writer(stream, lineterminator = "\n")
		writer.writerow(CSV_HEADER)
		writer.writerows(self.rows())

	def verify(self):
		"""
		Fill T by first-step analysis and compare it with T1 + T2. Return the largest absolute difference.

		Raise InconsistencyError if it exceeds 1e-10.
		"""
		t_direct = self._fill_t_first_step()
		error = max(float(np.max(np.abs(direct - combined))) for direct, combined in zip(t_direct, self._t))
		self.log.debug(f"Dual-path fill difference: {error}")
		if error > DUAL_PATH_TOLERANCE:
			self.log.error(f"Dual-path fill disagrees by {error}")
			raise InconsistencyError(f"first-step fill of T differs from T1 + T2 by {error}")
		return error

	def first_step_t(self):
		"""
		Return the rows of T filled by first-step analysis (independent of the T2 recursion).
		"""
		return self._fill_t_first_step()

	#############################################################
	# Private methods

	def _entry(self, rows, n, m):
		if n < 0 or m < 0:
			raise ParameterError(f"grid coordinates must be >= 0, got ({n},{m})")
		if n + m > self._n_max:
			raise GridTooSmallError(f"grid point ({n},{m}) is outside the table (n_max = {self._n_max})")
		return float(rows[n][m])

	def _row(self, rows, n):
		if not self.covers(n):
			raise GridTooSmallError(f"row {n} is outside the table (n_max = {self._n_max})")
		return rows[n]

	def _fill_t2(self):
		"""
		Rows of T2 by the geometric-weight recursion in n.
		"""
		mu1, mu2, n_max = self._mu1, self._mu2, self._n_max
		a = mu1 / (mu1 + mu2)
		b = mu2 / (mu1 + mu2)
		powers = np.cumprod(np.full(n_max, b)) # b**1 .. b**n_max
		rows = [np.arange(n_max + 1) / mu2]
		for n in range(1, n_max + 1):
			previous = rows[n - 1] # m = 0 .. n_max-n+1
			width = n_max - n + 1
			row = np.empty(width)
			row[0] = previous[1]
			if width > 1:
				prefix = lfilter([1.0], [1.0, -b], previous[2:width + 1])
				row[1:] = powers[:width - 1] * previous[1] + a * prefix
			rows.append(row)
		return rows

	def _fill_t_first_step(self):
		"""
		Rows of T by first-step analysis, one anti-diagonal at a time.
		"""
		mu1, mu2, n_max = self._mu1, self._mu2, self._n_max
		a = mu1 / (mu1 + mu2)
		b = mu2 / (mu1 + mu2)
		step = 1.0 / (mu1 + mu2)
		rows = [np.empty(n_max - n + 1) for n in range(n_max + 1)]
		for k in range(n_max + 1):
			rows[0][k] = k / mu2
			for n in range(1, k + 1):
				m = k - n
				if m == 0:
					rows[n][0] = 1.0 / mu1 + rows[n - 1][1]
				else:
					rows[n][m] = step + a * rows[n - 1][m + 1] + b * rows[n][m - 1]
		return rows
