# -*- coding: utf-8 -*-

"""
Module partial : what an arrival who only observes the total number of customers k = Q1 + Q2 can infer.

Under a threshold strategy K of the population, the network is a semi-open Jackson network with product-form stationary law pi(n,m) = c_K rho1**n rho2**m on n + m <= K. Conditioned on the total k, the law of the queue lengths does not depend on K (nor on the arrival rate), hence neither do the conditional mean sojourn times T1(k), T2(k) and T(k).
"""


# Standard modules
#------------------
import csv
import operator
from collections import namedtuple
from dataclasses import dataclass

# Third party modules
#--------------------
import numpy as np
from scipy.special import logsumexp

# Internal modules
#-----------------
from pytandem.model import ParameterError, GridTooSmallError, BudgetExceededError, InconsistencyError, child_log, require_valid
from pytandem.sojourn import check_rates

# Global constants
#-----------------
EQUAL_RATES_TOLERANCE = 1e-9 # relative gap under which mu1 and mu2 are treated as equal
DIRECT_PATH_TOLERANCE = 1e-10
ORDER_TOLERANCE = 1e-12
PROFILE_CSV_HEADER = ("k", "t1", "t2", "t")

# namedtuples
#------------
Comparison = namedtuple("Comparison", "n lhs rhs relation")
OrderReport = namedtuple("OrderReport", "k node comparisons holds equal_below_k strict_at_k")
StOrderReport = namedtuple("StOrderReport", "k node holds max_violation")
ProfileRow = namedtuple("ProfileRow", "k t1 t2 t")

# Functions
#----------
def equal_rates(mu1, mu2):
	"""
	True if mu1 and mu2 are numerically equal: |mu1 - mu2| <= 1e-9 * max(mu1, mu2).
	"""
	return abs(mu1 - mu2) <= EQUAL_RATES_TOLERANCE * max(mu1, mu2)

def _check_count(name, value):
	try:
		value = operator.index(value)
	except TypeError:
		raise ParameterError(f"{name} must be an integer, got {value!r}") from None
	if value < 0:
		raise ParameterError(f"{name} must be >= 0")
	return value

def _geometric_law(ratio, k):
	"""
	Weights ratio**j (1-ratio)/(1-ratio**(k+1)), j = 0..k, for 0 < ratio < 1.
	"""
	powers = np.ones(k + 1)
	if k > 0:
		powers[1:] = np.cumprod(np.full(k, ratio))
	log_ratio = np.log(ratio)
	normalisation = np.expm1(log_ratio) / np.expm1((k + 1) * log_ratio)
	return powers * normalisation

def stationary_law(params, K, max_K = None, logger = None):
	"""
	Return the product-form StationaryLaw of the network when every arrival joins iff fewer than K customers are present.

	Parameters
	----------
	params : pytandem.model.ModelParams
		model parameters
	K : int
		threshold of the population (>= 0)
	max_K : int, optional
		memory cap on K (default is StationaryLaw.DEFAULT_MAX_K)
	logger : logging.Logger object, optional
		parent logger (default is None)
	"""
	log = child_log(logger, "partial")
	require_valid(params, logger)
	K = _check_count("K", K)
	cap = StationaryLaw.DEFAULT_MAX_K if max_K is None else max_K
	if K > cap:
		log.warning(f"Threshold {K} exceeds the stationary-law cap {cap}")
		raise BudgetExceededError(f"K = {K} exceeds the stationary-law cap of {cap}")

	index = np.arange(K + 1)
	n_grid, m_grid = np.meshgrid(index, index, indexing = "ij")
	inside = n_grid + m_grid <= K
	log_weights = np.where(inside, n_grid * np.log(params.rho1) + m_grid * np.log(params.rho2), -np.inf)
	log_norm = logsumexp(log_weights)
	probabilities = np.where(inside, np.exp(log_weights - log_norm), 0.0)
	log.debug(f"Product-form law for K={K}: log c_K = {-log_norm}")
	return StationaryLaw(K, probabilities, params.rho1, params.rho2, float(-log_norm))

def conditional_dist(mu1, mu2, k, node = 1):
	"""
	Return the ConditionalDistribution of the queue length at `node` given a total of k customers.

	For node 1, p1(n|k) = q**n (1-q)/(1-q**(k+1)) with q = mu2/mu1, and the uniform law 1/(k+1) when the rates are equal. The powers are always taken of a ratio below 1. Node 2 is the mirror image: p2(n|k) = p1(k-n|k).
	"""
	check_rates(mu1, mu2)
	k = _check_count("k", k)
	if node not in (1, 2):
		raise ParameterError(f"node must be 1 or 2, got {node!r}")
	if equal_rates(mu1, mu2):
		weights = np.full(k + 1, 1.0 / (k + 1))
	elif mu2 < mu1:
		weights = _geometric_law(mu2 / mu1, k)
	else:
		weights = _geometric_law(mu1 / mu2, k)[::-1]
	if node == 2:
		weights = weights[::-1]
	return ConditionalDistribution(k, node, np.ascontiguousarray(weights))

def t1_cond(mu1, mu2, k):
	"""
	Expected sojourn time at node 1 of an arrival who finds k customers in the network.

	Closed form 1/(mu1-mu2) - ((k+1)/mu1) mu2**(k+1)/(mu1**(k+1) - mu2**(k+1)), evaluated with the ratio q of the smaller to the larger rate; (1 + k/2)/mu1 when the rates are equal.
	Both terms grow like 1/(1-q) near equal rates, so 1/(mu1-mu2) is written mu_big (1-q) with the same rounded q as the second term.
	"""
	check_rates(mu1, mu2)
	k = _check_count("k", k)
	if equal_rates(mu1, mu2):
		return (1.0 + k / 2.0) / mu1
	if mu1 > mu2:
		log_q = np.log(mu2 / mu1)
		exponent = (k + 1) * log_q
		return float(1.0 / (mu1 * -np.expm1(log_q)) - (k + 1) / mu1 * np.exp(exponent) / -np.expm1(exponent))
	log_q = np.log(mu1 / mu2)
	exponent = (k + 1) * log_q
	return float((k + 1) / mu1 / -np.expm1(exponent) - 1.0 / (mu2 * -np.expm1(log_q)))

def t1_direct(mu1, mu2, k):
	"""
	T1(k) as the weighted sum of (n+1)/mu1 over p1(n|k).
	"""
	law = conditional_dist(mu1, mu2, k, 1)
	return float(np.dot(np.arange(1, k + 2) / mu1, law.weights))

def t1_limit(mu1, mu2):
	"""
	Limit of T1(k) as k grows: 1/(mu1-mu2) if mu1 > mu2, infinity otherwise.
	"""
	check_rates(mu1, mu2)
	if mu1 > mu2 and not equal_rates(mu1, mu2):
		return 1.0 / (mu1 - mu2)
	return float("inf")

def _check_table(table, mu1, mu2, k):
	if (table.mu1, table.mu2) != (float(mu1), float(mu2)):
		raise ParameterError(f"table was built for rates ({table.mu1}, {table.mu2}), not ({mu1}, {mu2})")
	if not table.covers(k + 1):
		raise GridTooSmallError(f"k = {k} needs a table covering anti-diagonal {k + 1}, table has n_max = {table.n_max}")

def t2_cond(table, mu1, mu2, k):
	"""
	Expected sojourn time at node 2 of an arrival who finds k customers: sum over n of T2(n+1, k-n) p1(n|k).

	Parameters
	----------
	table : pytandem.sojourn.SojournTable
		full-information table built for (mu1, mu2), covering anti-diagonal k+1
	mu1, mu2 : float
		service rates
	k : int
		observed number of customers
	"""
	k = _check_count("k", k)
	_check_table(table, mu1, mu2, k)
	law = conditional_dist(mu1, mu2, k, 1)
	return float(np.dot(table.anti_diagonal(k + 1, "t2")[1:], law.weights))

def t_direct(table, mu1, mu2, k):
	"""
	Expected total sojourn time E[T(Q1(k)+1, k-Q1(k))] computed from the T table.
	"""
	k = _check_count("k", k)
	_check_table(table, mu1, mu2, k)
	law = conditional_dist(mu1, mu2, k, 1)
	return float(np.dot(table.anti_diagonal(k + 1, "t")[1:], law.weights))

def t_cond(table, mu1, mu2, k, verify = False):
	"""
	Expected total sojourn time T(k) = T1(k) + T2(k).

	If `verify` is True, T(k) is also computed by `t_direct()` and InconsistencyError is raised when both differ by more than 1e-10.
	"""
	total = t1_cond(mu1, mu2, k) + t2_cond(table, mu1, mu2, k)
	if verify:
		direct = t_direct(table, mu1, mu2, k)
		if abs(total - direct) > DIRECT_PATH_TOLERANCE:
			table.log.error(f"T({k}) closed form {total} differs from direct expectation {direct}")
			raise InconsistencyError(f"T({k}) = {total} by T1 + T2 but {direct} by direct expectation")
	return total

def profile_table(table, mu1, mu2, k_max):
	"""
	Return the list of ProfileRow(k, t1, t2, t) for k = 0..k_max.
	"""
	k_max = _check_count("k_max", k_max)
	rows = []
	for k in range(k_max + 1):
		t1 = t1_cond(mu1, mu2, k)
		t2 = t2_cond(table, mu1, mu2, k)
		rows.append(ProfileRow(k, t1, t2, t1 + t2))
	return rows

def profile_to_csv(rows, stream):
	"""
	Write ProfileRow objects to `stream` as CSV with header k,t1,t2,t and LF line endings.
	"""
	writer = csv.writer(stream, lineterminator = "\n")
	writer.writerow(PROFILE_CSV_HEADER)
	writer.writerows(rows)

def lr_order_check(mu1, mu2, k, node = 1):
	"""
	Check the likelihood-ratio order between the queue length at `node` given k+1 and given k customers.

	For n = 0..k, compare P{Q(k+1)=n+1} P{Q(k)=n} (lhs) with P{Q(k+1)=n} P{Q(k)=n+1} (rhs). The order holds with equality for n < k and strictly at n = k, where P{Q(k)=k+1} = 0.

	Return an OrderReport with one Comparison per n, `relation` being 'equal', 'greater' or 'less'.
	"""
	k = _check_count("k", k)
	current = np.append(conditional_dist(mu1, mu2, k, node).weights, 0.0)
	following = conditional_dist(mu1, mu2, k + 1, node).weights
	comparisons = []
	for n in range(k + 1):
		lhs = following[n + 1] * current[n]
		rhs = following[n] * current[n + 1]
		if abs(lhs - rhs) <= ORDER_TOLERANCE * max(abs(lhs), abs(rhs)):
			relation = "equal"
		elif lhs > rhs:
			relation = "greater"
		else:
			relation = "less"
		comparisons.append(Comparison(n, float(lhs), float(rhs), relation))
	holds = all(item.relation != "less" for item in comparisons)
	equal_below_k = all(item.relation == "equal" for item in comparisons[:-1])
	strict_at_k = comparisons[-1].relation == "greater"
	return OrderReport(k, node, comparisons, holds, equal_below_k, strict_at_k)

def st_order_check(mu1, mu2, k, node = 1):
	"""
	Check the usual stochastic order Q(k+1) >=st Q(k) at `node` by comparing distribution functions.
	"""
	k = _check_count("k", k)
	lower = np.append(conditional_dist(mu1, mu2, k, node).cdf(), 1.0)
	upper = conditional_dist(mu1, mu2, k + 1, node).cdf()
	violation = float(np.max(upper - lower))
	return StOrderReport(k, node, violation <= ORDER_TOLERANCE, max(violation, 0.0))

# Dataclasses
#------------
@dataclass(frozen=True, eq=False)
class ConditionalDistribution:
	"""
	Law of the queue length at one node given the total number of customers k.

	Attributes
	----------
	k : int
		observed total.
	node : int
		1 or 2.
	weights : numpy.ndarray
		weights[n] = P{Q_node = n | Q1 + Q2 = k}, n = 0..k.
	"""
	k: int
	node: int
	weights: np.ndarray

	def mean(self):
		return float(np.dot(np.arange(self.k + 1), self.weights))

	def cdf(self):
		return np.cumsum(self.weights)

# Classes
#--------
class StationaryLaw():
	"""
	Stationary law of the network under a threshold strategy K, on the triangle n + m <= K.

	Attributes
	----------
	K : int
		threshold of the population.
	probabilities : numpy.ndarray
		(K+1) x (K+1) array, probabilities[n, m] = pi(n,m), 0 outside the triangle.
	rho1, rho2 : float
		utilisation ratios lambda/mu1 and lambda/mu2.
	log_c_K : float
		logarithm of the normalisation constant.
	"""

	DEFAULT_MAX_K = 2000

	def __init__(self, K, probabilities, rho1, rho2, log_c_K):
		self.K = K
		self.probabilities = probabilities
		self.rho1 = rho1
		self.rho2 = rho2
		self.log_c_K = log_c_K

	def __repr__(self):
		return f"<StationaryLaw K={self.K} rho1={self.rho1} rho2={self.rho2}>"

	@property
	def c_K(self):
		"""
		Normalisation constant (may underflow or overflow for large K; see `log_c_K`).
		"""
		return float(np.exp(self.log_c_K))

	def prob(self, n, m):
		if n < 0 or m < 0 or n + m > self.K:
			return 0.0
		return float(self.probabilities[n, m])

	def states(self):
		"""
		Iterate over (n, m, probability) for n + m <= K, n outermost.
		"""
		for n in range(self.K + 1):
			for m in range(self.K - n + 1):
				yield (n, m, float(self.probabilities[n, m]))

	def total_distribution(self):
		"""
		Law of Q1 + Q2, as a numpy array indexed by k = 0..K.
		"""
		totals = np.zeros(self.K + 1)
		for n in range(self.K + 1):
			totals[n:] += self.probabilities[n, :self.K - n + 1]
		return totals

	def conditional(self, k, node = 1):
		"""
		Law of the queue length at `node` given Q1 + Q2 = k, extracted from this stationary law.
		"""
		if not 0 <= k <= self.K:
			raise ParameterError(f"k = {k} is outside 0..{self.K}")
		diagonal = np.array([self.probabilities[n, k - n] for n in range(k + 1)])
		weights = diagonal / diagonal.sum()
		if node == 2:
			weights = weights[::-1]
		return ConditionalDistribution(k, node, weights)

	def max_difference(self, other):
		"""
		Largest absolute per-state difference with another StationaryLaw of the same K.
		"""
		if other.K != self.K:
			raise ParameterError(f"cannot compare laws with K = {self.K} and K = {other.K}")
		return float(np.max(np.abs(self.probabilities - other.probabilities)))
