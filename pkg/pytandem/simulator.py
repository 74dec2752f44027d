# -*- coding: utf-8 -*-

"""
Module simulator : two oracles independent from the closed forms.

- `simulate()` runs the continuous-time Markov chain of the tandem network event by event under a threshold strategy K, and measures the state occupancy and the sojourn times of every joining customer.
- `solve_steady_state()` solves the global balance equations of the truncated chain as a dense linear system.
"""


# Standard modules
#------------------
import math
import operator
from collections import namedtuple, deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

# Third party modules
#--------------------
import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.stats import chisquare, norm

# Internal modules
#-----------------
from pytandem.model import ParameterError, BudgetExceededError, InconsistencyError, child_log, require_valid
from pytandem.partial import StationaryLaw

# Global constants
#-----------------
RANDOM_BLOCK = 1 << 16 # random variates drawn at once
MAX_SEED = (1 << 64) - 1

# namedtuples
#------------
PerKEstimate = namedtuple("PerKEstimate", "k count t1_mean t1_se t2_mean t2_se profit_mean profit_se")
EmpiricalProfit = namedtuple("EmpiricalProfit", "k count profit se lower upper")

# Functions
#----------
def _check_threshold(K):
	try:
		K = operator.index(K)
	except TypeError:
		raise ParameterError(f"K must be a finite integer, got {K!r}") from None
	if K < 0:
		raise ParameterError("K must be >= 0")
	return K

def simulate(params, K, config, logger = None):
	"""
	Simulate the network under the threshold strategy K and return a SimEstimate.

	The next event is drawn from the exponential race between an arrival (rate lambda), a node-1 completion (rate mu1, if Q1 > 0) and a node-2 completion (rate mu2, if Q2 > 0). Both nodes serve in FIFO order and an arrival finding k customers joins iff k < K. The network starts empty; the first `warmup_events` events are discarded. Every customer arriving during the measurement window and leaving before its end is recorded with the total k it found.

	Replication r draws from its own Philox stream seeded by (seed, r); identical configurations give identical estimates.

	Parameters
	----------
	params : pytandem.model.ModelParams
		model parameters
	K : int
		threshold (>= 0)
	config : SimConfig
		seed, run lengths and replications
	logger : logging.Logger object, optional
		parent logger (default is None)
	"""
	log = child_log(logger, "simulator")
	require_valid(params, logger)
	K = _check_threshold(K)
	config.check()
	log.info(f"Simulating K={K} with {config}")

	def run(replication):
		return _Replication(params, K, config, replication).run()

	if config.workers > 1 and config.replications > 1:
		with ThreadPoolExecutor(max_workers = config.workers) as executor:
			outcomes = list(executor.map(run, range(config.replications)))
	else:
		outcomes = [run(replication) for replication in range(config.replications)]

	estimate = _merge(params, K, config, outcomes)
	log.info(f"Simulation done: acceptance fraction {estimate.acceptance_fraction:.6f}, PASTA p-value {estimate.pasta_pvalue}")
	if estimate.pasta_pvalue is not None and estimate.pasta_pvalue < 1e-3:
		log.warning(f"Arrival-observed totals differ from the time-average occupancy (p = {estimate.pasta_pvalue})")
	return estimate

def estimate_profit_empirical(params, K, config, confidence = 0.997, estimate = None, logger = None):
	"""
	Return the empirical profit R - C1 S1 - C2 S2 for every k < K, with a normal-approximation confidence interval.

	Totals never observed by a joining customer are reported with count 0 and None values.

	Parameters
	----------
	params, K, config, logger :
		see `simulate()`
	confidence : float, optional
		two-sided confidence level of the intervals (default is 0.997, about 3 standard errors)
	estimate : SimEstimate, optional
		result of a previous `simulate()` call with the same arguments; if None, a simulation is run
	"""
	if not 0 < confidence < 1:
		raise ParameterError("confidence must be in (0, 1)")
	if estimate is None:
		estimate = simulate(params, K, config, logger = logger)
	z = float(norm.ppf(0.5 + confidence / 2.0))
	rows = []
	for item in estimate.per_k:
		if item.count == 0:
			rows.append(EmpiricalProfit(item.k, 0, None, None, None, None))
		elif item.profit_se is None:
			rows.append(EmpiricalProfit(item.k, item.count, item.profit_mean, None, None, None))
		else:
			half = z * item.profit_se
			rows.append(EmpiricalProfit(item.k, item.count, item.profit_mean, item.profit_se, item.profit_mean - half, item.profit_mean + half))
	return rows

def solve_steady_state(params, K, max_K = None, logger = None):
	"""
	Solve the global balance equations of the chain truncated at n + m <= K. See SteadyStateSolver.
	"""
	return SteadyStateSolver(params, K, max_K = max_K, logger = logger).solve()

def total_variation(estimate, law):
	"""
	Total-variation distance between the simulated occupancy and a StationaryLaw with the same K.
	"""
	if estimate.K != law.K:
		raise ParameterError(f"cannot compare K = {estimate.K} with K = {law.K}")
	return 0.5 * float(np.sum(np.abs(estimate.occupancy - law.probabilities)))

def _merge(params, K, config, outcomes):
	"""
	Merge the replications in index order.
	"""
	occupancy_time = np.zeros((K + 1, K + 1))
	arrivals = np.zeros(K + 1, dtype = np.int64)
	offered = joined = 0
	stats = [_KStatistics() for _ in range(K)]
	for outcome in outcomes:
		occupancy_time += outcome.occupancy_time
		arrivals += outcome.arrivals
		offered += outcome.offered
		joined += outcome.joined
		for merged, part in zip(stats, outcome.stats):
			merged.merge(part)

	occupancy = occupancy_time / occupancy_time.sum()
	per_k = [item.estimate(k) for k, item in enumerate(stats)]
	totals = np.zeros(K + 1)
	for n in range(K + 1):
		totals[n:] += occupancy[n, :K - n + 1]
	return SimEstimate(
		K = K,
		seed = config.seed,
		occupancy = occupancy,
		per_k = per_k,
		acceptance_fraction = joined / offered if offered else float("nan"),
		arrival_counts = arrivals,
		pasta_pvalue = _pasta_pvalue(arrivals, totals),
		replications = config.replications,
		measured_events = config.measured_events,
	)

def _pasta_pvalue(arrivals, totals):
	"""
	Chi-square p-value of the totals seen by arrivals against the time-average law of Q1 + Q2.
	"""
	observed = arrivals.astype(float)
	keep = totals > 0
	if keep.sum() < 2 or observed.sum() == 0:
		return None
	expected = totals[keep] / totals[keep].sum() * observed[keep].sum()
	return float(chisquare(observed[keep], expected).pvalue)

# Dataclasses
#------------
@dataclass(frozen=True)
class SimConfig:
	"""
	Simulation settings.

	Attributes
	----------
	seed : int
		64-bit seed.
	warmup_events : int
		events discarded at the start of every replication (default 100000).
	measured_events : int
		events measured in every replication (>= 1, default 1000000).
	replications : int
		independent replications (>= 1, default 1).
	batches : int
		batches per replication for the batch-means standard errors (default 20).
	workers : int
		threads used to run the replications (default 1).
	"""
	seed: int = 0
	warmup_events: int = 100000
	measured_events: int = 1000000
	replications: int = 1
	batches: int = 20
	workers: int = 1

	def check(self):
		"""
		Raise ParameterError if a setting is out of range.
		"""
		for name in ("seed", "warmup_events", "measured_events", "replications", "batches", "workers"):
			try:
				operator.index(getattr(self, name))
			except TypeError:
				raise ParameterError(f"{name} must be an integer, got {getattr(self, name)!r}") from None
		if not 0 <= self.seed <= MAX_SEED:
			raise ParameterError("seed must be a 64-bit unsigned integer")
		if self.warmup_events < 0:
			raise ParameterError("warmup_events must be >= 0")
		if self.measured_events < 1:
			raise ParameterError("measured_events must be >= 1")
		if self.replications < 1:
			raise ParameterError("replications must be >= 1")
		if self.batches < 1:
			raise ParameterError("batches must be >= 1")
		if self.workers < 1:
			raise ParameterError("workers must be >= 1")
		return self

	def generator(self, replication):
		"""
		Counter-based generator of replication `replication`.
		"""
		return np.random.Generator(np.random.Philox(np.random.SeedSequence(self.seed, spawn_key = (replication,))))

@dataclass(frozen=True)
class Moments:
	"""
	Count, mean and sum of squared deviations of a sample; mergeable in any order.
	"""
	count: int = 0
	mean: float = 0.0
	m2: float = 0.0

	@classmethod
	def of(cls, values):
		values = np.asarray(values, dtype = float)
		if values.size == 0:
			return cls()
		mean = float(values.mean())
		return cls(int(values.size), mean, float(np.sum((values - mean) ** 2)))

	def merge(self, other):
		if other.count == 0:
			return self
		if self.count == 0:
			return other
		count = self.count + other.count
		delta = other.mean - self.mean
		mean = self.mean + delta * other.count / count
		m2 = self.m2 + other.m2 + delta * delta * self.count * other.count / count
		return Moments(count, mean, m2)

	@property
	def variance(self):
		return self.m2 / (self.count - 1) if self.count > 1 else float("nan")

@dataclass
class SimEstimate:
	"""
	Monte Carlo estimates of the network under a threshold strategy.

	Attributes
	----------
	K : int
		threshold.
	seed : int
		seed of the run.
	occupancy : numpy.ndarray
		(K+1) x (K+1) array of time-average state probabilities, 0 outside n + m <= K.
	per_k : list of PerKEstimate
		for each k < K: number of recorded customers, mean sojourn at node 1 and node 2, mean profit, and their standard errors (None when not available).
	acceptance_fraction : float
		fraction of the measured arrivals that joined.
	arrival_counts : numpy.ndarray
		number of measured arrivals (joining or not) per observed total k = 0..K.
	pasta_pvalue : float or None
		chi-square p-value of `arrival_counts` against the time-average law of the total.
	replications, measured_events : int
		run sizes.
	"""
	K: int
	seed: int
	occupancy: np.ndarray
	per_k: list
	acceptance_fraction: float
	arrival_counts: np.ndarray
	pasta_pvalue: object
	replications: int
	measured_events: int

	def to_document(self):
		"""
		JSON-ready dict; occupancy as a list of {n, m, p}, per_k as a list of {k, count, t1_mean, t1_se, t2_mean, t2_se, profit_mean, profit_se}.
		"""
		return {
			"seed": self.seed,
			"K": self.K,
			"replications": self.replications,
			"measured_events": self.measured_events,
			"acceptance_fraction": self.acceptance_fraction,
			"pasta_pvalue": self.pasta_pvalue,
			"occupancy": [{"n": n, "m": m, "p": float(self.occupancy[n, m])} for n in range(self.K + 1) for m in range(self.K - n + 1)],
			"per_k": [item._asdict() for item in self.per_k],
			"arrival_counts": [int(count) for count in self.arrival_counts],
		}

# Classes
#--------
class _KStatistics():
	"""
	Sample and batch-mean moments of the node-1 sojourn, node-2 sojourn and profit for one observed total k.
	"""

	FIELDS = ("t1", "t2", "profit")

	def __init__(self):
		self.samples = {name: Moments() for name in _KStatistics.FIELDS}
		self.batch_means = {name: Moments() for name in _KStatistics.FIELDS}

	def add(self, name, values, batches):
		values = np.asarray(values, dtype = float)
		self.samples[name] = self.samples[name].merge(Moments.of(values))
		means = [chunk.mean() for chunk in np.array_split(values, batches) if chunk.size]
		self.batch_means[name] = self.batch_means[name].merge(Moments.of(means))

	def merge(self, other):
		for name in _KStatistics.FIELDS:
			self.samples[name] = self.samples[name].merge(other.samples[name])
			self.batch_means[name] = self.batch_means[name].merge(other.batch_means[name])

	def _mean_se(self, name):
		sample = self.samples[name]
		if sample.count == 0:
			return None, None
		batch = self.batch_means[name]
		if batch.count > 1:
			se = math.sqrt(batch.variance / batch.count)
		elif sample.count > 1:
			# single batch: naive standard error
			se = math.sqrt(sample.variance / sample.count)
		else:
			se = None
		return sample.mean, se

	def estimate(self, k):
		count = self.samples["t1"].count
		t1_mean, t1_se = self._mean_se("t1")
		t2_mean, t2_se = self._mean_se("t2")
		profit_mean, profit_se = self._mean_se("profit")
		return PerKEstimate(k, count, t1_mean, t1_se, t2_mean, t2_se, profit_mean, profit_se)

class _ReplicationOutcome():
	"""
	Raw tallies of one replication.
	"""

	def __init__(self, K):
		self.occupancy_time = np.zeros((K + 1, K + 1))
		self.arrivals = np.zeros(K + 1, dtype = np.int64)
		self.offered = 0
		self.joined = 0
		self.stats = [_KStatistics() for _ in range(K)]

class _Replication():
	"""
	One simulated trajectory of the network.
	"""

	def __init__(self, params, K, config, replication):
		self.params = params
		self.K = K
		self.config = config
		self.replication = replication
		self._rng = config.generator(replication)
		self._exponentials = []
		self._uniforms = []
		self._cursor = 0

	def _draw(self):
		"""
		Return the next (standard exponential, uniform) pair.
		"""
		if self._cursor == len(self._exponentials):
			self._exponentials = self._rng.standard_exponential(RANDOM_BLOCK).tolist()
			self._uniforms = self._rng.random(RANDOM_BLOCK).tolist()
			self._cursor = 0
		pair = (self._exponentials[self._cursor], self._uniforms[self._cursor])
		self._cursor += 1
		return pair

	def run(self):
		params, K, config = self.params, self.K, self.config
		lam, mu1, mu2 = float(params.lam), float(params.mu1), float(params.mu2)
		reward, cost1, cost2 = float(params.reward), float(params.cost1), float(params.cost2)
		outcome = _ReplicationOutcome(K)
		occupancy_time = outcome.occupancy_time
		node1 = deque() # (id, k found, arrival time, measured)
		node2 = deque() # (id, k found, node-1 sojourn, transfer time, measured)
		samples = {k: ([], [], []) for k in range(K)}
		now = 0.0
		next_id = 0
		last_exit = -1
		warmup = config.warmup_events
		for event in range(warmup + config.measured_events):
			measuring = event >= warmup
			q1, q2 = len(node1), len(node2)
			rate = lam + (mu1 if q1 else 0.0) + (mu2 if q2 else 0.0)
			exponential, uniform = self._draw()
			elapsed = exponential / rate
			if measuring:
				occupancy_time[q1, q2] += elapsed
			now += elapsed
			race = uniform * rate
			if race < lam or not (q1 or q2):
				found = q1 + q2
				if measuring:
					outcome.arrivals[found] += 1
					outcome.offered += 1
				if found < K:
					node1.append((next_id, found, now, measuring))
					next_id += 1
					if measuring:
						outcome.joined += 1
			elif q1 and (race < lam + mu1 or not q2):
				customer, found, arrival, measured = node1.popleft()
				node2.append((customer, found, now - arrival, now, measured))
			else:
				customer, found, sojourn1, transfer, measured = node2.popleft()
				if customer <= last_exit:
					raise InconsistencyError(f"customer {customer} left node 2 after customer {last_exit}")
				last_exit = customer
				if measured:
					sojourn2 = now - transfer
					s1, s2, gain = samples[found]
					s1.append(sojourn1)
					s2.append(sojourn2)
					gain.append(reward - cost1 * sojourn1 - cost2 * sojourn2)

		for k, (s1, s2, gain) in samples.items():
			stats = outcome.stats[k]
			stats.add("t1", s1, config.batches)
			stats.add("t2", s2, config.batches)
			stats.add("profit", gain, config.batches)
		return outcome

class SteadyStateSolver():
	"""
	Dense solver of the global balance equations of the network truncated at n + m <= K.

	States are ordered n outermost. The generator has rate lambda from (n,m) to (n+1,m) when n + m < K, mu1 from (n,m) to (n-1,m+1) when n > 0 and mu2 from (n,m) to (n,m-1) when m > 0. The system Q^T pi = 0 has its last equation replaced by the normalisation sum(pi) = 1 and is solved by LU decomposition with partial pivoting.
	"""

	DEFAULT_MAX_K = 60

	def __init__(self, params, K, max_K = None, logger = None):
		self.log = child_log(logger, "SteadyStateSolver")
		self.params = require_valid(params, logger)
		self.K = _check_threshold(K)
		cap = SteadyStateSolver.DEFAULT_MAX_K if max_K is None else max_K
		if self.K > cap:
			self.log.warning(f"Threshold {self.K} exceeds the dense solver cap {cap}")
			raise BudgetExceededError(f"K = {self.K} gives {self.size} states, beyond the dense solver cap K <= {cap}")

	@property
	def size(self):
		return (self.K + 1) * (self.K + 2) // 2

	def states(self):
		return [(n, m) for n in range(self.K + 1) for m in range(self.K - n + 1)]

	def generator(self):
		"""
		Dense infinitesimal generator, rows indexed like `states()`.
		"""
		lam, mu1, mu2 = self.params.lam, self.params.mu1, self.params.mu2
		states = self.states()
		index = {state: position for position, state in enumerate(states)}
		matrix = np.zeros((len(states), len(states)))
		for position, (n, m) in enumerate(states):
			if n + m < self.K:
				matrix[position, index[(n + 1, m)]] += lam
			if n > 0:
				matrix[position, index[(n - 1, m + 1)]] += mu1
			if m > 0:
				matrix[position, index[(n, m - 1)]] += mu2
			matrix[position, position] = -matrix[position].sum()
		return matrix

	def solve(self):
		"""
		Return the StationaryLaw of the truncated chain.
		"""
		self.log.info(f"Solving the balance equations for K={self.K} ({self.size} states)")
		system = self.generator().T.copy()
		system[-1, :] = 1.0
		rhs = np.zeros(self.size)
		rhs[-1] = 1.0
		solution = lu_solve(lu_factor(system), rhs)
		probabilities = np.zeros((self.K + 1, self.K + 1))
		for (n, m), value in zip(self.states(), solution):
			probabilities[n, m] = value
		log_c_K = math.log(probabilities[0, 0]) if probabilities[0, 0] > 0 else float("-inf")
		return StationaryLaw(self.K, probabilities, self.params.rho1, self.params.rho2, log_c_K)
