# -*- coding: utf-8 -*-

"""
Module oracles : cross-checks of the closed forms against independent computations.

Each check evaluates one quantity in two ways over a parameter grid and records the largest discrepancy:
	- product form against the dense solution of the balance equations
	- T2 recursion against the first-step fill of T
	- closed-form T1(k) against the weighted sum over p1(.|k), and T1(k) + T2(k) against the direct expectation of T
	- conditional laws extracted from the stationary law of every K >= k against the K-free conditional law
	- likelihood-ratio order of the conditional laws in k
"""


# Standard modules
#------------------
import time
import itertools
from collections import namedtuple

# Third party modules
#--------------------
import numpy as np

# Internal modules
#-----------------
from pytandem.model import ModelParams, child_log
from pytandem.sojourn import SojournTable
from pytandem.partial import stationary_law, conditional_dist, t1_cond, t1_direct, t2_cond, t_direct, lr_order_check
from pytandem.simulator import solve_steady_state

# Global constants
#-----------------
RATE_GRID = (0.5, 1.0, 2.0)
LAMBDA_GRID = (0.5, 1.0, 2.0)
RATIO_PAIRS = ((1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (0.1, 1.0), (1.0, 0.1))

# namedtuples
#------------
CheckResult = namedtuple("CheckResult", "name passed max_error tolerance cases seconds")

# Functions
#----------
def run_suite(quick = False, fault = False, logger = None):
	"""
	Run every cross-check and return the list of CheckResult.

	Parameters
	----------
	quick : bool, optional
		restrict the grids to K <= 10 (default False)
	fault : bool, optional
		flip the sign of one operand of the closed-form check so that the suite must fail (default False)
	logger : logging.Logger object, optional
		parent logger (default is None)
	"""
	suite = OracleSuite(quick = quick, fault = fault, logger = logger)
	return suite.run()

def format_results(results):
	"""
	Return the results as a fixed-width pass/fail table.
	"""
	lines = [f"{'check':<28} {'status':<6} {'max error':>12} {'tolerance':>10} {'cases':>6}"]
	for result in results:
		status = "PASS" if result.passed else "FAIL"
		lines.append(f"{result.name:<28} {status:<6} {result.max_error:>12.3e} {result.tolerance:>10.0e} {result.cases:>6}")
	return "\n".join(lines)

def _relative(a, b):
	return abs(a - b) / max(1.0, abs(b))

# Classes
#--------
class OracleSuite():
	"""
	Cross-oracle validation suite.

	The full grids follow the desk-scale acceptance runs: K <= 30 for the product form, n_max = 40 for the recursion, k <= 60 for T1(k), k <= 40 for the likelihood-ratio order. The quick grids stop at 10.
	"""

	PRODUCT_FORM_TOLERANCE = 1e-10
	DUAL_PATH_TOLERANCE = 1e-10
	CLOSED_FORM_TOLERANCE = 1e-11
	CONDITIONAL_TOLERANCE = 1e-12
	ORDER_TOLERANCE = 1e-12

	def __init__(self, quick = False, fault = False, logger = None):
		self.log = child_log(logger, "oracles")
		self.quick = quick
		self.fault = fault
		size = 10 if quick else None
		self.product_form_K = size or 30
		self.recursion_n_max = size or 40
		self.closed_form_k = size or 60
		self.conditional_k = size or 20
		self.order_k = size or 40

	def run(self):
		checks = (
			("product_form_vs_solver", self.check_product_form, OracleSuite.PRODUCT_FORM_TOLERANCE),
			("recursion_dual_path", self.check_recursion, OracleSuite.DUAL_PATH_TOLERANCE),
			("closed_form_vs_direct_sum", self.check_closed_forms, OracleSuite.CLOSED_FORM_TOLERANCE),
			("conditional_k_independence", self.check_conditionals, OracleSuite.CONDITIONAL_TOLERANCE),
			("likelihood_ratio_order", self.check_order, OracleSuite.ORDER_TOLERANCE),
		)
		results = []
		for name, check, tolerance in checks:
			start = time.perf_counter()
			error, cases = check()
			result = CheckResult(name, bool(error <= tolerance), float(error), tolerance, cases, time.perf_counter() - start)
			if result.passed:
				self.log.info(f"{name}: max error {error:.3e} over {cases} cases")
			else:
				self.log.error(f"{name} failed: max error {error:.3e} > {tolerance:.0e}")
			results.append(result)
		return results

	def check_product_form(self):
		error = 0.0
		cases = 0
		for lam, mu1, mu2 in itertools.product(LAMBDA_GRID, RATE_GRID, RATE_GRID):
			params = ModelParams(lam, mu1, mu2, reward = 1.0, cost1 = 1.0, cost2 = 1.0)
			for K in range(self.product_form_K + 1):
				exact = stationary_law(params, K)
				solved = solve_steady_state(params, K)
				error = max(error, exact.max_difference(solved))
				cases += 1
		return error, cases

	def check_recursion(self):
		error = 0.0
		for mu1, mu2 in RATIO_PAIRS:
			table = SojournTable(mu1, mu2, self.recursion_n_max)
			error = max(error, table.verify())
		return error, len(RATIO_PAIRS)

	def check_closed_forms(self):
		error = 0.0
		cases = 0
		sign = -1.0 if self.fault else 1.0
		for mu1, mu2 in itertools.product(RATE_GRID, RATE_GRID):
			table = SojournTable(mu1, mu2, self.closed_form_k + 1)
			for k in range(self.closed_form_k + 1):
				error = max(error, _relative(t1_cond(mu1, mu2, k), sign * t1_direct(mu1, mu2, k)))
				combined = t1_cond(mu1, mu2, k) + t2_cond(table, mu1, mu2, k)
				error = max(error, _relative(combined, t_direct(table, mu1, mu2, k)))
				cases += 1
		return error, cases

	def check_conditionals(self):
		error = 0.0
		cases = 0
		for lam, mu1, mu2 in itertools.product(LAMBDA_GRID, RATE_GRID, RATE_GRID):
			params = ModelParams(lam, mu1, mu2, reward = 1.0, cost1 = 1.0, cost2 = 1.0)
			for k in range(self.conditional_k + 1):
				expected = conditional_dist(mu1, mu2, k).weights
				for K in range(k, k + 11):
					extracted = stationary_law(params, K).conditional(k).weights
					error = max(error, float(np.max(np.abs(extracted - expected))))
					cases += 1
		return error, cases

	def check_order(self):
		error = 0.0
		cases = 0
		for mu1, mu2 in itertools.product(RATE_GRID, RATE_GRID):
			for k in range(self.order_k + 1):
				for node in (1, 2):
					report = lr_order_check(mu1, mu2, k, node)
					for item in report.comparisons[:-1]:
						scale = max(abs(item.lhs), abs(item.rhs))
						if scale > 0:
							error = max(error, abs(item.lhs - item.rhs) / scale)
					if not report.strict_at_k:
						error = max(error, 1.0)
					cases += 1
		return error, cases
