# -*- coding: utf-8 -*-

"""
	'partial' test set : tests regarding only the pytandem.partial submodule
	Test 3 : product-form law, conditional laws given the total, and the conditional sojourn times.
"""


# Standard modules
#-----------------
import sys
import os
import io
import itertools

# Third party modules
#--------------------
import numpy as np
import pytest

# Internal modules
#-----------------
if __name__ == '__main__':
	sys.path.append(os.path.join(os.path.dirname(__file__),'..'))
from pytandem.model import ModelParams, ParameterError, GridTooSmallError, BudgetExceededError
from pytandem.sojourn import SojournTable
from pytandem.partial import (stationary_law, conditional_dist, t1_cond, t1_direct, t1_limit, t2_cond, t_cond, t_direct,
	profile_table, profile_to_csv, lr_order_check, st_order_check)

# Global constants
#-----------------
RATES = (0.5, 1.0, 2.0)
RATE_GRID = list(itertools.product(RATES, RATES))

# Functions
#----------
def _params(lam, mu1, mu2):
	return ModelParams(lam, mu1, mu2, reward = 1, cost1 = 1, cost2 = 1)

def test_uniform_law():
	law = stationary_law(_params(1, 1, 1), 1)
	for n, m in [(0, 0), (1, 0), (0, 1)]:
		assert law.prob(n, m) == pytest.approx(1 / 3, abs = 1e-14)
	assert law.prob(1, 1) == 0.0
	assert law.c_K == pytest.approx(1 / 3)

@pytest.mark.parametrize("lam, mu1, mu2", [(0.5, 1, 2), (2, 0.5, 1), (1, 2, 0.5)])
def test_law_sums_to_one(lam, mu1, mu2):
	law = stationary_law(_params(lam, mu1, mu2), 25)
	assert sum(p for _, _, p in law.states()) == pytest.approx(1.0, abs = 1e-12)
	assert law.total_distribution().sum() == pytest.approx(1.0, abs = 1e-12)
	assert law.prob(3, 2) / law.prob(0, 0) == pytest.approx(law.rho1 ** 3 * law.rho2 ** 2, rel = 1e-10)

def test_large_threshold_stays_finite():
	law = stationary_law(_params(4, 1, 1), 400)
	assert np.all(np.isfinite(law.probabilities))
	assert np.isfinite(law.log_c_K)

def test_law_cap():
	with pytest.raises(BudgetExceededError):
		stationary_law(_params(1, 1, 1), 11, max_K = 10)
	with pytest.raises(ParameterError):
		stationary_law(_params(1, 1, 1), -1)

def test_conditional_example():
	law = conditional_dist(2, 1, 1)
	assert list(law.weights) == pytest.approx([2 / 3, 1 / 3])
	assert t1_cond(2, 1, 1) == pytest.approx(2 / 3)
	assert law.mean() == pytest.approx(1 / 3)

@pytest.mark.parametrize("mu1, mu2", RATE_GRID)
def test_node2_mirror(mu1, mu2):
	for k in range(8):
		first = conditional_dist(mu1, mu2, k, 1).weights
		second = conditional_dist(mu1, mu2, k, 2).weights
		assert list(second) == pytest.approx(list(first[::-1]), abs = 1e-15)
		assert first.sum() == pytest.approx(1.0, abs = 1e-14)

@pytest.mark.parametrize("mu1, mu2", RATE_GRID)
def test_t1_closed_form(mu1, mu2):
	for k in range(61):
		closed = t1_cond(mu1, mu2, k)
		direct = t1_direct(mu1, mu2, k)
		assert abs(closed - direct) <= 1e-11 * max(1.0, abs(direct))

def test_t1_equal_rates_continuity():
	for k in (0, 1, 5, 20, 60):
		equal = t1_cond(1.0, 1.0, k)
		assert equal == pytest.approx(1 + k / 2)
		for mu2 in (1 + 1e-7, 1 - 1e-7):
			assert t1_cond(1.0, mu2, k) == pytest.approx(equal, rel = 1e-5)

@pytest.mark.parametrize("mu2", [1 + 1e-7, 1 - 1e-7, 1 + 1e-6, 1 - 1e-5])
def test_t1_near_equal_rates(mu2):
	assert t1_cond(1.0, mu2, 0) == pytest.approx(1.0, rel = 1e-9)
	for k in (1, 5, 20, 60):
		assert t1_cond(1.0, mu2, k) == pytest.approx(t1_direct(1.0, mu2, k), rel = 1e-7)
		assert t1_cond(mu2, 1.0, k) == pytest.approx(t1_direct(mu2, 1.0, k), rel = 1e-7)

def test_t1_limit():
	assert t1_limit(2, 1) == pytest.approx(1.0)
	assert t1_limit(1, 2) == float("inf")
	assert t1_cond(2, 1, 200) == pytest.approx(1.0, rel = 1e-12)

def test_unit_rates_conditional_times():
	table = SojournTable(1, 1, 5)
	assert t2_cond(table, 1, 1, 2) == pytest.approx(2.0, abs = 1e-12)
	assert t2_cond(table, 1, 1, 3) == pytest.approx(2.5, abs = 1e-12)
	assert t1_cond(1, 1, 2) == pytest.approx(2.0)
	assert t1_cond(1, 1, 3) == pytest.approx(2.5)
	assert t_cond(table, 1, 1, 3, verify = True) == pytest.approx(5.0, abs = 1e-12)

@pytest.mark.parametrize("mu1, mu2", RATE_GRID + [(0.1, 1.0), (1.0, 0.1)])
def test_total_matches_direct_expectation(mu1, mu2):
	table = SojournTable(mu1, mu2, 31)
	for k in range(31):
		assert t_cond(table, mu1, mu2, k) == pytest.approx(t_direct(table, mu1, mu2, k), rel = 1e-10)

@pytest.mark.parametrize("mu1, mu2", RATE_GRID + [(0.1, 1.0), (1.0, 0.1)])
def test_monotone_in_k(mu1, mu2):
	table = SojournTable(mu1, mu2, 41)
	rows = profile_table(table, mu1, mu2, 40)
	for before, after in zip(rows, rows[1:]):
		assert after.t1 >= before.t1 - 1e-12
		assert after.t >= before.t - 1e-12
		if mu1 >= mu2:
			assert after.t2 >= before.t2 - 1e-12

@pytest.mark.parametrize("lam, mu1, mu2", [(0.25, 1, 2), (1, 1, 1), (4, 2, 0.5), (0.25, 0.5, 0.5), (4, 0.5, 2)])
def test_conditional_free_of_threshold(lam, mu1, mu2):
	params = _params(lam, mu1, mu2)
	for k in range(0, 15, 3):
		expected = conditional_dist(mu1, mu2, k).weights
		for K in range(k, k + 11):
			extracted = stationary_law(params, K).conditional(k).weights
			assert np.max(np.abs(extracted - expected)) <= 1e-12

@pytest.mark.parametrize("mu1, mu2", RATE_GRID)
def test_likelihood_ratio_order(mu1, mu2):
	for k in range(41):
		for node in (1, 2):
			report = lr_order_check(mu1, mu2, k, node)
			assert report.holds
			assert report.equal_below_k
			assert report.strict_at_k
			assert st_order_check(mu1, mu2, k, node).holds

def test_errors():
	table = SojournTable(1, 1, 3)
	with pytest.raises(GridTooSmallError):
		t2_cond(table, 1, 1, 3)
	with pytest.raises(ParameterError):
		t2_cond(table, 2, 1, 1)
	with pytest.raises(ParameterError):
		conditional_dist(1, 1, 2, node = 3)
	with pytest.raises(ParameterError):
		t1_cond(1, 1, -1)

def test_profile_csv():
	table = SojournTable(1, 1, 3)
	stream = io.StringIO()
	profile_to_csv(profile_table(table, 1, 1, 2), stream)
	lines = stream.getvalue().splitlines()
	assert lines[0] == "k,t1,t2,t"
	assert len(lines) == 4

# Main function
#--------------
def main():
	""" Main program execution"""
	return pytest.main([__file__])

if __name__ == '__main__':
	sys.exit(main())
