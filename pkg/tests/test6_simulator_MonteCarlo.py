# -*- coding: utf-8 -*-

"""
	'simulator' test set : tests regarding only the pytandem.simulator submodule
	Test 6 : long Monte Carlo runs against the exact stationary law, conditional sojourn times and profits.
"""


# Standard modules
#-----------------
import sys
import os

# Third party modules
#--------------------
import numpy as np
import pytest

# Internal modules
#-----------------
if __name__ == '__main__':
	sys.path.append(os.path.join(os.path.dirname(__file__),'..'))
from pytandem.model import ModelParams
from pytandem.sojourn import SojournTable
from pytandem.partial import stationary_law, t1_cond, t2_cond
from pytandem.simulator import SimConfig, simulate, estimate_profit_empirical, total_variation

# Global constants
#-----------------
UNIT = ModelParams(1, 1, 1, reward = 4, cost1 = 1, cost2 = 1)
LONG = SimConfig(seed = 20240611, warmup_events = 100000, measured_events = 1000000)

pytestmark = pytest.mark.slow

# Functions
#----------
def test_uniform_occupancy():
	estimate = simulate(UNIT, 1, LONG)
	assert total_variation(estimate, stationary_law(UNIT, 1)) < 0.01
	for n, m in [(0, 0), (1, 0), (0, 1)]:
		assert estimate.occupancy[n, m] == pytest.approx(1 / 3, abs = 0.01)

def test_threshold_four():
	estimate = simulate(UNIT, 4, LONG)
	assert total_variation(estimate, stationary_law(UNIT, 4)) < 0.01
	table = SojournTable(1, 1, 5)
	for item in estimate.per_k:
		assert abs(item.t1_mean - t1_cond(1, 1, item.k)) <= 4 * item.t1_se
		assert abs(item.t2_mean - t2_cond(table, 1, 1, item.k)) <= 4 * item.t2_se
	assert abs(estimate.per_k[2].t2_mean - 2.0) <= 4 * estimate.per_k[2].t2_se

def test_empirical_profit():
	config = SimConfig(seed = 99, warmup_events = 100000, measured_events = 1000000)
	rows = estimate_profit_empirical(UNIT, 3, config)
	assert rows[2].lower <= 0 <= rows[2].upper
	assert abs(rows[0].profit - 2.0) <= 3 * rows[0].se

def test_sojourns_free_of_arrival_rate():
	table = SojournTable(1, 1, 5)
	estimates = [simulate(UNIT.with_values(lam = lam), 4, LONG) for lam in (0.5, 2.0)]
	for slow, fast in zip(*(estimate.per_k for estimate in estimates)):
		for name in ("t1", "t2"):
			low = getattr(slow, f"{name}_mean")
			high = getattr(fast, f"{name}_mean")
			spread = 3 * (getattr(slow, f"{name}_se") + getattr(fast, f"{name}_se"))
			assert abs(low - high) <= spread
		assert abs(slow.t2_mean - t2_cond(table, 1, 1, slow.k)) <= 4 * slow.t2_se

@pytest.mark.parametrize("mu1, mu2", [(2.0, 1.0), (1.0, 2.0)])
def test_conditional_sojourns(mu1, mu2):
	params = ModelParams(1, mu1, mu2, reward = 4, cost1 = 1, cost2 = 1)
	estimate = simulate(params, 5, SimConfig(seed = 7, warmup_events = 50000, measured_events = 1000000))
	table = SojournTable(mu1, mu2, 6)
	cells = []
	for item in estimate.per_k:
		if item.count >= 1000:
			cells.append(abs(item.t1_mean - t1_cond(mu1, mu2, item.k)) <= 4 * item.t1_se)
			cells.append(abs(item.t2_mean - t2_cond(table, mu1, mu2, item.k)) <= 4 * item.t2_se)
	assert np.mean(cells) >= 0.95 - 1e-12

# Main function
#--------------
def main():
	""" Main program execution"""
	return pytest.main([__file__])

if __name__ == '__main__':
	sys.exit(main())
