"""The exact 1d fused lasso in linear time.

Everything else in the package reduces to this solver, so it is worth seeing
that it is exact (compared against exhaustive search on small inputs) and
fast (a million points in well under a second).
"""
import time

import numpy as np

from dfsdenoise.fl1d import FL1DProblem, fl1d, kkt_residual, lambda_max, solve_fl1d, solve_fl1d_oracle

# Two points pulled together: theta = (0.25, 0.75) at lambda = 0.25.
print(fl1d([0.0, 1.0], 0.25))

rng = np.random.default_rng(0)
y = np.repeat([0.0, 2.0, -1.0, 1.0], 3) + rng.normal(scale=0.3, size=12)
p = FL1DProblem(y, 0.5)
dp, brute = solve_fl1d(p), solve_fl1d_oracle(p)
print("DP vs exhaustive search, max difference:", np.abs(dp.theta - brute.theta).max())
print("fitted levels:", np.round(dp.theta, 3))

# Past lambda_max the fit is the constant mean.
lm = lambda_max(y)
print(f"lambda_max = {lm:.3f}; fit range at 1.01 lambda_max = {np.ptp(fl1d(y, 1.01 * lm)):.2e}")

# Large n: the KKT residual certifies optimality where brute force cannot.
y = np.cumsum(rng.normal(size=10**6)) * 0.01 + rng.normal(size=10**6)
fl1d(y[:100], 1.0)  # first call compiles
t0 = time.perf_counter()
theta = fl1d(y, 5.0)
print(f"n=10^6 solved in {time.perf_counter() - t0:.3f}s, "
      f"KKT residual {kkt_residual(FL1DProblem(y, 5.0), theta):.1e}, "
      f"{np.count_nonzero(np.diff(theta)) + 1} pieces")
