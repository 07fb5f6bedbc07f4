"""Expectation identities: the mild Dynkin formula and the weak estimate.

Taking expectations kills the stochastic integral, leaving
E phi(X_bar_tau) = E[phi(S X_0) + int L phi ds]; for the OU process with
phi the squared norm both sides have a closed form.  The weak
terminal-value estimate replaces the equality by a triangle inequality
whose slack must stay nonnegative up to Monte Carlo resolution.
"""

import numpy as np

from mildito import (
    StoppingRule,
    TimeGrid,
    dynkin_gap,
    heat_family,
    martingale_check,
    nemytskii_drift_spec,
    ou_spec,
    weak_estimate_gap,
)
from mildito.spectral import eigenvalues
from mildito.testfunctions import coordinate_functional, squared_norm

fam = heat_family(0.0, 0.1)
grid = TimeGrid(0.0, 0.1, 200)
spec = ou_spec(fam, 24, 24)
phi = squared_norm()

rho = eigenvalues(24)
closed = float(np.sum((1 - np.exp(-2 * rho * 0.1)) / (2 * rho)))

res = dynkin_gap(phi, spec, grid, paths=20_000, seed=1)
print("mild Dynkin formula, OU process, phi = ||.||^2:")
print(f"  E phi(X_T)            = {float(res.lhs[0]):.6f} +- {float(res.stderr_lhs[0]):.6f}")
print(f"  E[phi(S X_0) + int L] = {float(res.rhs[0]):.6f} +- {float(res.stderr_rhs[0]):.6f}")
print(f"  closed form           = {closed:.6f}")
print(f"  gap = {float(res.gap[0]):.2e} "
      f"({abs(float(res.gap[0])) / float(res.stderr_gap[0]):.2f} stderr)")

# a first-passage stopping rule, discretized to grid nodes
hit = dynkin_gap(phi, spec, grid, StoppingRule("hitting", 0.3),
                 paths=20_000, seed=2)
print(f"\nhitting rule at level 0.3: lhs {float(hit.lhs[0]):.5f}, "
      f"rhs {float(hit.rhs[0]):.5f}, gap {float(hit.gap[0]):.2e}")

# mean-zero martingale check behind the formula
mean, se = martingale_check(phi, spec, grid, paths=20_000, seed=3)
print(f"\nstochastic-integral mean: {float(mean[0]):.2e} "
      f"+- {float(se[0]):.2e}")

# weak terminal-value estimate: equality case and a strict one
res = weak_estimate_gap(phi, spec, grid, paths=20_000, seed=4)
print(f"\nweak estimate slack (OU, squared norm): {res.slack:.2e} "
      f">= -3 x {res.stderr:.2e}")
print(f"moment report: { {k: round(v, 5) for k, v in res.moments.items()} }")

semi = nemytskii_drift_spec(np.tanh, fam, 16, 16, 128)
res = weak_estimate_gap(coordinate_functional((1,)), semi,
                        TimeGrid(0.0, 0.1, 100), paths=10_000, seed=5)
print(f"weak estimate slack (tanh drift, coordinate): {res.slack:.4f} "
      f"(strict inequality, the absolute values do not cancel)")
