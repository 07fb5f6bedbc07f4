"""Tour of the spectral toolbox: sine basis, fractional norms, semigroup.

Everything lives on (0,1) with the Dirichlet Laplacian.  A function is
either a coefficient vector in the eigenbasis sqrt(2) sin(n pi x) or a
value vector on the midpoint grid; this script walks through moving
between the two and acting on them with the operator calculus.
"""

import numpy as np

from mildito import (
    SineBasisVector,
    analyze,
    apply_fractional,
    apply_semigroup,
    basis_vector,
    eigenvalue,
    heat_family,
    hr_norm,
    lp_norm,
    synthesize,
)

print("eigenvalues rho_n = pi^2 n^2:")
for n in (1, 2, 5):
    print(f"  n={n}: {eigenvalue(n):.6f}")

# a sawtooth-ish profile from a handful of modes
v = SineBasisVector([1.0, -0.5, 0.25, -0.125, 0.0625])
g = synthesize(v, 256)
print(f"\nsynthesized on 256 midpoints; L2 norm {lp_norm(g, 2):.6f} "
      f"(coefficient norm {hr_norm(v):.6f} by Parseval)")
print(f"L4 norm {lp_norm(g, 4):.6f}, L1 norm {lp_norm(g, 1):.6f}")

back = analyze(g, 5)
print(f"analyze(synthesize(v)) round-trip error: "
      f"{np.max(np.abs(back.coeffs - v.coeffs)):.2e}")

# the fractional smoothness scale: rougher vs smoother measurements
print("\nfractional norms of the same vector:")
for r in (-0.5, 0.0, 0.5, 1.0):
    print(f"  ||v||_{{H_{r:+.1f}}} = {hr_norm(v, r):.6f}")

# fractional powers act diagonally and invert exactly
w = apply_fractional(-0.5, apply_fractional(0.5, v))
print(f"(-A)^-1/2 (-A)^1/2 v - v: {np.max(np.abs(w.coeffs - v.coeffs)):.2e}")

# the heat semigroup damps mode n by e^{-rho_n t}
print("\nheat semigroup decay of the first coefficient:")
for t in (0.0, 0.01, 0.1):
    print(f"  t={t}: {apply_semigroup(t, basis_vector(1, 1)).coeffs[0]:.6f} "
          f"(exact {np.exp(-eigenvalue(1) * t):.6f})")

# two-parameter families compose: S_{t2,t3} S_{t1,t2} = S_{t1,t3}
fam = heat_family(0.0, 1.0)
x = SineBasisVector(np.random.default_rng(0).standard_normal(32))
two_hops = fam.apply(0.4, 0.9, fam.apply(0.1, 0.4, x))
one_hop = fam.apply(0.1, 0.9, x)
print(f"\ncomposition-law residual on 32 modes: "
      f"{np.max(np.abs(two_hops.coeffs - one_hop.coeffs)):.2e}")
