"""Composition (Nemytskii) operators and the multiplicative diffusion map.

F(v) = f o v acts pointwise; its derivatives multiply by f^(m)(v).  The
registry fields carry exact global constants, so the Holder/Lipschitz
bounds can be checked with real numbers on random samples.  The same
machinery assembles the diffusion coefficient B(v) u = b(v) . u as a
gamma operator into the rough V_beta scale.
"""

import numpy as np

from mildito import (
    DiffusionCoefficient,
    GridFunction,
    NemytskiiOperator,
    SineBasisVector,
    diffusion_apply,
    gamma_norm_mc,
    get_field,
    holder_bound_iii,
    lipschitz_bound_iv,
    nemytskii_apply,
    nemytskii_derivative,
    synthesize,
)
from mildito.nemytskii import diffusion_norm_bound

rng = np.random.default_rng(11)

field = get_field("tanh")
print(f"field {field.name!r}: sup|f'| = {field.sup_norms[1]}, "
      f"sup|f''| = {field.sup_norms[2]:.6f} (= 4/(3 sqrt 3))")

op = NemytskiiOperator(field, p=2.0, q=8.0)
v = synthesize(SineBasisVector(rng.standard_normal(10) / np.arange(1, 11)), 256)
u = synthesize(SineBasisVector(rng.standard_normal(10) / np.arange(1, 11)), 256)

fv = nemytskii_apply(op, v)
print(f"\nF(v) sample values: {fv.values[:4].round(4)} (pointwise tanh)")

# first derivative against a finite difference
eps = 1e-5
fd = (nemytskii_apply(op, GridFunction(v.values + eps * u.values)).values
      - nemytskii_apply(op, GridFunction(v.values - eps * u.values)).values) / (2 * eps)
exact = nemytskii_derivative(op, 1, v, u).values
print(f"F'(v)u vs central difference: max err {np.max(np.abs(fd - exact)):.2e}")

# item (iii): the derivative quotient never exceeds sup|f^(m)|
const = holder_bound_iii(op, 2, r=8.0)
print(f"\nitem (iii) constant for m=2: {const:.6f}")

# item (iv): Lipschitz control of derivative differences
w = synthesize(SineBasisVector(rng.standard_normal(10) / np.arange(1, 11)), 256)
samples = [(synthesize(SineBasisVector(
    rng.standard_normal(10) / np.arange(1, 11)), 256),) for _ in range(50)]
lhs, rhs = lipschitz_bound_iv(op, 1, r=8.0, s=8.0, v=v, w=w, samples=samples)
print(f"item (iv) for m=1: sampled sup {lhs:.5f} <= {rhs:.5f}")

# the diffusion coefficient as a gamma operator into V_beta
coef = DiffusionCoefficient(field, p=10.0, beta=-0.5)
print(f"\ndiffusion coefficient: delta={coef.delta}, eps={coef.epsilon:.4f}, "
      f"beta + eps = {coef.beta + coef.epsilon:.4f} < -1/4")
state = synthesize(SineBasisVector(rng.standard_normal(10) / np.arange(1, 11)), 256)
b_op = diffusion_apply(coef, state, n_modes=24, k_modes=24)
est, se = gamma_norm_mc(b_op, 10_000, seed=12)
bound = diffusion_norm_bound(coef, 0, n_modes=24)
print(f"||B(v)||_gamma(H, V_beta) = {est:.4f} +- {se:.4f} <= "
      f"uniform bound {bound:.4f}")
