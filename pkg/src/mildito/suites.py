"""Verification suites: each check compares a computed quantity against
its oracle or bound and yields one report row.

Row semantics follow the report contract: a row passes iff its violation
(two-sided |lhs - rhs|, or one-sided overshoot for bound checks) stays
within the stated tolerance.  Wall times are recorded on the rows but
excluded from the machine-readable report so reruns are byte-stable.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import calculus, gamma, nemytskii, process, testfunctions
from .spectral import (
    GridFunction,
    SineBasisVector,
    basis_vector,
    eigenvalues,
    heat_family,
    sine_matrix,
)

__all__ = ["ReportRow", "run_suite", "SUITES"]


@dataclass(frozen=True)
class ReportRow:
    suite: str
    check_id: str
    lhs: float
    rhs: float
    stderr: float
    tolerance: float
    verdict: str
    wall_time: float


class _Rows:
    """Collector stamping suite name and wall time on each row."""

    def __init__(self, suite):
        self.suite = suite
        self.rows = []
        self._t = time.perf_counter()

    def _push(self, check_id, lhs, rhs, stderr, tolerance, violation):
        now = time.perf_counter()
        self.rows.append(ReportRow(
            self.suite, check_id, float(lhs), float(rhs), float(stderr),
            float(tolerance), "pass" if abs(violation) <= tolerance else "fail",
            now - self._t,
        ))
        self._t = now

    def match(self, check_id, lhs, rhs, tolerance, stderr=0.0):
        """Two-sided check |lhs - rhs| <= tolerance."""
        self._push(check_id, lhs, rhs, stderr, tolerance, lhs - rhs)

    def bound(self, check_id, lhs, rhs, tolerance=0.0, stderr=0.0):
        """One-sided check lhs <= rhs + tolerance."""
        self._push(check_id, lhs, rhs, stderr, tolerance, max(lhs - rhs, 0.0))

    def floor(self, check_id, lhs, rhs, tolerance=0.0, stderr=0.0):
        """One-sided check lhs >= rhs - tolerance."""
        self._push(check_id, lhs, rhs, stderr, tolerance, max(rhs - lhs, 0.0))


def _rng(seed, tag):
    return np.random.Generator(np.random.Philox(key=[seed & (2 ** 64 - 1), tag]))


def _random_grid_functions(rng, count, resolution, n_modes=16, scale=1.0):
    mat = sine_matrix(resolution, n_modes)
    coeffs = rng.standard_normal((count, n_modes)) * scale / np.arange(1, n_modes + 1)
    return [GridFunction(row) for row in coeffs @ mat.T]


# ---------------------------------------------------------------------------
# gamma suite
# ---------------------------------------------------------------------------


def gamma_suite(cfg):
    out = _Rows("gamma")
    rng = _rng(cfg.seed, 101)

    # MC estimator against the exact Hilbert-Schmidt value, 20 random operators
    for i in range(20):
        n, k = int(rng.integers(4, 24)), int(rng.integers(2, 16))
        r = float(rng.choice([0.0, 0.25, -0.25]))
        cols = rng.standard_normal((n, k)) / np.arange(1, n + 1)[:, None]
        op = gamma.FiniteRankGammaOperator(cols, gamma.HrCodomain(r))
        exact = gamma.gamma_norm_exact(op)
        est, se = gamma.gamma_norm_mc(op, 10_000, seed=cfg.seed + i)
        out.match(f"mc_vs_exact/{i:02d}", est, exact, 3.0 * se + 1e-12, se)

    # ideal property, 100 exact triples
    worst = 0.0
    for i in range(100):
        n, k = int(rng.integers(4, 16)), int(rng.integers(2, 12))
        mid = gamma.FiniteRankGammaOperator(
            rng.standard_normal((n, k)), gamma.HrCodomain(float(rng.choice([0.0, 0.5]))))
        left = gamma.CoefficientMap(rng.standard_normal((n, n)))
        right = gamma.random_rotation(k, seed=cfg.seed + i)
        lhs, rhs, slack = gamma.ideal_property_gap(left, mid, right)
        worst = max(worst, lhs - rhs)
    out.bound("ideal_property_exact/max_violation", worst, 0.0, 1e-10)

    # ideal property with MC norms on L^p codomains, multiplier left factor
    worst = 0.0
    for i in range(20):
        n, k = int(rng.integers(4, 12)), int(rng.integers(2, 8))
        codomain = gamma.LpCodomain(4.0, 128)
        cols = sine_matrix(128, n) @ rng.standard_normal((n, k))
        mid = gamma.FiniteRankGammaOperator(cols, codomain)
        left = gamma.PointwiseMultiplier(1.0 + 0.5 * np.sin(
            np.linspace(0, 3, 128) + float(rng.standard_normal())))
        right = gamma.random_rotation(k, seed=cfg.seed + 300 + i)
        lhs, rhs, slack = gamma.ideal_property_gap(
            left, mid, right, samples=4000, seed=cfg.seed + i)
        worst = max(worst, lhs - (rhs + slack))
    out.bound("ideal_property_mc/max_violation", worst, 0.0, 1e-10)

    # bilinear sum bound and rotation invariance, 100 instances
    worst_bound, worst_rot = 0.0, 0.0
    for i in range(100):
        n, k = int(rng.integers(3, 12)), int(rng.integers(2, 10))
        codomain = gamma.HrCodomain(0.0)
        a1 = gamma.FiniteRankGammaOperator(rng.standard_normal((n, k)), codomain)
        a2 = gamma.FiniteRankGammaOperator(rng.standard_normal((n, k)), codomain)
        beta = gamma.hilbert_inner_form(codomain, n)
        total = gamma.bilinear_sum(beta, a1, a2, check=False)
        bound = gamma.gamma_norm_exact(a1) * gamma.gamma_norm_exact(a2)
        worst_bound = max(worst_bound, float(np.linalg.norm(total)) - bound)
        rot = gamma.random_rotation(k, seed=cfg.seed + 500 + i)
        total_rot = gamma.bilinear_sum(
            beta,
            gamma.FiniteRankGammaOperator(a1.columns @ rot, codomain),
            gamma.FiniteRankGammaOperator(a2.columns @ rot, codomain),
            check=False)
        worst_rot = max(worst_rot, float(np.linalg.norm(total_rot - total)))
    out.bound("bilinear_bound/max_violation", worst_bound, 0.0, 1e-10)
    out.bound("bilinear_rotation_invariance", worst_rot, 0.0, 1e-10)

    # smoothing bound at the pinned (r, p) grid plus the configured pair
    pairs = [(0.3, 2.0), (0.3, 4.0), (0.5, 2.0), (0.5, 4.0), (cfg.r, cfg.p)]
    for j, (r, p) in enumerate(pairs):
        res = gamma.smoothing_gamma_bound(r, p, n_modes=50, samples=10_000,
                                          seed=cfg.seed + j)
        out.bound(f"smoothing_bound/r={r:g},p={p:g}", res["mc_estimate"],
                  res["bound"], 3.0 * res["stderr"], res["stderr"])

    # embedding bound at the pinned pairs plus the configured one
    for j, (eps, beta_) in enumerate([(0.0, -0.5), (0.05, -0.35), (cfg.eps, cfg.beta)]):
        res = gamma.embedding_bound(eps, beta_, 4.0, n_modes=50, samples=10_000,
                                    seed=cfg.seed + 40 + j)
        out.bound(f"embedding_bound/eps={eps:g},beta={beta_:g}", res["mc_estimate"],
                  res["bound"], 3.0 * res["stderr"], res["stderr"])

    # the embedding acts as the identity on coefficients
    iota = gamma.iota_embedding(0.1, -0.4, 4.0, n_modes=12)
    v = SineBasisVector(rng.standard_normal(12))
    err = float(np.max(np.abs(gamma.apply_embedding(iota, v, 0.1).coeffs - v.coeffs)))
    out.bound("embedding_identity_action", err, 0.0, 1e-10)

    # multiplication operator bound on sampled pairs
    worst = 0.0
    for v in _random_grid_functions(rng, 10, cfg.J):
        mult = gamma.multiplication_operator(v, cfg.beta, cfg.p)
        for _ in range(10):
            u = SineBasisVector(rng.standard_normal(24) / np.arange(1, 25))
            image = mult.apply(u, n_modes=64)
            lhs = float(np.sqrt(np.sum(
                eigenvalues(64) ** (2 * cfg.beta) * image.coeffs ** 2)))
            rhs = mult.bound * float(np.sqrt(np.sum(u.coeffs ** 2)))
            worst = max(worst, lhs - rhs)
    out.bound("multiplication_bound/max_violation", worst, 0.0, 1e-10)
    return out.rows


# ---------------------------------------------------------------------------
# nemytskii suite
# ---------------------------------------------------------------------------


def _fd_error(op, m, v, directions, step=1e-4):
    """Relative error of F^(m) against a central difference of F^(m-1)."""
    u, rest = directions[0], directions[1:]
    if m == 1:
        left = nemytskii.nemytskii_apply(op, GridFunction(v.values + step * u.values))
        right = nemytskii.nemytskii_apply(op, GridFunction(v.values - step * u.values))
    else:
        left = nemytskii.nemytskii_derivative(
            op, m - 1, GridFunction(v.values + step * u.values), *rest)
        right = nemytskii.nemytskii_derivative(
            op, m - 1, GridFunction(v.values - step * u.values), *rest)
    fd = (left.values - right.values) / (2 * step)
    exact = nemytskii.nemytskii_derivative(op, m, v, *directions).values
    scale = max(float(np.max(np.abs(exact))), 1e-12)
    return float(np.max(np.abs(fd - exact))) / scale


def nemytskii_suite(cfg):
    out = _Rows("nemytskii")
    rng = _rng(cfg.seed, 202)
    fields = [nemytskii.get_field(name) for name in nemytskii.FIELD_NAMES]

    # declared constants hold on dense samples
    xs = np.linspace(-10.0, 10.0, 10_001)
    pairs = rng.uniform(-10, 10, size=(10_000, 2))
    worst = 0.0
    for f in fields:
        for m in range(f.order + 1):
            vals = f.derivatives[m](xs)
            worst = max(worst, float(np.max(np.abs(vals))) - f.sup_norms[m])
            gaps = np.abs(f.derivatives[m](pairs[:, 0]) - f.derivatives[m](pairs[:, 1]))
            ratio = gaps / np.abs(pairs[:, 0] - pairs[:, 1])
            worst = max(worst, float(np.max(ratio)) - f.lipschitz[m])
    out.bound("declared_constants/max_violation", worst, 0.0, 1e-9)

    for f in fields:
        op = nemytskii.NemytskiiOperator(f, cfg.p, cfg.q)
        v = _random_grid_functions(rng, 1, cfg.J)[0]
        us = _random_grid_functions(rng, 2, cfg.J)
        for m in (1, 2):
            err = _fd_error(op, m, v, tuple(us[:m]))
            out.match(f"fd_derivative/{f.name}/m={m}", err, 0.0, 1e-5)

        # item (iii): sampled quotients never exceed the constant
        for m in (1, 2):
            r = max(cfg.q, (m + 1) * cfg.p)
            const = nemytskii.holder_bound_iii(op, m, r)
            worst = 0.0
            for _ in range(100):
                vv = _random_grid_functions(rng, 1, cfg.J)[0]
                uu = _random_grid_functions(rng, m, cfg.J, scale=2.0)
                num = nemytskii.nemytskii_derivative(op, m, vv, *uu)
                num_norm = np.mean(np.abs(num.values) ** cfg.p) ** (1 / cfg.p)
                den = math.prod(np.mean(np.abs(u.values) ** r) ** (1 / r) for u in uu)
                if den > 0:
                    worst = max(worst, num_norm / den - const)
            out.bound(f"holder_iii/{f.name}/m={m}", worst, 0.0, 1e-10)

        # items (iv) and (v) on sampled pairs
        for m in (1, 2):
            v1, v2 = _random_grid_functions(rng, 2, cfg.J, scale=2.0)
            r = 2.0 * max(cfg.q, (m + 1) * cfg.p)
            s = m * r
            samples = [tuple(_random_grid_functions(rng, m, cfg.J))
                       for _ in range(100)]
            lhs, rhs = nemytskii.lipschitz_bound_iv(op, m, r, s, v1, v2, samples)
            out.bound(f"lipschitz_iv/{f.name}/m={m}", lhs, rhs, 1e-10 * max(rhs, 1.0))
            lhs, rhs = nemytskii.lipschitz_bound_v(op, m, r, v1, v2, samples)
            out.bound(f"lipschitz_v/{f.name}/m={m}", lhs, rhs, 1e-10 * max(rhs, 1.0))

    # diffusion coefficient: FD consistency and the (iv)/(v) bound checks
    coef = nemytskii.DiffusionCoefficient(
        nemytskii.get_field(cfg.field), cfg.p, cfg.beta, cfg.delta,
        resolution=cfg.J)
    v, w, direction = _random_grid_functions(rng, 3, coef.resolution)
    n_modes, k_modes = 24, 24

    def fd_gap(step):
        plus = nemytskii.diffusion_apply(
            coef, GridFunction(v.values + step * direction.values), n_modes, k_modes)
        base = nemytskii.diffusion_apply(coef, v, n_modes, k_modes)
        deriv = nemytskii.diffusion_derivative(coef, 1, v, direction,
                                               n_modes=n_modes, k_modes=k_modes)
        diff = gamma.FiniteRankGammaOperator(
            (plus.columns - base.columns - step * deriv.columns) / step, coef.codomain)
        return gamma.gamma_norm_mc(diff, 2000, seed=cfg.seed)[0]

    e1, e2 = fd_gap(2e-2), fd_gap(1e-2)
    out.bound("diffusion_fd_order", e2, 0.75 * e1, 1e-12)

    for k in (0, 1):
        bound = nemytskii.diffusion_norm_bound(coef, k, n_modes)
        worst, worst_se = 0.0, 0.0
        for i in range(5):
            vv = _random_grid_functions(rng, 1, coef.resolution, scale=2.0)[0]
            dirs = _random_grid_functions(rng, k, coef.resolution)
            op = (nemytskii.diffusion_apply(coef, vv, n_modes, k_modes) if k == 0 else
                  nemytskii.diffusion_derivative(coef, k, vv, *dirs,
                                                 n_modes=n_modes, k_modes=k_modes))
            est, se = gamma.gamma_norm_mc(op, 4000, seed=cfg.seed + i)
            denom = math.prod(np.mean(np.abs(d.values) ** cfg.p) ** (1 / cfg.p)
                              for d in dirs)
            worst = max(worst, est - bound * max(denom, 1e-300))
            worst_se = max(worst_se, se)
        out.bound(f"diffusion_bound_iv/k={k}", worst, 0.0, 3.0 * worst_se, worst_se)

    bound, r_min = nemytskii.diffusion_lipschitz_bound(coef, 1, n_modes)
    op_v = nemytskii.diffusion_derivative(coef, 1, v, direction,
                                          n_modes=n_modes, k_modes=k_modes)
    op_w = nemytskii.diffusion_derivative(coef, 1, w, direction,
                                          n_modes=n_modes, k_modes=k_modes)
    diff = gamma.FiniteRankGammaOperator(op_v.columns - op_w.columns, coef.codomain)
    est, se = gamma.gamma_norm_mc(diff, 4000, seed=cfg.seed)
    r = max(r_min, cfg.p)
    vw = np.mean(np.abs(v.values - w.values) ** r) ** (1 / r)
    dirn = np.mean(np.abs(direction.values) ** cfg.p) ** (1 / cfg.p)
    out.bound("diffusion_lipschitz_v/k=1", est, bound * vw * dirn, 3.0 * se, se)
    return out.rows


# ---------------------------------------------------------------------------
# simulate / ito / dynkin / weak suites
# ---------------------------------------------------------------------------


def _family(cfg):
    return heat_family(cfg.t0, cfg.T)


def _grid(cfg):
    return process.TimeGrid(cfg.t0, cfg.T, cfg.M_t)


def _ou(cfg, n=None, k=None):
    n = n or min(cfg.N, 32)
    k = k or min(cfg.K, 32)
    return process.ou_spec(_family(cfg), n, k)


def _ou_closed_form(n_modes, horizon):
    rho = eigenvalues(n_modes)
    return float(np.sum((1.0 - np.exp(-2.0 * rho * horizon)) / (2.0 * rho)))


def simulate_suite(cfg):
    out = _Rows("simulate")
    grid = _grid(cfg)
    k_modes = min(cfg.K, 32)

    # Wiener increment moments over many paths
    block = np.stack([process.wiener_block(grid, k_modes, cfg.seed, i)
                      for i in range(200)])
    mean = float(np.mean(block))
    var = float(np.var(block))
    n_samples = block.size
    out.match("wiener_mean", mean, 0.0, 3.0 * math.sqrt(grid.dt / n_samples),
              math.sqrt(grid.dt / n_samples))
    out.match("wiener_variance", var, grid.dt,
              3.0 * grid.dt * math.sqrt(2.0 / n_samples),
              grid.dt * math.sqrt(2.0 / n_samples))

    # determinism: identical (seed, path_index) gives bit-identical blocks
    again = process.wiener_block(grid, k_modes, cfg.seed, 7)
    out.bound("wiener_determinism", float(np.max(np.abs(block[7] - again))), 0.0, 0.0)

    # recursion equals the literal discretized mild sum
    small = process.TimeGrid(cfg.t0, cfg.T, 40)
    spec = process.nemytskii_drift_spec(np.tanh, _family(cfg), 12, 12, 96)
    w = process.wiener_sample(small, 12, cfg.seed, 3)
    path = process.simulate(spec, small, w)
    literal = process.mild_sum_states(spec, small, w)
    out.bound("recursion_vs_sum", float(np.max(np.abs(path.states - literal))),
              0.0, 1e-10)

    # deterministic flow: Y = Z = 0 reproduces the semigroup orbit exactly
    x0 = basis_vector(1, 8)
    flow_spec = process.MildItoProcessSpec(_family(cfg), x0, None, None, 8, 8)
    flow = process.simulate(flow_spec, small, process.wiener_sample(small, 8, 0, 0))
    expected = np.exp(-eigenvalues(8)[None, :]
                      * (small.nodes() - cfg.t0)[:, None]) * x0.coeffs[None, :]
    out.bound("deterministic_flow", float(np.max(np.abs(flow.states - expected))),
              0.0, 1e-12)

    # OU Ito isometry against the closed form
    spec = _ou(cfg)
    stats = calculus.run_ensemble(testfunctions.squared_norm(), spec, grid,
                                  n_paths=min(cfg.paths, 40_000), seed=cfg.seed,
                                  workers=cfg.workers)
    closed = _ou_closed_form(spec.k_modes, cfg.T - cfg.t0)
    se = float(stats.stderr("phi_stop")[0])
    out.match("ou_second_moment", float(stats.mean("phi_stop")[0]), closed,
              3.0 * se, se)

    # integrability report against its closed form
    fine = process.TimeGrid(cfg.t0, cfg.T, 1000)
    path = process.simulate(spec, fine, process.wiener_sample(fine, spec.k_modes,
                                                              cfg.seed, 0))
    report = process.integrability_report(spec, fine, path)
    out.match("integrability_diffusion", report.diffusion_integral, closed,
              1e-3 * closed)
    out.match("integrability_drift", report.drift_integral, 0.0, 1e-12)
    return out.rows


def _shipped_configs(cfg):
    """(phi, spec, paths) tuples every expectation check runs over."""
    fam = _family(cfg)
    field = nemytskii.get_field(cfg.field)
    field_eval = field.derivatives[0]
    # multiplicative noise needs a state the field does not annihilate
    bumps = SineBasisVector(0.8 / np.arange(1, 11))
    return [
        (testfunctions.squared_norm(), _ou(cfg), min(cfg.paths, 20_000)),
        (testfunctions.coordinate_functional((1, 2)), _ou(cfg), min(cfg.paths, 20_000)),
        (testfunctions.squared_norm(),
         process.nemytskii_drift_spec(field_eval, fam, 16, 16, 128,
                                      label=f"{cfg.field}_drift"), 4000),
        (testfunctions.integral_functional(field),
         process.nemytskii_drift_spec(field_eval, fam, 16, 16, 128,
                                      label=f"{cfg.field}_drift"), 4000),
        (testfunctions.smoothed_norm(),
         process.state_diffusion_spec(field_eval, fam, 10, 10, 80, initial=bumps),
         2000),
    ]


def ito_suite(cfg):
    out = _Rows("ito")
    grid = process.TimeGrid(cfg.t0, cfg.T, min(cfg.M_t, 100))
    fam = _family(cfg)

    # deterministic configurations: constant path, any test function
    x0 = SineBasisVector(np.ones(8) / np.arange(1, 9))
    det = process.MildItoProcessSpec(fam, x0, None, None, 8, 8)
    w = process.wiener_sample(grid, 8, cfg.seed, 0)
    for phi in (testfunctions.squared_norm(), testfunctions.smoothed_norm(),
                testfunctions.coordinate_functional((1,))):
        res = calculus.ito_residual(phi, det, grid, w)
        out.bound(f"deterministic/{phi.name}", float(np.max(np.abs(res))), 0.0, 1e-10)

    # linear test functions: exact for any drift and diffusion
    lin = testfunctions.coordinate_functional((1, 3))
    for spec, tag in [(_ou(cfg, 8, 8), "ou"),
                      (process.nemytskii_drift_spec(np.tanh, fam, 8, 8, 64),
                       "nemytskii")]:
        w = process.wiener_sample(grid, 8, cfg.seed, 1)
        res = calculus.ito_residual(lin, spec, grid, w)
        out.bound(f"linear_phi/{tag}", float(np.max(np.abs(res))), 0.0, 1e-10)

    # deterministic drift with a linear functional (Z = 0 arm)
    drift_only = process.MildItoProcessSpec(
        fam, x0, lambda t, x: -np.asarray(x), None, 8, 8)
    res = calculus.ito_residual(lin, drift_only, grid,
                                process.wiener_sample(grid, 8, cfg.seed, 2))
    out.bound("linear_phi/drift_only", float(np.max(np.abs(res))), 0.0, 1e-10)

    # standard Ito formula exact cases
    w1 = process.wiener_sample(grid, 4, cfg.seed, 5)
    res = calculus.standard_ito_residual(
        testfunctions.time_functional(), None, lambda t, x: np.eye(4), grid, w1, 4)
    out.bound("standard/time_functional", float(np.max(np.abs(res))), 0.0, 1e-12)
    res = calculus.standard_ito_residual(
        testfunctions.with_time(lin), lambda t, x: -x, lambda t, x: np.eye(8),
        grid, process.wiener_sample(grid, 8, cfg.seed, 6), 8)
    out.bound("standard/linear_phi", float(np.max(np.abs(res))), 0.0, 1e-10)

    # self-convergence of the quadratic residual
    phi = testfunctions.squared_norm()
    for spec, tag in [(_ou(cfg), "ou"),
                      (process.nemytskii_drift_spec(np.tanh, fam, 16, 16, 128),
                       "nemytskii")]:
        _, order = calculus.self_convergence_orders(
            phi, spec, cfg.t0, cfg.T, (100, 200, 400), 1000, seed=cfg.seed,
            workers=cfg.workers)
        out.floor(f"self_convergence/{tag}", order, 0.4)
    return out.rows


def dynkin_suite(cfg):
    out = _Rows("dynkin")
    grid = _grid(cfg)
    phi = testfunctions.squared_norm()

    # deterministic process: both sides coincide exactly
    x0 = SineBasisVector(np.ones(8) / np.arange(1, 9))
    det = process.MildItoProcessSpec(_family(cfg), x0, None, None, 8, 8)
    res = calculus.dynkin_gap(phi, det, grid, paths=2, seed=cfg.seed)
    out.bound("deterministic_equality", float(np.max(np.abs(res.gap))), 0.0, 1e-10)

    # OU second moment against the closed form, both sides
    spec = _ou(cfg)
    closed = _ou_closed_form(spec.k_modes, cfg.T - cfg.t0)
    res = calculus.dynkin_gap(phi, spec, grid, paths=cfg.paths, seed=cfg.seed,
                              workers=cfg.workers)
    se_l = float(res.stderr_lhs[0])
    out.match("ou_lhs_vs_closed_form", float(res.lhs[0]), closed,
              max(3.0 * se_l, 0.01 * closed), se_l)
    se_r = float(res.stderr_rhs[0])
    out.match("ou_rhs_vs_closed_form", float(res.rhs[0]), closed,
              max(3.0 * se_r, 0.01 * closed), se_r)
    out.match("ou_gap", float(res.gap[0]), 0.0, 3.0 * float(res.stderr_gap[0]),
              float(res.stderr_gap[0]))

    # infinite hitting level degenerates to the terminal rule
    lim = calculus.dynkin_gap(phi, spec, grid,
                              calculus.StoppingRule("hitting", math.inf),
                              paths=2000, seed=cfg.seed)
    term = calculus.dynkin_gap(phi, spec, grid, paths=2000, seed=cfg.seed)
    out.bound("hitting_inf_degenerate",
              abs(float(lim.lhs[0] - term.lhs[0])) + abs(float(lim.rhs[0] - term.rhs[0])),
              0.0, 0.0)

    # finite hitting level, widened tolerance for the node-discretized time
    hit = calculus.dynkin_gap(phi, spec, grid,
                              calculus.StoppingRule("hitting", 0.3),
                              paths=min(cfg.paths, 20_000), seed=cfg.seed,
                              workers=cfg.workers)
    out.match("hitting_gap", float(hit.gap[0]), 0.0,
              5.0 * float(hit.stderr_gap[0]), float(hit.stderr_gap[0]))

    # the configured test function and stopping rule
    phi_cfg = testfunctions.shipped_test_function(cfg.phi)
    rule_cfg = (None if cfg.stopping == "terminal"
                else calculus.StoppingRule("hitting", cfg.level))
    cfg_res = calculus.dynkin_gap(phi_cfg, _ou(cfg), grid, rule_cfg,
                                  paths=min(cfg.paths, 20_000), seed=cfg.seed,
                                  workers=cfg.workers)
    widen = 5.0 if cfg.stopping == "hitting" else 3.0
    out.match(f"configured_gap/{cfg.phi}/{cfg.stopping}",
              float(np.max(np.abs(cfg_res.gap))), 0.0,
              widen * float(np.max(cfg_res.stderr_gap)),
              float(np.max(cfg_res.stderr_gap)))

    # martingale property on every shipped configuration
    for i, (phi_i, spec_i, paths_i) in enumerate(_shipped_configs(cfg)):
        grid_i = grid if not spec_i.state_dependent else \
            process.TimeGrid(cfg.t0, cfg.T, min(cfg.M_t, 50))
        mean, se = calculus.martingale_check(phi_i, spec_i, grid_i, paths=paths_i,
                                             seed=cfg.seed, workers=cfg.workers)
        viol = float(np.max(np.abs(mean) - 3.0 * se))
        out.bound(f"martingale/{i}_{spec_i.label}_{phi_i.name}", viol, 0.0, 0.0,
                  float(np.max(se)))
    return out.rows


def weak_suite(cfg):
    out = _Rows("weak")
    grid = _grid(cfg)

    # deterministic case: equality
    x0 = SineBasisVector(np.ones(8) / np.arange(1, 9))
    det = process.MildItoProcessSpec(_family(cfg), x0, None, None, 8, 8)
    res = calculus.weak_estimate_gap(testfunctions.squared_norm(), det, grid,
                                     paths=2, seed=cfg.seed)
    out.match("deterministic_equality", res.slack, 0.0, 1e-10)

    # the configured test function on the reference process
    phi_cfg = testfunctions.shipped_test_function(cfg.phi)
    res = calculus.weak_estimate_gap(phi_cfg, _ou(cfg), grid,
                                     paths=min(cfg.paths, 20_000), seed=cfg.seed,
                                     workers=cfg.workers)
    out.floor(f"configured_slack/{cfg.phi}", res.slack, 0.0, 3.0 * res.stderr,
              res.stderr)

    # slack is nonnegative within Monte Carlo resolution on shipped configs
    for i, (phi_i, spec_i, paths_i) in enumerate(_shipped_configs(cfg)):
        grid_i = grid if not spec_i.state_dependent else \
            process.TimeGrid(cfg.t0, cfg.T, min(cfg.M_t, 50))
        res = calculus.weak_estimate_gap(phi_i, spec_i, grid_i, paths=paths_i,
                                         seed=cfg.seed, workers=cfg.workers)
        out.floor(f"slack/{i}_{spec_i.label}_{phi_i.name}", res.slack, 0.0,
                  3.0 * res.stderr, res.stderr)
        moment_ok = 0.0 if all(np.isfinite(v) for v in res.moments.values()) else 1.0
        out.match(f"moment_hypothesis/{i}_{spec_i.label}_{phi_i.name}",
                  moment_ok, 0.0, 0.0)
    return out.rows


SUITES = {
    "gamma": gamma_suite,
    "nemytskii": nemytskii_suite,
    "simulate": simulate_suite,
    "ito": ito_suite,
    "dynkin": dynkin_suite,
    "weak": weak_suite,
}


def run_suite(name, cfg):
    if name == "all":
        rows = []
        for key in ("gamma", "nemytskii", "simulate", "ito", "dynkin", "weak"):
            rows.extend(SUITES[key](cfg))
        return rows
    return SUITES[name](cfg)
