"""Simulation of mild Ito processes on the truncated sine modes.

A process is determined by an evolution family S, an initial value, a
mild drift Y and a mild diffusion Z; its states are advanced by the
exponential update

    X_{m+1} = S_{t_m, t_{m+1}} (X_m + Y(t_m, X_m) dt) + R_m Z(t_m, X_m) dW_m

where R_m carries the root-mean-square average of the semigroup kernel
over the step, so each mode of the noise increment enters with the exact
variance of the mild stochastic integral over [t_m, t_{m+1}] (for the
identity family R_m = Id and this is the plain left-point Euler update).
Drift and diffusion are evaluated at the left endpoint, which realizes
their predictability.

Drift/diffusion callables follow a batched convention: the state
argument is a (paths, modes) matrix.  ``lift_drift``/``lift_diffusion``
adapt maps written against single SineBasisVector states.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .spectral import (
    EvolutionFamily,
    SineBasisVector,
    eigenvalues,
    sine_matrix,
)

__all__ = [
    "TimeGrid",
    "WienerPath",
    "MildItoProcessSpec",
    "SamplePath",
    "BlowUpError",
    "wiener_sample",
    "wiener_block",
    "path_rng",
    "simulate",
    "mild_sum_states",
    "regularize",
    "integrability_report",
    "lift_drift",
    "lift_diffusion",
    "ou_spec",
    "nemytskii_drift_spec",
    "state_diffusion_spec",
    "StepKernels",
    "step_kernels",
]


class BlowUpError(RuntimeError):
    """A simulated state became non-finite."""

    def __init__(self, step: int, path_index: int | None = None):
        self.step = step
        self.path_index = path_index
        where = f"step {step}" if path_index is None else \
            f"step {step}, path {path_index}"
        super().__init__(f"non-finite state at {where}")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t0 = tau_0 < ... < tau_M = T."""

    start: float
    terminal: float
    steps: int

    def __post_init__(self):
        if not self.terminal > self.start:
            raise ValueError("terminal time must exceed start time")
        if self.steps < 1:
            raise ValueError("need at least one step")

    @property
    def dt(self) -> float:
        return (self.terminal - self.start) / self.steps

    def nodes(self) -> np.ndarray:
        return np.linspace(self.start, self.terminal, self.steps + 1)


@dataclass(frozen=True)
class WienerPath:
    """Increments dW[j, k] ~ N(0, dt) of the truncated cylindrical process."""

    increments: np.ndarray
    seed: int
    path_index: int

    def __post_init__(self):
        arr = np.asarray(self.increments, dtype=float)
        if arr.ndim != 2:
            raise ValueError("increments must have shape (steps, modes)")
        if not np.all(np.isfinite(arr)):
            raise ValueError("increments must be finite")
        object.__setattr__(self, "increments", arr)


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Independent per-path substream keyed by (seed, path_index).

    SFC64 under SeedSequence keying: deterministic in the key, streams
    are independent, and results cannot depend on worker scheduling
    because every path always draws its whole block from its own stream.
    """
    ss = np.random.SeedSequence(entropy=seed & (2 ** 64 - 1),
                                spawn_key=(path_index,))
    return np.random.Generator(np.random.SFC64(ss))


def wiener_block(grid: TimeGrid, k_modes: int, seed: int, path_index: int) -> np.ndarray:
    """The (steps, K) increment block of one path, drawn in one fixed order."""
    if k_modes < 1:
        raise ValueError("need at least one noise mode")
    g = path_rng(seed, path_index)
    return g.standard_normal((grid.steps, k_modes)) * np.sqrt(grid.dt)


def wiener_sample(grid: TimeGrid, k_modes: int, seed: int, path_index: int = 0) -> WienerPath:
    return WienerPath(wiener_block(grid, k_modes, seed, path_index), seed, path_index)


@dataclass(frozen=True)
class MildItoProcessSpec:
    """Evolution family, initial value, mild drift and mild diffusion.

    drift(t, X) -> (P, N) for X of shape (P, N), or None when zero.
    diffusion(t, X) -> (N, K), or (P, N, K) when ``state_dependent``
    is set; None means zero diffusion.  For state-independent diffusion
    the engine passes X = None.

    ``diffusion_diagonal`` declares that the diffusion columns are the
    scaled first K coordinate vectors (entries on the diagonal); the
    ensemble drivers then skip the per-step column matvec.  It must
    describe the same operator as ``diffusion``.
    """

    family: EvolutionFamily
    initial: SineBasisVector
    drift: Optional[Callable] = None
    diffusion: Optional[Callable] = None
    n_modes: int = 64
    k_modes: int = 64
    state_dependent: bool = False
    label: str = "process"
    diffusion_diagonal: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.initial.truncation != self.n_modes:
            raise ValueError(
                f"initial value has {self.initial.truncation} modes, spec says "
                f"{self.n_modes}"
            )


@dataclass
class SamplePath:
    """States per node, optionally with the regularized companion filled."""

    grid: TimeGrid
    states: np.ndarray                       # (steps + 1, N)
    regularized: np.ndarray | None = None    # (steps + 1, N)


@dataclass(frozen=True)
class StepKernels:
    """Precomputed diagonal kernels of one (family, grid, N) combination.

    step[m]    multipliers of S_{tau_m, tau_{m+1}}
    rms[m]     RMS-averaged noise multipliers over [tau_m, tau_{m+1}]
    to_T[m]    multipliers of S_{tau_m, T}      (ones at m = steps)
    noise_T[m] to_T[m+1] * rms[m]: exact-variance propagation of dW_m to T
    """

    step: np.ndarray
    rms: np.ndarray
    to_T: np.ndarray
    noise_T: np.ndarray


def step_kernels(family: EvolutionFamily, grid: TimeGrid, n_modes: int) -> StepKernels:
    nodes = grid.nodes()
    steps = grid.steps
    step = np.empty((steps, n_modes))
    rms = np.empty((steps, n_modes))
    to_T = np.empty((steps + 1, n_modes))
    for m in range(steps):
        step[m] = family.multipliers(nodes[m], nodes[m + 1], n_modes)
        rms[m] = family.noise_multipliers(nodes[m], nodes[m + 1], n_modes)
        to_T[m] = family.multipliers(nodes[m], nodes[-1], n_modes)
    to_T[steps] = 1.0
    noise_T = to_T[1:] * rms
    return StepKernels(step, rms, to_T, noise_T)


def _diffusion_increment(z, dw):
    """Apply columns to increments: (N,K)x(P,K)->(P,N) or (P,N,K)x(P,K)->(P,N)."""
    if z.ndim == 2:
        return dw @ z.T
    return np.einsum("pnk,pk->pn", z, dw)


def simulate(spec: MildItoProcessSpec, grid: TimeGrid, w: WienerPath) -> SamplePath:
    """March one path with the exponential variance-exact update."""
    if w.increments.shape != (grid.steps, spec.k_modes):
        raise ValueError(
            f"increments shaped {w.increments.shape}, expected "
            f"{(grid.steps, spec.k_modes)}"
        )
    kern = step_kernels(spec.family, grid, spec.n_modes)
    nodes = grid.nodes()
    dt = grid.dt
    states = np.empty((grid.steps + 1, spec.n_modes))
    states[0] = spec.initial.coeffs
    x = spec.initial.coeffs[None, :].copy()
    for m in range(grid.steps):
        t = nodes[m]
        # coefficients are read at the left endpoint (predictability)
        z = None
        if spec.diffusion is not None:
            z = np.asarray(spec.diffusion(t, x if spec.state_dependent else None))
        incr = np.zeros_like(x)
        if spec.drift is not None:
            incr = incr + spec.drift(t, x) * dt
        x = kern.step[m] * (x + incr)
        if z is not None:
            x = x + kern.rms[m] * _diffusion_increment(z, w.increments[m:m + 1])
        if not np.all(np.isfinite(x)):
            raise BlowUpError(m + 1, w.path_index)
        states[m + 1] = x[0]
    return SamplePath(grid, states)


def mild_sum_states(spec: MildItoProcessSpec, grid: TimeGrid, w: WienerPath) -> np.ndarray:
    """Literal discretized mild representation, for the recursion-sum check.

    X_m = S_{t0,tau_m} X_0 + sum_{j<m} S_{tau_j,tau_m} Y_j dt
        + sum_{j<m} S_{tau_{j+1},tau_m} R_j Z_j dW_j,
    with Y_j, Z_j read along the recursive path.  O(steps^2); test sizes.
    """
    path = simulate(spec, grid, w)
    nodes = grid.nodes()
    dt = grid.dt
    n = spec.n_modes
    out = np.empty_like(path.states)
    out[0] = spec.initial.coeffs
    drift_terms = []
    noise_terms = []
    for j in range(grid.steps):
        x = path.states[j][None, :]
        if spec.drift is not None:
            drift_terms.append(np.asarray(spec.drift(nodes[j], x))[0] * dt)
        else:
            drift_terms.append(np.zeros(n))
        if spec.diffusion is not None:
            z = np.asarray(spec.diffusion(nodes[j], x if spec.state_dependent else None))
            rms = spec.family.noise_multipliers(nodes[j], nodes[j + 1], n)
            noise_terms.append(rms * _diffusion_increment(z, w.increments[j:j + 1])[0])
        else:
            noise_terms.append(np.zeros(n))
    for m in range(1, grid.steps + 1):
        acc = spec.family.multipliers(nodes[0], nodes[m], n) * spec.initial.coeffs
        for j in range(m):
            acc = acc + spec.family.multipliers(nodes[j], nodes[m], n) * drift_terms[j]
            acc = acc + spec.family.multipliers(nodes[j + 1], nodes[m], n) * noise_terms[j]
        out[m] = acc
    return out


def regularize(spec: MildItoProcessSpec, path: SamplePath) -> SamplePath:
    """Fill the companion X_bar_t = S_{t,T} X_t; the terminal node is X_T itself."""
    kern = step_kernels(spec.family, path.grid, spec.n_modes)
    path.regularized = kern.to_T * path.states
    return path


@dataclass(frozen=True)
class IntegrabilityReport:
    """Quadrature values of the defining integrability quantities."""

    drift_integral: float
    diffusion_integral: float

    @property
    def finite(self) -> bool:
        return bool(np.isfinite(self.drift_integral) and np.isfinite(self.diffusion_integral))


def integrability_report(spec: MildItoProcessSpec, grid: TimeGrid, path: SamplePath,
                         smoothness: float = 0.0) -> IntegrabilityReport:
    """int ||S_{s,T} Y_s|| ds and int ||S_{s,T} Z_s||_gamma^2 ds along one path.

    The drift integrand is evaluated at the left endpoints; the squared
    diffusion kernel is integrated exactly within each step (consistent
    with the noise propagation of the scheme).  Norms are taken in the
    H_smoothness scale.
    """
    kern = step_kernels(spec.family, grid, spec.n_modes)
    nodes = grid.nodes()
    dt = grid.dt
    weights = eigenvalues(spec.n_modes) ** (2.0 * smoothness)
    drift_total = 0.0
    diff_total = 0.0
    for m in range(grid.steps):
        x = path.states[m][None, :]
        if spec.drift is not None:
            y = np.asarray(spec.drift(nodes[m], x))[0]
            drift_total += np.sqrt(np.sum(weights * (kern.to_T[m] * y) ** 2)) * dt
        if spec.diffusion is not None:
            z = np.asarray(spec.diffusion(nodes[m], x if spec.state_dependent else None))
            cols = z if z.ndim == 2 else z[0]
            propagated = kern.noise_T[m][:, None] * cols
            diff_total += float(np.sum(weights[:, None] * propagated ** 2)) * dt
    return IntegrabilityReport(float(drift_total), float(diff_total))


# ---------------------------------------------------------------------------
# adapters and shipped process constructors
# ---------------------------------------------------------------------------


def lift_drift(fn: Callable[[float, SineBasisVector], SineBasisVector]) -> Callable:
    """Lift a single-state drift map into the batched convention."""

    def batched(t, x):
        return np.stack([fn(t, SineBasisVector(row)).coeffs for row in x])

    return batched


def lift_diffusion(fn: Callable[[float, SineBasisVector], "object"]) -> Callable:
    """Lift a single-state diffusion map (returning a gamma operator)."""

    def batched(t, x):
        return np.stack([np.asarray(fn(t, SineBasisVector(row)).columns) for row in x])

    return batched


def _identity_columns(n_modes: int, k_modes: int, scale: float = 1.0) -> np.ndarray:
    cols = np.zeros((n_modes, k_modes))
    np.fill_diagonal(cols, scale)
    return cols


def ou_spec(family: EvolutionFamily, n_modes: int = 32, k_modes: int = 32,
            initial: SineBasisVector | None = None,
            diffusion_scale: float = 1.0) -> MildItoProcessSpec:
    """Ornstein-Uhlenbeck type process: zero drift, truncated-identity noise."""
    if initial is None:
        initial = SineBasisVector(np.zeros(n_modes))
    cols = _identity_columns(n_modes, k_modes, diffusion_scale)
    return MildItoProcessSpec(
        family, initial, None, lambda t, x: cols, n_modes, k_modes,
        state_dependent=False, label="ou",
        diffusion_diagonal=np.full(k_modes, diffusion_scale),
    )


def nemytskii_drift_spec(field_eval: Callable, family: EvolutionFamily,
                         n_modes: int = 32, k_modes: int = 32,
                         resolution: int = 128,
                         initial: SineBasisVector | None = None,
                         diffusion_scale: float = 1.0,
                         label: str = "nemytskii_drift") -> MildItoProcessSpec:
    """Semilinear process: drift is the composition field applied pointwise."""
    if initial is None:
        initial = SineBasisVector(np.zeros(n_modes))
    mat = sine_matrix(resolution, n_modes)

    def drift(t, x):
        return field_eval(x @ mat.T) @ mat / resolution

    cols = _identity_columns(n_modes, k_modes, diffusion_scale)
    return MildItoProcessSpec(
        family, initial, drift, lambda t, x: cols, n_modes, k_modes,
        state_dependent=False, label=label,
        diffusion_diagonal=np.full(k_modes, diffusion_scale),
    )


def state_diffusion_spec(field_eval: Callable, family: EvolutionFamily,
                         n_modes: int = 12, k_modes: int = 12,
                         resolution: int = 96,
                         initial: SineBasisVector | None = None,
                         label: str = "state_diffusion") -> MildItoProcessSpec:
    """Multiplicative noise Z(t, X) u = b(X) . u, columns per path."""
    if initial is None:
        initial = SineBasisVector(np.zeros(n_modes))
    mat_n = sine_matrix(resolution, n_modes)
    mat_k = mat_n if k_modes == n_modes else sine_matrix(resolution, k_modes)

    def diffusion(t, x):
        bv = field_eval(x @ mat_n.T)                       # (P, J)
        return np.einsum("jn,pj,jk->pnk", mat_n, bv, mat_k) / resolution

    return MildItoProcessSpec(
        family, initial, None, diffusion, n_modes, k_modes,
        state_dependent=True, label=label,
    )
