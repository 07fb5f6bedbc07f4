"""Test functions phi: state space -> R^m with two derivatives.

All maps are batched: the state argument carries modes on the last axis
and arbitrary leading axes; outputs append an output axis of length m.
``d2_trace`` evaluates sum_k phi''(x)(z_k, z_k) over operator columns
(shape (N, K) shared across the batch, or (P, N, K) per path); shipped
functions override it with closed forms, the default falls back to a
column loop.

The growth metadata (constant, exponent) declares the bound
||phi(x)|| <= C (1 + ||x||^p) used by the weak-estimate hypothesis.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .spectral import sine_matrix

__all__ = [
    "TestFunction",
    "TimeTestFunction",
    "coordinate_functional",
    "squared_norm",
    "smoothed_norm",
    "integral_functional",
    "with_time",
    "time_functional",
    "shipped_test_function",
    "TEST_FUNCTION_NAMES",
]


def _generic_trace(d2, x, cols):
    if cols.ndim == 2:
        parts = [d2(x, np.broadcast_to(cols[:, k], x.shape), np.broadcast_to(cols[:, k], x.shape))
                 for k in range(cols.shape[1])]
    else:
        parts = [d2(x, cols[..., k], cols[..., k]) for k in range(cols.shape[-1])]
    return sum(parts)


@dataclass(frozen=True)
class TestFunction:
    """phi in C^2 with value/derivative maps and polynomial growth metadata.

    ``constant_d2`` marks test functions whose second derivative does not
    depend on the base point (linear and quadratic ones); the integral
    drivers use it to skip state propagation they do not need.
    """

    name: str
    output_dim: int
    value: Callable
    d1: Callable
    d2: Callable
    growth_exponent: float
    growth_constant: float = 1.0
    trace: Optional[Callable] = None
    constant_d2: bool = False

    def d2_trace(self, x, cols):
        """sum over columns of phi''(x)(z_k, z_k)."""
        if self.trace is not None:
            return self.trace(x, cols)
        return _generic_trace(self.d2, x, np.asarray(cols))


@dataclass(frozen=True)
class TimeTestFunction:
    """phi(t, x) in C^{1,2} for the standard Ito formula."""

    name: str
    output_dim: int
    value: Callable
    time_derivative: Callable
    d1: Callable
    d2: Callable
    trace: Optional[Callable] = None

    def d2_trace(self, t, x, cols):
        if self.trace is not None:
            return self.trace(t, x, cols)
        return _generic_trace(lambda xx, a, b: self.d2(t, xx, a, b), x, np.asarray(cols))


def coordinate_functional(indices=(1,)) -> TestFunction:
    """Linear functionals x -> (<x, e_n>)_{n in indices}; 1-based mode indices."""
    idx = np.asarray(indices, dtype=int) - 1
    if np.any(idx < 0):
        raise ValueError("mode indices are 1-based")

    def value(x):
        return np.asarray(x)[..., idx]

    def d1(x, v):
        return np.asarray(v)[..., idx]

    def d2(x, a, b):
        shape = np.asarray(x).shape[:-1] + (idx.size,)
        return np.zeros(shape)

    def trace(x, cols):
        return np.zeros(idx.size)

    return TestFunction(f"coordinate{tuple(int(i) for i in indices)}", idx.size,
                        value, d1, d2, growth_exponent=1.0, trace=trace,
                        constant_d2=True)


def squared_norm() -> TestFunction:
    """phi(x) = ||x||_H^2; phi'' is twice the inner product."""

    def value(x):
        return np.sum(np.asarray(x) ** 2, axis=-1)[..., None]

    def d1(x, v):
        return 2.0 * np.sum(np.asarray(x) * np.asarray(v), axis=-1)[..., None]

    def d2(x, a, b):
        return 2.0 * np.sum(np.asarray(a) * np.asarray(b), axis=-1)[..., None]

    def trace(x, cols):
        cols = np.asarray(cols)
        if cols.ndim == 2:
            return np.array([2.0 * np.sum(cols ** 2)])
        return 2.0 * np.sum(cols ** 2, axis=(-2, -1))[..., None]

    return TestFunction("squared_norm", 1, value, d1, d2, growth_exponent=2.0,
                        trace=trace, constant_d2=True)


def smoothed_norm() -> TestFunction:
    """phi(x) = (1 + ||x||^2)^(1/2), a smooth norm-like functional."""

    def s(x):
        return np.sqrt(1.0 + np.sum(np.asarray(x) ** 2, axis=-1))

    def value(x):
        return s(x)[..., None]

    def d1(x, v):
        return (np.sum(np.asarray(x) * np.asarray(v), axis=-1) / s(x))[..., None]

    def d2(x, a, b):
        x = np.asarray(x)
        sx = s(x)
        ab = np.sum(np.asarray(a) * np.asarray(b), axis=-1)
        xa = np.sum(x * np.asarray(a), axis=-1)
        xb = np.sum(x * np.asarray(b), axis=-1)
        return (ab / sx - xa * xb / sx ** 3)[..., None]

    def trace(x, cols):
        x = np.asarray(x)
        cols = np.asarray(cols)
        sx = s(x)
        if cols.ndim == 2:
            total = np.sum(cols ** 2)
            xc = x @ cols                                  # (..., K)
        else:
            total = np.sum(cols ** 2, axis=(-2, -1))
            xc = np.einsum("pn,pnk->pk", x, cols)
        return (total / sx - np.sum(xc ** 2, axis=-1) / sx ** 3)[..., None]

    return TestFunction("smoothed_norm", 1, value, d1, d2, growth_exponent=1.0,
                        growth_constant=2.0, trace=trace)


def integral_functional(field, resolution: int = 128) -> TestFunction:
    """phi(x) = int_0^1 f(x(s)) ds through the midpoint grid.

    Needs a field with two derivatives; connects the composition-operator
    module to the mild calculus as the nonlinear test function example.
    """
    f0, f1, f2 = field.derivatives[0], field.derivatives[1], field.derivatives[2]

    def value(x):
        mat = sine_matrix(resolution, np.asarray(x).shape[-1])
        return np.mean(f0(np.asarray(x) @ mat.T), axis=-1)[..., None]

    def d1(x, v):
        mat = sine_matrix(resolution, np.asarray(x).shape[-1])
        gx = np.asarray(x) @ mat.T
        gv = np.asarray(v) @ mat.T
        return np.mean(f1(gx) * gv, axis=-1)[..., None]

    def d2(x, a, b):
        mat = sine_matrix(resolution, np.asarray(x).shape[-1])
        gx = np.asarray(x) @ mat.T
        return np.mean(f2(gx) * (np.asarray(a) @ mat.T) * (np.asarray(b) @ mat.T),
                       axis=-1)[..., None]

    def trace(x, cols):
        x = np.asarray(x)
        cols = np.asarray(cols)
        mat = sine_matrix(resolution, x.shape[-1])
        gx = f2(x @ mat.T)                                 # (..., J)
        if cols.ndim == 2:
            colsq = np.sum((mat @ cols) ** 2, axis=-1)     # (J,)
            return np.mean(gx * colsq, axis=-1)[..., None]
        gcols = np.einsum("jn,pnk->pjk", mat, cols)
        return np.mean(gx * np.sum(gcols ** 2, axis=-1), axis=-1)[..., None]

    growth = field.sup_norms[0]
    return TestFunction(f"integral_{field.name}", 1, value, d1, d2,
                        growth_exponent=0.0, growth_constant=growth, trace=trace)


def with_time(phi: TestFunction) -> TimeTestFunction:
    """View a time-independent phi as phi(t, x) with zero time derivative."""

    def zero_dt(t, x):
        return np.zeros(np.asarray(x).shape[:-1] + (phi.output_dim,))

    return TimeTestFunction(
        phi.name, phi.output_dim,
        lambda t, x: phi.value(x), zero_dt,
        lambda t, x, v: phi.d1(x, v),
        lambda t, x, a, b: phi.d2(x, a, b),
        trace=None if phi.trace is None else (lambda t, x, cols: phi.trace(x, cols)),
    )


def time_functional() -> TimeTestFunction:
    """phi(t, x) = t; the pure time integral."""

    def value(t, x):
        return np.full(np.asarray(x).shape[:-1] + (1,), t)

    def dt(t, x):
        return np.ones(np.asarray(x).shape[:-1] + (1,))

    def zero2(t, x, a, b):
        return np.zeros(np.asarray(x).shape[:-1] + (1,))

    return TimeTestFunction("time", 1, value, dt,
                            lambda t, x, v: zero2(t, x, v, v), zero2)


TEST_FUNCTION_NAMES = ("coordinate", "squared_norm", "smoothed_norm",
                       "integral_sin", "integral_tanh", "integral_rational")


def shipped_test_function(name: str) -> TestFunction:
    """Registry lookup used by the CLI configs."""
    if name == "coordinate":
        return coordinate_functional((1,))
    if name == "squared_norm":
        return squared_norm()
    if name == "smoothed_norm":
        return smoothed_norm()
    if name.startswith("integral_"):
        from .nemytskii import get_field
        return integral_functional(get_field(name[len("integral_"):]))
    raise KeyError(f"unknown test function {name!r}; registry has {TEST_FUNCTION_NAMES}")
