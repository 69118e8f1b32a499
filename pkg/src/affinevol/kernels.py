"""Convolution kernels, their Laplace-measure representations, and
Riemann-Liouville fractional operators.

All solvers in this package discretise convolutions on uniform grids with
product integration: the (possibly singular) kernel is integrated exactly
against a piecewise-constant or piecewise-linear interpolant of the smooth
factor. The exact cell integrals needed for that live here, derived from
closed-form first and second antiderivatives of each kernel variant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DomainError

__all__ = [
    "PowerLawKernel", "ConstantKernel", "ExpSumKernel", "KernelSpec",
    "DiracAtZero", "RoughDensity", "AtomicMeasure", "LaplaceMeasure",
    "kernel_eval", "kernel_eval_array", "kernel_ik1", "kernel_ik2",
    "kernel_sq_integral", "kernel_sq_integral2", "cell_integrals",
    "linear_pi_weights", "sq_linear_pi_weights", "node_zero_value",
    "measure_of", "kernel_from_measure", "discretize_measure",
    "fractional_integral", "fractional_derivative",
]


# ------------------------------------------------------------- kernels

@dataclass(frozen=True)
class PowerLawKernel:
    """K(t) = scale * t^(alpha-1) / Gamma(alpha), alpha in (1/2, 1]."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not (0.5 < self.alpha <= 1.0):
            raise ArgumentError(f"power-law exponent must lie in (1/2, 1], got {self.alpha}")
        if self.scale <= 0.0:
            raise ArgumentError("power-law scale must be positive")

    @property
    def gamma_reg(self) -> float:
        """Square-integrability exponent: int_0^h K^2 = O(h^gamma)."""
        return 2.0 * self.alpha - 1.0

    @property
    def singular(self) -> bool:
        return self.alpha < 1.0


@dataclass(frozen=True)
class ConstantKernel:
    """K(t) = scale."""

    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0.0:
            raise ArgumentError("constant kernel scale must be positive")

    gamma_reg = 1.0
    singular = False


@dataclass(frozen=True)
class ExpSumKernel:
    """K(t) = sum_i w_i exp(-x_i t), rates x_i >= 0; weights may be signed."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(w), float(x)) for w, x in self.atoms)
        if not atoms:
            raise ArgumentError("exponential-sum kernel needs at least one atom")
        if any(x < 0.0 for _, x in atoms):
            raise ArgumentError("exponential-sum rates must be nonnegative")
        object.__setattr__(self, "atoms", atoms)

    gamma_reg = 1.0
    singular = False

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms])

    @property
    def rates(self) -> np.ndarray:
        return np.array([x for _, x in self.atoms])


KernelSpec = PowerLawKernel | ConstantKernel | ExpSumKernel


def kernel_eval(k: KernelSpec, t: float) -> float:
    """K(t) for scalar t; singular variants reject t <= 0."""
    if isinstance(k, PowerLawKernel) and k.singular:
        if t <= 0.0:
            raise DomainError(f"power-law kernel with alpha={k.alpha} diverges at t <= 0")
    elif t < 0.0:
        raise DomainError("kernels are defined on t >= 0")
    return float(kernel_eval_array(k, np.asarray([t]))[0])


def kernel_eval_array(k: KernelSpec, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if isinstance(k, PowerLawKernel):
        if k.alpha == 1.0:
            return np.full_like(t, k.scale)
        return k.scale * t ** (k.alpha - 1.0) / math.gamma(k.alpha)
    if isinstance(k, ConstantKernel):
        return np.full_like(t, k.scale)
    w, x = k.weights, k.rates
    return np.exp(-np.multiply.outer(t, x)) @ w


def kernel_ik1(k: KernelSpec, t: np.ndarray) -> np.ndarray:
    """First antiderivative int_0^t K(s) ds."""
    t = np.asarray(t, dtype=float)
    if isinstance(k, PowerLawKernel):
        return k.scale * t ** k.alpha / math.gamma(k.alpha + 1.0)
    if isinstance(k, ConstantKernel):
        return k.scale * t
    w, x = k.weights, k.rates
    out = np.zeros_like(t)
    for wi, xi in zip(w, x):
        if xi == 0.0:
            out += wi * t
        else:
            out += wi * (-np.expm1(-xi * t)) / xi
    return out


def kernel_ik2(k: KernelSpec, t: np.ndarray) -> np.ndarray:
    """Second antiderivative int_0^t int_0^s K(r) dr ds."""
    t = np.asarray(t, dtype=float)
    if isinstance(k, PowerLawKernel):
        return k.scale * t ** (k.alpha + 1.0) / math.gamma(k.alpha + 2.0)
    if isinstance(k, ConstantKernel):
        return 0.5 * k.scale * t * t
    w, x = k.weights, k.rates
    out = np.zeros_like(t)
    for wi, xi in zip(w, x):
        if xi == 0.0:
            out += 0.5 * wi * t * t
        else:
            out += wi * (t + np.expm1(-xi * t) / xi) / xi
    return out


def kernel_sq_integral(k: KernelSpec, t: np.ndarray) -> np.ndarray:
    """int_0^t K(s)^2 ds, closed form per variant."""
    t = np.asarray(t, dtype=float)
    if isinstance(k, PowerLawKernel):
        g = 2.0 * k.alpha - 1.0
        return k.scale ** 2 * t ** g / (g * math.gamma(k.alpha) ** 2)
    if isinstance(k, ConstantKernel):
        return k.scale ** 2 * t
    w, x = k.weights, k.rates
    out = np.zeros_like(t)
    for wi, xi in zip(w, x):
        for wj, xj in zip(w, x):
            s = xi + xj
            if s == 0.0:
                out += wi * wj * t
            else:
                out += wi * wj * (-np.expm1(-s * t)) / s
    return out


def kernel_sq_integral2(k: KernelSpec, t: np.ndarray) -> np.ndarray:
    """Second antiderivative int_0^t int_0^s K(r)^2 dr ds."""
    t = np.asarray(t, dtype=float)
    if isinstance(k, PowerLawKernel):
        g = 2.0 * k.alpha - 1.0
        return k.scale ** 2 * t ** (g + 1.0) / (g * (g + 1.0) * math.gamma(k.alpha) ** 2)
    if isinstance(k, ConstantKernel):
        return 0.5 * k.scale ** 2 * t * t
    w, x = k.weights, k.rates
    out = np.zeros_like(t)
    for wi, xi in zip(w, x):
        for wj, xj in zip(w, x):
            s = xi + xj
            if s == 0.0:
                out += 0.5 * wi * wj * t * t
            else:
                out += wi * wj * (t + np.expm1(-s * t) / s) / s
    return out


def cell_integrals(k: KernelSpec, dt: float, n: int) -> np.ndarray:
    """A[m-1] = int over the m-th lag cell ((m-1)dt, m dt] of K, m = 1..n."""
    if n < 1 or dt <= 0.0:
        raise ArgumentError("cell_integrals needs n >= 1 and dt > 0")
    edges = kernel_ik1(k, dt * np.arange(n + 1))
    return np.diff(edges)


def _linear_weights(ik1: np.ndarray, ik2: np.ndarray, dt: float
                    ) -> tuple[np.ndarray, np.ndarray]:
    d_ik2 = np.diff(ik2) / dt
    n = len(ik1) - 1
    p = np.empty(n + 1)
    q = np.empty(n + 1)
    p[0] = q[0] = np.nan
    p[1:] = ik1[1:] - d_ik2
    q[1:] = d_ik2 - ik1[:-1]
    return p, q


def linear_pi_weights(k: KernelSpec, dt: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Product-integration weights for piecewise-linear interpolants.

    conv(t_j) = sum_{m=1..j} p[m] F_{j-m} + q[m] F_{j-m+1} integrates
    K(t_j - s) exactly against the linear interpolant of F. Index 0 of the
    returned arrays is unused. On the power-law kernel these weights are
    exactly the fractional Adams corrector family.
    """
    t = dt * np.arange(n + 1)
    return _linear_weights(kernel_ik1(k, t), kernel_ik2(k, t), dt)


def sq_linear_pi_weights(k: KernelSpec, dt: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Same weight family against the squared kernel K(t)^2."""
    t = dt * np.arange(n + 1)
    return _linear_weights(kernel_sq_integral(k, t), kernel_sq_integral2(k, t), dt)


def node_zero_value(k: KernelSpec, dt: float) -> float:
    """K at the grid origin: the first-cell average for singular kernels."""
    if isinstance(k, PowerLawKernel) and k.singular:
        return float(kernel_ik1(k, np.asarray([dt]))[0] / dt)
    return float(kernel_eval_array(k, np.asarray([0.0]))[0])


# ------------------------------------------------------ Laplace measures

@dataclass(frozen=True)
class DiracAtZero:
    mass: float


@dataclass(frozen=True)
class RoughDensity:
    """Density scale * x^(-alpha) / (Gamma(alpha) Gamma(1-alpha)) on (0, inf)."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not (0.5 < self.alpha < 1.0):
            raise ArgumentError(f"rough density needs alpha in (1/2, 1), got {self.alpha}")


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many atoms (w_i, x_i); weights may be signed."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(w), float(x)) for w, x in self.atoms)
        if any(x < 0.0 for _, x in atoms):
            raise ArgumentError("atom locations must be nonnegative")
        object.__setattr__(self, "atoms", atoms)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.atoms])

    @property
    def rates(self) -> np.ndarray:
        return np.array([x for _, x in self.atoms])


LaplaceMeasure = DiracAtZero | RoughDensity | AtomicMeasure


def measure_of(k: KernelSpec) -> LaplaceMeasure:
    """The measure whose Laplace transform is K."""
    if isinstance(k, ConstantKernel):
        return DiracAtZero(k.scale)
    if isinstance(k, PowerLawKernel):
        if k.alpha == 1.0:
            return DiracAtZero(k.scale)
        return RoughDensity(alpha=k.alpha, scale=k.scale)
    if isinstance(k, ExpSumKernel):
        return AtomicMeasure(k.atoms)
    raise ArgumentError(f"unsupported kernel variant {type(k).__name__}")


def kernel_from_measure(m: LaplaceMeasure):
    """Evaluator of int exp(-x t) m(dx); array-capable in t."""
    if isinstance(m, DiracAtZero):
        return lambda t: np.full_like(np.asarray(t, dtype=float), m.mass)
    if isinstance(m, RoughDensity):
        a, s = m.alpha, m.scale
        # int_0^inf e^(-xt) x^(-a) dx = Gamma(1-a) t^(a-1)
        return lambda t: s * np.asarray(t, dtype=float) ** (a - 1.0) / math.gamma(a)
    if isinstance(m, AtomicMeasure):
        w, x = m.weights, m.rates
        return lambda t: np.exp(-np.multiply.outer(np.asarray(t, dtype=float), x)) @ w
    raise ArgumentError(f"unsupported measure variant {type(m).__name__}")


def discretize_measure(m: LaplaceMeasure, n: int, x_max: float,
                       span_ratio: float = 1e-6) -> AtomicMeasure:
    """Approximate m by n atoms on a geometric partition of (0, x_max].

    Each cell contributes its exact mass at its mass centroid, so the first
    moment is matched cell by cell. The partition spans [span_ratio*x_max,
    x_max] geometrically with one extra cell collecting (0, span_ratio*x_max];
    refining n shrinks every cell ratio.
    """
    if n < 1:
        raise ArgumentError("discretize_measure needs n >= 1")
    if isinstance(m, DiracAtZero):
        return AtomicMeasure(((m.mass, 0.0),))
    if isinstance(m, AtomicMeasure):
        return m
    if not isinstance(m, RoughDensity):
        raise ArgumentError(f"unsupported measure variant {type(m).__name__}")
    if x_max <= 0.0:
        raise ArgumentError("x_max must be positive for a rough density")
    if not (0.0 < span_ratio < 1.0):
        raise ArgumentError("span_ratio must lie in (0, 1)")

    a, s = m.alpha, m.scale
    norm = s / (math.gamma(a) * math.gamma(1.0 - a))
    if n == 1:
        edges = np.array([0.0, x_max])
    else:
        x_min = span_ratio * x_max
        geo = x_min * (x_max / x_min) ** (np.arange(n) / (n - 1.0))
        edges = np.concatenate(([0.0], geo))
    lo, hi = edges[:-1], edges[1:]
    mass = norm * (hi ** (1.0 - a) - lo ** (1.0 - a)) / (1.0 - a)
    mom1 = norm * (hi ** (2.0 - a) - lo ** (2.0 - a)) / (2.0 - a)
    nodes = mom1 / mass
    return AtomicMeasure(tuple(zip(mass.tolist(), nodes.tolist())))


# --------------------------------------------- Riemann-Liouville operators

def fractional_integral(alpha_k: float, f: np.ndarray, dt: float) -> np.ndarray:
    """I^alpha f on the uniform grid carrying f, f[0] at t = 0.

    Product integration, exact on piecewise-linear f against the singular
    power-law weight.
    """
    if not (0.0 < alpha_k <= 1.0):
        raise ArgumentError(f"fractional order must lie in (0, 1], got {alpha_k}")
    f = np.asarray(f)
    if f.ndim != 1 or f.size < 2:
        raise ArgumentError("f must be a 1-d grid sample with at least two points")
    if not np.all(np.isfinite(f)):
        raise ArgumentError("f must be finite")
    n = f.size - 1
    if alpha_k > 0.5:
        kern = PowerLawKernel(alpha=alpha_k)
        p, q = linear_pi_weights(kern, dt, n)
    else:
        # the kernel classes restrict alpha to (1/2, 1]; build weights directly
        t = dt * np.arange(n + 1)
        ik1 = t ** alpha_k / math.gamma(alpha_k + 1.0)
        ik2 = t ** (alpha_k + 1.0) / math.gamma(alpha_k + 2.0)
        d_ik2 = np.diff(ik2) / dt
        p = np.concatenate(([np.nan], ik1[1:] - d_ik2))
        q = np.concatenate(([np.nan], d_ik2 - ik1[:-1]))
    out = np.zeros(n + 1, dtype=f.dtype if np.iscomplexobj(f) else float)
    for j in range(1, n + 1):
        out[j] = np.dot(p[1:j + 1], f[j - 1::-1]) + np.dot(q[1:j + 1], f[j:0:-1])
    return out


def fractional_derivative(alpha_k: float, f: np.ndarray, dt: float) -> np.ndarray:
    """D^alpha f = d/dt I^(1-alpha) f, by one-sided finite differences."""
    if not (0.0 < alpha_k <= 1.0):
        raise ArgumentError(f"fractional order must lie in (0, 1], got {alpha_k}")
    f = np.asarray(f)
    if alpha_k == 1.0:
        g = np.asarray(f)
    else:
        g = fractional_integral(1.0 - alpha_k, f, dt)
    out = np.empty(g.shape, dtype=complex if np.iscomplexobj(g) else float)
    out[1:] = np.diff(g) / dt
    out[0] = (g[1] - g[0]) / dt
    return out
