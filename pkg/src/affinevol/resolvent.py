"""Resolvents of the second kind of lambda*K.

R_lam solves lam*K - R = R * (lam*K) (star = convolution). Closed forms:
constant kernel c gives lam*c*exp(-lam*c*t); the power-law kernel gives
lam*c*t^(a-1) E_{a,a}(-lam*c*t^a). The numeric solver removes the kernel
singularity by substituting r = lam*k - rho, where rho = r*(lam*k) is
continuous, and solves the resulting Volterra equation
rho = lam^2 (k*k) - lam (k*rho) with piecewise-linear product integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, NumericalError
from .kernels import (
    ConstantKernel, KernelSpec, PowerLawKernel, kernel_eval_array, kernel_ik1,
    linear_pi_weights, node_zero_value,
)
from .specfun import ml_real_array

__all__ = [
    "ResolventTable", "ScaledResolvent", "resolvent_analytic",
    "resolvent_table_analytic", "resolvent_numeric", "resolvent_residual",
    "scaled_resolvent",
]


@dataclass(frozen=True)
class ResolventTable:
    """Grid samples of R_lam and its running integral."""

    kernel: KernelSpec
    lam: float
    grid: np.ndarray
    samples: np.ndarray
    cumulative: np.ndarray
    method: str
    tol: float = field(default=1e-10)

    @property
    def dt(self) -> float:
        return float(self.grid[1] - self.grid[0])


@dataclass(frozen=True)
class ScaledResolvent:
    """Samples of lam^{-1} R_lam, which is K itself when lam = 0."""

    kernel: KernelSpec
    lam: float
    grid: np.ndarray
    samples: np.ndarray
    cumulative: np.ndarray

    def cell_masses(self) -> np.ndarray:
        """Exact integrals of lam^{-1}R_lam over lag cells, from cumulative."""
        return np.diff(self.cumulative)


def _kernel_conv_self(k: KernelSpec, t: np.ndarray) -> np.ndarray:
    """(k*k)(t) in closed form."""
    t = np.asarray(t, dtype=float)
    if isinstance(k, PowerLawKernel):
        a = k.alpha
        return k.scale ** 2 * t ** (2.0 * a - 1.0) / math.gamma(2.0 * a)
    if isinstance(k, ConstantKernel):
        return k.scale ** 2 * t
    out = np.zeros_like(t)
    for wi, xi in zip(k.weights, k.rates):
        for wj, xj in zip(k.weights, k.rates):
            if xi == xj:
                out += wi * wj * t * np.exp(-xi * t)
            else:
                out += wi * wj * (np.exp(-xj * t) - np.exp(-xi * t)) / (xi - xj)
    return out


def resolvent_analytic(k: KernelSpec, lam: float):
    """Closed-form evaluator of R_lam, or None when unavailable."""
    if lam < 0.0:
        raise ArgumentError("lambda must be nonnegative")
    if lam == 0.0:
        return lambda t: np.zeros_like(np.asarray(t, dtype=float))
    if isinstance(k, ConstantKernel):
        c = lam * k.scale
        return lambda t: c * np.exp(-c * np.asarray(t, dtype=float))
    if isinstance(k, PowerLawKernel) and k.alpha < 1.0:
        a, c = k.alpha, lam * k.scale
        return lambda t: c * np.asarray(t, dtype=float) ** (a - 1.0) * ml_real_array(
            a, a, -c * np.asarray(t, dtype=float) ** a)
    if isinstance(k, PowerLawKernel):  # alpha == 1: constant kernel in disguise
        c = lam * k.scale
        return lambda t: c * np.exp(-c * np.asarray(t, dtype=float))
    return None


def _cumulative_analytic(k: KernelSpec, lam: float, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if lam == 0.0:
        return np.zeros_like(t)
    if isinstance(k, ConstantKernel) or (isinstance(k, PowerLawKernel) and k.alpha == 1.0):
        c = lam * k.scale
        return -np.expm1(-c * t)
    if isinstance(k, PowerLawKernel):
        a, c = k.alpha, lam * k.scale
        return 1.0 - ml_real_array(a, 1.0, -c * t ** a)
    raise ArgumentError("no closed-form cumulative for this kernel")


def resolvent_table_analytic(k: KernelSpec, lam: float, T: float, n: int) -> ResolventTable:
    """Table built from the closed forms (constant and power-law kernels)."""
    ev = resolvent_analytic(k, lam)
    if ev is None:
        raise ArgumentError(f"no closed-form resolvent for {type(k).__name__}")
    if n < 2 or T <= 0.0:
        raise ArgumentError("need n >= 2 and T > 0")
    grid = np.linspace(0.0, T, n + 1)
    cumulative = _cumulative_analytic(k, lam, grid)
    samples = np.empty(n + 1)
    samples[1:] = ev(grid[1:])
    singular = isinstance(k, PowerLawKernel) and k.singular and lam > 0.0
    samples[0] = cumulative[1] / grid[1] if singular else (
        float(ev(np.asarray([0.0]))[0]) if lam > 0.0 else 0.0)
    return ResolventTable(kernel=k, lam=lam, grid=grid, samples=samples,
                          cumulative=cumulative, method="analytic", tol=1e-10)


def resolvent_numeric(k: KernelSpec, lam: float, T: float, n: int) -> ResolventTable:
    """Solve r = lam*k - r*(lam*k) by forward product-integration substitution."""
    if n < 2 or T <= 0.0:
        raise ArgumentError("need n >= 2 and T > 0")
    if lam < 0.0:
        raise ArgumentError("lambda must be nonnegative")
    dt = T / n
    grid = dt * np.arange(n + 1)
    if lam == 0.0:
        z = np.zeros(n + 1)
        return ResolventTable(kernel=k, lam=lam, grid=grid, samples=z,
                              cumulative=z.copy(), method="numeric", tol=1e-10)
    rho = _solve_conv_correction(k, lam, lam * lam, dt, n)
    khat = np.empty(n + 1)
    khat[0] = node_zero_value(k, dt)
    khat[1:] = kernel_eval_array(k, grid[1:])
    samples = lam * khat - rho
    # rho is continuous with rho(0) = 0: trapezoid cumulative is consistent
    cum_rho = np.concatenate(([0.0], np.cumsum(0.5 * dt * (rho[:-1] + rho[1:]))))
    cumulative = lam * kernel_ik1(k, grid) - cum_rho
    return ResolventTable(kernel=k, lam=lam, grid=grid, samples=samples,
                          cumulative=cumulative, method="numeric", tol=1e-10)


def _solve_conv_correction(k: KernelSpec, lam: float, amp: float, dt: float, n: int) -> np.ndarray:
    """Forward solve of rho = amp*(k*k) - lam*(k*rho), piecewise-linear PI."""
    p, q = linear_pi_weights(k, dt, n)
    kk = _kernel_conv_self(k, dt * np.arange(n + 1))
    rho = np.zeros(n + 1)
    diag = 1.0 + lam * q[1]
    for j in range(1, n + 1):
        acc = np.dot(p[1:j + 1], rho[j - 1::-1])
        if j >= 2:
            acc += np.dot(q[2:j + 1], rho[j - 1:0:-1])
        rho[j] = (amp * kk[j] - lam * acc) / diag
        if not np.isfinite(rho[j]):
            raise NumericalError("resolvent recursion diverged", step=j)
    return rho


def resolvent_residual(tbl: ResolventTable) -> float:
    """Max-norm defect of lam*k - r = r*(lam*k) on the grid.

    Analytic tables are checked against the closed-form convolution
    (constant kernel: lam*c*int r; power-law: the identity
    k * [s^(a-1)E_{a,a}(-x s^a)] = t^(2a-1) E_{a,2a}(-x t^a)), so their
    residual is a pure identity check. Numeric tables are checked with the
    solver's own quadrature, so the residual measures equation error rather
    than quadrature mismatch.
    """
    n = len(tbl.grid) - 1
    dt = tbl.dt
    if tbl.lam == 0.0:
        return float(np.max(np.abs(tbl.samples)))
    kvals = kernel_eval_array(tbl.kernel, tbl.grid[1:])
    if tbl.method == "analytic":
        conv = _conv_closed_form(tbl.kernel, tbl.lam, tbl)
        return float(np.max(np.abs(tbl.lam * kvals - tbl.samples[1:] - conv)))
    # numeric: rho := lam*k - r satisfies rho = lam^2 (k*k) - lam*(k*rho)
    khat = np.empty(n + 1)
    khat[0] = node_zero_value(tbl.kernel, dt)
    khat[1:] = kvals
    rho = tbl.lam * khat - tbl.samples
    p, q = linear_pi_weights(tbl.kernel, dt, n)
    kk = _kernel_conv_self(tbl.kernel, tbl.grid)
    worst = 0.0
    for j in range(1, n + 1):
        acc = np.dot(p[1:j + 1], rho[j - 1::-1]) + np.dot(q[1:j + 1], rho[j:0:-1])
        worst = max(worst, abs(rho[j] - tbl.lam ** 2 * kk[j] + tbl.lam * acc))
    return float(worst)


def _conv_closed_form(k: KernelSpec, lam: float, tbl: ResolventTable) -> np.ndarray:
    """(r * lam*k)(t) in closed form on the grid interior, for analytic tables."""
    t = tbl.grid[1:]
    if isinstance(k, ConstantKernel) or (isinstance(k, PowerLawKernel) and k.alpha == 1.0):
        return lam * k.scale * tbl.cumulative[1:]
    if isinstance(k, PowerLawKernel):
        a, c = k.alpha, k.scale
        return lam ** 2 * c * c * t ** (2.0 * a - 1.0) * ml_real_array(
            a, 2.0 * a, -lam * c * t ** a)
    raise ArgumentError("closed-form convolution only for constant/power-law kernels")


def scaled_resolvent(k: KernelSpec, lam: float, T: float, n: int) -> ScaledResolvent:
    """lam^{-1} R_lam on the grid, exactly K when lam = 0 (never a division)."""
    if n < 2 or T <= 0.0:
        raise ArgumentError("need n >= 2 and T > 0")
    if lam < 0.0:
        raise ArgumentError("lambda must be nonnegative")
    dt = T / n
    grid = dt * np.arange(n + 1)
    if lam == 0.0:
        samples = np.empty(n + 1)
        samples[0] = node_zero_value(k, dt)
        samples[1:] = kernel_eval_array(k, grid[1:])
        return ScaledResolvent(kernel=k, lam=lam, grid=grid, samples=samples,
                               cumulative=kernel_ik1(k, grid))
    if isinstance(k, ConstantKernel) or isinstance(k, PowerLawKernel):
        tbl = resolvent_table_analytic(k, lam, T, n)
        # closed forms carry the lam prefactor linearly: strip it algebraically
        return ScaledResolvent(kernel=k, lam=lam, grid=grid,
                               samples=tbl.samples / lam,
                               cumulative=tbl.cumulative / lam)
    sigma = _solve_conv_correction(k, lam, lam, dt, n)
    khat = np.empty(n + 1)
    khat[0] = node_zero_value(k, dt)
    khat[1:] = kernel_eval_array(k, grid[1:])
    samples = khat - sigma
    cum_sigma = np.concatenate(([0.0], np.cumsum(0.5 * dt * (sigma[:-1] + sigma[1:]))))
    return ScaledResolvent(kernel=k, lam=lam, grid=grid, samples=samples,
                           cumulative=kernel_ik1(k, grid) - cum_sigma)
