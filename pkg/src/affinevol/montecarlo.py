"""Monte Carlo simulation of the stochastic convolution equation, the
Volterra OU special case, and the finite-atom lift SDE.

Paths use full-truncation Euler with product-integration kernel weights:

    V_{t_j} = V0 + sum_{i<j} w_{j-i} [b(V_i) dt + sigma(V_i) dW_i]

with the recursion consuming the stored (floored) state for the square-root
class. Randomness comes from counter-based Philox substreams keyed by
(seed, path index), so results are bit-identical for any path batching or
thread count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, NumericalError
from .kernels import (
    AtomicMeasure, KernelSpec, cell_integrals, kernel_ik1, kernel_sq_integral,
    linear_pi_weights,
)

__all__ = [
    "PathSet", "simulate_volterra", "simulate_volterra_ou", "simulate_lift",
    "holder_estimate", "mc_transform",
]

_BATCH = 20_000


@dataclass(frozen=True)
class PathSet:
    """Seeded Monte Carlo trajectories with per-path summary columns."""

    grid: np.ndarray
    n_paths: int
    seed: int
    scheme: str
    l0: float
    v_terminal: np.ndarray
    int_v: np.ndarray
    l_terminal: np.ndarray | None = None
    v_paths: np.ndarray | None = None
    truncation_fraction: float = 0.0

    @property
    def dt(self) -> float:
        return float(self.grid[1] - self.grid[0])


def _path_rng(seed: int, path_index: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, path_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw_block(seed: int, start: int, count: int, rows: int, n: int) -> np.ndarray:
    """Normals of shape (count, rows, n), one substream per path."""
    out = np.empty((count, rows, n))
    for i in range(count):
        out[i] = _path_rng(seed, start + i).standard_normal((rows, n))
    return out


def simulate_volterra(k: KernelSpec, m, T: float, n_steps: int, n_paths: int,
                      seed: int, with_price: bool = False,
                      store_paths: bool = False) -> PathSet:
    """Full-truncation Euler for the stochastic convolution equation."""
    if n_steps < 1 or n_paths < 1:
        raise ArgumentError("need n_steps >= 1 and n_paths >= 1")
    if T <= 0.0:
        raise ArgumentError("need T > 0")
    if with_price and m.a == 0.0 and m.alpha0 > 0.0:
        raise ArgumentError("the price leg requires the square-root class (a > 0)")
    dt = T / n_steps
    grid = dt * np.arange(n_steps + 1)
    w = cell_integrals(k, dt, n_steps) / dt  # mean-value kernel weights, lag 1..n
    sqrt_dt = math.sqrt(dt)
    rho_perp = math.sqrt(max(0.0, 1.0 - m.rho * m.rho))
    truncate = m.a > 0.0

    n = n_steps
    v_term = np.empty(n_paths)
    int_v = np.empty(n_paths)
    l_term = np.empty(n_paths) if with_price else None
    v_paths = np.empty((n_paths, n + 1)) if store_paths else None
    truncated = 0

    for start in range(0, n_paths, _BATCH):
        count = min(_BATCH, n_paths - start)
        zz = _draw_block(seed, start, count, 2 if with_price else 1, n)
        dw = zz[:, 0, :]
        db = m.rho * dw + rho_perp * zz[:, 1, :] if with_price else None

        vcur = np.full(count, m.v0)
        lcur = np.full(count, m.l0) if with_price else None
        acc = 0.5 * dt * vcur.copy()  # trapezoid accumulator for int V
        frev = np.empty((n, count))   # frev[n-1-i] = increments at step i
        if store_paths:
            v_paths[start:start + count, 0] = vcur
        for j in range(n):
            sig = np.sqrt(m.alpha0 + m.a * vcur) if truncate else \
                np.full(count, math.sqrt(m.alpha0))
            if with_price:
                lcur = lcur - 0.5 * vcur * dt + np.sqrt(vcur) * sqrt_dt * db[:, j]
            frev[n - 1 - j] = (m.beta - m.lam * vcur) * dt + sig * sqrt_dt * dw[:, j]
            # einsum keeps a fixed sequential reduction order, so paths are
            # bit-identical for any batch split or BLAS thread count
            raw = m.v0 + np.einsum("i,ij->j", w[:j + 1], frev[n - 1 - j:])
            if truncate:
                neg = raw < 0.0
                truncated += int(np.count_nonzero(neg))
                vcur = np.where(neg, 0.0, raw)
            else:
                vcur = raw
            acc += dt * vcur if j < n - 1 else 0.5 * dt * vcur
            if store_paths:
                v_paths[start:start + count, j + 1] = vcur
        if not np.all(np.isfinite(vcur)):
            raise NumericalError("Volterra Euler produced non-finite paths")
        v_term[start:start + count] = vcur
        int_v[start:start + count] = acc
        if with_price:
            l_term[start:start + count] = lcur

    return PathSet(grid=grid, n_paths=n_paths, seed=seed, scheme="volterra-euler",
                   l0=m.l0, v_terminal=v_term, int_v=int_v, l_terminal=l_term,
                   v_paths=v_paths,
                   truncation_fraction=truncated / (n_paths * n_steps))


def _ou_covariance(k: KernelSpec, alpha0: float, grid: np.ndarray) -> np.ndarray:
    """Cov(V_s, V_t) = alpha0 int_0^(s^t) K(s-r)K(t-r) dr by product integration."""
    n = len(grid) - 1
    dt = float(grid[1] - grid[0])
    a_cells = cell_integrals(k, dt, n)
    p, _ = linear_pi_weights(k, dt, n)
    # kernel mass centroid of lag cell m is t_{m-1} + dt * p_m / A_m
    centroid = grid[:-1] + dt * p[1:] / np.maximum(a_cells, 1e-300)
    cov = np.empty((n, n))
    from .kernels import kernel_eval_array
    for i in range(1, n + 1):
        gaps = grid[i:] - grid[i]
        vals = kernel_eval_array(k, centroid[:i, None] + gaps[None, :])
        row = a_cells[:i] @ vals
        cov[i - 1, i - 1:] = row
        cov[i - 1:, i - 1] = row
    diag = kernel_sq_integral(k, grid[1:])
    np.fill_diagonal(cov, diag)
    return alpha0 * cov


def simulate_volterra_ou(k: KernelSpec, m, T: float, n_steps: int, n_paths: int,
                         seed: int, store_paths: bool = False) -> PathSet:
    """Volterra OU paths; exact joint Gaussian sampling when lam = 0."""
    if m.a != 0.0:
        raise ArgumentError("OU simulation requires a = 0")
    if m.lam > 0.0:
        return simulate_volterra(k, m, T, n_steps, n_paths, seed,
                                 with_price=False, store_paths=store_paths)
    if n_steps < 1 or n_paths < 1:
        raise ArgumentError("need n_steps >= 1 and n_paths >= 1")
    dt = T / n_steps
    grid = dt * np.arange(n_steps + 1)
    mean = m.v0 + m.beta * kernel_ik1(k, grid)
    if m.alpha0 == 0.0:
        chol = None
    else:
        cov = _ou_covariance(k, m.alpha0, grid)
        # tiny jitter guards Cholesky against the near-singular fine-grid limit
        jitter = 1e-12 * float(np.max(np.diag(cov)))
        chol = np.linalg.cholesky(cov + jitter * np.eye(n_steps))
    v_term = np.empty(n_paths)
    int_v = np.empty(n_paths)
    v_paths = np.empty((n_paths, n_steps + 1)) if store_paths else None
    for i in range(n_paths):
        z = _path_rng(seed, i).standard_normal(n_steps)
        path = mean.copy()
        if chol is not None:
            path[1:] += chol @ z
        v_term[i] = path[-1]
        int_v[i] = float(np.trapezoid(path, dx=dt))
        if store_paths:
            v_paths[i] = path
    return PathSet(grid=grid, n_paths=n_paths, seed=seed, scheme="ou-exact",
                   l0=m.l0, v_terminal=v_term, int_v=int_v, v_paths=v_paths)


def simulate_lift(atoms: AtomicMeasure, m, T: float, n_steps: int, n_paths: int,
                  seed: int, store_paths: bool = False) -> PathSet:
    """Euler for the finite-atom lift SDE with exact per-atom decay factors.

    Factors start at zero under the V0 shift (beta~ = beta - lam V0,
    alpha0~ = alpha0 + a V0); V = V0 + sum_j u_j w_j is reconstructed and
    stored with the square-root floor.
    """
    if not isinstance(atoms, AtomicMeasure):
        atoms = AtomicMeasure(tuple(atoms))
    if n_steps < 1 or n_paths < 1:
        raise ArgumentError("need n_steps >= 1 and n_paths >= 1")
    dt = T / n_steps
    grid = dt * np.arange(n_steps + 1)
    wts = atoms.weights
    rates = atoms.rates
    beta_sh = m.beta - m.lam * m.v0
    alpha0_sh = m.alpha0 + m.a * m.v0
    decay = np.exp(-rates * dt)
    with np.errstate(invalid="ignore"):
        mean_factor = np.where(rates > 0.0, -np.expm1(-rates * dt) / (rates * dt), 1.0)
    sqrt_dt = math.sqrt(dt)
    truncate = m.a > 0.0

    n = n_steps
    v_term = np.empty(n_paths)
    int_v = np.empty(n_paths)
    v_paths = np.empty((n_paths, n + 1)) if store_paths else None
    truncated = 0
    for start in range(0, n_paths, _BATCH):
        count = min(_BATCH, n_paths - start)
        dw = _draw_block(seed, start, count, 1, n)[:, 0, :]
        u = np.zeros((count, len(wts)))
        s_mix = np.zeros(count)
        vstored = np.maximum(m.v0 + s_mix, 0.0) if truncate else m.v0 + s_mix
        acc = 0.5 * dt * vstored
        if store_paths:
            v_paths[start:start + count, 0] = vstored
        for j in range(n):
            # the recursion consumes the truncated mixture (s.t. V-hat >= 0),
            # mirroring the full-truncation convolution scheme
            s_used = np.maximum(s_mix, -m.v0) if truncate else s_mix
            sig = np.sqrt(np.maximum(alpha0_sh + m.a * s_used, 0.0))
            drift = (beta_sh - m.lam * s_used) * dt
            u = decay[None, :] * u + mean_factor[None, :] * (
                drift + sig * sqrt_dt * dw[:, j])[:, None]
            s_mix = u @ wts
            raw = m.v0 + s_mix
            if truncate:
                neg = raw < 0.0
                truncated += int(np.count_nonzero(neg))
                vstored = np.where(neg, 0.0, raw)
            else:
                vstored = raw
            acc += dt * vstored if j < n - 1 else 0.5 * dt * vstored
            if store_paths:
                v_paths[start:start + count, j + 1] = vstored
        if not np.all(np.isfinite(vstored)):
            raise NumericalError("lift Euler produced non-finite paths")
        v_term[start:start + count] = vstored
        int_v[start:start + count] = acc
    return PathSet(grid=grid, n_paths=n_paths, seed=seed, scheme="lift-euler",
                   l0=m.l0, v_terminal=v_term, int_v=int_v, v_paths=v_paths,
                   truncation_fraction=truncated / (n_paths * n_steps))


def holder_estimate(p: PathSet, lags) -> float:
    """Regression slope of log E|V_{t+h} - V_t|^2 on log h.

    For the rough kernel the slope approaches gamma = 2*alpha - 1; for the
    constant kernel it approaches 1 (diffusive scaling).
    """
    if p.v_paths is None:
        raise ArgumentError("holder_estimate needs a PathSet with stored paths")
    if p.n_paths < 1000:
        raise ArgumentError("holder_estimate needs at least 1000 paths")
    lags = sorted(set(float(h) for h in lags))
    if len(lags) < 3:
        raise ArgumentError("holder_estimate needs at least 3 distinct lags")
    dt = p.dt
    moments = []
    hs = []
    for h in lags:
        kk = int(round(h / dt))
        if kk < 1 or kk >= p.v_paths.shape[1]:
            raise ArgumentError(f"lag {h} is not resolvable on the grid")
        inc = p.v_paths[:, kk:] - p.v_paths[:, :-kk]
        m2 = float(np.mean(inc * inc))
        if m2 <= 0.0:
            raise NumericalError("degenerate increments: paths carry no noise",
                                 diagnostic="holder regression rejected")
        moments.append(m2)
        hs.append(kk * dt)
    slope = float(np.polyfit(np.log(hs), np.log(moments), 1)[0])
    return slope


def mc_transform(p: PathSet, e) -> tuple[complex, float]:
    """Sample mean of exp(u L_T + v V_T + w int V) with jackknife stderr."""
    u, v, w = complex(e.u), complex(e.v), complex(e.w)
    if u != 0 and p.l_terminal is None:
        raise ArgumentError("exponent touches L but the paths carry no price leg")
    z = np.zeros(p.n_paths, dtype=complex)
    if u != 0:
        z = z + u * p.l_terminal
    if v != 0:
        z = z + v * p.v_terminal
    if w != 0:
        z = z + w * p.int_v
    samples = np.exp(z)
    est = complex(np.mean(samples))
    if p.n_paths < 2:
        return est, 0.0
    # delete-one jackknife; for the mean this equals the classical stderr
    dev = samples - est
    se = math.sqrt(float(np.sum(np.abs(dev) ** 2)) / (p.n_paths * (p.n_paths - 1)))
    return est, se
