"""Riccati-Volterra equation and its dual formulations.

The transform exponent psi solves psi = v K + K * (Q(u,psi) - lam*psi + w).
Four solvers produce it:

* kernel form: predictor-corrector time stepping with piecewise-linear
  product-integration convolution weights (any kernel, any exponent),
* fractional Adams: D^a psi = Q(u,psi) - lam*psi for the power-law kernel,
* convolution form: fixed-point iteration on g = Q(u, lam^{-1}R_lam * g),
* Markovian lift: the coupled atom ODE system integrated by ETDRK4 with
  exact treatment of the stiff linear decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, NumericalError, ValidationError
from .kernels import (
    AtomicMeasure, KernelSpec, PowerLawKernel, kernel_eval_array,
    linear_pi_weights, node_zero_value,
)
from .resolvent import ScaledResolvent, scaled_resolvent

__all__ = [
    "ModelParams", "ExponentTriple", "RiccatiSolution", "ConvRiccatiSolution",
    "LiftRiccatiSolution", "SpdeReconstruction", "Q", "R_phi", "R_Psi",
    "solve_riccati_volterra", "solve_riccati_volterra_batch",
    "solve_fractional_riccati", "solve_convolution_riccati",
    "solve_lift_riccati", "reconstruct_spde_psi", "riccati_residual",
]

BLOWUP_GUARD = 1e8
CORRECTOR_TOL = 1e-12
CORRECTOR_MAX_ITER = 50


@dataclass(frozen=True)
class ModelParams:
    """Affine coefficients b(x) = beta - lam*x, sigma(x)^2 = alpha0 + a*x,
    plus the price-leg parameters (sigma, rho, V0, L0 = log S0)."""

    beta: float = 0.0
    lam: float = 0.0
    alpha0: float = 0.0
    a: float | None = None
    sigma: float | None = None
    rho: float = 0.0
    v0: float = 0.0
    l0: float = 0.0

    def __post_init__(self):
        a, sigma = self.a, self.sigma
        if a is None and sigma is None:
            a, sigma = 0.0, 0.0
        elif a is None:
            a = sigma * sigma
        elif sigma is None:
            if a < 0.0:
                raise ValidationError(f"proportional diffusion a must be >= 0, got {a}")
            sigma = math.sqrt(a)
        elif abs(sigma * sigma - a) > 1e-12 * max(1.0, abs(a)):
            raise ValidationError(f"inconsistent sigma={sigma} and a={a}: need a = sigma^2")
        object.__setattr__(self, "a", float(a))
        object.__setattr__(self, "sigma", float(sigma))
        problems = []
        if self.beta < 0.0:
            problems.append(f"beta must be >= 0, got {self.beta}")
        if self.lam < 0.0:
            problems.append(f"lambda must be >= 0, got {self.lam}")
        if self.alpha0 < 0.0:
            problems.append(f"alpha0 must be >= 0, got {self.alpha0}")
        if self.a < 0.0:
            problems.append(f"a must be >= 0, got {self.a}")
        if self.alpha0 > 0.0 and self.a > 0.0:
            problems.append("exactly one of alpha0 = 0 (square-root) or a = 0 (OU) must hold")
        if not (-1.0 <= self.rho <= 1.0):
            problems.append(f"rho must lie in [-1, 1], got {self.rho}")
        if self.v0 < 0.0:
            problems.append(f"V0 must be >= 0, got {self.v0}")
        if problems:
            raise ValidationError("; ".join(problems))

    @property
    def theta(self) -> float:
        """Mean-reversion level beta/lam; only defined for lam > 0."""
        if self.lam <= 0.0:
            raise ArgumentError("theta = beta/lambda requires lambda > 0")
        return self.beta / self.lam

    @classmethod
    def volterra_heston(cls, lam: float, theta: float, sigma: float, rho: float,
                        v0: float, s0: float = 1.0) -> "ModelParams":
        """Square-root class in (lam, theta) drift form."""
        return cls(beta=lam * theta, lam=lam, alpha0=0.0, sigma=sigma,
                   rho=rho, v0=v0, l0=math.log(s0))


@dataclass(frozen=True)
class ExponentTriple:
    """Transform exponent (u, v, w) of E[exp(u L_T + v V_T + w int V)]."""

    u: complex = 0.0
    v: complex = 0.0
    w: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u", complex(self.u))
        object.__setattr__(self, "v", complex(self.v))
        object.__setattr__(self, "w", complex(self.w))

    def domain_warnings(self) -> tuple[str, ...]:
        """Flags for exponents outside the guaranteed well-posedness region."""
        out = []
        if not (0.0 <= self.u.real <= 1.0):
            out.append(f"Re u = {self.u.real} outside [0, 1]")
        if self.v.real > 0.0:
            out.append(f"Re v = {self.v.real} > 0")
        if self.w.real > 0.0:
            out.append(f"Re w = {self.w.real} > 0")
        return tuple(out)


def Q(m: ModelParams, u: complex, z: complex) -> complex:
    """Q(u,z) = (u^2 - u)/2 + sigma*rho*u*z + sigma^2 z^2 / 2."""
    return 0.5 * (u * u - u) + m.sigma * m.rho * u * z + 0.5 * m.sigma * m.sigma * z * z


def R_phi(m: ModelParams, y: complex) -> complex:
    """Drift-leg reaction beta*y + alpha0*y^2/2 of the lift system."""
    return m.beta * y + 0.5 * m.alpha0 * y * y


def R_Psi(m: ModelParams, y: complex) -> complex:
    """State-leg reaction -lam*y + a*y^2/2 of the lift system (= Q(0,y) - lam*y)."""
    return -m.lam * y + 0.5 * m.a * y * y


@dataclass(frozen=True)
class RiccatiSolution:
    grid: np.ndarray
    psi: np.ndarray
    q_of_psi: np.ndarray
    solver: str
    kernel: KernelSpec | None
    model: ModelParams
    exponent: ExponentTriple
    warnings: tuple[str, ...] = ()
    tol: float = field(default=1e-10)

    @property
    def dt(self) -> float:
        return float(self.grid[1] - self.grid[0])


@dataclass(frozen=True)
class ConvRiccatiSolution:
    grid: np.ndarray
    g: np.ndarray
    psi: np.ndarray
    scaled: ScaledResolvent
    model: ModelParams
    u: complex


@dataclass(frozen=True)
class LiftRiccatiSolution:
    atoms: AtomicMeasure
    grid: np.ndarray
    Psi: np.ndarray        # shape (n_steps+1, n_atoms)
    phi: np.ndarray        # shape (n_steps+1,)
    psi_reduced: np.ndarray
    model: ModelParams
    u: complex
    w: complex


def _khat(k: KernelSpec, dt: float, n: int) -> np.ndarray:
    out = np.empty(n + 1)
    out[0] = node_zero_value(k, dt)
    out[1:] = kernel_eval_array(k, dt * np.arange(1, n + 1))
    return out


def solve_riccati_volterra_batch(k: KernelSpec, m: ModelParams, u: np.ndarray,
                                 v: complex, w: complex, T: float, n: int
                                 ) -> tuple[np.ndarray, np.ndarray]:
    """psi for a batch of u exponents sharing (v, w, T, n).

    Returns (grid, psi) with psi of shape (n+1, len(u)). The per-step
    corrector iterates all batch elements to a 1e-12 fixed point; pricing
    contours reuse one set of convolution weights this way.
    """
    if n < 2 or T <= 0.0:
        raise ArgumentError("need n >= 2 and T > 0")
    u = np.atleast_1d(np.asarray(u, dtype=complex))
    nb = u.size
    dt = T / n
    grid = dt * np.arange(n + 1)
    p, q = linear_pi_weights(k, dt, n)
    khat = _khat(k, dt, n)
    half_u2 = 0.5 * (u * u - u)
    su, s2 = m.sigma * m.rho * u, 0.5 * m.sigma * m.sigma

    def f_of(z):
        return half_u2 + su * z + s2 * z * z - m.lam * z + w

    psi = np.zeros((n + 1, nb), dtype=complex)
    psi[0] = v * khat[0]
    # F history stored reverse-aligned: frev[n - i] = F_i, so the per-step
    # convolutions read contiguous slices instead of negative-stride copies
    frev = np.zeros((n + 1, nb), dtype=complex)
    frev[n] = f_of(psi[0])
    q1 = q[1]
    for j in range(1, n + 1):
        known = v * khat[j] + np.dot(p[1:j + 1], frev[n - j + 1:])
        if j >= 2:
            known += np.dot(q[2:j + 1], frev[n - j + 1:n])
        z = known + q1 * frev[n - j + 1]  # predictor: hold F at the previous node
        converged = False
        for it in range(CORRECTOR_MAX_ITER):
            with np.errstate(over="ignore", invalid="ignore"):
                z_new = known + q1 * f_of(z)
            if not np.all(np.isfinite(z_new.view(float))):
                raise NumericalError("Riccati solution blew up", step=j,
                                     diagnostic="overflow inside corrector")
            delta = np.max(np.abs(z_new - z))
            z = z_new
            if delta <= CORRECTOR_TOL * (1.0 + np.max(np.abs(z))):
                converged = True
                break
        if not converged:
            # Picard stalls when q1*|dF/dpsi| ~ 1 (coarse grids, large |u|);
            # Newton on z - known - q1*F(z) = 0 converges quadratically
            for it in range(20):
                fprime = su + m.sigma * m.sigma * z - m.lam
                step = (z - known - q1 * f_of(z)) / (1.0 - q1 * fprime)
                z = z - step
                if np.max(np.abs(step)) <= CORRECTOR_TOL * (1.0 + np.max(np.abs(z))):
                    converged = True
                    break
            if not converged:
                raise NumericalError("Riccati corrector did not converge", step=j)
        if np.max(np.abs(z)) > BLOWUP_GUARD:
            raise NumericalError("Riccati solution blew up", step=j,
                                 diagnostic=f"|psi| > {BLOWUP_GUARD:g}")
        psi[j] = z
        frev[n - j] = f_of(z)
    return grid, psi


def solve_riccati_volterra(k: KernelSpec, m: ModelParams, e: ExponentTriple,
                           T: float, n: int) -> RiccatiSolution:
    """Kernel-form solver: psi = vK + K*(Q(u,psi) - lam*psi + w)."""
    grid, psi = solve_riccati_volterra_batch(k, m, np.asarray([e.u]), e.v, e.w, T, n)
    psi = psi[:, 0]
    qv = np.array([Q(m, e.u, z) for z in psi])
    return RiccatiSolution(grid=grid, psi=psi, q_of_psi=qv, solver="volterra-pi",
                           kernel=k, model=m, exponent=e,
                           warnings=e.domain_warnings(), tol=1e-10)


def riccati_residual(sol: RiccatiSolution) -> float:
    """Defect of the discrete equation under the solver's quadrature."""
    if sol.kernel is None:
        raise ArgumentError("residual needs the kernel the solution was built with")
    n = len(sol.grid) - 1
    dt = sol.dt
    p, q = linear_pi_weights(sol.kernel, dt, n)
    khat = _khat(sol.kernel, dt, n)
    e, m = sol.exponent, sol.model
    fh = np.array([Q(m, e.u, z) - m.lam * z + e.w for z in sol.psi])
    worst = 0.0
    for j in range(1, n + 1):
        conv = np.dot(p[1:j + 1], fh[j - 1::-1]) + np.dot(q[1:j + 1], fh[j:0:-1])
        worst = max(worst, abs(sol.psi[j] - e.v * khat[j] - conv))
    return float(worst)


def solve_fractional_riccati(alpha_k: float, m: ModelParams, u: complex,
                             T: float, n: int) -> RiccatiSolution:
    """Fractional Adams predictor-corrector for D^a psi = Q(u,psi) - lam*psi.

    Independent of the kernel-form solver: weights come from the
    Diethelm-Ford-Freed fractional Adams-Bashforth-Moulton family.
    """
    if not (0.0 < alpha_k <= 1.0):
        raise ArgumentError(f"fractional order must lie in (0, 1], got {alpha_k}")
    if n < 2 or T <= 0.0:
        raise ArgumentError("need n >= 2 and T > 0")
    a = alpha_k
    dt = T / n
    grid = dt * np.arange(n + 1)
    c_pred = dt ** a / math.gamma(a + 1.0)
    c_corr = dt ** a / math.gamma(a + 2.0)
    idx = np.arange(n + 1, dtype=float)
    b_diff = (idx + 1.0) ** a - idx ** a              # predictor weights by lag
    d = np.arange(n + 1, dtype=float)
    w_int = np.empty(n + 1)
    w_int[0] = np.nan
    w_int[1:] = (d[1:] + 1.0) ** (a + 1.0) + (d[1:] - 1.0) ** (a + 1.0) - 2.0 * d[1:] ** (a + 1.0)

    uu = complex(u)

    def f_of(z):
        return Q(m, uu, z) - m.lam * z

    psi = np.zeros(n + 1, dtype=complex)
    fh = np.zeros(n + 1, dtype=complex)
    fh[0] = f_of(0.0)
    for kk in range(1, n + 1):
        pred = c_pred * np.dot(b_diff[:kk][::-1], fh[:kk])
        a0 = (kk - 1.0) ** (a + 1.0) - (kk - 1.0 - a) * kk ** a
        known = c_corr * a0 * fh[0]
        if kk >= 2:
            known += c_corr * np.dot(w_int[1:kk][::-1], fh[1:kk])
        z = known + c_corr * f_of(pred)
        for it in range(CORRECTOR_MAX_ITER):
            z_new = known + c_corr * f_of(z)
            delta = abs(z_new - z)
            z = z_new
            if delta <= CORRECTOR_TOL * (1.0 + abs(z)):
                break
        else:
            raise NumericalError("fractional Adams corrector did not converge", step=kk)
        if abs(z) > BLOWUP_GUARD:
            raise NumericalError("fractional Riccati solution blew up", step=kk)
        psi[kk] = z
        fh[kk] = f_of(z)
    qv = np.array([Q(m, uu, z) for z in psi])
    e = ExponentTriple(u=uu)
    return RiccatiSolution(grid=grid, psi=psi, q_of_psi=qv, solver="fractional-adams",
                           kernel=PowerLawKernel(alpha=alpha_k), model=m, exponent=e,
                           warnings=e.domain_warnings(), tol=1e-10)


def solve_convolution_riccati(k: KernelSpec, m: ModelParams, u: complex, T: float,
                              n: int, max_sweeps: int = 400) -> ConvRiccatiSolution:
    """Fixed-point iteration on g = Q(u, lam^{-1}R_lam * g), v = w = 0.

    The scaled-resolvent convolution uses exact cell masses from the
    closed-form cumulative paired with endpoint averages of g.
    """
    if n < 2 or T <= 0.0:
        raise ArgumentError("need n >= 2 and T > 0")
    sr = scaled_resolvent(k, m.lam, T, n)
    masses = sr.cell_masses()
    uu = complex(u)

    def psi_of(g):
        gavg = 0.5 * (g[:-1] + g[1:])
        out = np.empty(n + 1, dtype=complex)
        out[0] = 0.0
        out[1:] = np.convolve(masses, gavg)[:n]
        return out

    g = np.full(n + 1, Q(m, uu, 0.0), dtype=complex)
    for sweep in range(max_sweeps):
        psi = psi_of(g)
        g_new = 0.5 * (uu * uu - uu) + m.sigma * m.rho * uu * psi \
            + 0.5 * m.sigma * m.sigma * psi * psi
        delta = float(np.max(np.abs(g_new - g)))
        g = g_new
        if not np.all(np.isfinite(g.view(float))):
            raise NumericalError("convolution Riccati iteration diverged", step=sweep)
        if delta <= CORRECTOR_TOL * (1.0 + float(np.max(np.abs(g)))):
            break
    else:
        raise NumericalError("convolution Riccati iteration did not converge",
                             diagnostic=f"last sweep moved {delta:.3e}")
    return ConvRiccatiSolution(grid=sr.grid, g=g, psi=psi_of(g), scaled=sr,
                               model=m, u=uu)


# ------------------------------------------------------------------ lift

def _etdrk4_coeffs(z: np.ndarray) -> tuple[np.ndarray, ...]:
    """Cox-Matthews ETDRK4 coefficients with contour-averaged small-|z| path."""
    z = np.asarray(z, dtype=float)
    E = np.exp(z)
    E2 = np.exp(0.5 * z)
    ph_half = np.empty_like(z)
    f1 = np.empty_like(z)
    f2 = np.empty_like(z)
    f3 = np.empty_like(z)
    small = np.abs(z) < 0.5
    zl = z[~small]
    if zl.size:
        ph_half[~small] = (np.exp(0.5 * zl) - 1.0) / zl
        z3 = zl ** 3
        ez = np.exp(zl)
        f1[~small] = (-4.0 - zl + ez * (4.0 - 3.0 * zl + zl * zl)) / z3
        f2[~small] = (2.0 + zl + ez * (-2.0 + zl)) / z3
        f3[~small] = (-4.0 - 3.0 * zl - zl * zl + ez * (4.0 - zl)) / z3
    zs = z[small]
    if zs.size:
        # Kassam-Trefethen contour averaging around each small z
        M = 32
        th = (np.arange(M) + 0.5) * (2.0 * math.pi / M)
        r = zs[:, None] + np.exp(1j * th)[None, :]
        r3 = r ** 3
        er = np.exp(r)
        ph_half[small] = np.mean((np.exp(0.5 * r) - 1.0) / r, axis=1).real
        f1[small] = np.mean((-4.0 - r + er * (4.0 - 3.0 * r + r * r)) / r3, axis=1).real
        f2[small] = np.mean((2.0 + r + er * (-2.0 + r)) / r3, axis=1).real
        f3[small] = np.mean((-4.0 - 3.0 * r - r * r + er * (4.0 - r)) / r3, axis=1).real
    return E, E2, ph_half, f1, f2, f3


def solve_lift_riccati(atoms: AtomicMeasure, m: ModelParams, h, T: float, n: int,
                       u: complex = 0.0, w: complex = 0.0,
                       beta: float | None = None,
                       alpha0: float | None = None) -> LiftRiccatiSolution:
    """ETDRK4 integration of the finite-atom lift Riccati system.

    d/dt Psi_i = -x_i Psi_i + R(sum_j Psi_j w_j),   Psi_i(0) = h(x_i),
    d/dt phi   = R_phi(sum_j Psi_j w_j),            phi(0) = 0,

    with R(y) = Q(u,y) - lam*y + w generalising the u = w = 0 reaction
    R_Psi(y) = -lam*y + a*y^2/2 of the measure representation. The beta and
    alpha0 overrides serve the V0-shift convention (the shifted drift may be
    negative and the shifted additive variance positive, which the public
    ModelParams class deliberately rejects).
    """
    if n < 2 or T <= 0.0:
        raise ArgumentError("need n >= 2 and T > 0")
    if not isinstance(atoms, AtomicMeasure):
        atoms = AtomicMeasure(tuple(atoms))
    beta_phi = m.beta if beta is None else float(beta)
    alpha0_phi = m.alpha0 if alpha0 is None else float(alpha0)
    weights = atoms.weights
    rates = atoms.rates
    na = len(weights)
    hvals = np.broadcast_to(np.asarray(h, dtype=complex), (na,)).copy()

    dt = T / n
    grid = dt * np.arange(n + 1)
    E, E2, ph_half, f1, f2, f3 = _etdrk4_coeffs(-rates * dt)
    uu, ww = complex(u), complex(w)

    def reaction(y):
        return Q(m, uu, y) - m.lam * y + ww

    psi_mat = np.empty((n + 1, na), dtype=complex)
    phi = np.empty(n + 1, dtype=complex)
    psi_mat[0] = hvals
    phi[0] = 0.0
    state = hvals.copy()
    phi_val = 0.0 + 0.0j
    for j in range(n):
        y0 = np.dot(weights, state)
        n1 = reaction(y0)
        a_st = E2 * state + dt * ph_half * n1
        n2 = reaction(np.dot(weights, a_st))
        b_st = E2 * state + dt * ph_half * n2
        n3 = reaction(np.dot(weights, b_st))
        c_st = E2 * a_st + dt * ph_half * (2.0 * n3 - n1)
        n4 = reaction(np.dot(weights, c_st))
        state = E * state + dt * (f1 * n1 + 2.0 * f2 * (n2 + n3) + f3 * n4)

        # phi has zero linear part: same tableau with z = 0 coefficients
        def g_of(y):
            return beta_phi * y + 0.5 * alpha0_phi * y * y

        g1 = g_of(y0)
        g2 = g_of(np.dot(weights, a_st))
        g3 = g_of(np.dot(weights, b_st))
        g4 = g_of(np.dot(weights, c_st))
        phi_val = phi_val + dt * (g1 + 2.0 * (g2 + g3) + g4) / 6.0
        if not np.all(np.isfinite(state.view(float))) or np.max(np.abs(state)) > BLOWUP_GUARD:
            raise NumericalError("lift Riccati solution blew up", step=j + 1)
        psi_mat[j + 1] = state
        phi[j + 1] = phi_val
    psi_red = psi_mat @ weights.astype(complex)
    return LiftRiccatiSolution(atoms=atoms, grid=grid, Psi=psi_mat, phi=phi,
                               psi_reduced=psi_red, model=m, u=uu, w=ww)


# ------------------------------------------------- SPDE-dual reconstruction

@dataclass(frozen=True)
class SpdeReconstruction:
    """Psi(t, x) = R_Psi(psi(t-x)) on the lower-triangular (t, x) grid, with
    the boundary mass v*delta_0 transported to x = t left symbolic."""

    grid: np.ndarray
    psi_matrix: np.ndarray
    boundary_mass: complex
    residual: float


def reconstruct_spde_psi(k: KernelSpec, m: ModelParams, sol: RiccatiSolution,
                         v: complex) -> SpdeReconstruction:
    """Rebuild Psi(t,x) from psi and verify psi(t) = vK(t) + int Psi(t,x)K(x)dx.

    The quadrature is the same product-integration calculus the solver uses,
    so the residual measures the identity defect, not quadrature mismatch.
    """
    e = sol.exponent
    if e.u != 0 or e.w != 0:
        raise ArgumentError("SPDE reconstruction requires a u = w = 0 solution")
    if complex(v) != e.v:
        raise ArgumentError(f"solution was built for v = {e.v}, got {v}")
    n = len(sol.grid) - 1
    dt = sol.dt
    rvals = np.array([R_Psi(m, z) for z in sol.psi])
    psi_matrix = np.full((n + 1, n + 1), np.nan + 0.0j, dtype=complex)
    for j in range(n + 1):
        psi_matrix[j, :j + 1] = rvals[j::-1]  # Psi(t_j, x_i) = R_Psi(psi(t_j - x_i))
    p, q = linear_pi_weights(k, dt, n)
    khat = _khat(k, dt, n)
    worst = 0.0
    for j in range(1, n + 1):
        conv = np.dot(p[1:j + 1], rvals[j - 1::-1]) + np.dot(q[1:j + 1], rvals[j:0:-1])
        worst = max(worst, abs(sol.psi[j] - complex(v) * khat[j] - conv))
    return SpdeReconstruction(grid=sol.grid, psi_matrix=psi_matrix,
                              boundary_mass=complex(v), residual=float(worst))
