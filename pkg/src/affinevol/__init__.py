"""Affine Volterra (rough volatility) models: Fourier-Laplace transforms,
option pricing, Riccati-Volterra solvers, Markovian lifts, and Monte Carlo."""

from .errors import (
    AffineVolError, ArgumentError, ConfigError, DomainError, NumericalError,
    ValidationError,
)
from .kernels import (
    AtomicMeasure, ConstantKernel, DiracAtZero, ExpSumKernel, KernelSpec,
    LaplaceMeasure, PowerLawKernel, RoughDensity, discretize_measure,
    fractional_derivative, fractional_integral, kernel_eval, kernel_from_measure,
    measure_of,
)
from .specfun import MLParams, gamma_fn, mittag_leffler
from .resolvent import (
    ResolventTable, ScaledResolvent, resolvent_analytic, resolvent_numeric,
    resolvent_residual, resolvent_table_analytic, scaled_resolvent,
)
from .riccati import (
    ExponentTriple, LiftRiccatiSolution, ModelParams, Q, R_Psi, R_phi,
    RiccatiSolution, reconstruct_spde_psi, riccati_residual,
    solve_convolution_riccati, solve_fractional_riccati, solve_lift_riccati,
    solve_riccati_volterra,
)
from .transforms import (
    ForwardCurve, TransformValue, bs_call_price, cf_general, cf_lift,
    cf_rough_heston, forward_curve, implied_vol, price_european,
)
from .montecarlo import (
    PathSet, holder_estimate, mc_transform, simulate_lift, simulate_volterra,
    simulate_volterra_ou,
)
from .config import RunConfig, parse_config

__version__ = "0.1.0"
