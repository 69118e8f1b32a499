"""Thin scripting bindings over the affinevol core.

Pure marshalling, no numerical logic: a BoundModel resolves keyword
arguments through the same config validation the CLI uses, and every bound
operation calls the same library code path as its CLI counterpart, so the
two surfaces agree to the last bit. Errors propagate as the core taxonomy
(ValidationError and friends, exit-code-annotated).

    >>> from avbindings import BoundModel, bound_cf
    >>> model = BoundModel(kernel_type="constant", lambda_=2.0, theta=0.04,
    ...                    sigma=0.3, rho=-0.7, v0=0.04, s0=1.0)
    >>> bound_cf(model, u=0.0)
    (1+0j)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from affinevol.config import RunConfig, config_to_toml, parse_config
from affinevol.errors import ValidationError
from affinevol.kernels import PowerLawKernel
from affinevol.montecarlo import simulate_volterra
from affinevol.riccati import ExponentTriple
from affinevol.transforms import (
    cf_general, cf_rough_heston, implied_vol as _implied_vol, price_european,
)

__all__ = ["BoundModel", "bound_cf", "bound_cf_rough_heston", "bound_price",
           "bound_implied_vol", "bound_simulate"]

__version__ = "0.1.0"

_PREFIXES = ("kernel_",)
_NUMERICS = {"grid_n", "atoms_n", "atoms_x_max", "atoms_span",
             "contour_y_max", "contour_y_step"}


def _dotted_key(name: str) -> str:
    if name.startswith("kernel_"):
        return "kernel." + name[len("kernel_"):]
    if name in _NUMERICS:
        return "numerics." + name
    if name in ("lambda_", "lam"):
        return "model.lambda"
    return "model." + name


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(float(value)) if isinstance(value, float) else repr(value)
    if isinstance(value, str):
        return '"' + value + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ValidationError(f"unsupported keyword value {value!r}")


@dataclass(frozen=True)
class BoundModel:
    """Immutable handle to a resolved (kernel, model, numerics) triple.

    Keyword arguments mirror the config keys: kernel_type, kernel_alpha,
    kernel_scale, kernel_atoms, lambda_ (or lam), theta or beta, sigma or a,
    alpha0, rho, v0, s0, and the numerics knobs (grid_n, ...). Validation is
    exactly parse_config's, problems reported together.
    """

    config: RunConfig = field(repr=False)

    def __init__(self, **kwargs):
        lines = [f"{_dotted_key(name)} = {_toml_value(val)}"
                 for name, val in kwargs.items()]
        object.__setattr__(self, "config", parse_config("\n".join(lines) + "\n"))

    @property
    def resolved(self) -> dict[str, Any]:
        return dict(self.config.resolved)

    def as_toml(self) -> str:
        return config_to_toml(self.config.resolved)


def bound_cf(model: BoundModel, u: complex = 0.0, v: complex = 0.0,
             w: complex = 0.0, T: float = 1.0) -> complex:
    """E[exp(u L_T + v V_T + w int V)]; matches `affinevol cf`."""
    cfg = model.config
    tv = cf_general(cfg.kernel, cfg.model, ExponentTriple(u, v, w), T,
                    cfg.numerics.grid_n)
    return tv.value


def bound_cf_rough_heston(model: BoundModel, u: complex, T: float = 1.0) -> complex:
    """Unconditional rough-Heston transform; matches
    `affinevol cf --set cf.formulation="fractional"`."""
    cfg = model.config
    if not isinstance(cfg.kernel, PowerLawKernel):
        raise ValidationError("the fractional assembly needs a power-law kernel")
    return cf_rough_heston(cfg.kernel.alpha, cfg.model, u, T,
                           cfg.numerics.grid_n).value


def bound_price(model: BoundModel, strike: float, T: float = 1.0,
                kind: str = "call") -> float:
    """Undiscounted European price; matches `affinevol price`."""
    cfg = model.config
    return price_european(cfg.kernel, cfg.model, strike, T, kind=kind,
                          n=cfg.numerics.grid_n,
                          y_max=cfg.numerics.contour_y_max,
                          y_step=cfg.numerics.contour_y_step)


def bound_implied_vol(price: float, s0: float, strike: float, T: float,
                      kind: str = "call") -> float:
    """Black-Scholes implied volatility (safeguarded bracketing)."""
    return _implied_vol(price, s0, strike, T, kind=kind)


def bound_simulate(model: BoundModel, T: float = 1.0, steps: int = 500,
                   paths: int = 10_000, seed: int = 0,
                   with_price: bool = False) -> dict[str, Any]:
    """Path-summary record; matches `affinevol simulate` (summary output)."""
    cfg = model.config
    p = simulate_volterra(cfg.kernel, cfg.model, T, steps, paths, seed,
                          with_price=with_price)
    record: dict[str, Any] = {
        "scheme": p.scheme, "paths": paths, "steps": steps, "seed": seed,
        "mean_v_T": float(np.mean(p.v_terminal)),
        "var_v_T": float(np.var(p.v_terminal, ddof=1)) if paths > 1 else 0.0,
        "se_v_T": float(np.std(p.v_terminal, ddof=1) / np.sqrt(paths))
        if paths > 1 else 0.0,
        "mean_int_v": float(np.mean(p.int_v)),
        "truncation_fraction": p.truncation_fraction,
    }
    if p.l_terminal is not None:
        record["mean_l_T"] = float(np.mean(p.l_terminal))
        record["var_l_T"] = float(np.var(p.l_terminal, ddof=1))
    return record
