"""Run configuration: dotted-key TOML documents with full-report validation.

A config document looks like

    kernel.type = "power_law"
    kernel.alpha = 0.6
    model.lambda = 2.0
    model.theta = 0.04
    model.sigma = 0.3
    model.rho = -0.7
    model.v0 = 0.04
    cf.u = "0.5,3.0"
    cf.horizon = 1.0

Validation reports every problem at once. Complex scalars are written as
"re,im" strings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigError, ValidationError
from .kernels import ConstantKernel, ExpSumKernel, KernelSpec, PowerLawKernel
from .riccati import ModelParams
from .transforms import (
    CONTOUR_Y_MAX, CONTOUR_Y_STEP, LIFT_ATOMS_SPAN, LIFT_ATOMS_X_MAX,
)

__all__ = ["Numerics", "RunConfig", "parse_config", "parse_complex",
           "format_complex", "config_to_toml"]

_KNOWN = {
    "kernel.type", "kernel.alpha", "kernel.scale", "kernel.atoms",
    "model.lambda", "model.beta", "model.theta", "model.alpha0", "model.a",
    "model.sigma", "model.rho", "model.v0", "model.s0",
    "numerics.grid_n", "numerics.atoms_n", "numerics.atoms_x_max",
    "numerics.atoms_span", "numerics.contour_y_max", "numerics.contour_y_step",
    "cf.u", "cf.v", "cf.w", "cf.horizon", "cf.formulation",
    "price.strike", "price.horizon", "price.kind",
    "riccati.u", "riccati.v", "riccati.w", "riccati.horizon", "riccati.solver",
    "resolvent.horizon",
    "simulate.scheme", "simulate.paths", "simulate.steps", "simulate.seed",
    "simulate.horizon", "simulate.with_price", "simulate.output",
    "lift_compare.atom_counts", "lift_compare.v", "lift_compare.horizon",
    "lift_compare.mc_paths", "lift_compare.mc_steps", "lift_compare.seed",
}


@dataclass(frozen=True)
class Numerics:
    grid_n: int = 2000
    atoms_n: int = 200
    atoms_x_max: float = LIFT_ATOMS_X_MAX
    atoms_span: float = LIFT_ATOMS_SPAN
    contour_y_max: float = CONTOUR_Y_MAX
    contour_y_step: float = CONTOUR_Y_STEP


@dataclass(frozen=True)
class RunConfig:
    kernel: KernelSpec
    model: ModelParams
    numerics: Numerics
    command: dict[str, Any] = field(default_factory=dict)
    resolved: dict[str, Any] = field(default_factory=dict)


def parse_complex(value) -> complex:
    """Complex scalars come as numbers or 're,im' strings."""
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        parts = value.split(",")
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    raise ValidationError(f"cannot parse complex value {value!r}; use 're,im'")


def format_complex(z: complex) -> str:
    return f"{z.real!r},{z.imag!r}"


def _flatten(tree: dict, prefix: str = "") -> dict[str, Any]:
    flat: dict[str, Any] = {}
    for key, val in tree.items():
        dotted = f"{prefix}{key}"
        if isinstance(val, dict):
            flat.update(_flatten(val, dotted + "."))
        else:
            flat[dotted] = val
    return flat


def _build_kernel(flat: dict, problems: list) -> KernelSpec | None:
    ktype = flat.get("kernel.type")
    if ktype is None:
        problems.append("kernel.type is required")
        return None
    try:
        if ktype == "power_law":
            if "kernel.alpha" not in flat:
                problems.append("kernel.alpha is required for a power-law kernel")
                return None
            return PowerLawKernel(alpha=float(flat["kernel.alpha"]),
                                  scale=float(flat.get("kernel.scale", 1.0)))
        if ktype == "constant":
            return ConstantKernel(scale=float(flat.get("kernel.scale", 1.0)))
        if ktype == "exp_sum":
            atoms = flat.get("kernel.atoms")
            if not atoms:
                problems.append("kernel.atoms is required for an exp_sum kernel")
                return None
            return ExpSumKernel(tuple((float(w), float(x)) for w, x in atoms))
        problems.append(f"unknown kernel.type {ktype!r}; "
                        "expected power_law, constant, or exp_sum")
    except ValidationError as err:
        problems.append(str(err))
    return None


def _build_model(flat: dict, problems: list) -> ModelParams | None:
    lam = float(flat.get("model.lambda", 0.0))
    has_beta = "model.beta" in flat
    has_theta = "model.theta" in flat
    if lam > 0.0 and has_beta == has_theta:
        problems.append("exactly one of model.beta or model.theta is required "
                        "when model.lambda > 0")
        return None
    if lam == 0.0 and has_theta:
        problems.append("model.theta is undefined when model.lambda = 0; use model.beta")
        return None
    beta = float(flat.get("model.beta", lam * float(flat.get("model.theta", 0.0))))
    has_a, has_sigma = "model.a" in flat, "model.sigma" in flat
    if has_a and has_sigma:
        a, sigma = float(flat["model.a"]), float(flat["model.sigma"])
        if abs(sigma * sigma - a) > 1e-12 * max(1.0, abs(a)):
            problems.append(f"model.a = {a} and model.sigma = {sigma} are "
                            "inconsistent: a must equal sigma^2")
            return None
    try:
        s0 = float(flat.get("model.s0", 1.0))
        if s0 <= 0.0:
            problems.append(f"model.s0 must be positive, got {s0}")
            return None
        return ModelParams(
            beta=beta, lam=lam, alpha0=float(flat.get("model.alpha0", 0.0)),
            a=float(flat["model.a"]) if has_a else None,
            sigma=float(flat["model.sigma"]) if has_sigma else None,
            rho=float(flat.get("model.rho", 0.0)),
            v0=float(flat.get("model.v0", 0.0)), l0=math.log(s0))
    except ValidationError as err:
        problems.append(str(err))
        return None


def parse_config(text: str, overrides: list[str] | None = None) -> RunConfig:
    """Parse and validate a config document, reporting all problems together.

    Each override is a single "key = value" TOML line that replaces the
    corresponding document key (flags win; TOML itself forbids duplicates).
    """
    try:
        tree = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError([f"config is not valid TOML: {err}"]) from err
    flat = _flatten(tree)
    for line in overrides or []:
        try:
            flat.update(_flatten(tomllib.loads(line)))
        except tomllib.TOMLDecodeError as err:
            raise ConfigError([f"override {line!r} is not valid TOML: {err}"]) from err
    problems: list[str] = []
    unknown = sorted(set(flat) - _KNOWN)
    if unknown:
        problems.append("unknown keys: " + ", ".join(unknown))
    kernel = _build_kernel(flat, problems)
    model = _build_model(flat, problems)
    numerics = Numerics(
        grid_n=int(flat.get("numerics.grid_n", 2000)),
        atoms_n=int(flat.get("numerics.atoms_n", 200)),
        atoms_x_max=float(flat.get("numerics.atoms_x_max", LIFT_ATOMS_X_MAX)),
        atoms_span=float(flat.get("numerics.atoms_span", LIFT_ATOMS_SPAN)),
        contour_y_max=float(flat.get("numerics.contour_y_max", CONTOUR_Y_MAX)),
        contour_y_step=float(flat.get("numerics.contour_y_step", CONTOUR_Y_STEP)),
    )
    if numerics.grid_n < 2:
        problems.append(f"numerics.grid_n must be >= 2, got {numerics.grid_n}")
    if numerics.atoms_n < 1:
        problems.append(f"numerics.atoms_n must be >= 1, got {numerics.atoms_n}")
    if problems:
        raise ConfigError(problems)
    command = {key: val for key, val in flat.items()
               if not key.startswith(("kernel.", "model.", "numerics."))}
    resolved = _resolve_map(kernel, model, numerics, command)
    return RunConfig(kernel=kernel, model=model, numerics=numerics,
                     command=command, resolved=resolved)


def _resolve_map(kernel: KernelSpec, model: ModelParams, numerics: Numerics,
                 command: dict) -> dict[str, Any]:
    out: dict[str, Any] = {}
    if isinstance(kernel, PowerLawKernel):
        out["kernel.type"] = "power_law"
        out["kernel.alpha"] = kernel.alpha
        out["kernel.scale"] = kernel.scale
    elif isinstance(kernel, ConstantKernel):
        out["kernel.type"] = "constant"
        out["kernel.scale"] = kernel.scale
    else:
        out["kernel.type"] = "exp_sum"
        out["kernel.atoms"] = [list(a) for a in kernel.atoms]
    out["model.lambda"] = model.lam
    out["model.beta"] = model.beta
    out["model.alpha0"] = model.alpha0
    out["model.sigma"] = model.sigma
    out["model.rho"] = model.rho
    out["model.v0"] = model.v0
    out["model.s0"] = math.exp(model.l0)
    for name, val in [("grid_n", numerics.grid_n), ("atoms_n", numerics.atoms_n),
                      ("atoms_x_max", numerics.atoms_x_max),
                      ("atoms_span", numerics.atoms_span),
                      ("contour_y_max", numerics.contour_y_max),
                      ("contour_y_step", numerics.contour_y_step)]:
        out[f"numerics.{name}"] = val
    out.update(command)
    return out


def _toml_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    raise ValidationError(f"cannot serialise {value!r} to TOML")


def config_to_toml(resolved: dict[str, Any]) -> str:
    """Serialise a resolved key map back to a dotted-key TOML document."""
    lines = [f"{key} = {_toml_scalar(val)}" for key, val in sorted(resolved.items())]
    return "\n".join(lines) + "\n"
