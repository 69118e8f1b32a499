"""Command-line front end.

Subcommands: resolvent, riccati, cf, price, simulate, lift-compare. A config
document (--config) supplies the kernel/model/numerics blocks; repeated
--set key=value flags override it (flags win). CSV or JSON goes to stdout or
--out. Exit codes: 0 success, 2 validation error, 3 numerical failure.
JSON reports embed the resolved config, so any report can be re-run
bit-identically from its own payload.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from . import montecarlo as mc
from .config import RunConfig, format_complex, parse_complex, parse_config
from .errors import AffineVolError, ArgumentError, ConfigError, ValidationError
from .kernels import PowerLawKernel, discretize_measure, measure_of
from .resolvent import resolvent_numeric
from .riccati import (
    ExponentTriple, solve_convolution_riccati, solve_fractional_riccati,
    solve_lift_riccati, solve_riccati_volterra,
)
from .transforms import cf_general, cf_lift, cf_rough_heston, implied_vol, price_european

SCHEMA_VERSION = 1

__all__ = ["main", "run"]


def _json_report(cfg: RunConfig, payload: dict) -> str:
    doc = {"schema": SCHEMA_VERSION, "config": cfg.resolved}
    doc.update(payload)
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _cmd_resolvent(cfg: RunConfig) -> str:
    T = float(cfg.command.get("resolvent.horizon", 1.0))
    tbl = resolvent_numeric(cfg.kernel, cfg.model.lam, T, cfg.numerics.grid_n)
    buf = io.StringIO()
    buf.write("t,R_lambda,int_R_lambda\n")
    for t, r, c in zip(tbl.grid, tbl.samples, tbl.cumulative):
        buf.write(f"{float(t)!r},{float(r)!r},{float(c)!r}\n")
    return buf.getvalue()


def _cmd_riccati(cfg: RunConfig) -> str:
    cmd = cfg.command
    T = float(cmd.get("riccati.horizon", 1.0))
    u = parse_complex(cmd.get("riccati.u", 0.0))
    v = parse_complex(cmd.get("riccati.v", 0.0))
    w = parse_complex(cmd.get("riccati.w", 0.0))
    solver = cmd.get("riccati.solver", "volterra")
    n = cfg.numerics.grid_n
    if solver == "volterra":
        sol = solve_riccati_volterra(cfg.kernel, cfg.model, ExponentTriple(u, v, w), T, n)
        grid, psi = sol.grid, sol.psi
    elif solver == "fractional":
        if not isinstance(cfg.kernel, PowerLawKernel):
            raise ValidationError("riccati.solver = 'fractional' needs a power-law kernel")
        if v != 0 or w != 0:
            raise ValidationError("the fractional solver handles u-only exponents")
        sol = solve_fractional_riccati(cfg.kernel.alpha, cfg.model, u, T, n)
        grid, psi = sol.grid, sol.psi
    elif solver == "convolution":
        if v != 0 or w != 0:
            raise ValidationError("the convolution solver handles u-only exponents")
        sol = solve_convolution_riccati(cfg.kernel, cfg.model, u, T, n)
        grid, psi = sol.grid, sol.psi
    elif solver == "lift":
        atoms = discretize_measure(measure_of(cfg.kernel), cfg.numerics.atoms_n,
                                   cfg.numerics.atoms_x_max, cfg.numerics.atoms_span)
        sol = solve_lift_riccati(atoms, cfg.model, v, T, n, u=u, w=w)
        grid, psi = sol.grid, sol.psi_reduced
    else:
        raise ValidationError(f"unknown riccati.solver {solver!r}")
    buf = io.StringIO()
    buf.write("t,psi_re,psi_im\n")
    for t, z in zip(grid, psi):
        buf.write(f"{float(t)!r},{float(z.real)!r},{float(z.imag)!r}\n")
    return buf.getvalue()


def _cmd_cf(cfg: RunConfig) -> str:
    cmd = cfg.command
    T = float(cmd.get("cf.horizon", 1.0))
    u = parse_complex(cmd.get("cf.u", 0.0))
    v = parse_complex(cmd.get("cf.v", 0.0))
    w = parse_complex(cmd.get("cf.w", 0.0))
    formulation = cmd.get("cf.formulation", "volterra")
    n = cfg.numerics.grid_n
    if formulation == "volterra":
        tv = cf_general(cfg.kernel, cfg.model, ExponentTriple(u, v, w), T, n)
    elif formulation == "fractional":
        if not isinstance(cfg.kernel, PowerLawKernel):
            raise ValidationError("cf.formulation = 'fractional' needs a power-law kernel")
        if v != 0 or w != 0:
            raise ValidationError("the fractional assembly handles u-only exponents")
        tv = cf_rough_heston(cfg.kernel.alpha, cfg.model, u, T, n)
    elif formulation == "lift":
        if u != 0 or w != 0:
            raise ValidationError("the lift assembly handles v-only exponents")
        atoms = discretize_measure(measure_of(cfg.kernel), cfg.numerics.atoms_n,
                                   cfg.numerics.atoms_x_max, cfg.numerics.atoms_span)
        tv = cf_lift(atoms, cfg.model, v, T, n)
    else:
        raise ValidationError(f"unknown cf.formulation {formulation!r}")
    return _json_report(cfg, {
        "u": format_complex(u), "v": format_complex(v), "w": format_complex(w),
        "horizon": T, "value_re": tv.value.real, "value_im": tv.value.imag,
        "formulation": tv.formulation, "warnings": list(tv.warnings),
    })


def _cmd_price(cfg: RunConfig) -> str:
    cmd = cfg.command
    strike = float(cmd.get("price.strike", 1.0))
    T = float(cmd.get("price.horizon", 1.0))
    kind = cmd.get("price.kind", "call")
    price = price_european(cfg.kernel, cfg.model, strike, T, kind=kind,
                           n=cfg.numerics.grid_n,
                           y_max=cfg.numerics.contour_y_max,
                           y_step=cfg.numerics.contour_y_step)
    s0 = float(np.exp(cfg.model.l0))
    vol = implied_vol(price, s0, strike, T, kind=kind)
    return _json_report(cfg, {
        "strike": strike, "horizon": T, "kind": kind,
        "price": price, "implied_vol": vol,
    })


def _cmd_simulate(cfg: RunConfig) -> str:
    cmd = cfg.command
    scheme = cmd.get("simulate.scheme", "volterra")
    T = float(cmd.get("simulate.horizon", 1.0))
    steps = int(cmd.get("simulate.steps", 500))
    paths = int(cmd.get("simulate.paths", 10_000))
    seed = int(cmd.get("simulate.seed", 0))
    with_price = bool(cmd.get("simulate.with_price", False))
    output = cmd.get("simulate.output", "summary")
    store = output == "paths"
    if scheme == "volterra":
        p = mc.simulate_volterra(cfg.kernel, cfg.model, T, steps, paths, seed,
                                 with_price=with_price, store_paths=store)
    elif scheme == "ou":
        p = mc.simulate_volterra_ou(cfg.kernel, cfg.model, T, steps, paths, seed,
                                    store_paths=store)
    elif scheme == "lift":
        atoms = discretize_measure(measure_of(cfg.kernel), cfg.numerics.atoms_n,
                                   cfg.numerics.atoms_x_max, cfg.numerics.atoms_span)
        p = mc.simulate_lift(atoms, cfg.model, T, steps, paths, seed, store_paths=store)
    else:
        raise ValidationError(f"unknown simulate.scheme {scheme!r}")
    buf = io.StringIO()
    if output == "paths":
        buf.write("t," + ",".join(f"path_{i}" for i in range(paths)) + "\n")
        for j, t in enumerate(p.grid):
            buf.write(f"{float(t)!r}," + ",".join(repr(float(v)) for v in p.v_paths[:, j]) + "\n")
        return buf.getvalue()
    if output != "summary":
        raise ValidationError(f"unknown simulate.output {output!r}")
    stats = [
        ("scheme", p.scheme), ("paths", paths), ("steps", steps), ("seed", seed),
        ("mean_v_T", float(np.mean(p.v_terminal))),
        ("var_v_T", float(np.var(p.v_terminal, ddof=1)) if paths > 1 else 0.0),
        ("se_v_T", float(np.std(p.v_terminal, ddof=1) / np.sqrt(paths))
         if paths > 1 else 0.0),
        ("mean_int_v", float(np.mean(p.int_v))),
        ("truncation_fraction", p.truncation_fraction),
    ]
    if p.l_terminal is not None:
        stats.append(("mean_l_T", float(np.mean(p.l_terminal))))
        stats.append(("var_l_T", float(np.var(p.l_terminal, ddof=1))))
    buf.write("stat,value\n")
    for name, val in stats:
        buf.write(f"{name},{val if isinstance(val, str) else repr(val)}\n")
    return buf.getvalue()


def _cmd_lift_compare(cfg: RunConfig) -> str:
    cmd = cfg.command
    T = float(cmd.get("lift_compare.horizon", 1.0))
    counts = [int(c) for c in cmd.get("lift_compare.atom_counts", [10, 50, 200])]
    mc_paths = int(cmd.get("lift_compare.mc_paths", 5000))
    mc_steps = int(cmd.get("lift_compare.mc_steps", 250))
    seed = int(cmd.get("lift_compare.seed", 0))
    v = parse_complex(cmd.get("lift_compare.v", "-1.0,0.0"))
    n = cfg.numerics.grid_n
    measure = measure_of(cfg.kernel)
    reference = cf_general(cfg.kernel, cfg.model, ExponentTriple(v=v), T, n)
    rows = []
    for count in counts:
        atoms = discretize_measure(measure, count, cfg.numerics.atoms_x_max,
                                   cfg.numerics.atoms_span)
        tv = cf_lift(atoms, cfg.model, v, T, n)
        row = {"n_atoms": count,
               "cf_lift_re": tv.value.real, "cf_lift_im": tv.value.imag,
               "cf_error": abs(tv.value - reference.value)}
        rows.append(row)
    mc_block = None
    if mc_paths > 0:
        atoms = discretize_measure(measure, counts[-1], cfg.numerics.atoms_x_max,
                                   cfg.numerics.atoms_span)
        pv = mc.simulate_volterra(cfg.kernel, cfg.model, T, mc_steps, mc_paths, seed)
        pl = mc.simulate_lift(atoms, cfg.model, T, mc_steps, mc_paths, seed + 1)
        se = float(np.hypot(np.std(pv.v_terminal, ddof=1) / np.sqrt(mc_paths),
                            np.std(pl.v_terminal, ddof=1) / np.sqrt(mc_paths)))
        mc_block = {
            "n_atoms": counts[-1], "paths": mc_paths, "steps": mc_steps, "seed": seed,
            "mean_v_volterra": float(np.mean(pv.v_terminal)),
            "mean_v_lift": float(np.mean(pl.v_terminal)),
            "combined_se": se,
        }
    return _json_report(cfg, {
        "horizon": T, "exponent_v": format_complex(v),
        "cf_reference_re": reference.value.real,
        "cf_reference_im": reference.value.imag,
        "rows": rows, "mc_moments": mc_block,
    })


_COMMANDS = {
    "resolvent": _cmd_resolvent,
    "riccati": _cmd_riccati,
    "cf": _cmd_cf,
    "price": _cmd_price,
    "simulate": _cmd_simulate,
    "lift-compare": _cmd_lift_compare,
}


def run(command: str, cfg: RunConfig) -> str:
    """Execute one subcommand, returning the full artifact as text."""
    if command not in _COMMANDS:
        raise ArgumentError(f"unknown command {command!r}")
    return _COMMANDS[command](cfg)


def _load_config(args) -> RunConfig:
    text = ""
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    overrides = []
    for override in args.set or []:
        if "=" not in override:
            raise ConfigError([f"--set expects key=value, got {override!r}"])
        key, val = override.split("=", 1)
        overrides.append(f"{key.strip()} = {val.strip()}")
    return parse_config(text, overrides=overrides)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="affinevol",
        description="Affine Volterra models: transforms, option prices, simulation.",
        epilog="CSV columns: resolvent -> (t, R_lambda, int_R_lambda); "
               "riccati -> (t, psi_re, psi_im); simulate summary -> (stat, value). "
               "JSON reports carry schema = 1 and embed the resolved config.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in [
        ("resolvent", "dump the resolvent table of lambda*K as CSV"),
        ("riccati", "solve the Riccati-Volterra equation and dump psi as CSV"),
        ("cf", "evaluate the Fourier-Laplace transform, JSON output"),
        ("price", "price a European option by Fourier inversion, JSON output"),
        ("simulate", "Monte Carlo simulation, CSV summary or path dump"),
        ("lift-compare", "lift-vs-kernel-form convergence report, JSON output"),
    ]:
        p = sub.add_parser(name, help=doc)
        p.add_argument("--config", help="path to a TOML config document")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key (repeatable; flags win)")
        p.add_argument("--out", help="write the artifact here instead of stdout")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        artifact = run(args.command, cfg)
    except AffineVolError as err:
        payload = {"schema": SCHEMA_VERSION,
                   "error": {"type": type(err).__name__, "message": str(err),
                             "exit_code": err.exit_code}}
        if isinstance(err, ConfigError):
            payload["error"]["problems"] = err.problems
        step = getattr(err, "step", None)
        if step is not None:
            payload["error"]["step"] = step
        sys.stderr.write(json.dumps(payload, indent=2) + "\n")
        return err.exit_code
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(artifact)
    else:
        sys.stdout.write(artifact)
    return 0


if __name__ == "__main__":
    sys.exit(main())
