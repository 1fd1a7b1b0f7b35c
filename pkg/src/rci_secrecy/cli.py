"""Command-line front end.

Subcommands: ``deteq``, ``mc``, ``optimize``, ``sweep`` and ``figure``. Results are
written as CSV to standard output or ``--out``.

Precedence is command-line option over ``--config`` file over built-in default. The
config file is INI with these sections and keys (unknown ones are rejected):

``[system]``
    M, K, beta, rho_db, xi, tau_sq, trials, seed, precoder, threads
``[sweep]``
    param, values, outputs
``[figure]``
    any keyword accepted by the chosen preset (lists are comma-separated)

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import inspect
import math
import sys

from . import __version__, rmt
from .errors import DomainError, EmptyDomain, IllConditioned, NoBracket, TooManySkipped
from .experiments import FIGURES, PARAMETERS, SERIES, SweepSpec, Table, run_figure, run_sweep
from .montecarlo import SystemConfig, ergodic_run
from .table_io import emit_csv

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_INVALID", "EXIT_NUMERICAL"]

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3

SYSTEM_KEYS = ("M", "K", "beta", "rho_db", "xi", "tau_sq", "trials", "seed", "precoder",
               "threads")
SWEEP_KEYS = ("param", "values", "outputs")
DEFAULTS = {"rho_db": 10.0, "xi": "auto", "tau_sq": 0.0, "trials": 100, "seed": 0,
            "precoder": "rci_pr", "threads": None}


class UsageError(ValueError):
    pass


def _floats(text):
    try:
        return tuple(float(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}")


def _xi_arg(text):
    t = str(text).strip().lower()
    if t in ("auto", "empirical"):
        return t
    try:
        return float(t)
    except ValueError:
        raise UsageError(f"--xi must be 'auto', 'empirical' or a number, got {text!r}")


def _add_system(p, mc=True):
    p.add_argument("--M", type=int, help="transmit antennas")
    p.add_argument("--K", type=int, help="users")
    p.add_argument("--beta", type=float, help="load K/M (K = round(beta*M) when K is absent)")
    p.add_argument("--rho-db", dest="rho_db", type=float, help="SNR in dB (default 10)")
    p.add_argument("--xi", help="'auto' (default), 'empirical', or a number")
    p.add_argument("--tau-sq", dest="tau_sq", type=float, help="CSI distortion (default 0)")
    if mc:
        p.add_argument("--trials", type=int, help="Monte Carlo trials (default 100)")
        p.add_argument("--seed", type=int, help="root seed (default 0)")
        p.add_argument("--precoder", choices=("rci", "rci_pr", "nosecrecy"),
                       help="precoder for simulation (default rci_pr)")
        p.add_argument("--threads", type=int, help="worker threads")


def build_parser():
    ap = argparse.ArgumentParser(prog="rci-secrecy", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with [system]/[sweep]/[figure] sections")
    common.add_argument("--out", help="CSV destination (default: standard output)")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("deteq", parents=[common], help="large-system rates at one point")
    _add_system(p, mc=False)

    p = sub.add_parser("mc", parents=[common], help="ergodic secrecy sum-rate by simulation")
    _add_system(p)

    p = sub.add_parser("optimize", parents=[common],
                       help="optimal regularization, load and user count")
    _add_system(p)

    p = sub.add_parser("sweep", parents=[common], help="sweep one parameter")
    _add_system(p)
    p.add_argument("--param", choices=PARAMETERS)
    p.add_argument("--values", help="comma-separated swept values")
    p.add_argument("--outputs", help=f"comma-separated series from {', '.join(SERIES)}")

    p = sub.add_parser("figure", parents=[common], help="reproduce a figure preset as CSV")
    p.add_argument("preset", choices=sorted(FIGURES))
    for name in ("M", "K", "beta", "betas", "rho-db", "trials", "seed", "b",
                 "c-overloaded"):
        p.add_argument(f"--{name}", dest=name.replace("-", "_"))
    return ap


def _read_config(path, command):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}")
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path!r}: {exc}")
    allowed = {"system": SYSTEM_KEYS, "sweep": SWEEP_KEYS, "figure": None}
    out = {}
    for sec in cp.sections():
        if sec not in allowed:
            raise UsageError(f"unknown config section [{sec}]")
        keys = allowed[sec]
        for k, v in cp.items(sec):
            if keys is not None and k not in keys:
                raise UsageError(f"unknown key {k!r} in [{sec}]")
            if sec == "figure" and command != "figure":
                continue
            out[k] = v
    return out


_TYPES = {"M": int, "K": int, "beta": float, "rho_db": float, "tau_sq": float, "trials": int,
          "seed": int, "threads": int, "xi": _xi_arg, "precoder": str, "param": str,
          "values": _floats, "outputs": str}


def _resolve(args, command):
    """Merge defaults, config file and command line into one typed dict."""
    merged = dict(DEFAULTS)
    if args.config:
        merged.update(_read_config(args.config, command))
    for k, v in vars(args).items():
        if k in ("config", "out", "command", "preset") or v is None:
            continue
        merged[k] = v
    typed = {}
    for k, v in merged.items():
        conv = _TYPES.get(k)
        if conv is None or v is None:
            typed[k] = v
            continue
        try:
            typed[k] = conv(v)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {k}: {v!r} ({exc})")
    return typed


def _system(o, need_M=True):
    M, K, beta = o.get("M"), o.get("K"), o.get("beta")
    if need_M and M is None:
        raise UsageError("--M is required")
    if K is None:
        if beta is None:
            raise UsageError("give --K or --beta")
        K = max(1, int(round(beta * M)))
    if o["precoder"] not in ("rci", "rci_pr", "nosecrecy"):
        raise UsageError(f"unknown precoder {o['precoder']!r}")
    xi = o["xi"]
    return SystemConfig(M=M, K=K, rho=rmt.db_to_linear(o["rho_db"]),
                        xi=xi if isinstance(xi, float) else None, tau_sq=o["tau_sq"],
                        trials=o["trials"], seed=o["seed"])


def _cmd_deteq(o):
    beta = o.get("beta")
    if beta is None:
        if o.get("M") and o.get("K"):
            beta = o["K"] / o["M"]
        else:
            raise UsageError("give --beta (or --M and --K)")
    rho = rmt.db_to_linear(o["rho_db"])
    xi = o["xi"]
    if xi == "empirical":
        raise UsageError("--xi empirical needs a channel; use the mc subcommand")
    xi = rmt.xi_star(beta, rho) if xi == "auto" else xi
    res = rmt.secrecy_rate_deteq_csi(rmt.LoadPoint(beta, rho, xi), o["tau_sq"])
    t = Table(["beta", "rho_db", "xi", "tau_sq", "g", "sinr_user", "sinr_eve",
               "rate_per_user", "rate_per_antenna"],
              meta={"command": "deteq", "beta": beta, "rho_db": o["rho_db"], "xi": o["xi"],
                    "tau_sq": o["tau_sq"], "seed": None})
    t.add(dict(beta=beta, rho_db=o["rho_db"], xi=xi, tau_sq=o["tau_sq"], g=res.g,
               sinr_user=res.sinr_user, sinr_eve=res.sinr_eve,
               rate_per_user=res.rate_per_user, rate_per_antenna=res.rate_per_antenna))
    return t


def _cmd_mc(o):
    cfg = _system(o)
    kind = "empirical" if o["xi"] == "empirical" else o["precoder"]
    res = ergodic_run(cfg, kind, workers=o.get("threads"))
    t = Table(["M", "K", "beta", "rho_db", "tau_sq", "xi", "precoder", "trials", "skipped",
               "sum_mean", "sum_stderr", "per_user", "per_antenna", "r"],
              meta={"command": "mc", "config": cfg, "rho_db": o["rho_db"], "xi": o["xi"],
                    "precoder": kind, "seed": cfg.seed})
    t.add(dict(M=cfg.M, K=cfg.K, beta=cfg.beta, rho_db=o["rho_db"], tau_sq=cfg.tau_sq,
               xi=res.xi, precoder=kind, trials=cfg.trials, skipped=res.skipped,
               sum_mean=res.mean, sum_stderr=res.stderr, per_user=res.mean / cfg.K,
               per_antenna=res.mean / cfg.M, r=res.r))
    return t


def _cmd_optimize(o):
    from .optimize import (optimal_user_count, optimal_user_count_highsnr,
                           solve_beta_fixedpoint, xi_star_numeric)

    rho = rmt.db_to_linear(o["rho_db"])
    M = o.get("M")
    beta = o.get("beta")
    if beta is None and M and o.get("K"):
        beta = o["K"] / M
    cols = ["rho_db", "beta_tilde_highsnr", "rho_star_pr_db"]
    row = {"rho_db": o["rho_db"], "beta_tilde_highsnr": solve_beta_fixedpoint(rho),
           "rho_star_pr_db": math.nan}
    if beta is not None:
        cols += ["beta", "xi_star", "xi_star_numeric", "xi_star_highsnr", "rate_per_user"]
        xs = rmt.xi_star(beta, rho)
        row.update(beta=beta, xi_star=xs, xi_star_numeric=xi_star_numeric(beta, rho)[0],
                   xi_star_highsnr=rmt.xi_star_highsnr(beta, rho),
                   rate_per_user=rmt.secrecy_rate_deteq(
                       rmt.LoadPoint(beta, rho, xs)).rate_per_user)
        if 1.0 < beta < 2.0:
            row["rho_star_pr_db"] = rmt.linear_to_db(rmt.rho_star(beta)[0])
    if M is not None:
        cols += ["M", "K_star_deteq", "K_tilde_highsnr"]
        row.update(M=M, K_star_deteq=optimal_user_count(M, rho),
                   K_tilde_highsnr=optimal_user_count_highsnr(M, rho))
    t = Table(cols, meta={"command": "optimize", "rho_db": o["rho_db"], "beta": beta,
                          "M": M, "seed": None})
    t.add(row)
    return t


def _cmd_sweep(o):
    if not o.get("param"):
        raise UsageError("--param is required")
    if not o.get("values"):
        raise UsageError("--values is required")
    outputs = tuple(s.strip() for s in (o.get("outputs") or "deteq").split(",") if s.strip())
    if o["xi"] == "empirical":
        raise UsageError("--xi empirical is not available for sweeps")
    if o.get("K") is None and o.get("beta") is None:
        o = dict(o, beta=1.0)
    spec = SweepSpec(o["param"], o["values"], _system(o), outputs, o["precoder"])
    t = run_sweep(spec)
    t.meta = dict(t.meta, command="sweep", values=list(spec.values), rho_db=o["rho_db"],
                  seed=spec.base.seed)
    return t


def _coerce_like(default, raw):
    if isinstance(default, tuple) or (default is None and "," in str(raw)):
        vals = _floats(raw)
        if isinstance(default, tuple) and default and isinstance(default[0], int):
            return tuple(int(v) for v in vals)
        return vals
    if isinstance(default, bool):
        return str(raw).lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(float(raw))
    return float(raw)


def _cmd_figure(args, o):
    fn = FIGURES[args.preset]
    params = inspect.signature(fn).parameters
    raw = {}
    if args.config:
        raw.update(_read_config(args.config, "figure"))
    for k in ("M", "K", "beta", "betas", "rho_db", "trials", "seed", "b", "c_overloaded"):
        v = getattr(args, k, None)
        if v is not None:
            raw[k] = v
    unknown = sorted(set(raw) - set(params))
    if unknown:
        raise UsageError(f"{args.preset} does not accept {unknown}; valid: {sorted(params)}")
    try:
        kw = {k: _coerce_like(params[k].default, v) for k, v in raw.items()}
    except ValueError as exc:
        raise UsageError(str(exc))
    return run_figure(args.preset, **kw)


def _dispatch(args):
    if args.command == "figure":
        return _cmd_figure(args, None)
    o = _resolve(args, args.command)
    return {"deteq": _cmd_deteq, "mc": _cmd_mc, "optimize": _cmd_optimize,
            "sweep": _cmd_sweep}[args.command](o)


def main(argv=None, stdout=None, stderr=None):
    """Parse ``argv``, run the subcommand and return the exit code."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        table = _dispatch(args)
        emit_csv(table, args.out if args.out else stdout)
    except (TooManySkipped, IllConditioned, NoBracket, EmptyDomain, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL
    except (UsageError, DomainError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INVALID
    return EXIT_OK
