"""Parameter sweeps and figure presets, emitted as plain tables."""

from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rmt
from .errors import DomainError
from .montecarlo import SystemConfig, ergodic_run, sample_channel, trial_rng
from .optimize import (
    empirical_rate_curve,
    optimal_user_count,
    optimal_user_count_highsnr,
    solve_beta_fixedpoint,
    xi_star_empirical,
)

__all__ = [
    "SERIES",
    "PARAMETERS",
    "Table",
    "SweepSpec",
    "run_sweep",
    "normalized_loss_trials",
    "FIGURES",
    "run_figure",
]

SERIES = ("mc", "deteq", "deteq_csi", "highsnr", "nosecrecy", "su_capacity_highsnr")
PARAMETERS = ("beta", "rho_db", "M", "tau_sq", "B")


@dataclass
class Table:
    columns: list
    rows: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, row: dict):
        self.rows.append([row[c] for c in self.columns])

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def records(self):
        return [dict(zip(self.columns, r)) for r in self.rows]

    def __len__(self):
        return len(self.rows)


@dataclass(frozen=True)
class SweepSpec:
    """Sweep of one parameter with the rest held at ``base``.

    ``base.K`` is ignored when sweeping ``beta`` (K is ``round(beta * M)``). For ``B`` the
    distortion is the RVQ bound ``2^(-B/(M-1))``.
    """

    parameter: str
    values: tuple
    base: SystemConfig
    outputs: tuple = ("deteq",)
    precoder: str = "rci"

    def validate(self):
        if self.parameter not in PARAMETERS:
            raise DomainError(f"unknown sweep parameter {self.parameter!r}")
        if not self.outputs:
            raise DomainError("at least one output series is required")
        bad = [s for s in self.outputs if s not in SERIES]
        if bad:
            raise DomainError(f"unknown output series {bad}")
        if self.precoder not in ("rci", "rci_pr"):
            raise DomainError(f"precoder must be 'rci' or 'rci_pr', got {self.precoder!r}")
        if len(self.values) == 0:
            raise DomainError("value list is empty")
        d = np.diff(np.asarray(self.values, dtype=float))
        if len(d) and not (np.all(d > 0) or np.all(d < 0)):
            raise DomainError("swept values must be strictly monotone")
        if self.parameter in ("tau_sq", "B") and not {"mc", "deteq_csi"} & set(self.outputs):
            raise DomainError(f"sweeping {self.parameter} needs an 'mc' or 'deteq_csi' series")

    def columns(self):
        cols = [self.parameter] + [c for c in ("M", "K", "beta", "rho_db", "tau_sq")
                                   if c != self.parameter]
        for s in self.outputs:
            cols += [f"{s}_per_user", f"{s}_per_antenna"]
            if s == "mc":
                cols += ["mc_stderr_per_user", "mc_stderr_per_antenna", "mc_skipped"]
        return cols


def _point(spec: SweepSpec, value):
    b = spec.base
    M, K, rho, tau_sq = b.M, b.K, b.rho, b.tau_sq
    beta = None
    p = spec.parameter
    if p == "beta":
        K = max(1, int(round(value * M)))
        beta = K / M if "mc" in spec.outputs else float(value)
    elif p == "rho_db":
        rho = rmt.db_to_linear(value)
    elif p == "M":
        M = int(value)
        K = max(1, int(round(b.beta * M)))
    elif p == "tau_sq":
        tau_sq = float(value)
    elif p == "B":
        tau_sq = rmt.rvq_distortion_bound(M, value)
    if beta is None:
        beta = K / M
    return M, K, beta, rho, tau_sq


def _analytic(series, precoder, beta, rho, xi, tau_sq):
    if series == "highsnr":
        return rmt.rcipr_rate_highsnr(beta, rho)
    if series == "nosecrecy":
        return rmt.sumrate_nosecrecy_deteq(beta, rho)
    if series == "su_capacity_highsnr":
        return rmt.su_secrecy_capacity_highsnr(beta, rho)
    t = tau_sq if series == "deteq_csi" else 0.0
    if precoder == "rci_pr":
        return rmt.rcipr_rate_deteq(beta, rho, t).rate_per_user
    x = rmt.xi_star(beta, rho) if xi is None else xi
    return rmt.secrecy_rate_deteq_csi(rmt.LoadPoint(beta, rho, x), t).rate_per_user


def run_sweep(spec: SweepSpec) -> Table:
    """Evaluate every requested series at every swept value, in value order."""
    spec.validate()
    table = Table(spec.columns(), meta={"sweep": spec.parameter, "precoder": spec.precoder,
                                        "outputs": list(spec.outputs), "base": spec.base})
    for value in spec.values:
        M, K, beta, rho, tau_sq = _point(spec, value)
        row = {spec.parameter: value, "M": M, "K": K, "beta": beta,
               "rho_db": rmt.linear_to_db(rho), "tau_sq": tau_sq}
        for s in spec.outputs:
            if s == "mc":
                cfg = replace(spec.base, M=M, K=K, rho=rho, tau_sq=tau_sq)
                res = ergodic_run(cfg, spec.precoder)
                row.update(mc_per_user=res.mean / K, mc_per_antenna=res.mean / M,
                           mc_stderr_per_user=res.stderr / K,
                           mc_stderr_per_antenna=res.stderr / M, mc_skipped=res.skipped)
            else:
                pu = _analytic(s, spec.precoder, beta, rho, spec.base.xi, tau_sq)
                row[f"{s}_per_user"] = pu
                row[f"{s}_per_antenna"] = beta * pu
        table.add(row)
    return table


def normalized_loss_trials(M, K, rho, trials, seed):
    """Per-trial ``(R(xi_M*) - R(xi_star)) / R(xi_M*)`` with xi_M* optimized per draw.

    Draws where the optimized rate is zero are dropped (the ratio is undefined).
    """
    cfg = SystemConfig(M, K, rho, trials=trials, seed=seed)
    xo = rmt.xi_star(K / M, rho)
    losses, xis = [], []
    for t in range(trials):
        H = sample_channel(cfg, trial_rng(seed, t)).H
        xe = xi_star_empirical(H, rho)
        r_emp, r_ls = empirical_rate_curve(H, rho, [xe, xo])
        if r_emp > 0:
            losses.append((r_emp - r_ls) / r_emp)
            xis.append(xe)
    return np.array(losses), np.array(xis)


def _rho_grid(lo, hi, step):
    return tuple(float(x) for x in np.round(np.arange(lo, hi + step / 2, step), 10))


def _se(x):
    return float(np.std(x, ddof=1) / math.sqrt(len(x))) if len(x) > 1 else math.nan


def fig1(rho_db=(0.0, 10.0, 20.0, 30.0), betas=None):
    """Per-antenna large-system secrecy rate at xi_star versus load."""
    betas = tuple(np.round(np.arange(0.05, 2.5001, 0.05), 10)) if betas is None else betas
    t = Table(["rho_db", "beta", "deteq_per_user", "deteq_per_antenna", "beta_star_grid",
               "beta_tilde_highsnr"])
    for rdb in rho_db:
        rho = rmt.db_to_linear(rdb)
        vals = [rmt.secrecy_rate_deteq(rmt.LoadPoint(b, rho, rmt.xi_star(b, rho)))
                for b in betas]
        per_ant = [v.rate_per_antenna for v in vals]
        bstar = float(betas[int(np.argmax(per_ant))])
        btil = solve_beta_fixedpoint(rho)
        for b, v in zip(betas, vals):
            t.add(dict(rho_db=rdb, beta=float(b), deteq_per_user=v.rate_per_user,
                       deteq_per_antenna=v.rate_per_antenna, beta_star_grid=bstar,
                       beta_tilde_highsnr=btil))
    return t


def fig2(M=64, trials=500, seed=0, betas=(0.8, 1.0, 1.2), rho_db=None):
    """Simulated ergodic versus large-system per-antenna secrecy rate."""
    rho_db = _rho_grid(0, 30, 5) if rho_db is None else rho_db
    t = Table(["beta", "rho_db", "M", "K", "mc_per_antenna", "mc_stderr_per_antenna",
               "deteq_per_antenna", "mc_skipped"])
    for b in betas:
        base = SystemConfig(M, max(1, int(round(b * M))), 1.0, trials=trials, seed=seed)
        sw = run_sweep(SweepSpec("rho_db", tuple(rho_db), base, ("mc", "deteq")))
        for r in sw.records():
            t.add(dict(beta=b, rho_db=r["rho_db"], M=M, K=r["K"],
                       mc_per_antenna=r["mc_per_antenna"],
                       mc_stderr_per_antenna=r["mc_stderr_per_antenna"],
                       deteq_per_antenna=r["deteq_per_antenna"], mc_skipped=r["mc_skipped"]))
    return t


def fig3(M=(16, 32, 64), rho_db=(0.0, 10.0, 20.0), beta=0.8, trials=100, seed=0):
    """Mean normalized loss of xi_star against per-realization optimization."""
    t = Table(["beta", "rho_db", "M", "K", "mean_loss", "stderr_loss", "mean_xi_empirical",
               "xi_star", "trials_used"])
    for rdb in rho_db:
        rho = rmt.db_to_linear(rdb)
        for m in M:
            K = max(1, int(round(beta * m)))
            losses, xis = normalized_loss_trials(m, K, rho, trials, seed)
            t.add(dict(beta=beta, rho_db=rdb, M=m, K=K, mean_loss=float(losses.mean()),
                       stderr_loss=_se(losses), mean_xi_empirical=float(xis.mean()),
                       xi_star=rmt.xi_star(K / m, rho), trials_used=len(losses)))
    return t


def fig4(M=(10, 20, 40), rho_db=None, trials=50, seed=0):
    """Optimal user count: simulated, exhaustive large-system, and high-SNR fixed point."""
    rho_db = _rho_grid(0, 30, 5) if rho_db is None else rho_db
    t = Table(["M", "rho_db", "K_star_mc", "K_star_deteq", "K_tilde_highsnr"])
    for m in M:
        for rdb in rho_db:
            rho = rmt.db_to_linear(rdb)
            means = [ergodic_run(SystemConfig(m, K, rho, trials=trials, seed=seed)).mean
                     for K in range(1, 2 * m)]
            t.add(dict(M=m, rho_db=rdb, K_star_mc=int(np.argmax(means)) + 1,
                       K_star_deteq=optimal_user_count(m, rho),
                       K_tilde_highsnr=optimal_user_count_highsnr(m, rho)))
    return t


def fig5(M=10, betas=(1.2, 1.4, 1.6), rho_db=None, trials=500, seed=0):
    """Ergodic secrecy sum-rate of RCI and RCI-PR for overloaded systems."""
    rho_db = _rho_grid(0, 40, 2.5) if rho_db is None else rho_db
    t = Table(["beta", "rho_db", "M", "K", "mc_rci_sum", "mc_rci_stderr", "mc_pr_sum",
               "mc_pr_stderr", "r", "power_saved_pct", "deteq_rci_sum", "deteq_pr_sum"])
    for b in betas:
        K = max(1, int(round(b * M)))
        beta = K / M
        for rdb in rho_db:
            rho = rmt.db_to_linear(rdb)
            cfg = SystemConfig(M, K, rho, trials=trials, seed=seed)
            rci = ergodic_run(cfg, "rci")
            pr = ergodic_run(cfg, "rci_pr")
            de = rmt.secrecy_rate_deteq(rmt.LoadPoint(beta, rho, rmt.xi_star(beta, rho)))
            t.add(dict(beta=b, rho_db=rdb, M=M, K=K, mc_rci_sum=rci.mean,
                       mc_rci_stderr=rci.stderr, mc_pr_sum=pr.mean, mc_pr_stderr=pr.stderr,
                       r=pr.r, power_saved_pct=100.0 * (1.0 - 1.0 / pr.r),
                       deteq_rci_sum=K * de.rate_per_user,
                       deteq_pr_sum=K * rmt.rcipr_rate_deteq(beta, rho).rate_per_user))
    return t


def fig6(K=12, betas=(0.8, 1.0, 1.2), rho_db=None, trials=500, seed=0):
    """Per-user RCI-PR rate against the no-secrecy rate and the single-user high-SNR law."""
    rho_db = _rho_grid(0, 30, 2.5) if rho_db is None else rho_db
    t = Table(["beta", "rho_db", "M", "K", "mc_pr_per_user", "mc_pr_stderr",
               "mc_nosecrecy_per_user", "mc_nosecrecy_stderr", "deteq_pr_per_user",
               "deteq_nosecrecy_per_user", "highsnr_pr_per_user",
               "highsnr_nosecrecy_per_user", "su_capacity_highsnr_law", "r"])
    for b in betas:
        M = max(1, int(round(K / b)))
        beta = K / M
        for rdb in rho_db:
            rho = rmt.db_to_linear(rdb)
            cfg = SystemConfig(M, K, rho, trials=trials, seed=seed)
            pr = ergodic_run(cfg, "rci_pr")
            ns = ergodic_run(cfg, "nosecrecy")
            t.add(dict(beta=b, rho_db=rdb, M=M, K=K, mc_pr_per_user=pr.mean / K,
                       mc_pr_stderr=pr.stderr / K,
                       mc_nosecrecy_per_user=ns.nosecrecy_mean / K,
                       mc_nosecrecy_stderr=ns.nosecrecy_stderr / K,
                       deteq_pr_per_user=rmt.rcipr_rate_deteq(beta, rho).rate_per_user,
                       deteq_nosecrecy_per_user=rmt.sumrate_nosecrecy_deteq(beta, rho),
                       highsnr_pr_per_user=rmt.rcipr_rate_highsnr(beta, rho),
                       highsnr_nosecrecy_per_user=rmt.sumrate_nosecrecy_highsnr(beta, rho),
                       su_capacity_highsnr_law=rmt.su_secrecy_capacity_highsnr(beta, rho),
                       r=pr.r))
    return t


def fig7(M=10, betas=(0.5, 1.0, 1.2), rho_db=None, b=2.0, c_overloaded=0.1, trials=500,
         seed=0):
    """RCI-PR per-user rate with perfect CSI and with distortion scaled as C / rho."""
    rho_db = _rho_grid(0, 40, 5) if rho_db is None else rho_db
    t = Table(["beta", "rho_db", "M", "K", "tau_sq", "mc_perfect_per_user",
               "mc_perfect_stderr", "mc_csi_per_user", "mc_csi_stderr",
               "deteq_perfect_per_user", "deteq_csi_per_user", "deteq_gap", "target_gap"])
    for bt in betas:
        K = max(1, int(round(bt * M)))
        beta = K / M
        C = rmt.gap_constant(beta, b).C if beta <= 1.0 else c_overloaded
        target = math.log2(b) if beta <= 1.0 else 0.0
        for rdb in rho_db:
            rho = rmt.db_to_linear(rdb)
            tau_sq = min(C / rho, 1.0)
            cfg = SystemConfig(M, K, rho, trials=trials, seed=seed)
            perf = ergodic_run(cfg, "rci_pr")
            csi = ergodic_run(replace(cfg, tau_sq=tau_sq), "rci_pr")
            dp = rmt.rcipr_rate_deteq(beta, rho).rate_per_user
            dc = rmt.rcipr_rate_deteq(beta, rho, tau_sq).rate_per_user
            t.add(dict(beta=bt, rho_db=rdb, M=M, K=K, tau_sq=tau_sq,
                       mc_perfect_per_user=perf.mean / K, mc_perfect_stderr=perf.stderr / K,
                       mc_csi_per_user=csi.mean / K, mc_csi_stderr=csi.stderr / K,
                       deteq_perfect_per_user=dp, deteq_csi_per_user=dc, deteq_gap=dp - dc,
                       target_gap=target))
    return t


FIGURES = {f.__name__: f for f in (fig1, fig2, fig3, fig4, fig5, fig6, fig7)}


def run_figure(preset_id, **overrides) -> Table:
    """Reproduce one figure as a table. Keyword overrides replace preset defaults."""
    try:
        fn = FIGURES[preset_id]
    except KeyError:
        raise DomainError(f"unknown figure {preset_id!r}; choose from {sorted(FIGURES)}")
    params = inspect.signature(fn).parameters
    bad = sorted(set(overrides) - set(params))
    if bad:
        raise DomainError(f"{preset_id} does not accept {bad}; valid: {sorted(params)}")
    table = fn(**overrides)
    resolved = {k: (overrides[k] if k in overrides else p.default) for k, p in params.items()}
    table.meta = {"figure": preset_id, **resolved}
    return table
