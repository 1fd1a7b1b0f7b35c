"""Finite-size Monte Carlo evaluation of RCI / RCI-PR secrecy rates."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import rmt
from ._kernels import sinr_from_gain
from .errors import DomainError, IllConditioned, TooManySkipped

__all__ = [
    "COND_MAX",
    "SystemConfig",
    "ChannelSet",
    "PrecoderResult",
    "RateReport",
    "LeaveOneOutForms",
    "ErgodicResult",
    "PRECODER_KINDS",
    "trial_rng",
    "sample_channel",
    "build_rci",
    "rci_dual_forms",
    "build_rci_pr",
    "compute_rates",
    "leave_one_out_forms",
    "rewritten_sinrs",
    "ergodic_run",
    "dump_matrix",
    "load_matrix",
]

COND_MAX = 1e12
PRECODER_KINDS = ("rci", "rci_pr", "nosecrecy", "empirical")


@dataclass(frozen=True)
class SystemConfig:
    """One simulated scenario. ``xi=None`` means the large-system optimum for ``kind``."""

    M: int
    K: int
    rho: float
    xi: float | None = None
    tau_sq: float = 0.0
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.M < 1 or self.K < 1:
            raise DomainError("M and K must be positive")
        if not self.rho > 0:
            raise DomainError("rho must be positive")
        if not 0.0 <= self.tau_sq <= 1.0:
            raise DomainError("tau_sq must lie in [0, 1]")
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    @property
    def beta(self) -> float:
        return self.K / self.M


@dataclass(frozen=True)
class ChannelSet:
    H: np.ndarray
    H_hat: np.ndarray
    E: np.ndarray


@dataclass(frozen=True)
class PrecoderResult:
    W: np.ndarray
    gamma: float
    r: float = 1.0
    xi: float = math.nan

    @property
    def power(self) -> float:
        return float(np.vdot(self.W, self.W).real)


@dataclass(frozen=True)
class RateReport:
    sinr_user: np.ndarray
    sinr_eve: np.ndarray
    rate_per_user: np.ndarray
    sum: float

    @property
    def sum_nosecrecy(self) -> float:
        """Sum rate ignoring the secrecy constraint."""
        return float(np.log2(1.0 + self.sinr_user).sum())


@dataclass(frozen=True)
class LeaveOneOutForms:
    A: np.ndarray
    B: np.ndarray
    A_hat: np.ndarray | None = None
    B_hat: np.ndarray | None = None
    Q: np.ndarray | None = None
    R: np.ndarray | None = None


@dataclass
class ErgodicResult:
    mean: float
    stderr: float
    per_user_mean: np.ndarray
    sums: np.ndarray
    skipped: int
    nosecrecy_mean: float
    nosecrecy_stderr: float
    xi: float
    r: float
    skipped_trials: list = field(default_factory=list)


def trial_rng(seed, trial):
    """Independent generator for one trial.

    The stream is ``PCG64(SeedSequence(seed, spawn_key=(trial,)))``, so trial ``t`` draws the
    same numbers regardless of how many trials run or in which order.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial,))))


def _cn(rng, shape):
    # CN(0, 1): independent real and imaginary parts, each of variance 1/2
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * math.sqrt(0.5)


def sample_channel(cfg: SystemConfig, rng) -> ChannelSet:
    """Draw ``H = H_hat + E`` with entry variances ``1 - tau_sq`` and ``tau_sq``.

    Both Gaussian blocks are always drawn so a given stream yields the same underlying
    realization for every ``tau_sq``; with ``tau_sq = 0``, ``E`` is exactly zero.
    """
    shape = (cfg.K, cfg.M)
    Z1 = _cn(rng, shape)
    Z2 = _cn(rng, shape)
    H_hat = math.sqrt(1.0 - cfg.tau_sq) * Z1
    E = math.sqrt(cfg.tau_sq) * Z2
    return ChannelSet(H=H_hat + E, H_hat=H_hat, E=E)


def _regularized_gram(H, xi):
    K, M = H.shape
    if K <= M:
        return H @ H.conj().T + M * xi * np.eye(K)
    return H.conj().T @ H + M * xi * np.eye(M)


def _solve_hermitian(A, rhs, xi, cond_max):
    lam = np.linalg.eigvalsh(A)
    alam = np.abs(lam)
    cond = alam.max() / alam.min() if alam.min() > 0 else math.inf
    if cond > cond_max:
        raise IllConditioned(f"regularized Gram matrix has condition {cond:.3g}", cond=cond)
    try:
        return scipy.linalg.solve(A, rhs, assume_a="pos" if xi >= 0 else "her")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise IllConditioned(str(exc), cond=cond) from exc


def build_rci(H_used, xi, cond_max=COND_MAX) -> PrecoderResult:
    """RCI precoder ``W = (H^H H + M xi I)^{-1} H^H / sqrt(gamma)``, ``tr(W W^H) = 1``.

    The smaller of the two equivalent systems is solved: ``K x K`` when ``K <= M``,
    ``M x M`` otherwise. This keeps ``xi = 0`` usable on both sides of ``beta = 1``.
    """
    H = np.asarray(H_used, dtype=np.complex128)
    K, M = H.shape
    A = _regularized_gram(H, xi)
    if K <= M:
        W0 = _solve_hermitian(A, H, xi, cond_max).conj().T
    else:
        W0 = _solve_hermitian(A, H.conj().T, xi, cond_max)
    gamma = float(np.vdot(W0, W0).real)
    return PrecoderResult(W=W0 / math.sqrt(gamma), gamma=gamma, r=1.0, xi=float(xi))


def rci_dual_forms(H, xi):
    """Both factorization orders of the unnormalized RCI matrix, for cross-checking."""
    H = np.asarray(H, dtype=np.complex128)
    K, M = H.shape
    Hh = H.conj().T
    left = Hh @ np.linalg.inv(H @ Hh + M * xi * np.eye(K))
    right = np.linalg.solve(Hh @ H + M * xi * np.eye(M), Hh)
    return left, right


def build_rci_pr(H_used, rho, xi=None, cond_max=COND_MAX) -> PrecoderResult:
    """RCI with power reduction.

    ``beta <= 1``: plain RCI at ``xi_star(beta, rho)``. ``1 < beta < 2``: RCI at
    ``xi_star(beta, min(rho, rho_star))`` with power scaled by ``1/r``,
    ``r = max(rho / rho_star, 1)``. ``beta >= 2``: zero precoder (``r = inf``).
    An explicit ``xi`` overrides the large-system choice.
    """
    H = np.asarray(H_used, dtype=np.complex128)
    K, M = H.shape
    beta = K / M
    if beta >= 2.0:
        return PrecoderResult(W=np.zeros((M, K), dtype=np.complex128), gamma=math.inf,
                              r=math.inf, xi=math.nan)
    if beta <= 1.0:
        x = rmt.xi_star(beta, rho) if xi is None else xi
        return build_rci(H, x, cond_max)
    rs, _ = rmt.rho_star(beta)
    x = rmt.xi_star(beta, min(rho, rs)) if xi is None else xi
    base = build_rci(H, x, cond_max)
    r = max(rho / rs, 1.0)
    return PrecoderResult(W=base.W / math.sqrt(r), gamma=base.gamma, r=r, xi=base.xi)


def compute_rates(H_true, P: PrecoderResult, rho) -> RateReport:
    """Exact per-realization SINRs and clamped per-user secrecy rates."""
    G = np.asarray(H_true, dtype=np.complex128) @ P.W
    su, se = sinr_from_gain(G, rho)
    rates = np.maximum(np.log2(1.0 + su) - np.log2(1.0 + se), 0.0)
    return RateReport(sinr_user=su, sinr_eve=se, rate_per_user=rates, sum=float(rates.sum()))


def _loo_solve(Hk, M, xi, v):
    T = Hk.conj().T @ Hk + M * xi * np.eye(M)
    try:
        x = np.linalg.solve(T, v)
    except np.linalg.LinAlgError as exc:
        raise IllConditioned(str(exc)) from exc
    if not np.all(np.isfinite(x)):
        raise IllConditioned("non-finite leave-one-out solve")
    return x


def _ab(H, xi):
    K, M = H.shape
    A = np.empty(K)
    B = np.empty(K)
    for k in range(K):
        Hk = np.delete(H, k, axis=0)
        h = H[k].conj()
        x = _loo_solve(Hk, M, xi, h)
        A[k] = np.vdot(h, x).real
        B[k] = np.linalg.norm(Hk @ x) ** 2
    return A, B


def leave_one_out_forms(H, xi, E=None) -> LeaveOneOutForms:
    """Leave-one-out quadratic forms, each computed by a direct linear solve.

    With ``E`` given, ``H`` is the estimate ``H_hat``; ``A, B`` then refer to the true
    channel ``H_hat + E`` and ``A_hat, B_hat, Q, R`` to the estimate, with ``e_k`` the
    k-th error row (``E[k] = e_k^H``).
    """
    H = np.asarray(H, dtype=np.complex128)
    if E is None:
        A, B = _ab(H, xi)
        return LeaveOneOutForms(A=A, B=B)
    E = np.asarray(E, dtype=np.complex128)
    A, B = _ab(H + E, xi)
    K, M = H.shape
    A_hat = np.empty(K)
    B_hat = np.empty(K)
    Q = np.empty(K, dtype=np.complex128)
    R = np.empty(K)
    for k in range(K):
        Hk = np.delete(H, k, axis=0)
        h = H[k].conj()
        e = E[k].conj()
        x = _loo_solve(Hk, M, xi, h)
        y = _loo_solve(Hk, M, xi, e)
        a = np.vdot(h, x).real
        Pe = y - x * (np.vdot(h, y) / (1.0 + a))
        Hx = Hk @ x
        HPe = Hk @ Pe
        A_hat[k] = a
        B_hat[k] = np.linalg.norm(Hx) ** 2
        Q[k] = np.vdot(Hx, HPe)
        R[k] = np.linalg.norm(HPe) ** 2
    return LeaveOneOutForms(A=A, B=B, A_hat=A_hat, B_hat=B_hat, Q=Q, R=R)


def rewritten_sinrs(aq: LeaveOneOutForms, gamma, rho):
    """SINRs expressed through A_k, B_k and the normalization ``gamma``."""
    den = gamma * (1.0 + aq.A) ** 2
    return rho * aq.A**2 / (den + rho * aq.B), rho * aq.B / den


def _precoder(kind, cfg, H_used):
    if kind == "rci":
        xi = rmt.xi_star(cfg.beta, cfg.rho) if cfg.xi is None else cfg.xi
        return build_rci(H_used, xi)
    if kind == "rci_pr":
        return build_rci_pr(H_used, cfg.rho, cfg.xi)
    if kind == "nosecrecy":
        xi = rmt.xi_nosecrecy(cfg.beta, cfg.rho) if cfg.xi is None else cfg.xi
        return build_rci(H_used, xi)
    if kind == "empirical":
        from .optimize import xi_star_empirical

        xi = xi_star_empirical(H_used, cfg.rho)
        return build_rci(H_used, xi)
    raise DomainError(f"unknown precoder kind {kind!r}; expected one of {PRECODER_KINDS}")


def _one_trial(cfg, kind, t):
    ch = sample_channel(cfg, trial_rng(cfg.seed, t))
    try:
        P = _precoder(kind, cfg, ch.H_hat)
    except IllConditioned as exc:
        exc.trial = t
        return t, None, exc
    return t, (P, compute_rates(ch.H, P, cfg.rho)), None


def default_workers():
    return max(1, int(os.environ.get("RCI_SECRECY_THREADS", "1")))


def ergodic_run(cfg: SystemConfig, precoder_kind="rci", stat_sink=None, workers=None,
                max_skip_frac=0.01) -> ErgodicResult:
    """Average the secrecy sum-rate over ``cfg.trials`` independent channel draws.

    Trials whose precoder is ill-conditioned are skipped and counted; if more than
    ``max_skip_frac`` of them are skipped, :class:`TooManySkipped` is raised.
    ``stat_sink(trial, precoder, report)`` is called for every kept trial in index order.
    """
    workers = default_workers() if workers is None else workers
    idx = range(cfg.trials)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda t: _one_trial(cfg, precoder_kind, t), idx))
    else:
        results = [_one_trial(cfg, precoder_kind, t) for t in idx]

    sums = np.full(cfg.trials, np.nan)
    ns = np.full(cfg.trials, np.nan)
    per_user = np.zeros(cfg.K)
    skipped = []
    xi = r = math.nan
    for t, out, err in results:
        if err is not None:
            skipped.append(t)
            continue
        P, rep = out
        sums[t] = rep.sum
        ns[t] = rep.sum_nosecrecy
        per_user += rep.rate_per_user
        xi, r = P.xi, P.r
        if stat_sink is not None:
            stat_sink(t, P, rep)
    if len(skipped) > max_skip_frac * cfg.trials:
        raise TooManySkipped(
            f"{len(skipped)} of {cfg.trials} trials ill-conditioned (first: trial {skipped[0]})"
        )
    kept = sums[~np.isnan(sums)]
    n = kept.size
    ns_kept = ns[~np.isnan(ns)]

    def _se(v):
        return float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else math.nan

    return ErgodicResult(
        mean=float(kept.mean()),
        stderr=_se(kept),
        per_user_mean=per_user / n,
        sums=sums,
        skipped=len(skipped),
        nosecrecy_mean=float(ns_kept.mean()),
        nosecrecy_stderr=_se(ns_kept),
        xi=xi,
        r=r,
        skipped_trials=skipped,
    )


def dump_matrix(A, path):
    """Write a complex matrix as text: ``rows cols`` then one ``re,im`` pair per entry."""
    A = np.atleast_2d(np.asarray(A, dtype=np.complex128))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{A.shape[0]} {A.shape[1]}\n")
        for row in A:
            fh.write(" ".join(f"{float(z.real)!r},{float(z.imag)!r}" for z in row) + "\n")


def load_matrix(path):
    with open(path, encoding="utf-8") as fh:
        rows, cols = map(int, fh.readline().split())
        data = []
        for line in fh:
            for tok in line.split():
                re, im = tok.split(",")
                data.append(complex(float(re), float(im)))
    return np.array(data, dtype=np.complex128).reshape(rows, cols)
