"""Scalar maximization and root finding for regularization, load and user count."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rmt
from ._kernels import secrecy_sum_spectral
from .errors import DomainError, EmptyDomain, IllConditioned, NoBracket
from .montecarlo import COND_MAX

__all__ = [
    "CLIP",
    "SearchDomain",
    "admissible_domain",
    "golden_section_max",
    "maximize_scalar",
    "xi_star_numeric",
    "empirical_rate_curve",
    "xi_star_empirical",
    "solve_beta_fixedpoint",
    "optimal_user_count",
    "optimal_user_count_highsnr",
]

CLIP = 50.0
GRID_POINTS = 64
_INVGOLD = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SearchDomain:
    """Union of disjoint, sorted, finite intervals.

    ``bound`` records the clip applied to unbounded ends; a grid laid over an interval is
    clustered toward whichever end is not a clip end (the spectrum side).
    """

    intervals: tuple
    bound: float = CLIP

    def __post_init__(self):
        prev = -math.inf
        for lo, hi in self.intervals:
            if not lo < hi:
                raise DomainError(f"empty interval ({lo}, {hi})")
            if lo < prev:
                raise DomainError("intervals must be sorted and disjoint")
            prev = hi

    def __contains__(self, x):
        return any(lo <= x <= hi for lo, hi in self.intervals)


def admissible_domain(beta, M=None, C=rmt.DEFAULT_C, eps=rmt.DEFAULT_EPS, clip=CLIP):
    """The admissible regularization set, clipped to ``[-clip, clip]``.

    ``M=None`` gives the large-system set (no inflation of the excluded interval).
    """
    lo, hi = rmt.excluded_interval(beta, M, C, eps)
    parts = []
    if lo > -clip:
        parts.append((-clip, lo))
    if hi < clip:
        parts.append((max(hi, -clip), clip))
    if not parts:
        raise EmptyDomain("admissible set is empty after clipping")
    return SearchDomain(tuple(parts), clip)


def _grid(lo, hi, n, bound):
    span = hi - lo
    at_lo = math.isclose(lo, -bound)
    at_hi = math.isclose(hi, bound)
    if at_lo == at_hi:
        return np.linspace(lo, hi, n)
    off = span * np.geomspace(1e-6, 1.0, n)
    return np.sort(hi - off) if at_lo else lo + off


def _safe(f, vectorized):
    def call(xs):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if vectorized:
            try:
                v = np.asarray(f(xs), dtype=float)
            except (IllConditioned, DomainError):
                v = np.full(xs.shape, -np.inf)
        else:
            v = np.empty(xs.shape)
            for i, x in enumerate(xs):
                try:
                    v[i] = f(float(x))
                except (IllConditioned, DomainError):
                    v[i] = -np.inf
        v[~np.isfinite(v)] = -np.inf
        return v

    return call


def golden_section_max(f, a, b, tol=1e-6, max_iter=200):
    """Golden-section search for the maximum of a unimodal ``f`` on ``[a, b]``."""
    x1 = b - _INVGOLD * (b - a)
    x2 = a + _INVGOLD * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVGOLD * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVGOLD * (b - a)
            f2 = f(x2)
    return (x1, f1) if f1 >= f2 else (x2, f2)


def maximize_scalar(f, domain: SearchDomain, tol=1e-6, grid=GRID_POINTS, vectorized=False):
    """Global maximum of ``f`` over ``domain`` by grid bracketing plus golden section.

    Points where ``f`` raises :class:`IllConditioned` / :class:`DomainError` or returns a
    non-finite value count as ``-inf``. Ties go to the smallest argument.

    Returns
    -------
    (argmax, max)
    """
    if not domain.intervals:
        raise EmptyDomain("no interval to search")
    call = _safe(f, vectorized)
    best_x, best_v = math.nan, -math.inf
    for lo, hi in domain.intervals:
        xs = _grid(lo, hi, grid, domain.bound)
        vs = call(xs)
        i = int(np.argmax(vs))
        cand_x, cand_v = float(xs[i]), float(vs[i])
        if np.isfinite(cand_v):
            a = float(xs[max(i - 1, 0)])
            b = float(xs[min(i + 1, len(xs) - 1)])
            gx, gv = golden_section_max(lambda x: float(call(x)[0]), a, b, tol)
            if gv > cand_v:
                cand_x, cand_v = gx, gv
        if cand_v > best_v or (cand_v == best_v and cand_x < best_x):
            best_x, best_v = cand_x, cand_v
    if not np.isfinite(best_v):
        raise EmptyDomain("objective is not finite anywhere on the domain")
    return best_x, best_v


def xi_star_numeric(beta, rho, tol=1e-9):
    """Maximizer of the unclamped large-system secrecy rate over the large-system set."""

    def obj(x):
        return rmt.secrecy_rate_deteq(rmt.LoadPoint(beta, rho, x)).log_ratio

    return maximize_scalar(obj, admissible_domain(beta), tol=tol)


def _spectral_factors(H, H_true=None):
    H = np.asarray(H, dtype=np.complex128)
    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    L = U * s if H_true is None else np.asarray(H_true, dtype=np.complex128) @ Vh.conj().T
    return L, U, s


def empirical_rate_curve(H, rho, xis, H_true=None):
    """Per-realization secrecy sum-rate of RCI at each ``xi`` (``-inf`` if ill-conditioned)."""
    L, U, s = _spectral_factors(H, H_true)
    rates, cond = secrecy_sum_spectral(L, U, s, np.asarray(xis, dtype=float), H.shape[1], rho)
    rates = np.where(cond > COND_MAX, -np.inf, rates)
    return rates


def xi_star_empirical(H, rho, domain=None, tol=1e-6, H_true=None, grid=GRID_POINTS):
    """Regularization maximizing the secrecy sum-rate of one channel realization.

    The precoder is built from ``H``; rates are measured on ``H_true`` when given.
    The default domain is the admissible set for ``M = H.shape[1]``.
    """
    H = np.asarray(H, dtype=np.complex128)
    K, M = H.shape
    if domain is None:
        domain = admissible_domain(K / M, M)
    L, U, s = _spectral_factors(H, H_true)

    def f(xs):
        rates, cond = secrecy_sum_spectral(L, U, s, xs, M, rho)
        return np.where(cond > COND_MAX, -np.inf, rates)

    x, _ = maximize_scalar(f, domain, tol=tol, grid=grid, vectorized=True)
    return x


def solve_beta_fixedpoint(rho, tol=1e-12, max_iter=200):
    """High-SNR optimal network load: root in (0, 1) of the fixed-point residual."""
    if not rho > 0:
        raise DomainError("rho must be positive")
    lo, hi = 0.0, 1.0 - 1e-15
    flo = rmt.beta_fixedpoint_residual(lo, rho)
    fhi = rmt.beta_fixedpoint_residual(hi, rho)
    if flo * fhi > 0:
        raise NoBracket(f"no sign change of the residual on (0, 1) for rho={rho}")
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = rmt.beta_fixedpoint_residual(mid, rho)
        if abs(fm) < tol or hi - lo < 1e-16:
            return mid
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return mid


def optimal_user_count(M, rho):
    """K in 1..2M-1 maximizing the large-system secrecy sum-rate at ``xi_star``."""
    if M < 1:
        raise DomainError("M must be positive")
    best_k, best = 1, -math.inf
    for K in range(1, 2 * M):
        beta = K / M
        rate = rmt.secrecy_rate_deteq(rmt.LoadPoint(beta, rho, rmt.xi_star(beta, rho)))
        total = K * rate.rate_per_user
        if total > best:
            best_k, best = K, total
    return best_k


def optimal_user_count_highsnr(M, rho):
    """User count from the high-SNR fixed-point load, rounded and at least one."""
    return max(1, int(round(M * solve_beta_fixedpoint(rho))))
