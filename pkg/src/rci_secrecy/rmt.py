"""Closed-form large-system expressions for RCI precoding with confidential messages.

Every function here is a pure scalar function. SNRs are linear (``rho = 1/sigma^2``);
conversion from dB happens at the caller's boundary via :func:`db_to_linear`.

Notation
--------
beta : users per transmit antenna, ``K / M``.
rho  : transmit SNR (linear).
xi   : RCI regularization parameter (may be negative).
g    : deterministic equivalent of ``h_k^H (H_k^H H_k + M xi I)^{-1} h_k``; it is the root
       of ``xi g^2 + (xi + beta - 1) g - 1 = 0`` selected by the Stieltjes-transform
       branch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "XI_ZERO",
    "DEFAULT_C",
    "DEFAULT_EPS",
    "LoadPoint",
    "DetEqResult",
    "CsiDistortion",
    "GapSpec",
    "db_to_linear",
    "linear_to_db",
    "excluded_interval",
    "g_deteq",
    "g_derivative",
    "power_norm_deteq",
    "rate_zero_xi",
    "secrecy_rate_deteq",
    "csi_distortion",
    "secrecy_rate_deteq_csi",
    "xi_star",
    "xi_star_highsnr",
    "rho_star",
    "rcipr_rate_deteq",
    "rcipr_rate_highsnr",
    "xi_nosecrecy",
    "sumrate_nosecrecy_deteq",
    "sumrate_nosecrecy_highsnr",
    "su_secrecy_capacity_highsnr",
    "gap_constant",
    "feedback_bits",
    "rvq_distortion_bound",
    "beta_fixedpoint_residual",
]

# |xi| below this evaluates the xi -> 0 limit; above it the closed form is stable
# (the squared gain (1+g)^2 ~ 1/xi^2 stays finite)
XI_ZERO = 1e-100

# constants of the admissible set D_M: half-width inflation delta = C / M^(1/2 - eps)
DEFAULT_C = 0.01
DEFAULT_EPS = 0.1


def db_to_linear(x_db):
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class LoadPoint:
    beta: float
    rho: float
    xi: float = 0.0

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if not self.rho > 0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        if not math.isfinite(self.xi):
            raise DomainError(f"xi must be finite, got {self.xi}")


@dataclass(frozen=True)
class DetEqResult:
    """Large-system quantities at one load point. Rates are in bits."""

    g: float
    sinr_user: float
    sinr_eve: float
    rate_per_user: float
    rate_per_antenna: float

    @property
    def log_ratio(self) -> float:
        """Per-user secrecy rate before the ``[.]^+`` clamp."""
        return _log_ratio(self.sinr_user, self.sinr_eve)


@dataclass(frozen=True)
class CsiDistortion:
    tau_sq: float
    rho_tilde: float
    xi_tilde: float


@dataclass(frozen=True)
class GapSpec:
    b: float
    C: float

    @property
    def gap_bits(self) -> float:
        return math.log2(self.b)


def excluded_interval(beta, M=None, C=DEFAULT_C, eps=DEFAULT_EPS):
    """Return the closed interval of xi excluded from the admissible set.

    This is the negated Marchenko-Pastur support ``[-(1+sqrt(beta))^2, -(1-sqrt(beta))^2]``
    inflated on both sides by ``C / M^(1/2 - eps)``. With ``M=None`` the large-system limit
    (no inflation) is returned.
    """
    sb = math.sqrt(beta)
    delta = 0.0 if M is None else C / M ** (0.5 - eps)
    return -((1.0 + sb) ** 2) - delta, -((1.0 - sb) ** 2) + delta


def _discriminant(beta, xi):
    b = xi + beta - 1.0
    return b, b * b + 4.0 * xi


def g_deteq(beta, xi):
    """Deterministic equivalent g(beta, xi).

    This is the limit of ``h^H (H^H H + M xi I)^{-1} h`` for a column ``h`` independent
    of ``H``, i.e. the Stieltjes transform of the Marchenko-Pastur law evaluated at ``-xi``. With
    ``b = xi + beta - 1`` and ``D = b^2 + 4 xi`` it is the root ``(sqrt(D) - b) / (2 xi)``
    of the quadratic identity right of the spectrum (evaluated as ``2 / (b + sqrt(D))``
    when ``b >= 0`` to avoid cancellation) and the root ``-2 / (sqrt(D) - b)`` left of it.
    The value is negative for ``xi < -(1+sqrt(beta))^2`` and, when ``beta < 1``, for
    ``-(1-sqrt(beta))^2 < xi < 0``.

    Raises
    ------
    DomainError
        If ``xi == 0`` or xi lies strictly inside the negated Marchenko-Pastur support.
    """
    if not beta > 0.0:
        raise DomainError(f"beta must be positive, got {beta!r}")
    if xi == 0.0:
        raise DomainError("g(beta, xi) is undefined at xi = 0; use the xi -> 0 limit")
    b, D = _discriminant(beta, xi)
    if D < 0.0:
        raise DomainError(
            f"xi={xi!r} lies inside the excluded spectrum interval for beta={beta!r}"
        )
    sd = math.sqrt(D)
    if b >= 0.0:
        return 2.0 / (b + sd)
    if xi < -((1.0 + math.sqrt(beta)) ** 2):
        # left of the spectrum the closed form's sign(xi) branch picks the wrong root
        return -2.0 / (sd - b)
    return (sd - b) / (2.0 * xi)


def g_derivative(beta, xi):
    """dg/dxi by implicit differentiation of ``xi g^2 + (xi + beta - 1) g - 1 = 0``."""
    g = g_deteq(beta, xi)
    den = 2.0 * xi * g + xi + beta - 1.0
    if abs(den) < 1e-14:
        raise DomainError(f"dg/dxi is singular at beta={beta!r}, xi={xi!r}")
    return -g * (g + 1.0) / den


def power_norm_deteq(beta, xi):
    """Deterministic equivalent ``g + xi dg/dxi`` shared by B_k and gamma."""
    return g_deteq(beta, xi) + xi * g_derivative(beta, xi)


def _log_ratio(sinr_user, sinr_eve):
    if 1.0 + sinr_user <= 0.0:
        return -math.inf
    return math.log2(1.0 + sinr_user) - math.log2(1.0 + sinr_eve)


def rate_zero_xi(beta, rho):
    """Per-user large-system secrecy rate of channel inversion (xi = 0).

    The per-antenna value is ``beta`` times the result.
    """
    if beta <= 1.0:
        return math.log2(1.0 + (1.0 - beta) * rho / beta)
    d = beta - 1.0
    val = math.log2(beta**3 * (beta + rho * d) / (beta**2 + rho * d * d) ** 2)
    return max(val, 0.0)


def _sinrs(beta, xi, rho_sig, rho, tau_sq):
    """Large-system (g, user SINR, eavesdropper SINR).

    ``rho_sig`` and ``xi`` are the effective SNR and regularization seen by the intended
    user; ``rho`` and ``tau_sq`` enter the eavesdropper term.
    """
    if abs(xi) < XI_ZERO:
        if beta < 1.0:
            return math.inf, rho_sig * (1.0 - beta) / beta, rho * tau_sq
        if beta == 1.0:
            return math.inf, 0.0, rho * tau_sq
        g = 1.0 / (beta - 1.0)
        t = (1.0 + g) ** 2
        return g, g * rho_sig / (rho_sig + t), rho * (tau_sq + (1.0 - tau_sq) / t)
    g = g_deteq(beta, xi)
    t = (1.0 + g) ** 2
    su = g * (rho_sig + rho_sig * xi * t / beta) / (rho_sig + t)
    se = rho * (tau_sq + (1.0 - tau_sq) / t)
    return g, su, se


def _result(beta, g, su, se, rate=None):
    if rate is None:
        rate = max(_log_ratio(su, se), 0.0)
    return DetEqResult(g=g, sinr_user=su, sinr_eve=se, rate_per_user=rate,
                       rate_per_antenna=beta * rate)


def secrecy_rate_deteq(p: LoadPoint) -> DetEqResult:
    """Large-system secrecy rate of RCI precoding with perfect CSI.

    For ``|xi| < XI_ZERO`` the channel-inversion limit is used, interpreted per antenna
    (per-user rate = per-antenna rate / beta) so the result is continuous in xi.
    """
    g, su, se = _sinrs(p.beta, p.xi, p.rho, p.rho, 0.0)
    rate = rate_zero_xi(p.beta, p.rho) if abs(p.xi) < XI_ZERO else None
    return _result(p.beta, g, su, se, rate)


def csi_distortion(rho, tau_sq, xi=0.0) -> CsiDistortion:
    if not 0.0 <= tau_sq <= 1.0:
        raise DomainError(f"tau_sq must lie in [0, 1], got {tau_sq}")
    rho_t = rho * (1.0 - tau_sq) / (rho * tau_sq + 1.0)
    xi_t = xi / (1.0 - tau_sq) if tau_sq < 1.0 else math.copysign(math.inf, xi)
    return CsiDistortion(tau_sq=tau_sq, rho_tilde=rho_t, xi_tilde=xi_t)


def secrecy_rate_deteq_csi(p: LoadPoint, d: CsiDistortion | float) -> DetEqResult:
    """Large-system secrecy rate when the precoder is built from a distorted estimate.

    ``d`` may be a :class:`CsiDistortion` or a bare ``tau_sq``; in either case the
    effective SNR and regularization are recomputed from ``p`` so they stay consistent.
    """
    tau_sq = d.tau_sq if isinstance(d, CsiDistortion) else float(d)
    if tau_sq == 0.0:
        return secrecy_rate_deteq(p)
    if tau_sq >= 1.0:
        if tau_sq > 1.0:
            raise DomainError(f"tau_sq must lie in [0, 1], got {tau_sq}")
        return _result(p.beta, math.nan, 0.0, p.rho, 0.0)
    dist = csi_distortion(p.rho, tau_sq, p.xi)
    g, su, se = _sinrs(p.beta, dist.xi_tilde, dist.rho_tilde, p.rho, tau_sq)
    return _result(p.beta, g, su, se)


def xi_star(beta, rho, check=False):
    """Large-system secrecy-rate maximizing regularization parameter.

    The closed form is ``(P - Q sqrt(S)) / (6 rho^2 (beta+2) + 6 rho beta)``. Whenever
    ``P`` and ``Q sqrt(S)`` share a sign, the algebraically identical
    ``2 beta (1 - (rho+1)(beta-1)^2) / (P + Q sqrt(S))`` is used instead.

    With ``check=True`` a central difference of the unclamped log-ratio at the result is
    required to vanish (relative 1e-5); ``ArithmeticError`` is raised otherwise.
    """
    if not (beta > 0 and rho > 0):
        raise DomainError("beta and rho must be positive")
    d = 1.0 - beta
    P = -2.0 * rho**2 * d * d + 6.0 * rho * beta + 2.0 * beta**2
    Q = 2.0 * (beta * (rho + 1.0) - rho)
    S = beta**2 * (rho**2 + rho + 1.0) - 2.0 * beta * rho * (rho - 1.0) + rho**2
    qs = Q * math.sqrt(S)
    if P * qs > 0.0:
        x = 2.0 * beta * (1.0 - (rho + 1.0) * d * d) / (P + qs)
    else:
        x = (P - qs) / (6.0 * rho**2 * (beta + 2.0) + 6.0 * rho * beta)
    if check:
        _check_stationary(beta, rho, x)
    return x


def _check_stationary(beta, rho, x):
    h = 1e-7 * max(abs(x), 1e-3)

    def f(t):
        return secrecy_rate_deteq(LoadPoint(beta, rho, t)).log_ratio

    grad = (f(x + h) - f(x - h)) / (2.0 * h)
    scale = max(abs(f(x)), 1e-12)
    if abs(grad) * max(abs(x), 1e-3) > 1e-5 * scale:
        raise ArithmeticError(f"xi_star({beta}, {rho}) = {x} is not stationary (grad {grad})")


def xi_star_highsnr(beta, rho):
    if beta < 1.0:
        return beta / (2.0 * rho)
    if beta == 1.0:
        return 1.0 / (3.0 * rho)
    return (-2.0 * (beta - 1.0) ** 2 / (3.0 * (beta + 2.0))
            + beta * (2.0 - beta) / (2.0 * rho * (beta + 2.0)))


def rho_star(beta):
    """SNR maximizing the optimized RCI secrecy rate for ``1 < beta < 2``.

    Returns ``(rho_star, peak_per_user)`` with the peak in bits per user.
    """
    if not 1.0 < beta < 2.0:
        raise DomainError(f"rho_star is defined only for 1 < beta < 2, got {beta}")
    rs = beta * (2.0 - beta) / (beta - 1.0) ** 2
    return rs, math.log2(beta**2 / (4.0 * (beta - 1.0)))


def rcipr_rate_deteq(beta, rho, tau_sq=0.0) -> DetEqResult:
    """Large-system rate of RCI with power reduction at xi = xi_star.

    For ``1 < beta < 2`` the precoder operates at ``min(rho, rho_star)``; the
    eavesdroppers' noise is unchanged, so the effective SNR replaces ``rho`` everywhere.
    For ``beta >= 2`` nothing is transmitted.
    """
    if beta >= 2.0:
        return _result(beta, math.nan, 0.0, 0.0, 0.0)
    rho_eff = min(rho, rho_star(beta)[0]) if beta > 1.0 else rho
    p = LoadPoint(beta, rho_eff, xi_star(beta, rho_eff))
    return secrecy_rate_deteq_csi(p, tau_sq)


def rcipr_rate_highsnr(beta, rho):
    """High-SNR law of the per-user RCI-PR secrecy rate (bits).

    The ``beta < 1`` and ``beta == 1`` branches are asymptotes and can be negative at
    small ``rho``; they are not clamped.
    """
    if beta < 1.0:
        return math.log2((1.0 - beta) / beta) + math.log2(rho)
    if beta == 1.0:
        return 0.5 * math.log2(27.0 / 64.0) + 0.5 * math.log2(rho)
    if beta < 2.0:
        return math.log2(beta**2 / (4.0 * (beta - 1.0)))
    return 0.0


def xi_nosecrecy(beta, rho):
    return beta / rho


def sumrate_nosecrecy_deteq(beta, rho):
    """Per-user rate of sum-rate optimal RCI without secrecy constraints."""
    return math.log2(1.0 + g_deteq(beta, xi_nosecrecy(beta, rho)))


def sumrate_nosecrecy_highsnr(beta, rho):
    if beta < 1.0:
        return math.log2((1.0 - beta) / beta) + math.log2(rho)
    if beta == 1.0:
        return 0.5 * math.log2(rho)
    return math.log2(beta / (beta - 1.0))


def su_secrecy_capacity_highsnr(beta, rho):
    """High-SNR law of the single-user MISOME secrecy capacity, eavesdropper of K-1 antennas."""
    if beta < 1.0:
        return math.log2(rho)
    if beta == 1.0:
        return 0.5 * math.log2(rho)
    if beta < 2.0:
        return math.log2(1.0 / (beta - 1.0))
    return 0.0


def gap_constant(beta, b) -> GapSpec:
    """Constant C such that ``tau^2 = C / rho`` costs ``log2(b)`` bits per user at high SNR.

    Only defined for ``beta <= 1``; for ``beta > 1`` any vanishing distortion gives zero gap.
    """
    if beta > 1.0:
        raise DomainError("gap_constant is defined for beta <= 1 only")
    if b < 1.0:
        raise DomainError(f"b must be at least 1, got {b}")
    if beta < 1.0:
        C = 0.5 * (math.sqrt(4.0 * b - 3.0) - 1.0)
    else:
        C = 2.0 / 3.0 * (math.sqrt(3.0 * b - 2.0) - 1.0)
    return GapSpec(b=b, C=C)


def feedback_bits(M, rho_db, b):
    """RVQ feedback bits per user that keep the high-SNR gap at ``log2(b)`` bits."""
    if M < 2:
        raise DomainError("feedback_bits needs M >= 2")
    if b <= 1.0:
        raise DomainError(f"b must exceed 1, got {b}")
    B = (M - 1) / 3.0 * rho_db - (M - 1) * (math.log2(math.sqrt(4.0 * b - 3.0) - 1.0) - 1.0)
    return max(0, math.ceil(B))


def rvq_distortion_bound(M, B):
    """Upper bound ``2^(-B/(M-1))`` on the RVQ quantization distortion."""
    return 2.0 ** (-B / (M - 1))


def beta_fixedpoint_residual(beta_tilde, rho):
    """Residual of the high-SNR optimal-load fixed point; zero at the optimum."""
    u = 1.0 - beta_tilde
    return beta_tilde - rho * u * math.exp(-1.0 / u)
