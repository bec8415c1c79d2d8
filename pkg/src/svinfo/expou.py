"""Exponential Ornstein-Uhlenbeck models, one- and two-factor."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg

from .catalog import ExpOUOneFactorParams, ExpOUTwoFactorParams, ModelSpec, TRADING_DAYS
from .infobounds import InfoReport, gaussian_mi, leverage_mi
from .numerics import QuadratureError, QuadratureSpec, integrate
from .stationary import stationary_law

TABLE1_HISTORY = (1, 2, 3, 4, 5, 10, 100)


def ou_transition_mi(gamma: float, tau: float) -> float:
    """Exact I(v_tau : v_0) for a stationary OU process; kappa cancels."""
    if not (gamma > 0 and tau > 0):
        raise ValueError("gamma and tau must be positive")
    return -0.5 * math.log(-math.expm1(-2.0 * gamma * tau))


def expou_u2_bound(gamma: float, kappa_sq: float) -> float:
    """Log-Sobolev bound kappa^2 / (2 gamma) on I(r_tau : v_0)."""
    if not (gamma > 0 and kappa_sq > 0):
        raise ValueError("gamma and kappa_sq must be positive")
    return kappa_sq / (2.0 * gamma)


# --------------------------------------------------------------------------
# return / state mutual information for a log-normal scale mixture
# --------------------------------------------------------------------------

_MIX_NODES = 160
_MIX_QUAD = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-9, max_subdivisions=2000)


def mixture_density(m: float, state_variance: float, nodes: int = _MIX_NODES) -> Callable:
    """Density of ``r = m e^w z`` with ``w ~ N(0, state_variance)``, ``z ~ N(0, 1)``
    (one-period return at unit step).  The mixture over ``w`` uses Gauss-Hermite."""
    x, w = np.polynomial.hermite.hermgauss(nodes)
    scales = m * np.exp(math.sqrt(2.0 * state_variance) * x)
    weights = w / math.sqrt(math.pi) / (math.sqrt(2 * math.pi) * scales)
    inv2 = 0.5 / scales ** 2

    def pdf(r):
        return float(np.dot(weights, np.exp(-r * r * inv2)))

    return pdf


def lognormal_mixture_return_mi(m: float, state_variance: float) -> tuple[float, float]:
    """I(r_tau : w_0) = h(r_tau) - log(2 pi e m^2)/2 for ``r = m e^{w_0} z``.

    Returns ``(value, error_estimate)``.  ``h(r)`` is integrated over ``|r|``
    in log coordinates, out to 12 mixture standard deviations each way in
    the log scale.
    """
    if not m > 0:
        raise ValueError("m must be positive")
    if state_variance < 0:
        raise ValueError("state_variance must be non-negative")
    if state_variance == 0:
        return 0.0, 0.0
    pdf = mixture_density(m, state_variance)
    sd = math.sqrt(state_variance)
    lo = math.log(m) - 12.0 * sd - 12.0
    hi = math.log(m) + 12.0 * sd + 8.0

    def integrand(u):
        r = math.exp(u)
        p = pdf(r)
        if p <= 0.0:
            return 0.0
        return -2.0 * p * math.log(p) * r

    h_r, err = integrate(integrand, lo, hi, _MIX_QUAD)
    mass, mass_err = integrate(lambda u: 2.0 * pdf(math.exp(u)) * math.exp(u), lo, hi, _MIX_QUAD)
    if abs(mass - 1.0) > 1e-6:
        raise QuadratureError(f"mixture density mass {mass!r} after truncation")
    value = h_r - 0.5 * math.log(2 * math.pi * math.e * m * m)
    return value, err + mass_err


# --------------------------------------------------------------------------
# two-factor Gaussian process
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianStationaryProcess:
    """Stationary Gaussian sequence observed on a grid of step ``tau``."""

    components: tuple[tuple[float, float], ...]   # (stationary variance, decay rate) per factor
    tau: float

    @property
    def sigma_w_sq(self) -> float:
        return sum(var for var, _ in self.components)

    def cov(self, n) -> float:
        """Lag-``n`` covariance c_{w,n}."""
        return sum(var * math.exp(-rate * abs(n) * self.tau) for var, rate in self.components)

    def cov_matrix(self, n: int) -> np.ndarray:
        lags = np.arange(n)
        return scipy.linalg.toeplitz([self.cov(k) for k in lags])


def two_factor_process(params: ExpOUTwoFactorParams, tau: float) -> GaussianStationaryProcess:
    return GaussianStationaryProcess(
        components=(
            (params.kappa1_sq / (2 * params.gamma1), params.gamma1),
            (params.kappa2_sq / (2 * params.gamma2), params.gamma2),
        ),
        tau=tau,
    )


class SingularHistoryError(np.linalg.LinAlgError):
    pass


def conditional_variance(process: GaussianStationaryProcess, n: int) -> float:
    """Var(w_t | w_{t-n tau}, ..., w_{t-tau})."""
    if n < 1:
        raise ValueError("history length must be >= 1")
    C = process.cov_matrix(n)
    c = np.array([process.cov(k) for k in range(1, n + 1)])
    try:
        factor = scipy.linalg.cho_factor(C, lower=True)
    except np.linalg.LinAlgError:
        raise SingularHistoryError(
            f"history covariance not positive definite (cond={np.linalg.cond(C):.3g})"
        ) from None
    cond = np.linalg.cond(C)
    if cond > 1e14:
        raise SingularHistoryError(f"history covariance numerically singular (cond={cond:.3g})")
    return process.sigma_w_sq - float(c @ scipy.linalg.cho_solve(factor, c))


def history_mi(process: GaussianStationaryProcess, n: int) -> float:
    """I(w_t : w_{t-n tau}^{t-tau}) = log(sigma_w^2 / sigma_cond^2) / 2."""
    return 0.5 * math.log(process.sigma_w_sq / conditional_variance(process, n))


# --------------------------------------------------------------------------
# gaps and report
# --------------------------------------------------------------------------


def _state_variance(params) -> float:
    return stationary_law(params).variance


def expou_gaps(spec: ModelSpec) -> tuple[float, float]:
    """Daily-convention ``(G_r, G_f)``.

    ``G_r = log(m e^{var/2} / sigma_M)``,
    ``G_f = log(var / sigma_M^2)/2 + log m + log(252)/2``.
    """
    var = _state_variance(spec.params)
    m, s_m = spec.params.m, spec.sigma_M
    g_r = math.log(m / s_m) + 0.5 * var
    g_f = 0.5 * math.log(var / s_m ** 2) + math.log(m) + 0.5 * math.log(TRADING_DAYS)
    return g_r, g_f


def required_returns_per_day(spec: ModelSpec) -> float | None:
    """One-factor model: observations per day at which the exact U1 reaches G_f."""
    params = spec.params
    _, g_f = expou_gaps(spec)
    target = g_f - leverage_mi([params.rho])
    if target <= 0:
        return None
    # -log(1 - e^{-2 gamma tau}) / 2 = target
    tau = -math.log1p(-math.exp(-2.0 * target)) / (2.0 * params.gamma)
    return 1.0 / tau


def expou_report(spec: ModelSpec) -> InfoReport:
    params = spec.params
    var = _state_variance(params)
    g_r, g_f = expou_gaps(spec)
    if isinstance(params, ExpOUOneFactorParams):
        transition = ou_transition_mi(params.gamma, spec.tau)
        lev = leverage_mi([params.rho])
        numeric, numeric_err = lognormal_mixture_return_mi(params.m, var)
        per_day = required_returns_per_day(spec)
        return InfoReport(
            model_id=spec.id,
            tau=spec.tau,
            U1=transition + lev,
            U2=numeric,
            G_r=g_r,
            G_f=g_f,
            required_returns_per_annum=None if per_day is None else per_day * TRADING_DAYS,
            components={
                "proxy": transition,
                "transition_mi": transition,
                "leverage": lev,
                "U2_log_sobolev": expou_u2_bound(params.gamma, params.kappa_sq),
                "I_r_v0_numeric": numeric,
                "I_r_v0_numeric_error": numeric_err,
                "h_v": stationary_law(params).entropy(),
                "returns_per_day": per_day,
            },
        )
    process = two_factor_process(params, spec.tau)
    hist = {n: history_mi(process, n) for n in TABLE1_HISTORY}
    numeric, numeric_err = lognormal_mixture_return_mi(params.m, var)
    return InfoReport(
        model_id=spec.id,
        tau=spec.tau,
        U1=hist[max(hist)],
        U2=numeric,
        G_r=g_r,
        G_f=g_f,
        components={
            **{f"history_mi_n{n}": v for n, v in hist.items()},
            "proxy": hist[max(hist)],
            "leverage": 0.0,
            "U2_log_sobolev": var,
            "I_r_w0_numeric": numeric,
            "I_r_w0_numeric_error": numeric_err,
            "sigma_w_sq": var,
            "lag1_autocorrelation": process.cov(1) / process.sigma_w_sq,
            "one_step_gaussian_mi": gaussian_mi(process.cov(1) / process.sigma_w_sq),
        },
    )
