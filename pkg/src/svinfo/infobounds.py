"""Mutual-information proxies, upper bounds and information gaps.

All quantities are in nats.  For a six-factor model observed every ``tau``:

* ``U1 = proxy + leverage`` bounds I(volatility : return history),
* ``U2`` bounds I(future return : past returns) via the log-Sobolev route,
* ``G_r`` / ``G_f`` are the entropies of a return / volatility quote minus
  that of a Gaussian with the target precision ``sigma_M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .catalog import ExpOUOneFactorParams, ExpOUTwoFactorParams, ModelSpec, SixFactorParams, TRADING_DAYS
from .stationary import (
    six_factor_shape,
    sobolev_constant,
    stationary_law,
)

ANNUAL_TAU = 1.0 / TRADING_DAYS


class NoStationaryLaw(ValueError):
    """Raised when a quantity needs a stationary law the model does not have."""


def _params(spec_or_params):
    return spec_or_params.params if isinstance(spec_or_params, ModelSpec) else spec_or_params


def _law_or_raise(params):
    law = stationary_law(params)
    if not law.exists:
        raise NoStationaryLaw(law.reason)
    return law


def gaussian_mi(rho: float) -> float:
    """I(X:Y) for a jointly Gaussian pair with correlation ``rho``."""
    return -0.5 * math.log1p(-rho * rho)


def leverage_mi(rhos) -> float:
    """I(r_tau : v_tau | v_0) for correlations ``rhos`` between the return
    driver and each variance driver."""
    rhos = [float(r) for r in (rhos if hasattr(rhos, "__iter__") else [rhos])]
    if not rhos:
        raise ValueError("need at least one correlation")
    for r in rhos:
        if not -1.0 < r < 1.0:
            raise ValueError(f"correlation out of range (-1, 1): {r!r}")
    n = len(rhos)
    if n == 1:
        return gaussian_mi(rhos[0])
    return -0.5 * math.log(sum(1.0 - r * r for r in rhos) / n ** 2)


def mi_proxy(spec: ModelSpec, tau: float | None = None) -> float:
    """Small-tau proxy of I(v_tau : v_0).

    Six-factor: ``h(v) - log(2 pi e kappa^2 tau)/2 - b E[log v]``.
    expOU one-factor: the exact Gaussian value (no proxy needed).
    """
    tau = spec.tau if tau is None else tau
    params = spec.params
    if isinstance(params, ExpOUOneFactorParams):
        from .expou import ou_transition_mi
        return ou_transition_mi(params.gamma, tau)
    if isinstance(params, ExpOUTwoFactorParams):
        raise ValueError("the two-factor bound is history_mi, not a one-step proxy")
    law = _law_or_raise(params)
    return (law.entropy()
            - 0.5 * math.log(2 * math.pi * math.e * params.kappa ** 2 * tau)
            - params.b * law.log_moment())


def u1_bound(spec: ModelSpec, tau: float | None = None) -> float:
    return mi_proxy(spec, tau) + leverage_mi([_params(spec).rho])


def u2_bound(spec_or_params) -> float | None:
    """Upper bound on I(r_tau : v_0); ``None`` when the bound is undefined."""
    params = _params(spec_or_params)
    if isinstance(params, ExpOUOneFactorParams):
        from .expou import expou_u2_bound
        return expou_u2_bound(params.gamma, params.kappa_sq)
    if isinstance(params, ExpOUTwoFactorParams):
        # lambda = 1 / sigma_w^2 and |d/dw log(m e^w)|^2 = 1
        return stationary_law(params).variance
    law = _law_or_raise(params)
    if (params.a, params.b) == (0, 1.5):
        sob = sobolev_constant(params)
        if sob.lam is None:
            return None
        # sigma^2 = 8 / (kappa^2 v), so E[sigma^-2] = kappa^2 E[v] / 8
        inv_sigma_sq = params.kappa ** 2 * law.moment(1.0) / 8.0
        return inv_sigma_sq / sob.lam
    alpha, _ = six_factor_shape(params)
    if not alpha > 1:
        return None
    return 1.0 / (2.0 * (alpha - 1.0))


def sigma_f(spec_or_params) -> float:
    """Stationary mean of the volatility ``f(v)``."""
    params = _params(spec_or_params)
    law = _law_or_raise(params)
    if isinstance(params, SixFactorParams):
        return law.moment(0.5)
    # f = m e^w with w Gaussian
    return params.m * law.exp_moment(1.0)


def volatility_entropy(spec_or_params) -> float:
    """h(f(v)) for the stationary state, via h(f(v)) = h(v) + E[log |f'(v)|]."""
    params = _params(spec_or_params)
    law = _law_or_raise(params)
    if isinstance(params, SixFactorParams):
        # f = sqrt(v): log f' = -log 2 - log(v) / 2
        return law.entropy() - math.log(2.0) - 0.5 * law.log_moment()
    # f = m e^w: log f' = log m + w, E[w] = 0
    return law.entropy() + math.log(params.m) + law.mean


@dataclass(frozen=True)
class GapConvention:
    convention: str = "annual"

    def __post_init__(self):
        if self.convention not in ("annual", "daily"):
            raise ValueError(f"unknown gap convention {self.convention!r}")


ANNUAL = GapConvention("annual")
DAILY = GapConvention("daily")


def default_convention(spec: ModelSpec) -> GapConvention:
    return DAILY if spec.time_unit == "daily" else ANNUAL


def info_gaps(spec: ModelSpec, convention: GapConvention | None = None) -> tuple[float, float]:
    """``(G_r, G_f)`` for a quote precision ``spec.sigma_M``."""
    convention = convention or default_convention(spec)
    sf = sigma_f(spec)
    quote = 0.5 * math.log(2 * math.pi * math.e * spec.sigma_M ** 2)
    hf = volatility_entropy(spec)
    if convention.convention == "annual":
        g_r = math.log(sf * math.sqrt(spec.tau) / spec.sigma_M)
        g_f = hf - quote
    else:
        g_r = math.log(sf / spec.sigma_M)
        g_f = hf + 0.5 * math.log(TRADING_DAYS) - quote
    return g_r, g_f


def required_frequency(spec: ModelSpec) -> float | None:
    """Observations per annum at which U1 reaches G_f.

    Only the ``-log(tau)/2`` term of U1 depends on tau, so
    ``1/tau = (1/tau0) exp(2 (G_f - U1(tau0)))``.  ``None`` when U1 already
    covers the gap.
    """
    _, g_f = info_gaps(spec)
    gap = g_f - u1_bound(spec)
    if gap <= 0:
        return None
    per_unit = math.exp(2.0 * gap) / spec.tau
    return per_unit * TRADING_DAYS if spec.time_unit == "daily" else per_unit


@dataclass
class InfoReport:
    model_id: str
    tau: float
    U1: float | None = None
    U2: float | None = None
    G_r: float | None = None
    G_f: float | None = None
    required_returns_per_annum: float | None = None
    components: dict = field(default_factory=dict)
    exists: bool = True
    reason: str | None = None
    metadata: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "tau": self.tau,
            "exists": self.exists,
            "reason": self.reason,
            "U1": self.U1,
            "U2": self.U2,
            "G_r": self.G_r,
            "G_f": self.G_f,
            "required_returns_per_annum": self.required_returns_per_annum,
            "components": dict(self.components),
            "metadata": dict(self.metadata),
        }


def full_report(spec: ModelSpec) -> InfoReport:
    """Assemble every quantity for one model."""
    params = spec.params
    if not isinstance(params, SixFactorParams):
        from .expou import expou_report
        return expou_report(spec)

    law = stationary_law(params)
    if not law.exists:
        return InfoReport(spec.id, spec.tau, exists=False, reason=law.reason)

    h_v = law.entropy()
    e_log = law.log_moment()
    proxy = mi_proxy(spec)
    lev = leverage_mi([params.rho])
    g_r, g_f = info_gaps(spec)
    alpha, beta = six_factor_shape(params)
    meta = {"law": law.kind, "alpha": alpha, "beta": None if math.isnan(beta) else beta}
    meta.update(getattr(law, "metadata", {}))
    return InfoReport(
        model_id=spec.id,
        tau=spec.tau,
        U1=proxy + lev,
        U2=u2_bound(params),
        G_r=g_r,
        G_f=g_f,
        required_returns_per_annum=required_frequency(spec),
        components={"proxy": proxy, "leverage": lev, "h_v": h_v, "E_log_v": e_log},
        metadata=meta,
    )
