"""Gradient-flow transforms, stationary laws and log-Sobolev constants.

For the six-factor family ``dv = gamma v^a (theta - v) dt + kappa v^b dW`` the
map ``sigma = g(v)`` turns the diffusion coefficient into the constant
``sqrt(2)`` so that ``d sigma = sqrt(2) dW - V'(sigma) dt`` and the stationary
density in ``sigma`` is the Gibbs law ``exp(-V) / Z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .catalog import ExpOUOneFactorParams, ExpOUTwoFactorParams, ModelSpec, SixFactorParams
from .numerics import (
    QuadratureError,
    QuadratureSpec,
    digamma,
    integrate,
    integrate_log_domain,
    ln_gamma,
)

SQRT2 = math.sqrt(2.0)

# Tight enough that normalisation holds to 1e-8 and entropies to 1e-6.
LAW_QUADRATURE = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-12, max_subdivisions=2000)

# Value printed in the published results table for the (a=0, b=3/2) row; the
# defining formula gamma*theta/kappa^2 gives ~8.18e-4.
PUBLISHED_ALPHA_A0_B32 = 8.511e-4


# --------------------------------------------------------------------------
# gradient-flow form
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GradientFlowForm:
    g: Callable[[float], float]
    g_prime: Callable[[float], float]
    g_inverse: Callable[[float], float]
    V: Callable[[float], float]
    V_prime: Callable[[float], float]
    V_second: Callable[[float], float]
    domain: tuple[float, float]


def to_gradient_flow(params: SixFactorParams) -> GradientFlowForm:
    """Coordinate change ``sigma = g(v)`` with potential derivatives."""
    a, b = params.a, params.b
    gamma, theta, kappa = params.gamma, params.theta, params.kappa
    k = SQRT2 * gamma / kappa

    if b == 1.0:
        c = kappa / SQRT2

        def expint(q, s):
            return s if q == 0 else math.exp(q * s) / q

        return GradientFlowForm(
            g=lambda v: math.log(v) / c,
            g_prime=lambda v: 1.0 / (c * v),
            g_inverse=lambda s: math.exp(c * s),
            V=lambda s: -k * (theta * expint((a - 1) * c, s) - expint(a * c, s)) + c * s,
            V_prime=lambda s: -k * (theta * math.exp((a - 1) * c * s) - math.exp(a * c * s)) + c,
            V_second=lambda s: -k * c * (theta * (a - 1) * math.exp((a - 1) * c * s)
                                         - a * math.exp(a * c * s)),
            domain=(-math.inf, math.inf),
        )

    one_b = 1.0 - b
    c = kappa * one_b / SQRT2        # u = c * sigma = v^(1-b) > 0
    p1 = (a - b) / one_b
    p2 = (a - b + 1) / one_b
    lead = b / one_b

    def upow_int(p, s):
        u = c * s
        if p == -1.0:
            return math.log(abs(s)) / c
        return u ** (p + 1) / ((p + 1) * c)

    return GradientFlowForm(
        g=lambda v: v ** one_b / c,
        g_prime=lambda v: SQRT2 / (kappa * v ** b),
        g_inverse=lambda s: (c * s) ** (1.0 / one_b),
        V=lambda s: -k * (theta * upow_int(p1, s) - upow_int(p2, s)) + lead * math.log(abs(s)),
        V_prime=lambda s: -k * (theta * (c * s) ** p1 - (c * s) ** p2) + lead / s,
        V_second=lambda s: -k * c * (theta * p1 * (c * s) ** (p1 - 1) - p2 * (c * s) ** (p2 - 1))
        - lead / (s * s),
        domain=(0.0, math.inf) if c > 0 else (-math.inf, 0.0),
    )


# --------------------------------------------------------------------------
# laws
# --------------------------------------------------------------------------


class StationaryLaw:
    """Base class; subclasses are immutable descriptions of one density."""

    kind = "abstract"
    variable = "variance_v"
    exists = True
    domain: tuple[float, float] = (0.0, math.inf)

    def logpdf(self, x: float) -> float:
        raise NotImplementedError

    def pdf(self, x: float) -> float:
        return math.exp(self.logpdf(x))

    # mass location hints for quadrature, in log coordinates for (0, inf)
    def _hint(self) -> tuple[float, float]:
        return 0.0, 1.0

    def expect(self, fn: Callable[[float], float], spec: QuadratureSpec = LAW_QUADRATURE):
        """``E[fn(X)]`` by quadrature, returned as ``(value, error)``."""
        center, scale = self._hint()
        lo, hi = self.domain
        if lo == 0.0 and hi == math.inf:
            return integrate_log_domain(lambda x: fn(x) * self.pdf(x), spec,
                                        center=center, scale=scale)
        if lo == -math.inf and hi == 0.0:
            return integrate_log_domain(lambda y: fn(-y) * self.pdf(-y), spec,
                                        center=center, scale=scale)
        return integrate(_zero_safe(lambda x: fn(x) * self.pdf(x)), lo, hi, spec,
                         center=center, scale=scale)

    def total_mass(self) -> float:
        return self.expect(lambda x: 1.0)[0]

    def entropy_numeric(self) -> float:
        return self.expect(lambda x: -self.logpdf(x))[0]

    def log_moment_numeric(self) -> float:
        return self.expect(math.log)[0]

    # closed forms where the subclass has them
    def entropy(self) -> float:
        return self.entropy_numeric()

    def log_moment(self) -> float:
        return self.log_moment_numeric()

    def moment(self, p: float) -> float:
        """``E[X^p]``."""
        return self.expect(lambda x: x ** p)[0]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError


def _zero_safe(fn):
    def wrapped(x):
        try:
            y = fn(x)
        except (OverflowError, ZeroDivisionError, ValueError):
            return 0.0
        return y if math.isfinite(y) else 0.0
    return wrapped


@dataclass(frozen=True)
class GammaLaw(StationaryLaw):
    alpha: float
    beta: float     # rate
    kind = "Gamma"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("Gamma law needs alpha > 0 and beta > 0")

    def logpdf(self, x):
        return (self.alpha * math.log(self.beta) - ln_gamma(self.alpha)
                + (self.alpha - 1) * math.log(x) - self.beta * x)

    def _hint(self):
        return math.log(self.alpha / self.beta), 1.0 + 1.0 / math.sqrt(self.alpha)

    def entropy(self):
        a = self.alpha
        return a - math.log(self.beta) + ln_gamma(a) + (1 - a) * digamma(a)

    def log_moment(self):
        return digamma(self.alpha) - math.log(self.beta)

    def moment(self, p):
        if self.alpha + p <= 0:
            return math.inf
        return math.exp(ln_gamma(self.alpha + p) - ln_gamma(self.alpha) - p * math.log(self.beta))

    def sample(self, rng, size):
        return rng.gamma(self.alpha, 1.0 / self.beta, size)


@dataclass(frozen=True)
class InverseGammaLaw(StationaryLaw):
    alpha: float
    beta: float     # scale of v, rate of 1/v
    kind = "InverseGamma"

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("InverseGamma law needs alpha > 0 and beta > 0")

    def logpdf(self, x):
        return (self.alpha * math.log(self.beta) - ln_gamma(self.alpha)
                - (self.alpha + 1) * math.log(x) - self.beta / x)

    def _hint(self):
        return math.log(self.beta / self.alpha), 1.0 + 1.0 / math.sqrt(self.alpha)

    def entropy(self):
        a = self.alpha
        return a + math.log(self.beta) + ln_gamma(a) - (1 + a) * digamma(a)

    def log_moment(self):
        return math.log(self.beta) - digamma(self.alpha)

    def moment(self, p):
        if self.alpha - p <= 0:
            return math.inf
        return math.exp(ln_gamma(self.alpha - p) - ln_gamma(self.alpha) + p * math.log(self.beta))

    def sample(self, rng, size):
        return self.beta / rng.gamma(self.alpha, 1.0, size)


@dataclass(frozen=True)
class GaussianLaw(StationaryLaw):
    mean: float
    variance: float
    kind = "Gaussian"
    variable = "ou_state"
    domain = (-math.inf, math.inf)

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError("Gaussian law needs variance > 0")

    def logpdf(self, x):
        return -0.5 * math.log(2 * math.pi * self.variance) - (x - self.mean) ** 2 / (2 * self.variance)

    def _hint(self):
        return self.mean, math.sqrt(self.variance)

    def entropy(self):
        return 0.5 * math.log(2 * math.pi * math.e * self.variance)

    def log_moment(self):
        raise ValueError("E[log X] is undefined for a Gaussian state")

    def exp_moment(self, c: float = 1.0) -> float:
        """``E[exp(c X)]``."""
        return math.exp(c * self.mean + 0.5 * c * c * self.variance)

    def sample(self, rng, size):
        return self.mean + math.sqrt(self.variance) * rng.standard_normal(size)


class NumericGibbsLaw(StationaryLaw):
    """``exp(-V(x)) / Z`` with ``Z`` found by adaptive quadrature."""

    kind = "NumericGibbs"

    def __init__(self, V, domain, *, variable="variance_v", hint=(0.0, 1.0),
                 spec: QuadratureSpec = LAW_QUADRATURE, metadata=None):
        self.V = V
        self.domain = tuple(domain)
        self.variable = variable
        self._hint_value = hint
        self.metadata = dict(metadata or {})
        self._log_z = 0.0
        z, err = self.expect(lambda x: 1.0, spec)
        if not z > 0:
            raise QuadratureError("Gibbs normaliser is not positive")
        self.Z = z
        self.Z_error = err
        self._log_z = math.log(z)
        self._cdf = None

    def _hint(self):
        return self._hint_value

    def logpdf(self, x):
        return -self.V(x) - self._log_z

    def sample(self, rng, size):
        u_grid, cdf = self._inverse_cdf_table()
        u = np.interp(rng.uniform(size=size), cdf, u_grid)
        return self._from_log_coord(u)

    def _from_log_coord(self, u):
        lo, hi = self.domain
        if lo == 0.0 and hi == math.inf:
            return np.exp(u)
        if lo == -math.inf and hi == 0.0:
            return -np.exp(u)
        return u

    def _inverse_cdf_table(self, n=200_001):
        if self._cdf is None:
            center, scale = self._hint_value
            grid = np.linspace(center - 40 * scale, center + 40 * scale, n)
            x = self._from_log_coord(grid)
            logd = np.array([_safe_logpdf(self, xi) for xi in x])
            if self.domain[1] == math.inf and self.domain[0] == 0.0 or self.domain == (-math.inf, 0.0):
                logd = logd + grid      # Jacobian of x = +-e^u
            w = np.exp(logd - logd.max())
            cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]))])
            cdf /= cdf[-1]
            keep = np.concatenate([[True], np.diff(cdf) > 0])
            self._cdf = (grid[keep], cdf[keep])
        return self._cdf


def _safe_logpdf(law, x):
    try:
        y = law.logpdf(float(x))
    except (OverflowError, ZeroDivisionError, ValueError):
        return -math.inf
    return y if not math.isnan(y) else -math.inf


@dataclass(frozen=True)
class NonExistent(StationaryLaw):
    reason: str
    code: str
    kind = "NonExistent"
    exists = False

    def logpdf(self, x):
        raise ValueError(f"no stationary law: {self.reason}")

    def entropy(self):
        raise ValueError(f"no stationary law: {self.reason}")

    def log_moment(self):
        raise ValueError(f"no stationary law: {self.reason}")


# --------------------------------------------------------------------------
# six-factor laws
# --------------------------------------------------------------------------


def six_factor_shape(params: SixFactorParams) -> tuple[float, float]:
    """Shape and scale ``(alpha, beta)`` of the stationary law for ``(a, b)``.

    For ``(1, 1/2)`` no law exists and ``(nan, nan)`` is returned.
    """
    a, b = params.a, params.b
    g, th, k2 = params.gamma, params.theta, params.kappa ** 2
    if (a, b) == (0, 1.0):
        return 2 * g / k2 + 1, 2 * g * th / k2
    if (a, b) == (1, 1.5):
        return 2 * g / k2 + 2, 2 * g * th / k2
    if (a, b) == (1, 1.0):
        return 2 * g * th / k2 - 1, 2 * g / k2
    if (a, b) == (0, 0.5):
        return 2 * g * th / k2, 2 * g / k2
    if (a, b) == (0, 1.5):
        return g * th / k2, math.nan
    return math.nan, math.nan


def a0_b32_law(params: SixFactorParams) -> NumericGibbsLaw:
    """``rho(v) ~ v^-3 exp(-alpha (1/v - 1/theta)^2)``, ``alpha = gamma theta / kappa^2``."""
    alpha, _ = six_factor_shape(params)
    theta = params.theta

    def V(v):
        return 3.0 * math.log(v) + alpha * (1.0 / v - 1.0 / theta) ** 2

    return NumericGibbsLaw(
        V, (0.0, math.inf), variable="variance_v", hint=(math.log(theta), 1.0),
        metadata={
            "alpha": alpha,
            "alpha_published": PUBLISHED_ALPHA_A0_B32,
            "alpha_discrepancy": alpha - PUBLISHED_ALPHA_A0_B32,
        },
    )


def stationary_law(spec_or_params) -> StationaryLaw:
    """Stationary law of the variance (six-factor) or OU state (expOU).

    Non-existence is returned as a :class:`NonExistent` value.
    """
    params = spec_or_params.params if isinstance(spec_or_params, ModelSpec) else spec_or_params
    if isinstance(params, ExpOUOneFactorParams):
        return GaussianLaw(0.0, params.kappa_sq / (2 * params.gamma))
    if isinstance(params, ExpOUTwoFactorParams):
        var = params.kappa1_sq / (2 * params.gamma1) + params.kappa2_sq / (2 * params.gamma2)
        return GaussianLaw(0.0, var)

    a, b = params.a, params.b
    alpha, beta = six_factor_shape(params)
    if (a, b) in ((0, 1.0), (1, 1.5)):
        return InverseGammaLaw(alpha, beta)
    if (a, b) == (1, 1.0):
        if alpha > 1:
            return GammaLaw(alpha, beta)
        return NonExistent(
            f"origin not reflecting: alpha = 2 gamma theta / kappa^2 - 1 = {alpha:.6g} <= 1",
            "alpha-threshold",
        )
    if (a, b) == (0, 0.5):
        if alpha > 1:
            return GammaLaw(alpha, beta)
        return NonExistent(
            f"origin not reflecting: alpha = 2 gamma theta / kappa^2 = {alpha:.6g} <= 1",
            "alpha-threshold",
        )
    if (a, b) == (0, 1.5):
        return a0_b32_law(params)
    return NonExistent("e^{-V} not integrable; no stationary solution for a=1, b=1/2",
                       "not-integrable")


def gibbs_law_sigma(params: SixFactorParams) -> NumericGibbsLaw:
    """The stationary law in gradient-flow coordinates, normalised numerically."""
    if not stationary_law(params).exists:
        raise ValueError("no stationary law for these parameters")
    form = to_gradient_flow(params)
    v_centre = params.theta
    s_centre = form.g(v_centre)
    lo, hi = form.domain
    if lo == -math.inf and hi == math.inf:
        hint = (s_centre, 1.0 / (params.kappa / SQRT2))
    else:
        hint = (math.log(abs(s_centre)), 1.0)
    return NumericGibbsLaw(form.V, form.domain, variable="log_coord_sigma", hint=hint)


# --------------------------------------------------------------------------
# log-Sobolev constants
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SobolevConstant:
    lam: float | None
    derivation: str
    coordinate: str = ""
    # Hessian of the potential in the coordinate where lam was derived
    hessian: Callable[[float], float] | None = field(default=None, compare=False)
    domain: tuple[float, float] = (-math.inf, math.inf)


def sobolev_constant(spec_or_params) -> SobolevConstant:
    params = spec_or_params.params if isinstance(spec_or_params, ModelSpec) else spec_or_params
    if isinstance(params, ExpOUOneFactorParams):
        lam = 2 * params.gamma / params.kappa_sq
        return SobolevConstant(lam, "uniform-hessian-bound", "v", lambda x: lam)
    if isinstance(params, ExpOUTwoFactorParams):
        law = stationary_law(params)
        lam = 1.0 / law.variance
        return SobolevConstant(lam, "uniform-hessian-bound", "w", lambda x: lam)

    law = stationary_law(params)
    if not law.exists:
        raise ValueError(f"no stationary law: {law.reason}")
    a, b = params.a, params.b
    alpha, beta = six_factor_shape(params)
    if (a, b) == (0, 1.5):
        ap = params.gamma * params.kappa ** 2 * params.theta / 64.0
        bp = params.gamma / 8.0
        form = to_gradient_flow(params)
        if 3 * params.kappa * math.sqrt(params.theta / params.gamma) <= 1:
            return SobolevConstant(None, "critical-point-minimum", "sigma",
                                   form.V_second, form.domain)
        lam = 12 * math.sqrt(ap) - 4 * bp
        return SobolevConstant(lam, "critical-point-minimum", "sigma", form.V_second, form.domain)

    # squared-Gamma coordinate x with x^2 ~ Gamma(alpha, rate); V'' = 2 rate + (2 alpha - 1)/x^2
    if (a, b) == (1, 1.5):
        rate, coord = params.gamma * params.theta / 4.0, "sigma = g(v), sigma^2 = 8/(kappa^2 v)"
    elif (a, b) == (0, 0.5):
        rate, coord = params.gamma / 4.0, "sigma = g(v), sigma^2 = 8 v / kappa^2"
    elif (a, b) == (0, 1.0):
        rate, coord = beta, "v^(-1/2)"
    else:
        rate, coord = beta, "v^(1/2)"
    return SobolevConstant(
        2 * rate, "squared-gamma-coordinate", coord,
        lambda x: 2 * rate + (2 * alpha - 1) / (x * x), (0.0, math.inf),
    )


def entropy(law: StationaryLaw) -> float:
    """Differential entropy in nats."""
    return law.entropy()


def log_moment(law: StationaryLaw) -> float:
    """``E[log v]`` under the law."""
    return law.log_moment()
