"""Special functions and deterministic quadrature.

``ln_gamma`` and ``digamma`` are self-contained (Lanczos approximation and an
asymptotic series with upward recurrence).  ``integrate`` wraps QUADPACK's
adaptive Gauss-Kronrod rule behind a variable transformation for unbounded
domains, and exposes fixed Gauss-Hermite / Gauss-Legendre rules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate as _spi

EULER_GAMMA = 0.57721566490153286061

# Lanczos coefficients, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# Bernoulli-number coefficients B_2k / (2k) of the digamma asymptotic series.
_DIGAMMA_SERIES = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)


class QuadratureError(RuntimeError):
    """Raised when an integral does not reach its requested tolerance."""


def ln_gamma(x: float) -> float:
    """Natural logarithm of the Gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"ln_gamma requires x > 0, got {x!r}")
    if x < 0.5:
        # lnG(x) = lnG(x + 1) - ln x keeps the Lanczos sum in its accurate range
        return ln_gamma(x + 1.0) - math.log(x)
    z = x - 1.0
    acc = _LANCZOS_COEF[0]
    for i, c in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return 0.5 * math.log(2.0 * math.pi) + (z + 0.5) * math.log(t) - t + math.log(acc)


def digamma(x: float) -> float:
    """Digamma function for ``x > 0``."""
    x = float(x)
    if not x > 0.0:
        raise ValueError(f"digamma requires x > 0, got {x!r}")
    shift = 0.0
    while x < 10.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for c in _DIGAMMA_SERIES:
        series += c * power
        power *= inv2
    return shift + math.log(x) - 0.5 / x - series


@dataclass(frozen=True)
class QuadratureSpec:
    """Tolerances and rule selection for :func:`integrate`."""

    method: str = "adaptive-interval"
    abs_tol: float = 1e-12
    rel_tol: float = 1e-10
    max_subdivisions: int = 1000
    nodes: int = 64

    def __post_init__(self):
        if self.method not in ("adaptive-interval", "gauss-hermite", "gauss-legendre"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("abs_tol and rel_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.nodes < 2:
            raise ValueError("nodes must be >= 2")


DEFAULT_QUADRATURE = QuadratureSpec()


def _adaptive(g, lo, hi, spec):
    value, err, info = _spi.quad(
        g, lo, hi,
        epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        limit=spec.max_subdivisions, full_output=True,
    )[:3]
    return value, err


def _fixed(f, a, b, spec, center, scale):
    def rule(n):
        if spec.method == "gauss-hermite":
            if not (math.isinf(a) and math.isinf(b)):
                raise ValueError("gauss-hermite needs the whole real line")
            x, w = np.polynomial.hermite.hermgauss(n)
            pts = center + scale * x
            # divide out the e^{-x^2} weight carried by the integrand
            vals = np.array([f(p) for p in pts]) * np.exp(x * x)
            return scale * float(np.dot(w, vals))
        if math.isinf(a) or math.isinf(b):
            raise ValueError("gauss-legendre needs a finite interval")
        x, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (b - a)
        pts = a + half * (x + 1.0)
        return half * float(np.dot(w, [f(p) for p in pts]))

    coarse = rule(spec.nodes)
    fine = rule(2 * spec.nodes)
    return fine, abs(fine - coarse)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    *,
    center: float = 0.0,
    scale: float = 1.0,
) -> tuple[float, float]:
    """Integrate ``f`` over ``(a, b)``; either end may be infinite.

    Returns ``(value, error_estimate)``.  Unbounded ranges are mapped onto
    finite ones: ``x = a + scale * t / (1 - t)`` for ``(a, inf)`` and
    ``x = center + scale * t / (1 - t**2)`` for the real line.  ``center`` and
    ``scale`` should roughly locate the integrand's mass; they do not change
    the value, only how quickly the adaptive rule finds it.

    Raises :class:`QuadratureError` if the reported error exceeds
    ``max(abs_tol, rel_tol * |value|)``.
    """
    if not scale > 0:
        raise ValueError("scale must be positive")
    if spec.method != "adaptive-interval":
        value, err = _fixed(f, a, b, spec, center, scale)
    else:
        a_inf, b_inf = math.isinf(a), math.isinf(b)
        if a_inf and b_inf:
            def g(t):
                d = 1.0 - t * t
                return f(center + scale * t / d) * scale * (1.0 + t * t) / (d * d)
            value, err = _adaptive(g, -1.0, 1.0, spec)
        elif b_inf:
            def g(t):
                d = 1.0 - t
                return f(a + scale * t / d) * scale / (d * d)
            value, err = _adaptive(g, 0.0, 1.0, spec)
        elif a_inf:
            def g(t):
                d = 1.0 - t
                return f(b - scale * t / d) * scale / (d * d)
            value, err = _adaptive(g, 0.0, 1.0, spec)
        else:
            value, err = _adaptive(f, a, b, spec)
    if not math.isfinite(value) or err > max(spec.abs_tol, spec.rel_tol * abs(value)):
        raise QuadratureError(
            f"quadrature did not converge: value={value!r}, error={err!r}"
        )
    return value, err


def _safe(fn):
    """Wrap an integrand so endpoint overflow/underflow evaluates to zero."""

    def wrapped(x):
        with np.errstate(all="ignore"):
            try:
                y = fn(x)
            except (OverflowError, ZeroDivisionError, ValueError):
                return 0.0
        return y if math.isfinite(y) else 0.0

    return wrapped


def integrate_log_domain(
    f: Callable[[float], float],
    spec: QuadratureSpec = DEFAULT_QUADRATURE,
    *,
    center: float = 0.0,
    scale: float = 1.0,
) -> tuple[float, float]:
    """Integrate ``f`` over ``(0, inf)`` through the substitution ``x = e^u``.

    ``center`` and ``scale`` are given in log coordinates.  Suited to
    densities on the positive half-line whose mass sits far from 1.
    """
    g = _safe(lambda u: f(math.exp(u)) * math.exp(u))
    return integrate(g, -math.inf, math.inf, spec, center=center, scale=scale)
