import math

import mpmath
import numpy as np
import pytest
from scipy import special, stats

from svinfo.catalog import ExpOUOneFactorParams, SixFactorParams, builtin_models, get_model
from svinfo.stationary import (
    GammaLaw,
    InverseGammaLaw,
    gibbs_law_sigma,
    six_factor_shape,
    sobolev_constant,
    stationary_law,
    to_gradient_flow,
)

EXISTING = [m for m in builtin_models() if stationary_law(m).exists]


def test_gradient_flow_maps():
    form = to_gradient_flow(get_model("sv-a0-b1").params)
    assert form.g(1.0) == 0.0
    heston = get_model("sv-a0-b0.5").params
    assert to_gradient_flow(heston).g(0.0523) == pytest.approx(1.1102, abs=1e-4)


@pytest.mark.parametrize("model_id", ["sv-a0-b0.5", "sv-a0-b1", "sv-a1-b1", "sv-a0-b1.5", "sv-a1-b1.5"])
def test_gradient_flow_consistency(model_id):
    p = get_model(model_id).params
    form = to_gradient_flow(p)
    for v in (0.01, 0.03, 0.1):
        s = form.g(v)
        assert form.g_inverse(s) == pytest.approx(v, rel=1e-12)
        h = 1e-6 * abs(s)
        assert (form.g(v * (1 + 1e-7)) - form.g(v * (1 - 1e-7))) / (2e-7 * v) == pytest.approx(
            form.g_prime(v), rel=1e-6)
        assert (form.V(s + h) - form.V(s - h)) / (2 * h) == pytest.approx(form.V_prime(s), rel=1e-5)
        assert (form.V_prime(s + h) - form.V_prime(s - h)) / (2 * h) == pytest.approx(
            form.V_second(s), rel=1e-5)


def test_gradient_flow_potential_a0_b32():
    p = get_model("sv-a0-b1.5").params
    form = to_gradient_flow(p)
    ap = p.gamma * p.kappa ** 2 * p.theta / 64.0
    bp = p.gamma / 8.0
    for s in (-0.3, -1.0, -2.5):
        assert form.V_prime(s) == pytest.approx(4 * (ap * s ** 3 - bp * s) - 3 / s, rel=1e-12)


@pytest.mark.parametrize("model_id, alpha, beta", [
    ("sv-a0-b0.5", 0.9598, 18.35),
    ("sv-a0-b1", 4.502, 0.09526),
    ("sv-a1-b1", 2.761, 102.5),
    ("sv-a1-b1.5", 4.599, 0.1008),
])
def test_shape_parameters(model_id, alpha, beta):
    a, b = six_factor_shape(get_model(model_id).params)
    assert a == pytest.approx(alpha, rel=2e-4)
    assert b == pytest.approx(beta, rel=1e-3)


def test_law_kinds():
    assert isinstance(stationary_law(get_model("sv-a0-b1")), InverseGammaLaw)
    assert isinstance(stationary_law(get_model("sv-a1-b1.5")), InverseGammaLaw)
    assert isinstance(stationary_law(get_model("sv-a1-b1")), GammaLaw)
    assert stationary_law(get_model("sv-a0-b1.5")).kind == "NumericGibbs"
    assert stationary_law(get_model("expou-1f")).kind == "Gaussian"


def test_non_existence():
    law = stationary_law(get_model("sv-a1-b0.5"))
    assert not law.exists
    assert "no stationary solution" in law.reason
    heston = stationary_law(get_model("sv-a0-b0.5"))
    assert not heston.exists and heston.code == "alpha-threshold"
    # (1,1): alpha = 2 gamma theta / kappa^2 - 1 below the threshold
    low = SixFactorParams(a=1, b=1.0, gamma=1.0, theta=0.03, kappa=0.2, rho=0.0)
    assert not stationary_law(low).exists
    high = SixFactorParams(a=1, b=1.0, gamma=100.0, theta=0.03, kappa=0.2, rho=0.0)
    assert stationary_law(high).exists
    with pytest.raises(ValueError):
        stationary_law(low).entropy()


@pytest.mark.parametrize("spec", EXISTING, ids=lambda s: s.id)
def test_mass_and_entropy(spec):
    law = stationary_law(spec)
    assert law.total_mass() == pytest.approx(1.0, abs=1e-8)
    assert law.entropy() == pytest.approx(law.entropy_numeric(), abs=1e-6)
    if law.kind != "Gaussian":
        assert law.log_moment() == pytest.approx(law.log_moment_numeric(), abs=1e-6)


def test_closed_forms_against_scipy():
    ig = InverseGammaLaw(4.502, 0.09526)
    # log(beta) - digamma(alpha), frozen from scipy
    assert ig.log_moment() == pytest.approx(-3.740513537101802, abs=1e-12)
    oracle = stats.invgamma(4.502, scale=0.09526)
    assert ig.entropy() == pytest.approx(float(oracle.entropy()), abs=1e-12)
    assert ig.moment(0.5) == pytest.approx(float(oracle.expect(np.sqrt)), rel=1e-8)
    g = GammaLaw(1.0, 1.0)
    assert g.entropy() == pytest.approx(1.0, abs=1e-14)
    g = GammaLaw(2.761, 102.5)
    assert g.entropy() == pytest.approx(float(stats.gamma(2.761, scale=1 / 102.5).entropy()), abs=1e-12)
    assert g.log_moment() == pytest.approx(special.digamma(2.761) - math.log(102.5), abs=1e-12)


def test_a0_b32_normaliser_closed_form():
    # with y = 1/v the unnormalised density becomes y exp(-alpha (y - c)^2) dy
    p = get_model("sv-a0-b1.5").params
    law = stationary_law(p)
    alpha = p.gamma * p.theta / p.kappa ** 2
    c = 1.0 / p.theta
    z = (math.exp(-alpha * c * c) / (2 * alpha)
         + c * math.sqrt(math.pi / alpha) * (1 + math.erf(math.sqrt(alpha) * c)) / 2)
    for v in (0.005, 0.0336, 0.2, 2.0):
        expected = v ** -3 * math.exp(-alpha * (1 / v - c) ** 2) / z
        assert law.pdf(v) == pytest.approx(expected, rel=1e-9)
    assert law.metadata["alpha"] == pytest.approx(alpha, rel=1e-14)
    assert law.metadata["alpha_published"] == 8.511e-4


def test_a0_b32_mean_against_mpmath():
    p = get_model("sv-a0-b1.5").params
    alpha = p.gamma * p.theta / p.kappa ** 2
    c = 1 / p.theta
    dens = lambda y: y * mpmath.exp(-alpha * (y - c) ** 2)   # noqa: E731
    z = mpmath.quad(dens, [0, c, mpmath.inf])
    # E[v] = E[1/y]
    ev = mpmath.quad(lambda y: dens(y) / y, [0, c, mpmath.inf]) / z
    assert stationary_law(p).moment(1.0) == pytest.approx(float(ev), rel=1e-8)


@pytest.mark.parametrize("model_id", ["sv-a0-b1", "sv-a1-b1", "sv-a0-b1.5", "sv-a1-b1.5"])
def test_change_of_variables(model_id):
    # density of v equals the Gibbs density in sigma times |g'(v)|
    p = get_model(model_id).params
    law_v = stationary_law(p)
    law_s = gibbs_law_sigma(p)
    form = to_gradient_flow(p)
    for v in (0.01, 0.03, 0.08):
        assert law_v.pdf(v) == pytest.approx(law_s.pdf(form.g(v)) * abs(form.g_prime(v)), rel=1e-8)


@pytest.mark.parametrize("model_id", ["sv-a0-b1", "sv-a1-b1", "sv-a0-b1.5", "sv-a1-b1.5", "expou-1f"])
def test_hessian_dominates_sobolev_constant(model_id):
    sob = sobolev_constant(get_model(model_id))
    assert sob.lam > 0
    lo, hi = sob.domain
    lo = max(lo, -50.0) if lo != 0.0 else 1e-3
    hi = min(hi, 50.0) if hi != 0.0 else -1e-3
    grid = np.linspace(lo, hi, 2001)
    grid = grid[grid != 0.0]
    assert min(sob.hessian(x) for x in grid) >= sob.lam * (1 - 1e-12)


def test_sobolev_constants():
    assert sobolev_constant(get_model("expou-1f")).lam == pytest.approx(0.26, abs=1e-12)
    degenerate = SixFactorParams(a=0, b=1.5, gamma=100.0, theta=0.01, kappa=0.1, rho=0.0)
    assert stationary_law(degenerate).exists
    assert sobolev_constant(degenerate).lam is None


def test_gaussian_law():
    law = stationary_law(ExpOUOneFactorParams(m=1e-3, gamma=0.5, kappa_sq=1.0, rho=0.0))
    assert law.variance == 1.0
    assert law.entropy() == pytest.approx(0.5 * math.log(2 * math.pi * math.e))
    assert law.exp_moment(1.0) == pytest.approx(math.exp(0.5))


@pytest.mark.parametrize("model_id", ["sv-a0-b1", "sv-a1-b1", "sv-a0-b1.5"])
def test_sampling_moments(model_id):
    law = stationary_law(get_model(model_id))
    x = law.sample(np.random.default_rng(7), 200_000)
    se = x.std() / math.sqrt(x.size)
    assert abs(x.mean() - law.moment(1.0)) < 4 * se
    logs = np.log(x)
    assert abs(logs.mean() - law.log_moment()) < 4 * logs.std() / math.sqrt(x.size)
