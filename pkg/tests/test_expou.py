import math

import numpy as np
import pytest
from scipy import integrate, stats

from svinfo.catalog import ExpOUTwoFactorParams, get_model
from svinfo.expou import (
    TABLE1_HISTORY,
    GaussianStationaryProcess,
    conditional_variance,
    expou_gaps,
    expou_u2_bound,
    history_mi,
    lognormal_mixture_return_mi,
    mixture_density,
    ou_transition_mi,
    required_returns_per_day,
    two_factor_process,
)

# h(r) - log(2 pi e m^2)/2 from nested scipy quadrature (density by quad over
# the state, entropy by quad over log|r|); frozen.
ORACLE_MIXTURE_1F = 0.8675955605838732
ORACLE_MIXTURE_2F = 0.09269900148634136

ONE = get_model("expou-1f")
TWO = get_model("expou-2f")


def test_ou_transition():
    assert ou_transition_mi(1.82e-3, 1.0) == pytest.approx(2.8088, abs=1e-4)
    with pytest.raises(ValueError):
        ou_transition_mi(0.0, 1.0)


def test_log_sobolev_bound():
    assert expou_u2_bound(1.82e-3, 1.4e-2) == pytest.approx(3.846, abs=1e-3)
    assert expou_u2_bound(0.5, 1.0) == 1.0


def test_mixture_mi_against_oracle():
    var = ONE.params.kappa_sq / (2 * ONE.params.gamma)
    value, err = lognormal_mixture_return_mi(ONE.params.m, var)
    assert value == pytest.approx(ORACLE_MIXTURE_1F, abs=1e-6)
    assert err < 1e-6
    value, _ = lognormal_mixture_return_mi(TWO.params.m, two_factor_process(TWO.params, 1.0).sigma_w_sq)
    assert value == pytest.approx(ORACLE_MIXTURE_2F, abs=1e-5)


def test_mixture_mi_degenerate_and_scale_free():
    assert lognormal_mixture_return_mi(1e-3, 0.0) == (0.0, 0.0)
    a, _ = lognormal_mixture_return_mi(1e-3, 0.5)
    b, _ = lognormal_mixture_return_mi(7.0, 0.5)
    assert a == pytest.approx(b, abs=1e-7)
    with pytest.raises(ValueError):
        lognormal_mixture_return_mi(-1.0, 0.5)


def test_mixture_density_moments():
    m, var = 1.5e-3, 0.5
    pdf = mixture_density(m, var)
    mass = 2 * integrate.quad(lambda u: pdf(math.exp(u)) * math.exp(u), math.log(m) - 30,
                              math.log(m) + 20, limit=500)[0]
    second = 2 * integrate.quad(lambda u: pdf(math.exp(u)) * math.exp(3 * u), math.log(m) - 30,
                                math.log(m) + 20, limit=500)[0]
    assert mass == pytest.approx(1.0, abs=1e-9)
    assert second == pytest.approx(m * m * math.exp(2 * var), rel=1e-7)
    r = 0.004
    direct = integrate.quad(lambda w: stats.norm.pdf(w, 0, math.sqrt(var))
                            * stats.norm.pdf(r, 0, m * math.exp(w)), -20, 20, limit=400)[0]
    assert pdf(r) == pytest.approx(direct, rel=1e-9)


def test_two_factor_process():
    process = two_factor_process(TWO.params, 1.0)
    assert process.sigma_w_sq == pytest.approx(0.116703, abs=1e-6)
    assert process.cov(1) / process.sigma_w_sq == pytest.approx(0.888, abs=1e-3)
    C = process.cov_matrix(4)
    assert np.allclose(C, C.T) and C[0, 3] == pytest.approx(process.cov(3))


def test_history_table():
    process = two_factor_process(TWO.params, 1.0)
    expected = (0.77741, 0.81891, 0.83508, 0.84191, 0.84489, 0.84723, 0.84727)
    for n, v in zip(TABLE1_HISTORY, expected):
        assert history_mi(process, n) == pytest.approx(v, abs=1e-5)


def test_history_monotone_and_bounded():
    process = two_factor_process(TWO.params, 1.0)
    values = [history_mi(process, n) for n in range(1, 60)]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))
    for n in (1, 5, 50):
        s2 = conditional_variance(process, n)
        assert 0 < s2 <= process.sigma_w_sq


def test_history_collapses_to_markov():
    p = TWO.params
    single = ExpOUTwoFactorParams(m=p.m, gamma1=p.gamma1, kappa1_sq=p.kappa1_sq,
                                  gamma2=p.gamma2, kappa2_sq=0.0)
    process = two_factor_process(single, 1.0)
    markov = ou_transition_mi(p.gamma1, 1.0)
    for n in (1, 2, 10, 30):
        assert history_mi(process, n) == pytest.approx(markov, abs=1e-9)


def test_history_validation():
    process = GaussianStationaryProcess(((1.0, 0.5),), 1.0)
    with pytest.raises(ValueError):
        history_mi(process, 0)


def test_gaps():
    g_r, g_f = expou_gaps(ONE)
    assert g_r == pytest.approx(6.0174, abs=1e-4)
    assert g_f == pytest.approx(7.5326, abs=1e-4)
    g_r, g_f = expou_gaps(TWO)
    assert g_r == pytest.approx(4.5888, abs=1e-4)
    assert g_f == pytest.approx(6.2211, abs=1e-4)


def test_returns_per_day_closes_gap():
    per_day = required_returns_per_day(ONE)
    _, g_f = expou_gaps(ONE)
    lev = -0.5 * math.log(1 - 0.16)
    assert ou_transition_mi(ONE.params.gamma, 1.0 / per_day) + lev == pytest.approx(g_f, abs=1e-9)
