import json

import pytest

from svinfo.catalog import (
    ExpOUOneFactorParams,
    ExpOUTwoFactorParams,
    SixFactorParams,
    SpecValidationError,
    builtin_models,
    get_model,
    load_spec,
    model_ids,
    save_spec,
    spec_from_dict,
)


def _write(tmp_path, data):
    path = tmp_path / "model.json"
    path.write_text(json.dumps(data))
    return path


def _heston_dict(**param_changes):
    params = {"a": 0, "b": "1/2", "gamma": 3.1146, "theta": 0.0523, "kappa": 0.5826, "rho": -0.652}
    params.update(param_changes)
    return {"id": "custom", "family": "six_factor", "params": params,
            "tau": 1 / 252, "time_unit": "annual"}


def test_builtin_ids():
    assert [m.id for m in builtin_models()] == [
        "sv-a0-b0.5", "sv-a0-b1", "sv-a1-b1", "sv-a0-b1.5", "sv-a1-b1.5", "expou-1f", "expou-2f"]
    assert "sv-a1-b0.5" in model_ids()


def test_builtin_values_digit_exact():
    p = get_model("sv-a0-b1").params
    assert (p.a, p.b, p.gamma, p.theta, p.kappa, p.rho) == (0, 1.0, 2.4730, 0.0272, 1.1884, -0.7116)
    p = get_model("sv-a1-b1.5").params
    assert (p.gamma, p.theta, p.kappa, p.rho) == (50.9140, 0.0388, 6.2593, -0.6854)
    assert p.std_errors["kappa"] == 2.41e-3
    p = get_model("expou-1f").params
    assert (p.m, p.gamma, p.kappa_sq, p.rho) == (1.5e-3, 1.82e-3, 1.4e-2, -0.4)
    p = get_model("expou-2f").params
    assert (p.m, p.gamma1, p.kappa1_sq, p.gamma2, p.kappa2_sq) == (2.32e-3, 2.02e-2, 4.13e-3, 1.43, 4.14e-2)
    assert get_model("sv-a0-b1").tau == 1 / 252
    assert get_model("expou-1f").time_unit == "daily"


def test_unknown_model():
    with pytest.raises(KeyError):
        get_model("sv-a2-b1")


def test_rho_out_of_range(tmp_path):
    with pytest.raises(SpecValidationError, match="rho out of range"):
        load_spec(_write(tmp_path, _heston_dict(rho=1.2)))


def test_negative_kappa_sq(tmp_path):
    data = get_model("expou-1f").to_dict()
    data["params"]["kappa_sq"] = -1
    with pytest.raises(SpecValidationError, match="kappa_sq"):
        load_spec(_write(tmp_path, data))


def test_malformed_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(json.JSONDecodeError):
        load_spec(path)


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["params"].update(lambda_=1),
    lambda d: d["params"].pop("theta"),
    lambda d: d.update(family="heston"),
    lambda d: d["params"].update(b="2/3"),
    lambda d: d["params"].update(a=2),
    lambda d: d.update(time_unit="weekly"),
    lambda d: d.update(tau=0),
])
def test_rejections(mutate):
    data = _heston_dict()
    mutate(data)
    with pytest.raises(SpecValidationError):
        spec_from_dict(data)


def test_fraction_b_parses():
    assert spec_from_dict(_heston_dict()).params.b == 0.5
    assert spec_from_dict(_heston_dict(b=1.5)).params.b == 1.5


@pytest.mark.parametrize("model_id", model_ids())
def test_round_trip(tmp_path, model_id):
    spec = get_model(model_id)
    path = tmp_path / "m.json"
    save_spec(spec, path)
    assert load_spec(path) == spec


def test_two_factor_allows_single_factor():
    p = ExpOUTwoFactorParams(m=1e-3, gamma1=0.02, kappa1_sq=4e-3, gamma2=1.0, kappa2_sq=0.0)
    assert p.kappa2_sq == 0.0
    with pytest.raises(SpecValidationError):
        ExpOUTwoFactorParams(m=1e-3, gamma1=0.02, kappa1_sq=4e-3, gamma2=1.0, kappa2_sq=-0.1)


def test_direct_construction_validates():
    with pytest.raises(SpecValidationError):
        SixFactorParams(a=0, b=1.0, gamma=-1.0, theta=0.03, kappa=1.0, rho=0.0)
    with pytest.raises(SpecValidationError):
        ExpOUOneFactorParams(m=1e-3, gamma=1e-3, kappa_sq=1e-2, rho=-1.0)


def test_replace():
    spec = get_model("sv-a0-b1")
    changed = spec.replace(sigma_M=1e-4)
    assert changed.sigma_M == 1e-4 and changed.params is spec.params
