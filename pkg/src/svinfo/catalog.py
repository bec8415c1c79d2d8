"""Model definitions, built-in parameter sets and JSON model files."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Union

TRADING_DAYS = 252
SIGMA_M_DEFAULT = 0.25e-4


class SpecValidationError(ValueError):
    """A model file or parameter set violates one of its invariants."""


def _check_time_unit(unit):
    if unit not in ("annual", "daily"):
        raise SpecValidationError(f"time_unit must be 'annual' or 'daily', got {unit!r}")


def _check_positive(**values):
    for name, value in values.items():
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise SpecValidationError(f"{name} must be positive, got {value!r}")


def _check_rho(rho):
    if not (isinstance(rho, (int, float)) and -1.0 < rho < 1.0):
        raise SpecValidationError(f"rho out of range (-1, 1): {rho!r}")


@dataclass(frozen=True)
class SixFactorParams:
    """dv = gamma v^a (theta - v) dt + kappa v^b dW, corr(dW, dW^0) = rho."""

    a: int
    b: float
    gamma: float
    theta: float
    kappa: float
    rho: float
    time_unit: str = "annual"
    std_errors: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.a not in (0, 1):
            raise SpecValidationError(f"a must be 0 or 1, got {self.a!r}")
        if self.b not in (0.5, 1.0, 1.5):
            raise SpecValidationError(f"b must be one of 1/2, 1, 3/2, got {self.b!r}")
        _check_positive(gamma=self.gamma, theta=self.theta, kappa=self.kappa)
        _check_rho(self.rho)
        _check_time_unit(self.time_unit)

    family = "six_factor"


@dataclass(frozen=True)
class ExpOUOneFactorParams:
    """Volatility m e^v with v an Ornstein-Uhlenbeck process."""

    m: float
    gamma: float
    kappa_sq: float
    rho: float
    time_unit: str = "daily"

    def __post_init__(self):
        _check_positive(m=self.m, gamma=self.gamma, kappa_sq=self.kappa_sq)
        _check_rho(self.rho)
        _check_time_unit(self.time_unit)

    family = "expou1"


@dataclass(frozen=True)
class ExpOUTwoFactorParams:
    """Volatility m e^{v1 + v2}, independent OU factors, no leverage."""

    m: float
    gamma1: float
    kappa1_sq: float
    gamma2: float
    kappa2_sq: float
    time_unit: str = "daily"

    def __post_init__(self):
        _check_positive(m=self.m, gamma1=self.gamma1, kappa1_sq=self.kappa1_sq,
                        gamma2=self.gamma2)
        # kappa2_sq = 0 is allowed: it collapses the model to one OU factor
        if not (isinstance(self.kappa2_sq, (int, float)) and self.kappa2_sq >= 0):
            raise SpecValidationError(f"kappa2_sq must be non-negative, got {self.kappa2_sq!r}")
        _check_time_unit(self.time_unit)

    family = "expou2"


Params = Union[SixFactorParams, ExpOUOneFactorParams, ExpOUTwoFactorParams]

_FAMILIES = {
    "six_factor": SixFactorParams,
    "expou1": ExpOUOneFactorParams,
    "expou2": ExpOUTwoFactorParams,
}


@dataclass(frozen=True)
class ModelSpec:
    id: str
    params: Params
    tau: float
    sigma_M: float = SIGMA_M_DEFAULT

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise SpecValidationError("id must be a non-empty string")
        _check_positive(tau=self.tau, sigma_M=self.sigma_M)

    @property
    def family(self) -> str:
        return self.params.family

    @property
    def time_unit(self) -> str:
        return self.params.time_unit

    def replace(self, **changes) -> "ModelSpec":
        fields = {"id": self.id, "params": self.params, "tau": self.tau, "sigma_M": self.sigma_M}
        fields.update(changes)
        return ModelSpec(**fields)

    def to_dict(self) -> dict:
        params = asdict(self.params)
        unit = params.pop("time_unit")
        params.pop("std_errors", None)
        if self.family == "six_factor":
            params["b"] = _b_to_json(params["b"])
        return {
            "id": self.id,
            "family": self.family,
            "params": params,
            "tau": self.tau,
            "sigma_M": self.sigma_M,
            "time_unit": unit,
        }


def _b_to_json(b):
    return int(b) if float(b).is_integer() else str(Fraction(b).limit_denominator(4))


def _parse_b(raw):
    if isinstance(raw, str):
        try:
            return float(Fraction(raw))
        except (ValueError, ZeroDivisionError):
            raise SpecValidationError(f"cannot parse b={raw!r}") from None
    return float(raw)


_TOP_KEYS = {"id", "family", "params", "tau", "sigma_M", "time_unit"}


def spec_from_dict(data: dict) -> ModelSpec:
    """Build and validate a :class:`ModelSpec` from the JSON-file layout."""
    if not isinstance(data, dict):
        raise SpecValidationError("model file must contain a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise SpecValidationError(f"unknown keys: {sorted(unknown)}")
    missing = {"id", "family", "params", "tau", "time_unit"} - set(data)
    if missing:
        raise SpecValidationError(f"missing keys: {sorted(missing)}")
    family = data["family"]
    if family not in _FAMILIES:
        raise SpecValidationError(f"unknown family {family!r}")
    cls = _FAMILIES[family]
    raw = data["params"]
    if not isinstance(raw, dict):
        raise SpecValidationError("params must be an object")
    allowed = set(cls.__dataclass_fields__) - {"time_unit", "std_errors"}
    unknown = set(raw) - allowed
    if unknown:
        raise SpecValidationError(f"unknown params for {family}: {sorted(unknown)}")
    missing = allowed - set(raw)
    if missing:
        raise SpecValidationError(f"missing params for {family}: {sorted(missing)}")
    kwargs = dict(raw)
    if family == "six_factor":
        kwargs["b"] = _parse_b(kwargs["b"])
    try:
        params = cls(time_unit=data["time_unit"], **kwargs)
        return ModelSpec(
            id=data["id"],
            params=params,
            tau=data["tau"],
            sigma_M=data.get("sigma_M", SIGMA_M_DEFAULT),
        )
    except TypeError as exc:
        raise SpecValidationError(str(exc)) from None


def load_spec(path) -> ModelSpec:
    """Read a JSON model file.

    Raises ``json.JSONDecodeError`` for malformed files and
    :class:`SpecValidationError` for invariant violations.
    """
    with open(path) as fh:
        data = json.load(fh)
    return spec_from_dict(data)


def save_spec(spec: ModelSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")


# Means of the S&P 500 option fits, annual units.  Standard errors are kept
# as metadata only.
_SIX_FACTOR_TABLE = [
    # a, b,   gamma,   theta,  kappa,  rho,     (se_gamma, se_theta, se_kappa, se_rho)
    (0, 0.5, 3.1146, 0.0523, 0.5826, -0.6520, (1.50e-3, 3.13e-5, 1.27e-4, 2.41e-4)),
    (0, 1.0, 2.4730, 0.0272, 1.1884, -0.7116, (1.12e-3, 6.84e-6, 3.20e-4, 2.06e-4)),
    (1, 1.0, 64.4378, 0.0367, 1.1214, -0.6749, (3.95e-2, 1.91e-5, 4.36e-4, 2.50e-4)),
    (0, 1.5, 1.5384, 0.0336, 7.9501, -0.7169, (2.22e-3, 3.65e-5, 2.94e-3, 2.10e-4)),
    (1, 1.5, 50.9140, 0.0388, 6.2593, -0.6854, (4.08e-2, 2.86e-5, 2.41e-3, 2.35e-4)),
]


def six_factor_id(a: int, b: float) -> str:
    return f"sv-a{a}-b{b:g}"


def builtin_models() -> list[ModelSpec]:
    """The seven models with published parameters."""
    models = []
    for a, b, gamma, theta, kappa, rho, se in _SIX_FACTOR_TABLE:
        params = SixFactorParams(
            a=a, b=b, gamma=gamma, theta=theta, kappa=kappa, rho=rho,
            time_unit="annual",
            std_errors=dict(zip(("gamma", "theta", "kappa", "rho"), se)),
        )
        models.append(ModelSpec(six_factor_id(a, b), params, tau=1.0 / TRADING_DAYS))
    models.append(ModelSpec(
        "expou-1f",
        ExpOUOneFactorParams(m=1.5e-3, gamma=1.82e-3, kappa_sq=1.4e-2, rho=-0.4),
        tau=1.0,
    ))
    models.append(ModelSpec(
        "expou-2f",
        ExpOUTwoFactorParams(m=2.32e-3, gamma1=2.02e-2, kappa1_sq=4.13e-3,
                             gamma2=1.43, kappa2_sq=4.14e-2),
        tau=1.0,
    ))
    return models


# Six-factor model whose (a, b) pair has no published fit; used to exercise
# the non-existence path.  Parameters borrowed from the Heston row.
_NONEXISTENT_EXAMPLE = ModelSpec(
    "sv-a1-b0.5",
    SixFactorParams(a=1, b=0.5, gamma=3.1146, theta=0.0523, kappa=0.5826, rho=-0.6520),
    tau=1.0 / TRADING_DAYS,
)


def get_model(model_id: str) -> ModelSpec:
    """Look up a built-in model by id (also accepts ``sv-a1-b0.5``)."""
    for spec in builtin_models():
        if spec.id == model_id:
            return spec
    if model_id == _NONEXISTENT_EXAMPLE.id:
        return _NONEXISTENT_EXAMPLE
    raise KeyError(f"unknown model id {model_id!r}")


def model_ids() -> list[str]:
    return [s.id for s in builtin_models()] + [_NONEXISTENT_EXAMPLE.id]
