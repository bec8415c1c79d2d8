"""Euler-Maruyama simulation of returns and volatility states.

Every path draws from its own Philox stream keyed by ``(seed, path_index)``,
so results do not depend on how paths are batched.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import ExpOUOneFactorParams, ExpOUTwoFactorParams, ModelSpec, SixFactorParams
from .stationary import stationary_law

SCHEMES = ("euler-full-truncation", "euler-reflection", "exact-ou")
V_FLOOR = 1e-12
_CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    spec: ModelSpec
    step: float
    n_steps: int
    n_paths: int
    burn_in: int | None = None
    seed: int = 0
    scheme: str | None = None

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        scheme = self.resolved_scheme
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}")
        if scheme == "exact-ou" and isinstance(self.spec.params, SixFactorParams):
            raise ValueError("exact-ou scheme only applies to expOU models")

    @property
    def resolved_scheme(self) -> str:
        if self.scheme is not None:
            return self.scheme
        if isinstance(self.spec.params, SixFactorParams):
            return "euler-full-truncation"
        return "exact-ou"

    def describe(self) -> dict:
        return {
            "model": self.spec.to_dict(),
            "step": self.step,
            "n_steps": self.n_steps,
            "n_paths": self.n_paths,
            "burn_in": self.burn_in,
            "seed": int(self.seed),
            "scheme": self.resolved_scheme,
        }


@dataclass
class PathEnsemble:
    """``returns[p, j]`` is the return over ``(t_j, t_{j+1}]``; ``states[p, j]``
    is the state at ``t_j`` (``j = 0 .. n_obs``).  Two-factor states carry a
    trailing axis ``(v1, v2)``."""

    returns: np.ndarray
    states: np.ndarray
    config: SimConfig
    metadata: dict = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.returns.shape[0]

    @property
    def n_obs(self) -> int:
        return self.returns.shape[1]

    def to_csv(self, path) -> None:
        two = self.states.ndim == 3
        header = ["path", "obs_index", "r"] + (["v1", "v2"] if two else ["v"])
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for p in range(self.n_paths):
                for j in range(self.n_obs + 1):
                    r = "" if j == 0 else repr(float(self.returns[p, j - 1]))
                    state = self.states[p, j]
                    vals = [repr(float(s)) for s in state] if two else [repr(float(state))]
                    writer.writerow([p, j, r, *vals])

    def to_npz(self, path) -> None:
        np.savez(path, returns=self.returns, states=self.states)


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Independent counter-based stream for one path."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(path_index),))
    return np.random.Generator(np.random.Philox(ss))


def _rate(params) -> float:
    if isinstance(params, ExpOUTwoFactorParams):
        return min(params.gamma1, params.gamma2)
    return params.gamma


def _initial_value(params):
    if isinstance(params, SixFactorParams):
        return params.theta
    if isinstance(params, ExpOUTwoFactorParams):
        return np.zeros(2)
    return 0.0


def _draw_initial(law, params, rng):
    if isinstance(params, ExpOUTwoFactorParams):
        v1 = math.sqrt(params.kappa1_sq / (2 * params.gamma1)) * rng.standard_normal()
        v2 = math.sqrt(params.kappa2_sq / (2 * params.gamma2)) * rng.standard_normal()
        return np.array([v1, v2])
    return float(law.sample(rng, 1)[0])


def _noise_dim(params) -> int:
    return 3 if isinstance(params, ExpOUTwoFactorParams) else 2


def simulate(config: SimConfig) -> PathEnsemble:
    """Simulate ``config.n_paths`` paths of ``config.n_steps`` observed steps.

    Drift of the price is zero.  The initial state is drawn from the
    stationary law when one exists; otherwise paths start at a fixed value and
    run ``burn_in`` (default ``10 / (gamma step)``) unrecorded steps.
    """
    params = config.spec.params
    law = stationary_law(params)
    stationary_start = law.exists
    burn_in = config.burn_in
    if burn_in is None:
        burn_in = 0 if stationary_start else int(math.ceil(10.0 / (_rate(params) * config.step)))
    total = burn_in + config.n_steps
    d = _noise_dim(params)
    two = isinstance(params, ExpOUTwoFactorParams)

    returns = np.empty((config.n_paths, config.n_steps))
    states = np.empty((config.n_paths, config.n_steps + 1, 2) if two
                      else (config.n_paths, config.n_steps + 1))
    floored = 0
    for start in range(0, config.n_paths, _CHUNK):
        stop = min(start + _CHUNK, config.n_paths)
        init = []
        noise = np.empty((stop - start, total, d))
        for i, p in enumerate(range(start, stop)):
            rng = path_rng(config.seed, p)
            init.append(_draw_initial(law, params, rng) if stationary_start else _initial_value(params))
            noise[i] = rng.standard_normal((total, d))
        r, s, f = _integrate_paths(config, np.array(init), noise, burn_in)
        returns[start:stop] = r
        states[start:stop] = s
        floored += f

    meta = {
        "config": config.describe(),
        "burn_in_used": burn_in,
        "initial_state": "stationary" if stationary_start else "fixed",
        "positivity_floor_hits": floored,
    }
    return PathEnsemble(returns, states, config, meta)


def _integrate_paths(config, v0, noise, burn_in):
    params = config.spec.params
    dt = config.step
    sq = math.sqrt(dt)
    scheme = config.resolved_scheme
    n_paths, total, _ = noise.shape
    n_obs = config.n_steps
    floored = 0

    if isinstance(params, ExpOUTwoFactorParams):
        v = v0.copy()
        out_s = np.empty((n_paths, n_obs + 1, 2))
        out_r = np.empty((n_paths, n_obs))
        rates = np.array([params.gamma1, params.gamma2])
        kap2 = np.array([params.kappa1_sq, params.kappa2_sq])
        decay = np.exp(-rates * dt)
        exact_sd = np.sqrt(kap2 / (2 * rates) * -np.expm1(-2 * rates * dt))
        for n in range(total):
            j = n - burn_in
            if j == 0:
                out_s[:, 0] = v
            e0, e = noise[:, n, 0], noise[:, n, 1:]
            r = params.m * np.exp(v.sum(axis=1)) * sq * e0
            if scheme == "exact-ou":
                v = v * decay + exact_sd * e
            else:
                v = v - rates * v * dt + np.sqrt(kap2) * sq * e
            if j >= 0:
                out_r[:, j] = r
                out_s[:, j + 1] = v
        return out_r, out_s, 0

    rho = params.rho
    comp = math.sqrt(1.0 - rho * rho)
    v = np.asarray(v0, dtype=float).copy()
    out_s = np.empty((n_paths, n_obs + 1))
    out_r = np.empty((n_paths, n_obs))

    if isinstance(params, ExpOUOneFactorParams):
        decay = math.exp(-params.gamma * dt)
        exact_sd = math.sqrt(params.kappa_sq / (2 * params.gamma) * -math.expm1(-2 * params.gamma * dt))
        kappa = math.sqrt(params.kappa_sq)
        for n in range(total):
            j = n - burn_in
            if j == 0:
                out_s[:, 0] = v
            e1 = noise[:, n, 1]
            e0 = rho * e1 + comp * noise[:, n, 0]
            r = params.m * np.exp(v) * sq * e0
            if scheme == "exact-ou":
                v = v * decay + exact_sd * e1
            else:
                v = v - params.gamma * v * dt + kappa * sq * e1
            if j >= 0:
                out_r[:, j] = r
                out_s[:, j + 1] = v
        return out_r, out_s, 0

    a, b = params.a, params.b
    g, th, k = params.gamma, params.theta, params.kappa
    for n in range(total):
        j = n - burn_in
        if j == 0:
            out_s[:, 0] = v
        e1 = noise[:, n, 1]
        e0 = rho * e1 + comp * noise[:, n, 0]
        r = np.sqrt(v) * sq * e0
        prop = v + g * v ** a * (th - v) * dt + k * v ** b * sq * e1
        bad = ~(prop > V_FLOOR)
        if bad.any():
            floored += int(bad.sum())
            if scheme == "euler-reflection":
                prop = np.where(bad, np.abs(prop), prop)
            prop = np.where(np.isfinite(prop), np.maximum(prop, V_FLOOR), V_FLOOR)
        v = prop
        if j >= 0:
            out_r[:, j] = r
            out_s[:, j + 1] = v
    return out_r, out_s, floored


def subsample(ensemble: PathEnsemble, stride: int) -> PathEnsemble:
    """Keep every ``stride``-th observation; returns are summed per window."""
    if stride < 1 or ensemble.n_obs % stride:
        raise ValueError(f"stride {stride} does not divide n_obs={ensemble.n_obs}")
    if stride == 1:
        return ensemble
    n_new = ensemble.n_obs // stride
    returns = ensemble.returns.reshape(ensemble.n_paths, n_new, stride).sum(axis=2)
    states = ensemble.states[:, ::stride]
    meta = dict(ensemble.metadata, stride=stride)
    return PathEnsemble(returns, states, ensemble.config, meta)
