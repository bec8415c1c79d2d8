"""Reproduced tables, validation experiments and their serialisation."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import (
    ExpOUOneFactorParams,
    ExpOUTwoFactorParams,
    ModelSpec,
    SixFactorParams,
    get_model,
)
from .estimate import combined_se, conditional_mi, knn_mi
from .expou import (
    TABLE1_HISTORY,
    expou_gaps,
    expou_u2_bound,
    history_mi,
    lognormal_mixture_return_mi,
    ou_transition_mi,
    required_returns_per_day,
    two_factor_process,
)
from .infobounds import full_report, leverage_mi, mi_proxy, u2_bound
from .simulate import SimConfig, simulate
from .stationary import stationary_law

TABLE_IDS = ("sixfactor-bounds", "sixfactor-frequency", "expou1-summary", "twofactor-history")

SIX_FACTOR_ROWS = ("sv-a0-b0.5", "sv-a0-b1", "sv-a1-b1", "sv-a0-b1.5", "sv-a1-b1.5")

# Published values with per-cell tolerances.  ``known`` marks cells the
# closed forms are known not to reproduce; they are reported, not enforced.
PUBLISHED = {
    "sixfactor-bounds": {
        "sv-a0-b0.5": {"alpha": (0.9598, 1e-4), "beta": (18.35, 0.01)},
        "sv-a0-b1": {"alpha": (4.502, 1e-3), "beta": (0.09526, 1e-5), "U2": (0.1428, 0.001),
                     "U1": (2.230, 0.01), "G_r": (12.67, 0.02, "known"), "G_f": (7.318, 0.02)},
        "sv-a1-b1": {"alpha": (2.761, 1e-3), "beta": (102.5, 0.1), "U2": (0.2839, 0.001),
                     "U1": (2.506, 0.01), "G_r": (16.14, 0.02, "known"), "G_f": (7.552, 0.02)},
        "sv-a0-b1.5": {"alpha": (8.511e-4, 1e-6, "known"), "U2": (0.1167, 0.005),
                       "U1": (1.910, 0.05), "G_r": (11.53, 0.02, "known"), "G_f": (7.343, 0.02)},
        "sv-a1-b1.5": {"alpha": (4.599, 1e-3), "beta": (0.1008, 1e-4), "U2": (0.1389, 0.001),
                       "U1": (2.190, 0.01, "known"), "G_r": (11.54, 0.02, "known"),
                       "G_f": (7.323, 0.02)},
    },
    "sixfactor-frequency": {
        "sv-a0-b1": {"returns_per_annum": (6.62e6, 0.03, "rel")},
        "sv-a1-b1": {"returns_per_annum": (6.08e6, 0.03, "rel")},
        "sv-a0-b1.5": {"returns_per_annum": (1.32e7, 0.03, "rel")},
        "sv-a1-b1.5": {"returns_per_annum": (7.24e6, 0.10, "rel")},
    },
    "expou1-summary": {
        "expou-1f": {"U1": (2.9, 0.01), "U2_log_sobolev": (3.85, 0.01),
                     "I_r_v0_numeric": (0.86, 0.02), "G_r": (6.0, 0.05), "G_f": (7.5, 0.05),
                     "returns_per_day": (9995.0, 0.10, "rel")},
    },
    "twofactor-history": {
        **{f"n={n}": {"history_mi": (v, 0.002)} for n, v in zip(
            TABLE1_HISTORY, (0.778, 0.819, 0.835, 0.842, 0.845, 0.847, 0.847))},
        "summary": {"I_r_w0_numeric": (0.093, 0.005), "G_r": (4.6, 0.05), "G_f": (6.2, 0.05)},
    },
}


def _cell(value, ref=None, source="closed-form", error=None):
    """One numeric cell with its provenance and, when published, the diff."""
    c = {"value": _finite_or_none(value), "source": source, "error": _finite_or_none(error)}
    if ref is not None:
        flags = ref[2:]
        ref, tol = ref[0], ref[1]
        rel = "rel" in flags
        known = "known" in flags
        c["published"] = ref
        c["tolerance"] = tol
        c["tolerance_kind"] = "relative" if rel else "absolute"
        if c["value"] is None:
            c["diff"] = None
            c["status"] = "missing"
        else:
            diff = value - ref
            c["diff"] = diff
            ok = abs(diff) <= (tol * abs(ref) if rel else tol)
            c["status"] = "ok" if ok else ("known-discrepant" if known else "mismatch")
    return c


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass
class TableArtifact:
    table_id: str
    rows: list
    provenance: dict = field(default_factory=dict)
    failures: list = field(default_factory=list)

    def statuses(self):
        for row in self.rows:
            for key, cell in row.items():
                if isinstance(cell, dict) and "status" in cell:
                    yield row.get("row"), key, cell["status"]

    def to_json(self) -> str:
        return json.dumps({"table_id": self.table_id, "rows": self.rows,
                           "failures": self.failures}, indent=2, sort_keys=True) + "\n"

    def to_csv_text(self) -> str:
        columns = ["row"]
        for row in self.rows:
            for key, cell in row.items():
                if key == "row":
                    continue
                names = [key] if not isinstance(cell, dict) else [
                    key, f"{key}_published", f"{key}_diff", f"{key}_source", f"{key}_status"]
                for n in names:
                    if n not in columns:
                        columns.append(n)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in self.rows:
            flat = {"row": row.get("row")}
            for key, cell in row.items():
                if key == "row":
                    continue
                if isinstance(cell, dict):
                    flat[key] = cell.get("value")
                    flat[f"{key}_published"] = cell.get("published")
                    flat[f"{key}_diff"] = cell.get("diff")
                    flat[f"{key}_source"] = cell.get("source")
                    flat[f"{key}_status"] = cell.get("status")
                else:
                    flat[key] = cell
            writer.writerow(["" if flat.get(c) is None else _fmt(flat.get(c)) for c in columns])
        return buf.getvalue()

    def render_text(self) -> str:
        cols = []
        for row in self.rows:
            for key in row:
                if key != "row" and key not in cols:
                    cols.append(key)
        header = ["row"] + cols
        body = []
        for row in self.rows:
            line = [str(row.get("row"))]
            for c in cols:
                cell = row.get(c)
                if isinstance(cell, dict):
                    v = cell.get("value")
                    text = "--" if v is None else _short(v)
                    if cell.get("status") in ("mismatch", "known-discrepant"):
                        text += "*" if cell["status"] == "known-discrepant" else "!"
                elif cell is None:
                    text = "--"
                else:
                    text = str(cell)
                line.append(text)
            body.append(line)
        widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
        out = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
        out += ["  ".join(x.ljust(w) for x, w in zip(r, widths)) for r in body]
        return "\n".join(out) + "\n"


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _short(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e5 or abs(v) < 1e-3:
        return f"{v:.4g}"
    return f"{v:.4f}"


def parameter_hash(specs) -> str:
    payload = json.dumps([s.to_dict() for s in specs], sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()


def _provenance(specs):
    return {"parameter_hash": parameter_hash(specs), "code_version": __version__}


# --------------------------------------------------------------------------
# tables
# --------------------------------------------------------------------------


def table_sixfactor_bounds() -> TableArtifact:
    ref = PUBLISHED["sixfactor-bounds"]
    rows, failures, specs = [], [], []
    for mid in SIX_FACTOR_ROWS:
        spec = get_model(mid)
        specs.append(spec)
        p = ref[mid]
        row = {"row": mid, "a": spec.params.a, "b": spec.params.b}
        try:
            rep = full_report(spec)
        except Exception as exc:   # keep the partial table
            failures.append({"row": mid, "error": str(exc)})
            rows.append(row)
            continue
        from .stationary import six_factor_shape
        alpha, beta = six_factor_shape(spec.params)
        row["alpha"] = _cell(alpha, p.get("alpha"))
        row["beta"] = _cell(beta, p.get("beta"))
        src = "quadrature" if (spec.params.a, spec.params.b) == (0, 1.5) else "closed-form"
        row["exists"] = rep.exists
        row["U2"] = _cell(rep.U2, p.get("U2"), src)
        row["U1"] = _cell(rep.U1, p.get("U1"), src)
        row["G_r"] = _cell(rep.G_r, p.get("G_r"), src)
        row["G_f"] = _cell(rep.G_f, p.get("G_f"), src)
        if rep.exists:
            row["gap_G_f_minus_U1"] = _cell(rep.G_f - rep.U1, None, src)
        rows.append(row)
    return TableArtifact("sixfactor-bounds", rows, _provenance(specs), failures)


def table_sixfactor_frequency() -> TableArtifact:
    ref = PUBLISHED["sixfactor-frequency"]
    rows, specs = [], []
    for mid, p in ref.items():
        spec = get_model(mid)
        specs.append(spec)
        rep = full_report(spec)
        src = "quadrature" if (spec.params.a, spec.params.b) == (0, 1.5) else "closed-form"
        rows.append({"row": mid, "returns_per_annum": _cell(
            rep.required_returns_per_annum, p["returns_per_annum"], src)})
    return TableArtifact("sixfactor-frequency", rows, _provenance(specs))


def table_expou1_summary() -> TableArtifact:
    spec = get_model("expou-1f")
    p = PUBLISHED["expou1-summary"]["expou-1f"]
    params = spec.params
    g_r, g_f = expou_gaps(spec)
    numeric, err = lognormal_mixture_return_mi(params.m, params.kappa_sq / (2 * params.gamma))
    u1 = ou_transition_mi(params.gamma, spec.tau) + leverage_mi([params.rho])
    row = {
        "row": "expou-1f",
        "U1": _cell(u1, p["U1"]),
        "U2_log_sobolev": _cell(expou_u2_bound(params.gamma, params.kappa_sq), p["U2_log_sobolev"]),
        "I_r_v0_numeric": _cell(numeric, p["I_r_v0_numeric"], "quadrature", err),
        "G_r": _cell(g_r, p["G_r"]),
        "G_f": _cell(g_f, p["G_f"]),
        "returns_per_day": _cell(required_returns_per_day(spec), p["returns_per_day"]),
    }
    return TableArtifact("expou1-summary", [row], _provenance([spec]))


def table_twofactor_history() -> TableArtifact:
    """One row; a column per history length, then the return-side summary."""
    spec = get_model("expou-2f")
    p = PUBLISHED["twofactor-history"]
    process = two_factor_process(spec.params, spec.tau)
    row = {"row": "expou-2f"}
    for n in TABLE1_HISTORY:
        row[f"n={n}"] = _cell(history_mi(process, n), p[f"n={n}"]["history_mi"])
    g_r, g_f = expou_gaps(spec)
    numeric, err = lognormal_mixture_return_mi(spec.params.m, process.sigma_w_sq)
    row["I_r_w0_numeric"] = _cell(numeric, p["summary"]["I_r_w0_numeric"], "quadrature", err)
    row["G_r"] = _cell(g_r, p["summary"]["G_r"])
    row["G_f"] = _cell(g_f, p["summary"]["G_f"])
    return TableArtifact("twofactor-history", [row], _provenance([spec]))


TABLE_BUILDERS = {
    "sixfactor-bounds": table_sixfactor_bounds,
    "sixfactor-frequency": table_sixfactor_frequency,
    "expou1-summary": table_expou1_summary,
    "twofactor-history": table_twofactor_history,
}


def build_table(table_id: str) -> TableArtifact:
    try:
        builder = TABLE_BUILDERS[table_id]
    except KeyError:
        raise ValueError(f"unknown table id {table_id!r}; choose from {', '.join(TABLE_IDS)}") from None
    return builder()


def write_table(table: TableArtifact, out_dir, fmt: str = "csv") -> list[Path]:
    """Data file plus a provenance sidecar; data files carry no timestamps."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    data = out / f"{table.table_id}.{fmt}"
    data.write_text(table.to_json() if fmt == "json" else table.to_csv_text())
    side = out / f"{table.table_id}.provenance.json"
    side.write_text(json.dumps(table.provenance, indent=2, sort_keys=True) + "\n")
    return [data, side]


# --------------------------------------------------------------------------
# analyze
# --------------------------------------------------------------------------


def tau_sweep(spec: ModelSpec, lo: float, hi: float, n: int) -> np.ndarray:
    """``(log(1/tau), U1)`` pairs for ``log(1/tau)`` evenly spaced in ``[lo, hi]``."""
    xs = np.linspace(lo, hi, n)
    lev = leverage_mi([spec.params.rho]) if not isinstance(spec.params, ExpOUTwoFactorParams) else 0.0
    ys = [mi_proxy(spec, math.exp(-x)) + lev for x in xs]
    return np.column_stack([xs, ys])


def history_series(spec: ModelSpec, n_max: int = 100) -> np.ndarray:
    process = two_factor_process(spec.params, spec.tau)
    ns = np.arange(1, n_max + 1)
    return np.column_stack([ns, [history_mi(process, int(k)) for k in ns]])


def write_xy(path, data: np.ndarray) -> None:
    with open(path, "w") as fh:
        for x, y in data:
            fh.write(f"{float(x)!r} {float(y)!r}\n")


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------


@dataclass
class Check:
    name: str
    target: float
    estimate: float
    std_error: float
    kind: str = "equal"          # "equal": |est - target| <= 3 SE + slack; "upper": est <= target + 3 SE
    slack: float = 0.0

    @property
    def passed(self) -> bool:
        if self.kind == "upper":
            return self.estimate <= self.target + 3 * self.std_error + self.slack
        return abs(self.estimate - self.target) <= 3 * self.std_error + self.slack

    def as_dict(self):
        return {"check": self.name, "target": self.target, "estimate": self.estimate,
                "std_error": self.std_error, "kind": self.kind, "slack": self.slack,
                "passed": self.passed}


class NoStationarySolution(ValueError):
    pass


def _innovation(spec, v0, v1):
    """Standardised variance shock of one step; a bijection of v1 given v0."""
    p = spec.params
    dt = spec.tau
    if isinstance(p, ExpOUOneFactorParams):
        decay = math.exp(-p.gamma * dt)
        sd = math.sqrt(p.kappa_sq / (2 * p.gamma) * -math.expm1(-2 * p.gamma * dt))
        return (v1 - v0 * decay) / sd
    drift = p.gamma * v0 ** p.a * (p.theta - v0) * dt
    return (v1 - v0 - drift) / (p.kappa * v0 ** p.b * math.sqrt(dt))


def _return_shock(spec, v0, r):
    """r / (f(v0) sqrt(tau)); a bijection of r given v0."""
    p = spec.params
    scale = p.m * np.exp(v0) if isinstance(p, ExpOUOneFactorParams) else np.sqrt(v0)
    return r / (scale * math.sqrt(spec.tau))


def _log_abs(r):
    # the sign of r is independent of (|r|, state), so I(r : s) = I(log|r| : s)
    return np.log(np.abs(r))


def validate_model(model_id: str, samples: int = 100_000, seed: int = 0, k: int = 4) -> list[Check]:
    """Simulate one observation step per path from the stationary law and
    compare KSG estimates with the closed forms.

    Returns enter through MI-preserving reparametrisations that KSG handles
    far better than raw heavy-tailed returns: ``log|r|`` for I(r : state),
    and the standardised shocks of r and v_tau given v_0 for the leverage
    term.
    """
    spec = get_model(model_id)
    law = stationary_law(spec.params)
    if not law.exists:
        raise NoStationarySolution(f"{model_id}: no stationary solution ({law.reason})")
    cfg = SimConfig(spec, step=spec.tau, n_steps=1, n_paths=samples, seed=seed)
    ens = simulate(cfg)
    r = ens.returns[:, 0]
    params = spec.params
    checks: list[Check] = []

    if isinstance(params, ExpOUTwoFactorParams):
        w0 = ens.states[:, 0].sum(axis=1)
        w1 = ens.states[:, 1].sum(axis=1)
        e = knn_mi(w1, w0, k, random_state=seed)
        process = two_factor_process(params, spec.tau)
        checks.append(Check("I(w_tau:w_0) vs history_mi(n=1)", history_mi(process, 1),
                            e.value, e.std_error))
        e = knn_mi(_log_abs(r), w0, k, random_state=seed)
        numeric, _ = lognormal_mixture_return_mi(params.m, law.variance)
        checks.append(Check("I(r_tau:w_0) vs quadrature", numeric, e.value, e.std_error))
        return checks

    v0, v1 = ens.states[:, 0], ens.states[:, 1]
    e = knn_mi(v1, v0, k, random_state=seed)
    if isinstance(params, ExpOUOneFactorParams):
        checks.append(Check("I(v_tau:v_0) vs exact OU", ou_transition_mi(params.gamma, spec.tau),
                            e.value, e.std_error))
    else:
        # the proxy matches the Euler-step MI up to O(tau^2)
        checks.append(Check("I(v_tau:v_0) vs proxy", mi_proxy(spec), e.value, e.std_error,
                            slack=0.01))
    c = conditional_mi(_return_shock(spec, v0, r), _innovation(spec, v0, v1), v0, k,
                       random_state=seed)
    checks.append(Check("I(r_tau:v_tau|v_0) vs leverage", leverage_mi([params.rho]),
                        c.value, c.std_error))
    e = knn_mi(_log_abs(r), v0, k, random_state=seed)
    if isinstance(params, ExpOUOneFactorParams):
        numeric, _ = lognormal_mixture_return_mi(params.m, law.variance)
        checks.append(Check("I(r_tau:v_0) vs quadrature", numeric, e.value, e.std_error))
    bound = u2_bound(spec)
    if bound is not None:
        checks.append(Check("I(r_tau:v_0) <= U2", bound, e.value, e.std_error, "upper"))
    return checks


def data_processing_check(model_id: str = "expou-1f", samples: int = 50_000, seed: int = 0,
                          k: int = 4) -> list[Check]:
    """Chains v_0 -> v_tau -> f(v_tau) and v_0 -> v_tau -> r_{2 tau}:
    information about v_0 can only shrink along each chain."""
    spec = get_model(model_id)
    ens = simulate(SimConfig(spec, step=spec.tau, n_steps=2, n_paths=samples, seed=seed))
    states = ens.states
    if states.ndim == 3:
        states = states.sum(axis=2)
    v0, v1 = states[:, 0], states[:, 1]
    f = np.exp(v1) if not isinstance(spec.params, SixFactorParams) else np.sqrt(v1)
    r2 = ens.returns[:, 1]
    base = knn_mi(v1, v0, k, random_state=seed)
    mapped = knn_mi(f, v0, k, random_state=seed)
    noisy = knn_mi(r2, v0, k, random_state=seed)
    return [
        Check("I(f(v_tau):v_0) <= I(v_tau:v_0)", base.value, mapped.value,
              combined_se(base, mapped), "upper"),
        Check("I(r_2tau:v_0) <= I(v_tau:v_0)", base.value, noisy.value,
              combined_se(base, noisy), "upper"),
    ]


def validation_table(model_id: str, checks: list[Check], seed: int, samples: int) -> TableArtifact:
    rows = []
    for c in checks:
        est = _cell(c.estimate, source="monte-carlo", error=c.std_error)
        est["status"] = "pass" if c.passed else "fail"
        rows.append({"row": c.name, "kind": c.kind, "slack": c.slack,
                     "target": _cell(c.target), "estimate": est})
    prov = _provenance([get_model(model_id)])
    prov.update({"seed": int(seed), "samples": int(samples)})
    return TableArtifact("validation", rows, prov)
