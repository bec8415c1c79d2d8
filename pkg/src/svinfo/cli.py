"""``svinfo`` command line.

Exit codes: 0 success, 1 computation failure, 2 validation failure, 3 bad input.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .catalog import SpecValidationError, get_model, load_spec, model_ids
from .infobounds import full_report
from .numerics import QuadratureError
from .report import (
    TABLE_IDS,
    NoStationarySolution,
    build_table,
    history_series,
    tau_sweep,
    validation_table,
    validate_model,
    write_table,
    write_xy,
)
from .simulate import SimConfig, simulate

EXIT_OK, EXIT_COMPUTE, EXIT_VALIDATION, EXIT_INPUT = 0, 1, 2, 3


class BadInput(Exception):
    pass


def _err(msg):
    print(f"svinfo: {msg}", file=sys.stderr)


def cmd_tables(args) -> int:
    ids = TABLE_IDS if args.which == "all" else (args.which,)
    if args.which != "all" and args.which not in TABLE_IDS:
        raise BadInput(f"unknown table id {args.which!r}; choose from all, {', '.join(TABLE_IDS)}")
    status = EXIT_OK
    for tid in ids:
        table = build_table(tid)
        if args.out:
            for path in write_table(table, args.out, args.format):
                print(path)
        elif args.format == "json":
            sys.stdout.write(table.to_json())
        elif args.format == "csv":
            sys.stdout.write(table.to_csv_text())
        else:
            sys.stdout.write(table.render_text())
        for failure in table.failures:
            _err(f"{tid} row {failure['row']} failed: {failure['error']}")
            status = EXIT_COMPUTE
    return status


def _parse_sweep(text):
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise BadInput(f"--tau-sweep expects lo:hi:n, got {text!r}") from None
    if n < 2 or not hi > lo:
        raise BadInput("--tau-sweep needs hi > lo and n >= 2")
    return lo, hi, n


def _text_report(d) -> str:
    lines = [f"model {d['model_id']}  tau={d['tau']!r}"]
    if not d["exists"]:
        lines.append(f"  no stationary law: {d['reason']}")
        return "\n".join(lines) + "\n"
    items = [(k, d[k]) for k in ("U1", "U2", "G_r", "G_f", "required_returns_per_annum")]
    items += sorted(d["components"].items())
    width = max(len(k) for k, _ in items)
    for k, v in items:
        lines.append(f"  {k.ljust(width)}  {'--' if v is None else format(v, '.6g')}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    try:
        spec = load_spec(args.spec)
    except (OSError, json.JSONDecodeError, SpecValidationError) as exc:
        raise BadInput(f"cannot load {args.spec}: {exc}") from None
    sweep = _parse_sweep(args.tau_sweep) if args.tau_sweep else None
    report = full_report(spec).as_dict()
    text = _text_report(report)
    payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{spec.id}.report.json").write_text(payload)
        (out / f"{spec.id}.report.txt").write_text(text)
    else:
        sys.stdout.write(payload)
    sys.stdout.write(text)
    if sweep and report["exists"]:
        if spec.family == "expou2":
            _err("tau sweep skipped: the two-factor bound is the history MI")
        else:
            target = (out or Path(".")) / f"{spec.id}.u1_sweep.dat"
            write_xy(target, tau_sweep(spec, *sweep))
            print(target)
    if spec.family == "expou2":
        target = (out or Path(".")) / f"{spec.id}.history_mi.dat"
        write_xy(target, history_series(spec))
        print(target)
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.model not in model_ids():
        raise BadInput(f"unknown model id {args.model!r}")
    checks = validate_model(args.model, samples=args.samples, seed=args.seed)
    table = validation_table(args.model, checks, args.seed, args.samples)
    for c in checks:
        rel = "<=" if c.kind == "upper" else "=="
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: estimate {c.estimate:.4f} "
              f"(SE {c.std_error:.4f}) {rel} target {c.target:.4f}")
    if args.out:
        for path in write_table(table, args.out, "json"):
            print(path)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_VALIDATION


def cmd_simulate(args) -> int:
    try:
        spec = get_model(args.model)
    except KeyError:
        raise BadInput(f"unknown model id {args.model!r}") from None
    step = args.step if args.step is not None else spec.tau
    try:
        cfg = SimConfig(spec, step=step, n_steps=args.steps, n_paths=args.paths, seed=args.seed)
    except ValueError as exc:
        raise BadInput(str(exc)) from None
    ens = simulate(cfg)
    out = Path(args.out)
    if out.suffix == ".npz":
        ens.to_npz(out)
    else:
        ens.to_csv(out)
    side = out.with_name(out.name + ".provenance.json")
    side.write_text(json.dumps(ens.metadata, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out} ({ens.n_paths} paths x {ens.n_obs} steps, "
          f"{ens.metadata['positivity_floor_hits']} positivity floor hits)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svinfo", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tables", help="reproduce the published tables")
    p.add_argument("which", help=f"all or one of: {', '.join(TABLE_IDS)}")
    p.add_argument("--format", choices=("csv", "json", "text"), default="csv")
    p.add_argument("--out", help="directory for data files and provenance sidecars")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("analyze", help="full report for a model spec file")
    p.add_argument("spec")
    p.add_argument("--tau-sweep", help="lo:hi:n grid in log(1/tau) for U1 plot data")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validate", help="Monte Carlo checks of the closed forms")
    p.add_argument("model")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="write simulated paths to CSV or NPZ")
    p.add_argument("model")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--paths", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--step", type=float, help="time step (default: the model's tau)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (BadInput, NoStationarySolution) as exc:
        _err(str(exc))
        return EXIT_INPUT
    except (QuadratureError, ArithmeticError, ValueError, RuntimeError) as exc:
        _err(f"computation failed: {exc}")
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
