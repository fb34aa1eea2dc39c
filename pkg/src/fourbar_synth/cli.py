"""Command-line entry point.

Subcommands map one-to-one onto the library surface: ``validate`` checks a
config, ``evaluate`` scores one design, ``trace`` dumps the stroke
trajectory with torque, ``grid`` runs the exhaustive sweep, and
``optimize`` runs the constrained-BO search.  All numeric output uses 12
significant digits; missing values are empty CSV fields / JSON nulls.

Exit codes: 0 success, 1 validation problem, 2 runtime failure, 64 usage.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys

from .constraints import evaluate_design, static_gap
from .dynamics import torque_profile
from .kinematics import kinematic_transform, validate_baseline
from .model import (
    BaselineDefective,
    BaselineInfeasible,
    DesignParams,
    EvaluationRecord,
    MechanismError,
    ParseError,
    ValidationError,
    load_config,
)
from .optimizer import BoStep, OptimizationTrace, fit_surrogates, run_optimization
from .oracle import grid_sweep

_EVAL_HEADER = "l_oa,l_ab,l_bc,c_static_i,c_static_e,c_dyn,t_rms,feasible"
_TRACE_HEADER = "t,delta,delta_dot,delta_ddot,theta,theta_dot,theta_ddot,torque"
_OPT_HEADER = "iter,l_oa,l_ab,l_bc,c_static_i,c_static_e,c_dyn,t_rms,acq,best_so_far"

USAGE_ERROR = 64


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage failures exit with code 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    return "%.12g" % value


def _resolution(text: str) -> int:
    try:
        value = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad resolution {text!r}") from exc
    if not 2 <= value <= 31:
        raise argparse.ArgumentTypeError("resolution must be between 2 and 31")
    return value


def _design_triplet(text: str) -> DesignParams:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated lengths: l_oa,l_ab,l_bc")
    try:
        values = [float(p) for p in parts]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad length in {text!r}") from exc
    try:
        return DesignParams(*values)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _record_row(record: EvaluationRecord) -> str:
    c = record.constraints
    return ",".join(
        [
            _fmt(record.design.l_oa),
            _fmt(record.design.l_ab),
            _fmt(record.design.l_bc),
            _fmt(c.c_static_i),
            _fmt(c.c_static_e),
            _fmt(c.c_dyn),
            _fmt(record.objective),
            "true" if c.feasible else "false",
        ]
    )


def _record_json(record: EvaluationRecord) -> dict:
    c = record.constraints
    return {
        "design": {
            "l_oa": record.design.l_oa,
            "l_ab": record.design.l_ab,
            "l_bc": record.design.l_bc,
        },
        "constraints": {
            "c_static_i": c.c_static_i,
            "c_static_e": c.c_static_e,
            "c_dyn": c.c_dyn,
        },
        "feasible": c.feasible,
        "t_rms": record.objective,
    }


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _cmd_validate(args) -> int:
    cfg, task, _opt = load_config(args.config, degrees=args.degrees)
    postures = validate_baseline(cfg, task)
    print(json.dumps({"status": "ok", "baseline_samples": len(postures)}))
    return 0


def _cmd_evaluate(args) -> int:
    cfg, task, _opt = load_config(args.config, degrees=args.degrees)
    design = args.design if args.design is not None else cfg.baseline

    if args.pose is not None:
        gap = static_gap(design, cfg, task, args.pose)
        print(
            json.dumps(
                {
                    "pose": gap.pose,
                    "value": gap.value,
                    "degenerate_start": gap.degenerate_start,
                    "o_prime_init": list(gap.o_prime_init),
                    "o_prime_final": list(gap.o_prime_final),
                }
            )
        )
        return 0

    record = evaluate_design(design, cfg, task)
    print(json.dumps(_record_json(record)))
    if args.csv:
        fresh = not os.path.exists(args.csv) or os.path.getsize(args.csv) == 0
        with open(args.csv, "a", encoding="utf-8", newline="\n") as fh:
            if fresh:
                fh.write(_EVAL_HEADER + "\n")
            fh.write(_record_row(record) + "\n")
    return 0


def _cmd_trace(args) -> int:
    cfg, task, _opt = load_config(args.config, degrees=args.degrees)
    design = args.design if args.design is not None else cfg.baseline
    samples = kinematic_transform(design, cfg, task)
    profile = torque_profile(design, cfg, task, samples)

    lines = [_TRACE_HEADER]
    for s, (t_prof, torque) in zip(samples, profile.samples[: len(samples)]):
        if abs(t_prof - s.t) > 1e-12:
            raise MechanismError("torque profile does not align with the trajectory")
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    s.t,
                    s.delta,
                    s.delta_dot,
                    s.delta_ddot,
                    s.theta,
                    s.theta_dot,
                    s.theta_ddot,
                    torque,
                )
            )
        )
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_grid(args) -> int:
    cfg, task, opt_cfg = load_config(args.config, degrees=args.degrees)
    records = grid_sweep(cfg, task, opt_cfg.bounds, args.resolution)
    lines = [_EVAL_HEADER]
    lines.extend(_record_row(r) for r in records)
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def _trace_csv(trace: OptimizationTrace) -> str:
    lines = [_OPT_HEADER]
    best = math.inf
    for i, record in enumerate(trace.records):
        if record.constraints.feasible and record.objective is not None:
            best = min(best, record.objective)
        acq = trace.acquisition[i]
        lines.append(
            ",".join(
                [
                    str(i),
                    _fmt(record.design.l_oa),
                    _fmt(record.design.l_ab),
                    _fmt(record.design.l_bc),
                    _fmt(record.constraints.c_static_i),
                    _fmt(record.constraints.c_static_e),
                    _fmt(record.constraints.c_dyn),
                    _fmt(record.objective),
                    _fmt(acq),
                    _fmt(best if best < math.inf else None),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _gp_dump(trace: OptimizationTrace, opt_cfg) -> dict:
    steps = []
    for record in trace.records:
        objective = None
        if record.objective is not None:
            objective = math.log(max(record.objective, 1e-300))
        steps.append(
            BoStep(
                x=record.design.as_tuple(),
                objective=objective,
                constraints={
                    "c_static_i": record.constraints.c_static_i,
                    "c_static_e": record.constraints.c_static_e,
                    "c_dyn": record.constraints.c_dyn,
                },
                payload=record,
            )
        )
    models = fit_surrogates(steps, opt_cfg)

    def model_dict(model):
        return {
            "signal_variance": model.kernel.signal_variance,
            "lengthscales": list(model.kernel.lengthscales),
            "noise_variance": model.kernel.noise_variance,
            "y_mean": model.y_mean,
            "y_sd": model.y_sd,
            "degenerate": model.degenerate,
            "n_train": int(len(model.train_y)),
        }

    payload = {
        "objective": model_dict(models.objective) if models.objective else None,
        "constraints": {
            name: model_dict(m) for name, m in zip(models.constraint_names, models.constraints)
        },
        "f_best_log": models.f_best,
    }
    return payload


def _cmd_optimize(args) -> int:
    cfg, task, opt_cfg = load_config(args.config, degrees=args.degrees)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.budget is not None:
        overrides["n_max"] = args.budget
    if overrides:
        opt_cfg = dataclasses.replace(opt_cfg, **overrides)

    trace = run_optimization(cfg, task, opt_cfg)
    if args.out:
        _write_text(args.out, _trace_csv(trace))
    if args.best:
        if trace.best_feasible is None:
            payload = {"no_feasible_found": True}
        else:
            design, t_rms = trace.best_feasible
            payload = {
                "design": {"l_oa": design.l_oa, "l_ab": design.l_ab, "l_bc": design.l_bc},
                "t_rms": t_rms,
            }
        _write_text(args.best, json.dumps(payload, indent=2) + "\n")
    if args.dump_gp:
        _write_text(args.dump_gp, json.dumps(_gp_dump(trace, opt_cfg), indent=2) + "\n")
    if trace.best_feasible is None:
        print(json.dumps({"no_feasible_found": True}))
    else:
        design, t_rms = trace.best_feasible
        print(
            json.dumps(
                {
                    "best": {"l_oa": design.l_oa, "l_ab": design.l_ab, "l_bc": design.l_bc},
                    "t_rms": t_rms,
                }
            )
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fourbar-synth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument(
            "--degrees",
            action="store_true",
            help="interpret bare angle numbers in the config as degrees",
        )

    p = sub.add_parser("validate", help="load a config and validate the baseline")
    add_common(p)
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("evaluate", help="constraints and RMS torque for one design")
    add_common(p)
    p.add_argument("--design", type=_design_triplet, help="l_oa,l_ab,l_bc in metres")
    p.add_argument("--pose", choices=("i", "e"), help="report only the static gap at this pose")
    p.add_argument("--csv", help="append the record to this CSV file")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("trace", help="write the stroke trajectory + torque CSV")
    add_common(p)
    p.add_argument("--design", type=_design_triplet, help="l_oa,l_ab,l_bc in metres")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("grid", help="exhaustive sweep over the optimizer bounds")
    add_common(p)
    p.add_argument("--resolution", type=_resolution, default=21, help="grid points per axis (2..31)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("optimize", help="constrained Bayesian optimization run")
    add_common(p)
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--budget", type=int, help="override the evaluation budget")
    p.add_argument("--out", help="trace CSV path")
    p.add_argument("--best", help="best-design JSON path")
    p.add_argument("--dump-gp", help="write final GP hyperparameters to this JSON path")
    p.set_defaults(func=_cmd_optimize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParseError, ValidationError, BaselineInfeasible, BaselineDefective) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MechanismError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
