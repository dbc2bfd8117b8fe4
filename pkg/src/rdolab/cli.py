"""Command-line front end.

Subcommands: simulate, dichotomy, bounds, kinetics, converge, sweep.
Exit codes: 0 on success (a blow-up outcome is a result, not an error),
1 for configuration or hypothesis errors, 2 for a step-size underflow
without a blow-up flag.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .analysis import AlphaInadmissible, FloorNotPositive, NotIntegrable
from .core import ConstraintViolation, DomainError
from .harness import (
    ConfigError,
    HypothesisViolation,
    config_from_json,
    default_config,
    emit_outputs,
    resolve_context,
    run_dichotomy,
    run_single,
    convergence_study,
    parameter_sweep,
)
from .integrator import SimStatus
from .kinetics_ode import (
    KineticState,
    StepTooLarge,
    UnsupportedKinetics,
    dispersion_relation,
    kinetic_integrate,
    kinetic_sum_bound,
    steady_states,
)

_CONFIG_ERRORS = (
    ConfigError,
    HypothesisViolation,
    ConstraintViolation,
    DomainError,
    AlphaInadmissible,
    FloorNotPositive,
    NotIntegrable,
    UnsupportedKinetics,
    StepTooLarge,
)


def _load_config(path: str | None):
    if path is None:
        return default_config()
    with open(path) as fh:
        return config_from_json(fh.read())


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _outcome_line(tag: str, outcome) -> str:
    if outcome.status is SimStatus.BLEW_UP:
        return (
            f"{tag}: blew up at t = {outcome.blowup_time_estimate:.6g} "
            f"(cell {outcome.blowup_cell})"
        )
    return f"{tag}: {outcome.status.value} at t = {outcome.t_final:.6g}"


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    outcome, setup = run_single(cfg, seed=args.seed)
    emit_outputs(outcome, setup, args.out, "run", quiet=args.quiet)
    if not args.quiet:
        print(_outcome_line("run", outcome))
    return 2 if outcome.status is SimStatus.DT_UNDERFLOW else 0


def cmd_dichotomy(args) -> int:
    cfg = _load_config(args.config)
    result = run_dichotomy(cfg, seed=args.seed)
    emit_outputs(result.zero, result.zero_setup, args.out, "d0", quiet=args.quiet)
    emit_outputs(result.positive, result.positive_setup, args.out, "dpos", quiet=args.quiet)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "dichotomy.json")
    with open(path, "w") as fh:
        json.dump(result.comparison(), fh, indent=2)
    if not args.quiet:
        print(f"wrote {path}")
        print(_outcome_line("d=0  ", result.zero))
        print(_outcome_line("d>0  ", result.positive))
    statuses = (result.zero.status, result.positive.status)
    return 2 if SimStatus.DT_UNDERFLOW in statuses else 0


def cmd_bounds(args) -> int:
    cfg = _load_config(args.config)
    ctx = resolve_context(cfg, seed=args.seed)
    if ctx is None:
        raise ConfigError("bounds requires the concentrated scenario")
    print(json.dumps(ctx.as_dict(), indent=2))
    return 0


def cmd_kinetics(args) -> int:
    cfg = _load_config(args.config)
    params, kin = cfg.params, cfg.kinetics
    s0 = KineticState(args.u0bar, args.v0bar, 0.0)
    traj = kinetic_integrate(s0, params, kin, t_end=args.t_end, dt=args.dt)
    bound = kinetic_sum_bound(s0, params)
    sums = [s.u_bar + s.v_bar for s in traj]
    summary = {
        "initial": {"u_bar": s0.u_bar, "v_bar": s0.v_bar},
        "final": {"u_bar": traj[-1].u_bar, "v_bar": traj[-1].v_bar, "t": traj[-1].t},
        "sum_bound": bound,
        "max_sum": max(sums),
        "sum_bound_respected": max(sums) <= bound + 1e-8 * max(1.0, bound),
    }
    try:
        states = steady_states(params, kin)
        summary["steady_states"] = [
            {
                "kind": ss.kind,
                "u_bar": ss.u_bar,
                "v_bar": ss.v_bar,
                "residual": ss.residual(params, kin),
            }
            for ss in states
        ]
    except UnsupportedKinetics as exc:
        states = []
        summary["steady_states"] = str(exc)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "kinetics_summary.json")
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
    written = [path]
    if states:
        ks = np.geomspace(0.1, 1000.0, 61)
        path = os.path.join(args.out, "kinetics_dispersion.csv")
        curves = {ss.kind: dispersion_relation(ss, params, kin, ks) for ss in states}
        with open(path, "w") as fh:
            fh.write("k," + ",".join(curves) + "\n")
            for i, k in enumerate(ks):
                row = [f"{k:.17g}"] + [f"{curves[kind][i][1]:.17g}" for kind in curves]
                fh.write(",".join(row) + "\n")
        written.append(path)
    if not args.quiet:
        for p in written:
            print(f"wrote {p}")
        print(json.dumps(summary, indent=2))
    return 0


def cmd_converge(args) -> int:
    cfg = _load_config(args.config)
    levels = [int(v) for v in _floats(args.levels)]
    study = convergence_study(cfg, levels=levels, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "converge.csv")
    with open(path, "w") as fh:
        fh.write(
            "ncells,dt_max,status,blowup_time,envelope_min_margin,vfloor_min_margin\n"
        )
        for r in study["rows"]:
            fh.write(
                f"{r['ncells']},{r['dt_max']:.17g},{r['status']},"
                f"{r['blowup_time']:.17g},{r['envelope_min_margin']:.17g},"
                f"{r['vfloor_min_margin']:.17g}\n"
            )
    if not args.quiet:
        print(f"wrote {path}")
        for r in study["rows"]:
            print(
                f"N={r['ncells']:5d} dt_max={r['dt_max']:.3g} {r['status']}"
                + ("" if r["no_blowup"] else f" T={r['blowup_time']:.6f}")
            )
        diffs = ", ".join(
            "nan" if math.isnan(dv) else f"{dv:.3e}" for dv in study["diffs"]
        )
        print(f"successive |T(N) - T(2N)|: {diffs}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    axes = {}
    if args.u0_multiples:
        axes["u0_multiple"] = _floats(args.u0_multiples)
    if args.eps_values:
        axes["eps"] = _floats(args.eps_values)
    if args.alpha_values:
        axes["alpha"] = _floats(args.alpha_values)
    if args.p_values:
        axes["p"] = _floats(args.p_values)
    rows = parameter_sweep(cfg, axes=axes or None, seed=args.seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "sweep.csv")
    names = sorted({k for row in rows for k in row})
    with open(path, "w") as fh:
        fh.write(",".join(names) + "\n")
        for row in rows:
            cells = []
            for name in names:
                val = row.get(name, "")
                cells.append(f"{val:.17g}" if isinstance(val, float) else str(val))
            fh.write(",".join(cells) + "\n")
    if not args.quiet:
        print(f"wrote {path}")
        for row in rows:
            if row.get("skipped"):
                print(f"point {row}: skipped")
            else:
                print(
                    f"point {{{', '.join(f'{k}={row[k]}' for k in sorted(row) if k in ('u0_multiple', 'eps', 'alpha', 'p'))}}}: "
                    f"{row['status']}, T={row['blowup_time']:.6g}, bound={row['bound']}"
                )
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="smoothing-constant sampling seed")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(
        prog="rdolab",
        description="Numerical laboratory for a reaction-diffusion-ODE system "
        "with single-point blow-up at d = 0",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", parents=[common], help="run the configured scenario once")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("dichotomy", parents=[common], help="paired d = 0 / d > 0 runs")
    sp.set_defaults(func=cmd_dichotomy)

    sp = sub.add_parser("bounds", parents=[common], help="print the bound constants")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("kinetics", parents=[common], help="kinetic ODE run, steady states, dispersion")
    sp.add_argument("--u0bar", type=float, default=1.0)
    sp.add_argument("--v0bar", type=float, default=1.0)
    sp.add_argument("--t-end", type=float, default=20.0)
    sp.add_argument("--dt", type=float, default=1e-3)
    sp.set_defaults(func=cmd_kinetics)

    sp = sub.add_parser("converge", parents=[common], help="grid/step refinement study")
    sp.add_argument("--levels", default="256,512,1024,2048")
    sp.set_defaults(func=cmd_converge)

    sp = sub.add_parser("sweep", parents=[common], help="parameter sweep over scenario axes")
    sp.add_argument("--u0-multiples", default="")
    sp.add_argument("--eps-values", default="")
    sp.add_argument("--alpha-values", default="")
    sp.add_argument("--p-values", default="")
    sp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
