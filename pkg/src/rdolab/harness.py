"""Experiment configurations, scenario builders, named experiments, and file
emission.

The central scenario is "concentrated": a spike centered at x = 0 under the
pointwise envelope (u0(0)^{1-p} + 2 eps^{-(p-1)} |x|^alpha)^{-1/(p-1)} over a
flat v0, validated against the sufficient conditions that force single-point
blow-up when d = 0. Experiments wrap simulate: a single run, the d = 0 vs
d > 0 dichotomy, a grid/step refinement study, and parameter sweeps.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    BoundContext,
    blowup_time_upper_bound,
    build_bound_context,
    envelope_weights,
    mass_bound,
    standard_monitors,
)
from .core import ConstraintViolation, Grid1D, Kinetics, Params, State
from .integrator import SimOutcome, SimStatus, StepControl, simulate
from .spectral import NeumannOperator


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


class HypothesisViolation(ValueError):
    """Initial data fails one of the blow-up sufficient conditions."""

    def __init__(self, condition: str, message: str):
        super().__init__(f"{condition}: {message}")
        self.condition = condition


# ---------------------------------------------------------------------------
# configuration model


@dataclass(frozen=True)
class ConcentratedScenario:
    """Spike-over-flat-v initial data controlled by the bound constants.

    eps = None picks the largest amplitude keeping the v floor at half its
    ceiling-free value. Exactly one of u0_multiple (relative to the minimal
    blow-up amplitude) or u0_value (absolute) must be given.
    """

    alpha: float = 0.25
    eps: float | None = None
    u0_multiple: float | None = 1.1
    u0_value: float | None = None
    v0_bar: float | None = None

    def __post_init__(self):
        if (self.u0_multiple is None) == (self.u0_value is None):
            raise ConfigError("set exactly one of u0_multiple / u0_value")


@dataclass(frozen=True)
class ConstantScenario:
    """Spatially constant initial data (u0, v0)."""

    u0: float = 0.0
    v0: float = 3.0

    def __post_init__(self):
        if self.u0 < 0 or self.v0 < 0:
            raise ConfigError("constant initial data must be nonnegative")


@dataclass(frozen=True)
class ControlSpec:
    """StepControl fields with an optional automatic blow-up trigger.

    blowup_threshold = None resolves to the envelope ceiling at the
    innermost cell, eps*(h/2)^(-alpha/(p-1)), for concentrated scenarios
    (the first sup-crossing of the pointwise envelope), and to 1e8
    otherwise.
    """

    t_end: float = 1.5
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1e-3
    safety: float = 0.5
    blowup_threshold: float | None = None


@dataclass(frozen=True)
class DichotomySpec:
    """d value and horizon for the diffusive twin run (d = None uses D)."""

    d: float | None = None
    t_end: float = 5.0


@dataclass(frozen=True)
class OutputSpec:
    trace: bool = True
    summary: bool = True
    snapshot_times: tuple[float, ...] = ()
    plots: bool = False
    log_u: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    params: Params
    kinetics: Kinetics
    grid: Grid1D
    scenario: ConcentratedScenario | ConstantScenario
    control: ControlSpec = ControlSpec()
    dichotomy: DichotomySpec = DichotomySpec()
    outputs: OutputSpec = OutputSpec()
    transform: str = "matrix"
    smoothing_samples: int = 64


def default_config() -> ExperimentConfig:
    """Desk-scale defaults: every sufficient condition holds with visible
    margin and kappa^2 > 4 a^2 b activates the nontrivial kinetic branch."""
    return ExperimentConfig(
        params=Params(d=0.0, D=1.0, p=2.0, a=1.0, b=1.0, kappa=3.0),
        kinetics=Kinetics("identity"),
        grid=Grid1D(half_length=1.0, ncells=1024),
        scenario=ConcentratedScenario(),
    )


# --- strict JSON (de)serialization


def _check_keys(section: str, d: dict, allowed: set[str]) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {section}: {sorted(unknown)}")


def config_to_dict(cfg: ExperimentConfig) -> dict:
    p = cfg.params
    scen: dict
    if isinstance(cfg.scenario, ConcentratedScenario):
        scen = {"kind": "concentrated", **dataclasses.asdict(cfg.scenario)}
    else:
        scen = {"kind": "constant", **dataclasses.asdict(cfg.scenario)}
    out = {
        "params": {"d": p.d, "D": p.D, "p": p.p, "a": p.a, "b": p.b, "kappa": p.kappa},
        "kinetics": {"family": cfg.kinetics.family, "q": cfg.kinetics.q},
        "grid": {"half_length": cfg.grid.half_length, "ncells": cfg.grid.ncells},
        "scenario": scen,
        "control": dataclasses.asdict(cfg.control),
        "dichotomy": dataclasses.asdict(cfg.dichotomy),
        "outputs": {
            "trace": cfg.outputs.trace,
            "summary": cfg.outputs.summary,
            "snapshot_times": list(cfg.outputs.snapshot_times),
            "plots": cfg.outputs.plots,
            "log_u": cfg.outputs.log_u,
        },
        "transform": cfg.transform,
        "smoothing_samples": cfg.smoothing_samples,
    }
    return out


def config_from_dict(d: dict) -> ExperimentConfig:
    _check_keys(
        "config",
        d,
        {
            "params",
            "kinetics",
            "grid",
            "scenario",
            "control",
            "dichotomy",
            "outputs",
            "transform",
            "smoothing_samples",
        },
    )
    for required in ("params", "kinetics", "grid", "scenario"):
        if required not in d:
            raise ConfigError(f"missing config section {required!r}")
    try:
        pd = dict(d["params"])
        _check_keys("params", pd, {"d", "D", "p", "a", "b", "kappa"})
        params = Params(**pd)
        kd = dict(d["kinetics"])
        _check_keys("kinetics", kd, {"family", "q"})
        kinetics = Kinetics(**kd)
        gd = dict(d["grid"])
        _check_keys("grid", gd, {"half_length", "ncells"})
        grid = Grid1D(**gd)
        sd = dict(d["scenario"])
        kind = sd.pop("kind", None)
        if kind == "concentrated":
            _check_keys(
                "scenario", sd, {"alpha", "eps", "u0_multiple", "u0_value", "v0_bar"}
            )
            scenario: ConcentratedScenario | ConstantScenario = ConcentratedScenario(**sd)
        elif kind == "constant":
            _check_keys("scenario", sd, {"u0", "v0"})
            scenario = ConstantScenario(**sd)
        else:
            raise ConfigError(f"unknown scenario kind {kind!r}")
        cd = dict(d.get("control", {}))
        _check_keys(
            "control",
            cd,
            {"t_end", "dt_init", "dt_min", "dt_max", "safety", "blowup_threshold"},
        )
        control = ControlSpec(**cd)
        dd = dict(d.get("dichotomy", {}))
        _check_keys("dichotomy", dd, {"d", "t_end"})
        dichotomy = DichotomySpec(**dd)
        od = dict(d.get("outputs", {}))
        _check_keys(
            "outputs", od, {"trace", "summary", "snapshot_times", "plots", "log_u"}
        )
        if "snapshot_times" in od:
            od["snapshot_times"] = tuple(float(t) for t in od["snapshot_times"])
        outputs = OutputSpec(**od)
    except ConstraintViolation as exc:
        raise ConfigError(str(exc)) from None
    transform = d.get("transform", "matrix")
    if transform not in ("matrix", "fft"):
        raise ConfigError(f"unknown transform {transform!r}")
    return ExperimentConfig(
        params=params,
        kinetics=kinetics,
        grid=grid,
        scenario=scenario,
        control=control,
        dichotomy=dichotomy,
        outputs=outputs,
        transform=transform,
        smoothing_samples=int(d.get("smoothing_samples", 64)),
    )


def config_to_json(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2)


def config_from_json(text: str) -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return config_from_dict(raw)


def config_with(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    """Functional update across the nested config: accepts d, ncells, dt_max,
    dt_init, t_end, blowup_threshold, u0_multiple, eps, alpha, p."""
    params = cfg.params
    if "d" in kw:
        params = dataclasses.replace(params, d=kw.pop("d"))
    if "p" in kw:
        params = dataclasses.replace(params, p=kw.pop("p"))
    grid = cfg.grid
    if "ncells" in kw:
        grid = dataclasses.replace(grid, ncells=kw.pop("ncells"))
    control = cfg.control
    for name in ("t_end", "dt_init", "dt_min", "dt_max", "blowup_threshold"):
        if name in kw:
            control = dataclasses.replace(control, **{name: kw.pop(name)})
    scenario = cfg.scenario
    if isinstance(scenario, ConcentratedScenario):
        updates = {}
        if "u0_multiple" in kw:
            updates["u0_multiple"] = kw.pop("u0_multiple")
            updates["u0_value"] = None
        for name in ("eps", "alpha", "v0_bar"):
            if name in kw:
                updates[name] = kw.pop(name)
        if updates:
            scenario = dataclasses.replace(scenario, **updates)
    if kw:
        raise ConfigError(f"unknown override(s): {sorted(kw)}")
    return dataclasses.replace(
        cfg, params=params, grid=grid, control=control, scenario=scenario
    )


# ---------------------------------------------------------------------------
# scenario realization


def concentrated_initial_data(
    grid: Grid1D,
    params: Params,
    alpha: float,
    eps: float,
    u0_at_0: float,
    v0_bar: float,
    ctx: BoundContext,
) -> State:
    """Build the validated spike-over-flat-v state.

    u0 at each cell is the envelope profile scaled by (1 - 1e-6) so the
    strict pointwise inequality holds; v0 is the constant v0_bar. Fails with
    HypothesisViolation when the spike amplitude is below the minimal
    blow-up amplitude or the flat v0 does not clear the v floor.
    """
    p = params.p
    if u0_at_0 < ctx.u0_threshold:
        raise HypothesisViolation(
            "spike_amplitude",
            f"u0(0) = {u0_at_0:.6g} is below the minimal amplitude "
            f"{ctx.u0_threshold:.6g} that forces blow-up",
        )
    if not v0_bar > ctx.R0:
        raise HypothesisViolation(
            "v0_floor", f"v0_bar = {v0_bar:.6g} must strictly exceed R0 = {ctx.R0:.6g}"
        )
    x = np.abs(grid.centers)
    u0 = (1.0 - 1e-6) * (
        u0_at_0 ** (1.0 - p) + 2.0 * eps ** (-(p - 1.0)) * x**alpha
    ) ** (-1.0 / (p - 1.0))
    weighted = np.max(envelope_weights(grid, alpha, p) * u0)
    if not weighted < eps:
        raise HypothesisViolation(
            "envelope", f"initial weighted sup {weighted:.6g} does not sit below eps"
        )
    return State(u0, np.full(grid.ncells, float(v0_bar)), 0.0)


@dataclass
class RunSetup:
    """Everything a single simulate call was built from."""

    config: ExperimentConfig
    params: Params
    kinetics: Kinetics
    grid: Grid1D
    op: NeumannOperator
    op_u: NeumannOperator | None
    state0: State
    ctx: BoundContext | None
    control: StepControl
    monitors: list
    resolved: dict


def resolve_context(cfg: ExperimentConfig, seed: int = 0) -> BoundContext | None:
    """BoundContext for concentrated scenarios (None for others)."""
    if not isinstance(cfg.scenario, ConcentratedScenario):
        return None
    scen = cfg.scenario
    v0_bar = scen.v0_bar if scen.v0_bar is not None else cfg.params.kappa / cfg.params.b
    return build_bound_context(
        cfg.params,
        cfg.kinetics,
        cfg.grid,
        alpha=scen.alpha,
        v0_bar=v0_bar,
        eps=scen.eps,
        smoothing_samples=cfg.smoothing_samples,
        seed=seed,
        transform=cfg.transform,
    )


def prepare(cfg: ExperimentConfig, seed: int = 0, ctx: BoundContext | None = None) -> RunSetup:
    """Resolve the scenario into a ready-to-run setup.

    Passing a prebuilt ctx reuses its constants (eps, R0, thresholds) so
    refinement studies hold the continuum problem fixed across grids.
    """
    params, kinetics, grid = cfg.params, cfg.kinetics, cfg.grid
    resolved: dict = {}
    if isinstance(cfg.scenario, ConcentratedScenario):
        scen = cfg.scenario
        if ctx is None:
            ctx = resolve_context(cfg, seed)
        v0_bar = scen.v0_bar if scen.v0_bar is not None else params.kappa / params.b
        if scen.u0_value is not None:
            u0_at_0 = scen.u0_value
        else:
            u0_at_0 = scen.u0_multiple * ctx.u0_threshold
        state0 = concentrated_initial_data(
            grid, params, scen.alpha, ctx.eps, u0_at_0, v0_bar, ctx
        )
        threshold = cfg.control.blowup_threshold
        if threshold is None:
            threshold = ctx.eps * (grid.h / 2.0) ** (-scen.alpha / (params.p - 1.0))
            if not threshold > 1.0:
                raise ConfigError(
                    "automatic blow-up trigger (envelope ceiling at the innermost "
                    f"cell) is {threshold:.4g} <= 1; refine the grid or set "
                    "control.blowup_threshold explicitly"
                )
        resolved.update(
            eps=ctx.eps,
            u0_at_0=u0_at_0,
            v0_bar=v0_bar,
            bound=blowup_time_upper_bound(u0_at_0, ctx, params),
        )
    else:
        scen = cfg.scenario
        state0 = State(
            np.full(grid.ncells, float(scen.u0)),
            np.full(grid.ncells, float(scen.v0)),
            0.0,
        )
        ctx = None
        threshold = cfg.control.blowup_threshold
        if threshold is None:
            threshold = 1e8
    control = StepControl(
        t_end=cfg.control.t_end,
        dt_init=cfg.control.dt_init,
        dt_min=cfg.control.dt_min,
        dt_max=cfg.control.dt_max,
        safety=cfg.control.safety,
        blowup_threshold=threshold,
    )
    op = NeumannOperator(grid, params.D, params.b, transform=cfg.transform)
    op_u = (
        NeumannOperator(grid, params.d, params.a, transform=cfg.transform)
        if params.d > 0
        else None
    )
    monitors = standard_monitors(grid, params, state0, ctx)
    resolved.update(
        blowup_threshold=threshold,
        mass_bound=mass_bound(state0, params, grid),
        v_ceiling=max(float(np.max(state0.v)), params.kappa / params.b),
    )
    return RunSetup(
        cfg, params, kinetics, grid, op, op_u, state0, ctx, control, monitors, resolved
    )


def run_single(
    cfg: ExperimentConfig, seed: int = 0, ctx: BoundContext | None = None
) -> tuple[SimOutcome, RunSetup]:
    setup = prepare(cfg, seed=seed, ctx=ctx)
    outcome = simulate(
        setup.state0,
        setup.params,
        setup.kinetics,
        setup.op,
        setup.control,
        monitors=setup.monitors,
        op_u=setup.op_u,
        snapshot_times=cfg.outputs.snapshot_times,
    )
    return outcome, setup


# ---------------------------------------------------------------------------
# named experiments


@dataclass
class DichotomyResult:
    zero: SimOutcome
    zero_setup: RunSetup
    positive: SimOutcome
    positive_setup: RunSetup

    def comparison(self) -> dict:
        z, p = self.zero, self.positive
        return {
            "d_zero": {
                "status": z.status.value,
                "t_final": z.t_final,
                "blowup_time_estimate": z.blowup_time_estimate,
                "blowup_cell": z.blowup_cell,
                "sup_u_last": float(z.trace.column("sup_u")[-1]),
            },
            "d_positive": {
                "status": p.status.value,
                "t_final": p.t_final,
                "d": self.positive_setup.params.d,
                "sup_u_max": float(np.max(p.trace.column("sup_u"))),
                "sup_u_initial": float(p.trace.column("sup_u")[0]),
            },
        }


def run_dichotomy(cfg: ExperimentConfig, seed: int = 0) -> DichotomyResult:
    """The central experiment: identical data evolved once with d = 0 and
    once with d > 0 (default d = D)."""
    ctx = resolve_context(cfg, seed)
    zero_cfg = config_with(cfg, d=0.0)
    out0, setup0 = run_single(zero_cfg, seed=seed, ctx=ctx)
    d_pos = cfg.dichotomy.d if cfg.dichotomy.d is not None else cfg.params.D
    if not d_pos > 0:
        raise ConfigError("dichotomy d must be > 0")
    pos_cfg = config_with(cfg, d=d_pos, t_end=cfg.dichotomy.t_end)
    out1, setup1 = run_single(pos_cfg, seed=seed, ctx=ctx)
    return DichotomyResult(out0, setup0, out1, setup1)


def convergence_study(
    cfg: ExperimentConfig,
    levels=(256, 512, 1024, 2048),
    seed: int = 0,
) -> dict:
    """Repeat the d = 0 run across grid levels with dt_max scaled like 1/N.

    The bound constants are resolved once on the configured grid and reused,
    so every level discretizes the same continuum problem. Levels that end
    without blow-up are flagged no_blowup. Returns rows plus successive
    blow-up-time differences.
    """
    if not isinstance(cfg.scenario, ConcentratedScenario):
        raise ConfigError("convergence study requires the concentrated scenario")
    ctx = resolve_context(cfg, seed)
    base_n = cfg.grid.ncells
    rows = []
    for n in levels:
        scale = base_n / n
        level_cfg = config_with(
            cfg,
            d=0.0,
            ncells=int(n),
            dt_max=cfg.control.dt_max * scale,
            dt_init=cfg.control.dt_init * scale,
        )
        outcome, setup = run_single(level_cfg, seed=seed, ctx=ctx)
        rows.append(
            {
                "ncells": int(n),
                "dt_max": setup.control.dt_max,
                "status": outcome.status.value,
                "no_blowup": outcome.status is not SimStatus.BLEW_UP,
                "blowup_time": outcome.blowup_time_estimate
                if outcome.status is SimStatus.BLEW_UP
                else math.nan,
                "envelope_min_margin": outcome.trace.min_margin("envelope_margin"),
                "vfloor_min_margin": outcome.trace.min_margin("vfloor_margin"),
            }
        )
    times = [r["blowup_time"] for r in rows]
    diffs = [
        abs(times[i] - times[i + 1])
        if not (math.isnan(times[i]) or math.isnan(times[i + 1]))
        else math.nan
        for i in range(len(times) - 1)
    ]
    return {"rows": rows, "diffs": diffs}


def parameter_sweep(cfg: ExperimentConfig, axes: dict | None = None, seed: int = 0) -> list[dict]:
    """Independent d = 0 runs over the Cartesian product of axis values.

    axes maps any of "u0_multiple", "eps", "alpha", "p" to value lists; the
    default sweeps u0_multiple over (1.1, 1.5, 2, 4). Points whose hypotheses
    fail are flagged skipped and do not disturb the rest.
    """
    if not isinstance(cfg.scenario, ConcentratedScenario):
        raise ConfigError("parameter sweep requires the concentrated scenario")
    if axes is None:
        axes = {"u0_multiple": [1.1, 1.5, 2.0, 4.0]}
    allowed = {"u0_multiple", "eps", "alpha", "p"}
    unknown = set(axes) - allowed
    if unknown:
        raise ConfigError(f"unknown sweep axes: {sorted(unknown)}")
    names = sorted(axes)
    rows = []
    for values in itertools.product(*(axes[name] for name in names)):
        point = dict(zip(names, values))
        row = dict(point)
        try:
            point_cfg = config_with(cfg, d=0.0, **point)
            outcome, setup = run_single(point_cfg, seed=seed)
            row.update(
                skipped=False,
                status=outcome.status.value,
                blowup_time=outcome.blowup_time_estimate
                if outcome.status is SimStatus.BLEW_UP
                else math.nan,
                bound=setup.resolved.get("bound"),
                envelope_min_margin=outcome.trace.min_margin("envelope_margin"),
                vfloor_min_margin=outcome.trace.min_margin("vfloor_margin"),
            )
        except (HypothesisViolation, ConfigError, ConstraintViolation, ValueError) as exc:
            row.update(skipped=True, reason=str(exc))
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# file emission


def summarize(outcome: SimOutcome, setup: RunSetup) -> dict:
    trace = outcome.trace
    mass_max = float(np.max(trace.column("mass"))) if trace.rows else math.nan
    maxv_max = float(np.max(trace.column("max_v"))) if trace.rows else math.nan
    summary = {
        "status": outcome.status.value,
        "t_final": outcome.t_final,
        "blowup_time_estimate": outcome.blowup_time_estimate,
        "blowup_cell": outcome.blowup_cell,
        "monitor_min_margins": {
            "envelope": trace.min_margin("envelope_margin"),
            "v_floor": trace.min_margin("vfloor_margin"),
            "mass": setup.resolved["mass_bound"] - mass_max,
            "v_ceiling": setup.resolved["v_ceiling"] - maxv_max,
        },
        "violations": [
            {"t": t, "monitor": name} for t, name in trace.violations
        ],
        "bound_context": setup.ctx.as_dict() if setup.ctx else None,
        "resolved": {
            k: v for k, v in setup.resolved.items() if isinstance(v, (int, float))
        },
        "params": dataclasses.asdict(setup.params),
        "grid": {"half_length": setup.grid.half_length, "ncells": setup.grid.ncells},
    }
    return summary


def _plot_profiles(outcome: SimOutcome, setup: RunSetup, path: str, log_u: bool) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    x = setup.grid.centers
    fig, (ax_u, ax_v) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax_u.plot(x, setup.state0.u, label="t = 0", lw=0.9)
    ax_u.plot(x, outcome.final_state.u, label=f"t = {outcome.final_state.t:.4g}", lw=0.9)
    if log_u:
        ax_u.set_yscale("log")
    ax_u.set_ylabel("u")
    ax_u.legend(loc="best", fontsize=8)
    ax_v.plot(x, setup.state0.v, lw=0.9)
    ax_v.plot(x, outcome.final_state.v, lw=0.9)
    ax_v.set_ylabel("v")
    ax_v.set_xlabel("x")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def emit_outputs(
    outcome: SimOutcome,
    setup: RunSetup,
    outdir: str,
    tag: str,
    quiet: bool = False,
) -> list[str]:
    """Write trace CSV, summary JSON, snapshot CSVs and the optional SVG
    profile plot for one run; returns the written paths."""
    os.makedirs(outdir, exist_ok=True)
    spec = setup.config.outputs
    written = []
    if spec.trace:
        path = os.path.join(outdir, f"{tag}_trace.csv")
        outcome.trace.write_csv(path)
        written.append(path)
    if spec.summary:
        path = os.path.join(outdir, f"{tag}_summary.json")
        with open(path, "w") as fh:
            json.dump(summarize(outcome, setup), fh, indent=2)
        written.append(path)
    x = setup.grid.centers
    for idx, (t, u, v) in enumerate(outcome.snapshots):
        path = os.path.join(outdir, f"{tag}_snapshot_{idx}.csv")
        with open(path, "w") as fh:
            fh.write(f"# t = {t:.17g}\n")
            fh.write("x,u,v\n")
            for xi, ui, vi in zip(x, u, v):
                fh.write(f"{xi:.17g},{ui:.17g},{vi:.17g}\n")
        written.append(path)
    if spec.plots:
        path = os.path.join(outdir, f"{tag}_profiles.svg")
        _plot_profiles(outcome, setup, path, spec.log_u)
        written.append(path)
    if not quiet:
        for path in written:
            print(f"wrote {path}")
    return written
