"""Operator-splitting time evolution with blow-up detection.

One step of length dt is the symmetric composition A(dt/2) B(dt) A(dt/2):

  A: the u-flow with v frozen, solved per cell by the exact closed form.
     With d > 0 the linear part d*Lap - a*I is applied first through the
     exact spectral semigroup and the closed form then handles the pure
     reaction u' = u^p f(v) (a Lie split inside the half-step).
  B: the v-flow with u frozen. The linear part D*Lap - b*I propagates
     exactly; the coupling kappa - u^p f(v) is frozen at an exponential-Euler
     midpoint predictor, which keeps the overall composition second order.

Blow-up is detected two ways: the closed form's bracket crossing zero inside
a substep (which yields the interior singularity time to machine precision)
and a sup-norm threshold crossing. The threshold state itself is treated as
the detection event, not an accepted step, so traces only ever contain
states the scheme still resolves.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .analysis import DiagnosticTrace, Monitor, mass_functional
from .core import ConstraintViolation, Grid1D, Kinetics, Params, State
from .kinetics_ode import BlowupInStep, StepTooLarge, exact_u_step_field
from .spectral import NeumannOperator

_TINY = 1e-300


@dataclass(frozen=True)
class StepControl:
    """Step-size and termination policy for simulate."""

    t_end: float
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1e-3
    safety: float = 0.5
    blowup_threshold: float = 1e8

    def __post_init__(self):
        if not self.t_end > 0:
            raise ConstraintViolation("t_end must be > 0")
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ConstraintViolation("need 0 < dt_min <= dt_init <= dt_max")
        if not 0 < self.safety < 1:
            raise ConstraintViolation("safety must lie in (0, 1)")
        if not self.blowup_threshold > 1:
            raise ConstraintViolation("blowup_threshold must be > 1")


class SimStatus(enum.Enum):
    COMPLETED = "completed"
    BLEW_UP = "blew_up"
    DT_UNDERFLOW = "dt_underflow"


@dataclass
class SimOutcome:
    """Result of one simulate call. Blow-up is a result, not an error."""

    status: SimStatus
    t_final: float
    blowup_time_estimate: float | None
    blowup_cell: int | None
    trace: DiagnosticTrace
    final_state: State
    snapshots: list[tuple[float, np.ndarray, np.ndarray]]

    def __post_init__(self):
        if self.status is SimStatus.BLEW_UP:
            if self.blowup_time_estimate is None or self.blowup_cell is None:
                raise ConstraintViolation("blow-up outcome needs estimate and cell")
            if self.t_final != self.blowup_time_estimate:
                raise ConstraintViolation("blow-up outcome must end at its estimate")


def _clamp_roundoff_negatives(w: np.ndarray, label: str) -> np.ndarray:
    """Zero out negative entries of roundoff size; larger negativity means
    the step was too aggressive and is reported instead of hidden."""
    wmin = float(np.min(w))
    if wmin >= 0.0:
        return w
    scale = max(float(np.max(np.abs(w))), 1.0)
    if wmin < -1e-10 * scale:
        raise StepTooLarge(
            f"{label} went negative beyond roundoff ({wmin:.3e}); reduce dt"
        )
    return np.maximum(w, 0.0)


def _dt_proposal(
    state: State, params: Params, kinetics: Kinetics, control: StepControl
) -> float:
    """Unclamped step proposal: a safety fraction of the frozen-ODE time to
    blow up from the current sup, safety*a/(p-1) * ||u||_inf^{1-p} / F_loc,
    where F_loc is the sup of f over the current v range."""
    sup_u = float(np.max(state.u))
    if sup_u <= 0.0:
        return control.dt_max
    v_max = float(np.max(state.v))
    f_loc = kinetics.sup_below(v_max) if v_max > 0 else 0.0
    p, a = params.p, params.a
    return control.safety * a / (p - 1.0) * sup_u ** (1.0 - p) / max(f_loc, _TINY)


def adapt_dt(
    state: State,
    params: Params,
    kinetics: Kinetics,
    control: StepControl,
) -> float:
    """Proposal clamped into [dt_min, dt_max] and the remaining time.

    The unclamped value guarantees the reaction bracket keeps a margin of at
    least 1 - safety, so the exact substep cannot hit its singularity while
    the proposal is honored.
    """
    remaining = max(control.t_end - state.t, control.dt_min)
    dt = min(_dt_proposal(state, params, kinetics, control), control.dt_max, remaining)
    return max(dt, control.dt_min)


def _u_half_step(
    u: np.ndarray,
    v: np.ndarray,
    params: Params,
    kinetics: Kinetics,
    tau: float,
    op_u: NeumannOperator | None,
    mirror: bool,
) -> np.ndarray:
    f_vals = kinetics.value(v)
    if params.d == 0.0:
        return exact_u_step_field(u, f_vals, params.p, params.a, tau)
    if op_u is None:
        raise ConstraintViolation("d > 0 requires the u-diffusion operator")
    # Lie split, mirrored between the two half-steps so the full composition
    # stays palindromic (hence second order). The linear decay lives in op_u,
    # so the reaction closed form runs with a = 0.
    if mirror:
        u = exact_u_step_field(u, f_vals, params.p, 0.0, tau)
        return _clamp_roundoff_negatives(op_u.apply_semigroup(u, tau), "u")
    u = _clamp_roundoff_negatives(op_u.apply_semigroup(u, tau), "u")
    return exact_u_step_field(u, f_vals, params.p, 0.0, tau)


def strang_step(
    state: State,
    params: Params,
    kinetics: Kinetics,
    op: NeumannOperator,
    dt: float,
    op_u: NeumannOperator | None = None,
) -> State:
    """Advance one symmetric split step of length dt.

    Raises BlowupInStep with the singularity time re-based to absolute time
    when the reaction bracket crosses zero inside a substep; raises
    StepTooLarge when a field dips negative beyond roundoff.
    """
    u, v, t = state.u, state.v, state.t
    try:
        u = _u_half_step(u, v, params, kinetics, 0.5 * dt, op_u, mirror=False)
    except BlowupInStep as exc:
        raise BlowupInStep(t + exc.t_star, cell=exc.cell) from None

    # v-flow: exact linear propagation, coupling frozen at the exponential
    # midpoint so the composition stays second order
    g0 = params.kappa - u**params.p * kinetics.value(v)
    v_mid = _clamp_roundoff_negatives(
        op.semigroup_with_source(v, g0, 0.5 * dt), "v"
    )
    g_mid = params.kappa - u**params.p * kinetics.value(v_mid)
    v_new = _clamp_roundoff_negatives(op.semigroup_with_source(v, g_mid, dt), "v")

    try:
        u = _u_half_step(u, v_new, params, kinetics, 0.5 * dt, op_u, mirror=True)
    except BlowupInStep as exc:
        # the second half formally covers [t + dt/2, t + dt]
        raise BlowupInStep(t + 0.5 * dt + exc.t_star, cell=exc.cell) from None
    return State(u, v_new, t + dt)


def simulate(
    init: State,
    params: Params,
    kinetics: Kinetics,
    op: NeumannOperator,
    control: StepControl,
    monitors: list[Monitor] = (),
    op_u: NeumannOperator | None = None,
    snapshot_times=(),
) -> SimOutcome:
    """Advance from init until t_end, blow-up, or step-size underflow.

    Every accepted state contributes a trace row (the initial state included,
    with dt = 0) and is run through every monitor; margins below a monitor's
    tolerance are recorded as violations. Blow-up is declared either by a
    BlowupInStep bubbling up from the exact substep (estimate = interior
    singularity time) or by sup u crossing control.blowup_threshold
    (estimate = time of the crossing state, which is not itself accepted).
    """
    grid = op.grid
    grid.check_field(init.u)
    trace = DiagnosticTrace()
    pending_snaps = sorted(float(s) for s in snapshot_times)
    snapshots: list[tuple[float, np.ndarray, np.ndarray]] = []

    envelope = next((m for m in monitors if m.name == "envelope"), None)
    v_floor = next((m for m in monitors if m.name == "v_floor"), None)

    def accept(s: State, dt: float) -> None:
        env = envelope.margin(s) if envelope else float("nan")
        flo = v_floor.margin(s) if v_floor else float("nan")
        trace.append(
            t=s.t,
            dt=dt,
            sup_u=float(np.max(s.u)),
            min_v=float(np.min(s.v)),
            max_v=float(np.max(s.v)),
            mass=mass_functional(s, grid),
            envelope_margin=env,
            vfloor_margin=flo,
        )
        for mon in monitors:
            if mon.margin(s) < -mon.tol:
                trace.record_violation(s.t, mon.name)
        while pending_snaps and s.t >= pending_snaps[0] - 1e-15:
            snapshots.append((s.t, s.u.copy(), s.v.copy()))
            pending_snaps.pop(0)

    state = init
    accept(state, 0.0)
    if float(np.max(state.u)) >= control.blowup_threshold:
        return SimOutcome(
            SimStatus.BLEW_UP, state.t, state.t, int(np.argmax(state.u)),
            trace, state, snapshots,
        )

    first = True
    while state.t < control.t_end - 1e-12:
        proposal = _dt_proposal(state, params, kinetics, control)
        underflow = proposal < control.dt_min
        dt = min(proposal, control.dt_max, control.t_end - state.t)
        if first:
            dt = min(dt, control.dt_init)
            first = False
        dt = max(dt, control.dt_min)
        try:
            new = strang_step(state, params, kinetics, op, dt, op_u=op_u)
        except BlowupInStep as exc:
            return SimOutcome(
                SimStatus.BLEW_UP, exc.t_star, exc.t_star, exc.cell,
                trace, state, snapshots,
            )
        if float(np.max(new.u)) >= control.blowup_threshold:
            return SimOutcome(
                SimStatus.BLEW_UP, new.t, new.t, int(np.argmax(new.u)),
                trace, new, snapshots,
            )
        state = new
        accept(state, dt)
        if underflow:
            return SimOutcome(
                SimStatus.DT_UNDERFLOW, state.t, None, None, trace, state, snapshots
            )
    return SimOutcome(
        SimStatus.COMPLETED, state.t, None, None, trace, state, snapshots
    )
