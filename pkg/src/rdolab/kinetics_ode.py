"""Pointwise and space-independent kinetics.

Covers the exact closed-form reaction substep (the u-equation with f(v)
frozen), the kinetic ODE subsystem and its sum bound, steady states of the
autocatalytic case p = 2, f(v) = v, and the linear-stability dispersion
relation that exhibits diffusion-driven instability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ConstraintViolation, DomainError, Kinetics, Params


class BlowupInStep(RuntimeError):
    """The frozen reaction ODE reaches infinity inside the requested step.

    Carries the exact interior singularity time `t_star` (relative to the
    start of the step unless a caller re-bases it) and, for per-cell
    evaluations, the index of the earliest-blowing cell.
    """

    def __init__(self, t_star: float, cell: int | None = None):
        super().__init__(f"reaction substep blows up at t* = {t_star!r}")
        self.t_star = t_star
        self.cell = cell


class StepTooLarge(RuntimeError):
    """A kinetic integration step violated nonnegativity beyond tolerance."""


class UnsupportedKinetics(ValueError):
    """Closed-form steady states exist only for p = 2 with f(v) = v."""


def _decay_integral(p: float, a: float, tau: float) -> float:
    """(1 - exp((1-p)*a*tau))/a, continued by its limit (p-1)*tau at a = 0.

    This is (p-1) * integral_0^tau exp((1-p)*a*s) ds, the quantity the
    reaction bracket multiplies f(v) by.
    """
    if a > 0:
        return -math.expm1((1.0 - p) * a * tau) / a
    return (p - 1.0) * tau


def exact_u_step(u: float, f_val: float, p: float, a: float, tau: float) -> float:
    """Advance u' = -a*u + u^p * f_val exactly by tau.

    The solution is u(tau) = e^{-a tau} * (u^{1-p} - f_val*m)^{-1/(p-1)}
    with m = (1 - e^{(1-p) a tau})/a. It is evaluated in the overflow-safe
    form u * (1 - u^{p-1} f_val m)^{-1/(p-1)} * e^{-a tau} so u = 0 and
    large u need no special casing. a = 0 (pure reaction, used when the
    linear decay is handled spectrally) is supported through the limit of m.

    Raises BlowupInStep carrying the interior singularity time when the
    bracket reaches zero within tau.
    """
    if not (u >= 0 and f_val >= 0):
        raise DomainError("exact_u_step requires u >= 0 and f_val >= 0")
    if not tau > 0:
        raise DomainError("exact_u_step requires tau > 0")
    if u == 0.0:
        return 0.0
    g = u ** (p - 1.0)
    c = g * f_val * _decay_integral(p, a, tau)
    if c >= 1.0:
        if a > 0:
            t_star = math.log1p(-a / (g * f_val)) / ((1.0 - p) * a)
        else:
            t_star = 1.0 / ((p - 1.0) * g * f_val)
        raise BlowupInStep(t_star)
    return math.exp(-a * tau) * u * (1.0 - c) ** (-1.0 / (p - 1.0))


def exact_u_step_field(
    u: np.ndarray, f_vals: np.ndarray, p: float, a: float, tau: float
) -> np.ndarray:
    """Vectorized exact_u_step over per-cell u and per-cell frozen f(v).

    On blow-up, reports the earliest interior singularity time over the
    blowing cells and the index of that cell.
    """
    if not tau > 0:
        raise DomainError("exact_u_step_field requires tau > 0")
    u = np.asarray(u, dtype=float)
    f_vals = np.asarray(f_vals, dtype=float)
    g = u ** (p - 1.0)
    c = g * f_vals * _decay_integral(p, a, tau)
    blown = c >= 1.0
    if np.any(blown):
        gf = (g * f_vals)[blown]
        if a > 0:
            t_stars = np.log1p(-a / gf) / ((1.0 - p) * a)
        else:
            t_stars = 1.0 / ((p - 1.0) * gf)
        first = int(np.argmin(t_stars))
        cell = int(np.flatnonzero(blown)[first])
        raise BlowupInStep(float(t_stars[first]), cell=cell)
    return math.exp(-a * tau) * u * (1.0 - c) ** (-1.0 / (p - 1.0))


@dataclass(frozen=True)
class KineticState:
    """Space-independent state (u_bar, v_bar) at time t."""

    u_bar: float
    v_bar: float
    t: float

    def __post_init__(self):
        if self.u_bar < 0 or self.v_bar < 0:
            raise ConstraintViolation("kinetic state must be nonnegative")


def kinetic_rhs(u: float, v: float, params: Params, kinetics: Kinetics):
    """Right-hand side of the kinetic subsystem; clips stage values at 0 so
    Runge-Kutta stages cannot step outside f's domain."""
    u = max(u, 0.0)
    fv = kinetics.value(max(v, 0.0))
    r = u**params.p * fv
    return -params.a * u + r, -params.b * max(v, 0.0) - r + params.kappa


def kinetic_sum_bound(s0: KineticState, params: Params) -> float:
    """Upper bound max{u0+v0, kappa/min(a,b)} for u_bar + v_bar along the flow."""
    return max(s0.u_bar + s0.v_bar, params.kappa / min(params.a, params.b))


def kinetic_integrate(
    s0: KineticState,
    params: Params,
    kinetics: Kinetics,
    t_end: float,
    dt: float,
) -> list[KineticState]:
    """Integrate the kinetic subsystem with the classic 4th-order scheme.

    Returns the trajectory including the initial state; the final step is
    shortened to land exactly on t_end. Raises StepTooLarge if a step drives
    a component negative beyond roundoff tolerance (the caller should shrink
    dt); negatives within tolerance are clamped to zero.
    """
    if not dt > 0:
        raise DomainError("dt must be > 0")
    if not t_end > s0.t:
        raise DomainError("t_end must exceed the initial time")
    scale = max(1.0, s0.u_bar + s0.v_bar, params.kappa / min(params.a, params.b))
    tol = 1e-10 * scale
    out = [s0]
    u, v, t = s0.u_bar, s0.v_bar, s0.t
    while t < t_end - 1e-15:
        step = min(dt, t_end - t)
        k1u, k1v = kinetic_rhs(u, v, params, kinetics)
        k2u, k2v = kinetic_rhs(u + 0.5 * step * k1u, v + 0.5 * step * k1v, params, kinetics)
        k3u, k3v = kinetic_rhs(u + 0.5 * step * k2u, v + 0.5 * step * k2v, params, kinetics)
        k4u, k4v = kinetic_rhs(u + step * k3u, v + step * k3v, params, kinetics)
        u = u + step / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u)
        v = v + step / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if u < -tol or v < -tol:
            raise StepTooLarge(
                f"nonnegativity violated at t = {t + step:.6g} (u = {u:.3e}, v = {v:.3e})"
            )
        u, v = max(u, 0.0), max(v, 0.0)
        t += step
        out.append(KineticState(u, v, t))
    return out


@dataclass(frozen=True)
class SteadyState:
    """Stationary point of the kinetic subsystem."""

    u_bar: float
    v_bar: float
    kind: str  # "trivial" | "nontrivial_minus" | "nontrivial_plus"

    def residual(self, params: Params, kinetics: Kinetics) -> float:
        ru, rv = kinetic_rhs(self.u_bar, self.v_bar, params, kinetics)
        return max(abs(ru), abs(rv))


def steady_states(params: Params, kinetics: Kinetics) -> list[SteadyState]:
    """All nonnegative steady states for the autocatalytic case p = 2, f(v) = v.

    The trivial state (0, kappa/b) always exists. Nontrivial states satisfy
    u = a/v and b*v^2 - kappa*v + a^2 = 0, so they appear exactly when
    kappa^2 > 4*a^2*b; the degenerate discriminant yields one merged root.
    Returned in order: trivial, then nontrivial by increasing v_bar.
    """
    effectively_identity = kinetics.family == "identity" or (
        kinetics.family == "power" and kinetics.q == 1
    )
    if params.p != 2.0 or not effectively_identity:
        raise UnsupportedKinetics(
            "closed-form steady states require p = 2 and f(v) = v"
        )
    a, b, kappa = params.a, params.b, params.kappa
    states = [SteadyState(0.0, kappa / b, "trivial")]
    disc = kappa**2 - 4.0 * a**2 * b
    if disc > 0:
        root = math.sqrt(disc)
        v_minus = (kappa - root) / (2.0 * b)
        v_plus = (kappa + root) / (2.0 * b)
        states.append(SteadyState(a / v_minus, v_minus, "nontrivial_minus"))
        states.append(SteadyState(a / v_plus, v_plus, "nontrivial_plus"))
    elif disc == 0:
        v_star = kappa / (2.0 * b)
        states.append(SteadyState(a / v_star, v_star, "nontrivial_plus"))
    return states


def kinetic_jacobian(u: float, v: float, params: Params, kinetics: Kinetics) -> np.ndarray:
    """Exact Jacobian of the kinetic right-hand side at (u, v)."""
    p = params.p
    fv = kinetics.value(v)
    fpv = kinetics.derivative(v)
    up = u**p
    up1 = p * u ** (p - 1.0)
    return np.array(
        [
            [-params.a + up1 * fv, up * fpv],
            [-up1 * fv, -params.b - up * fpv],
        ]
    )


def dispersion_relation(
    ss: SteadyState,
    params: Params,
    kinetics: Kinetics,
    wavenumbers,
) -> list[tuple[float, float]]:
    """Largest real part of the eigenvalues of J - diag(d*k^2, D*k^2) per k.

    At a nontrivial autocatalytic steady state the (1,1) entry of J equals
    +a, so with d = 0 the curve tends to a as k grows: instability at
    arbitrarily fine scales, the signature that drives the blow-up study.
    """
    J = kinetic_jacobian(ss.u_bar, ss.v_bar, params, kinetics)
    out = []
    for k in wavenumbers:
        k2 = float(k) ** 2
        m11 = J[0, 0] - params.d * k2
        m22 = J[1, 1] - params.D * k2
        tr = m11 + m22
        det = m11 * m22 - J[0, 1] * J[1, 0]
        disc = tr * tr - 4.0 * det
        if disc >= 0:
            lam = 0.5 * (tr + math.sqrt(disc))
        else:
            lam = 0.5 * tr
        out.append((float(k), lam))
    return out
