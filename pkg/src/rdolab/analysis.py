"""Quantitative bounds as computable constants and runtime monitors.

Assembles the constant set that controls the blow-up scenario (envelope
exponent window, weighted-norm constants, the v floor and the minimal spike
amplitude), provides the per-state margin checks used while a simulation
runs, and the diagnostic trace that records them.

All margins are signed: positive means the estimate holds with room to
spare, so near-violations stay visible in traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import DomainError, Grid1D, Kinetics, Params, State
from .spectral import NeumannOperator, estimate_smoothing_constant


class NotIntegrable(ValueError):
    """The singular weight |x|^(-gamma) is not in L^q for this (alpha, q)."""


class AlphaInadmissible(ValueError):
    """alpha falls outside the admissible envelope-exponent window."""


class FloorNotPositive(ValueError):
    """eps is too large: the derived v floor min{v0, kappa/b} - eps^p*C0 <= 0."""


def alpha_admissible(alpha: float, p: float, n: int = 1) -> bool:
    """Whether alpha lies in the admissible envelope-exponent window:
    (0, (p-1)/p) in one dimension, (0, 2(p-1)/p) for n >= 2."""
    if not p > 1 or n < 1:
        raise DomainError("alpha_admissible requires p > 1 and n >= 1")
    upper = (p - 1.0) / p if n == 1 else 2.0 * (p - 1.0) / p
    return 0.0 < alpha < upper


def weighted_lq_norm(L: float, alpha: float, p: float, q: float) -> float:
    """L^q norm of |x|^(-alpha*p/(p-1)) over (-L, L), in closed form.

    With gamma = alpha*p/(p-1) the antiderivative gives
    (2 L^{1-gamma q} / (1 - gamma q))^{1/q}, finite exactly when
    gamma*q < 1; otherwise the (alpha, q) pair is inadmissible.
    """
    if not (L > 0 and q >= 1):
        raise DomainError("weighted_lq_norm requires L > 0 and q >= 1")
    gamma = alpha * p / (p - 1.0)
    if gamma < 0:
        raise DomainError("weight exponent must be nonnegative")
    if gamma * q >= 1.0:
        raise NotIntegrable(
            f"gamma*q = {gamma * q:.6g} >= 1: |x|^(-gamma) is not in L^q"
        )
    return (2.0 * L ** (1.0 - gamma * q) / (1.0 - gamma * q)) ** (1.0 / q)


@dataclass(frozen=True)
class BoundContext:
    """All constants of the blow-up scenario for one configuration.

    alpha, eps      envelope exponent and amplitude of u < eps*|x|^(-alpha/(p-1))
    R0              v floor min{v0_bar, kappa/b} - eps^p*C0 (positive by construction)
    R1              v ceiling max{||v0||_inf, kappa/b}
    F0              inf of f over [R0, inf)
    q, Cq           integrability exponent and the empirical smoothing constant
    C0              Cq * sup_{[0,R1]} f * |||x|^(-alpha p/(p-1))||_q * (T + (1-1/(2q))^(-1) T^(1-1/(2q)))
    u0_threshold    minimal central spike amplitude that forces blow-up by t_horizon
    t_horizon       the guaranteed blow-up horizon (1.0)

    Cq is an empirical lower estimate, so every downstream bound built from
    C0 is empirical as well.
    """

    alpha: float
    eps: float
    R0: float
    R1: float
    F0: float
    q: float
    Cq: float
    C0: float
    u0_threshold: float
    t_horizon: float = 1.0

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "eps": self.eps,
            "R0": self.R0,
            "R1": self.R1,
            "F0": self.F0,
            "q": self.q,
            "Cq": self.Cq,
            "C0": self.C0,
            "u0_threshold": self.u0_threshold,
            "t_horizon": self.t_horizon,
        }


def build_bound_context(
    params: Params,
    kinetics: Kinetics,
    grid: Grid1D,
    alpha: float,
    v0_bar: float,
    eps: float | None = None,
    smoothing_samples: int = 64,
    smoothing_taus=None,
    seed: int = 0,
    transform: str = "matrix",
) -> BoundContext:
    """Assemble the full constant set for a configuration (n = 1).

    q is the midpoint of its admissible open window (1, (p-1)/(alpha*p));
    Cq comes from sampling the semigroup that actually propagates v
    (grid, D, b); C0 uses the horizon T = 1. When eps is None it is chosen
    as the largest value with eps^p * C0 <= min{v0_bar, kappa/b}/2, which
    puts the v floor at exactly half its ceiling-free value.
    """
    n = 1
    p = params.p
    if not alpha_admissible(alpha, p, n):
        raise AlphaInadmissible(
            f"alpha = {alpha} outside (0, {(p - 1.0) / p:.6g}) for n = 1"
        )
    if not v0_bar > 0:
        raise DomainError("v0_bar must be > 0")

    q_lo = max(1.0, n / 2.0)
    q_hi = n * (p - 1.0) / (alpha * p)
    q = 0.5 * (q_lo + q_hi)
    op = NeumannOperator(grid, params.D, params.b, transform=transform)
    Cq = estimate_smoothing_constant(
        op, q, samples=smoothing_samples, taus=smoothing_taus, seed=seed
    )
    T = 1.0
    R1 = max(v0_bar, params.kappa / params.b)
    time_factor = T + (1.0 - n / (2.0 * q)) ** -1 * T ** (1.0 - n / (2.0 * q))
    C0 = Cq * kinetics.sup_below(R1) * weighted_lq_norm(grid.half_length, alpha, p, q) * time_factor

    floor_base = min(v0_bar, params.kappa / params.b)
    if eps is None:
        eps = (0.5 * floor_base / C0) ** (1.0 / p)
    if not eps > 0:
        raise DomainError("eps must be > 0")
    R0 = floor_base - eps**p * C0
    if not R0 > 0:
        raise FloorNotPositive(
            f"eps^p * C0 = {eps**p * C0:.6g} >= min(v0_bar, kappa/b) = {floor_base:.6g}"
        )
    F0 = kinetics.inf_above(R0)
    u0_threshold = (
        params.a / ((-math.expm1((1.0 - p) * params.a)) * F0)
    ) ** (1.0 / (p - 1.0))
    return BoundContext(
        alpha=alpha, eps=eps, R0=R0, R1=R1, F0=F0, q=q, Cq=Cq, C0=C0,
        u0_threshold=u0_threshold, t_horizon=T,
    )


def blowup_time_upper_bound(
    u0_at_0: float, ctx: BoundContext, params: Params
) -> float | None:
    """Earliest-guaranteed singularity time of the frozen worst-case ODE
    u' = -a*u + u^p*F0 started at u0_at_0, or None when that ODE stays
    bounded (the bound then does not force blow-up)."""
    if not u0_at_0 > 0:
        raise DomainError("u0_at_0 must be > 0")
    p, a = params.p, params.a
    ratio = a * u0_at_0 ** (1.0 - p) / ctx.F0
    if ratio >= 1.0:
        return None
    return math.log1p(-ratio) / ((1.0 - p) * a)


def envelope_weights(grid: Grid1D, alpha: float, p: float) -> np.ndarray:
    """Per-cell weights |x_i|^(alpha/(p-1)); finite because no center sits at 0."""
    return np.abs(grid.centers) ** (alpha / (p - 1.0))


def envelope_check(state: State, grid: Grid1D, ctx: BoundContext, p: float) -> float:
    """Signed margin of the pointwise envelope u < eps*|x|^(-alpha/(p-1)):
    eps - max_i |x_i|^(alpha/(p-1)) * u_i."""
    u = grid.check_field(state.u)
    return float(ctx.eps - np.max(envelope_weights(grid, ctx.alpha, p) * u))


def v_floor_check(state: State, ctx: BoundContext) -> float:
    """Signed margin of the v floor: min v - R0."""
    return float(np.min(state.v) - ctx.R0)


def v_ceiling_check(state: State, v0_sup: float, params: Params) -> float:
    """Signed margin of the comparison ceiling: max{||v0||_inf, kappa/b} - max v."""
    return float(max(v0_sup, params.kappa / params.b) - np.max(state.v))


def mass_functional(state: State, grid: Grid1D) -> float:
    """Midpoint quadrature of integral (u + v) dx."""
    u = grid.check_field(state.u)
    v = grid.check_field(state.v)
    return float(grid.h * np.sum(u + v))


def mass_bound(state0: State, params: Params, grid: Grid1D) -> float:
    """Uniform-in-time bound max{mass(0), kappa*|domain|/min(a, b)}."""
    omega = 2.0 * grid.half_length
    return max(
        mass_functional(state0, grid), params.kappa * omega / min(params.a, params.b)
    )


def holder_modulus(values: np.ndarray, grid: Grid1D, alpha: float) -> float:
    """max over cell pairs of |w_i - w_j| / |x_i - x_j|^alpha.

    Exact pair enumeration; the O(N^2) cost is fine at desk scale.
    """
    if not 0 < alpha <= 1:
        raise DomainError("holder_modulus requires alpha in (0, 1]")
    w = grid.check_field(values)
    x = grid.centers
    best = 0.0
    for i in range(len(w) - 1):
        dw = np.abs(w[i + 1 :] - w[i])
        dx = (x[i + 1 :] - x[i]) ** alpha
        m = float(np.max(dw / dx))
        if m > best:
            best = m
    return best


@dataclass
class Monitor:
    """Named margin predicate evaluated on every accepted state.

    A violation is a margin below -tol; tol absorbs quadrature and roundoff
    at the monitored quantity's scale.
    """

    name: str
    margin: Callable[[State], float]
    tol: float = 0.0


def standard_monitors(
    grid: Grid1D,
    params: Params,
    state0: State,
    ctx: BoundContext | None = None,
) -> list[Monitor]:
    """Mass and v-ceiling monitors, plus envelope and v-floor when a
    BoundContext is available."""
    v0_sup = float(np.max(state0.v))
    m_bound = mass_bound(state0, params, grid)
    monitors = [
        Monitor(
            "mass",
            lambda s, _b=m_bound: _b - mass_functional(s, grid),
            tol=1e-6 * max(1.0, m_bound),
        ),
        Monitor(
            "v_ceiling",
            lambda s: v_ceiling_check(s, v0_sup, params),
            tol=1e-8 * max(1.0, v0_sup, params.kappa / params.b),
        ),
    ]
    if ctx is not None:
        weights = envelope_weights(grid, ctx.alpha, params.p)
        monitors.append(
            Monitor(
                "envelope",
                lambda s: float(ctx.eps - np.max(weights * s.u)),
                tol=1e-8 * max(1.0, ctx.eps),
            )
        )
        monitors.append(
            Monitor(
                "v_floor",
                lambda s: v_floor_check(s, ctx),
                tol=1e-8 * max(1.0, ctx.R0),
            )
        )
    return monitors


TRACE_FIELDS = (
    "t",
    "dt",
    "sup_u",
    "min_v",
    "max_v",
    "mass",
    "envelope_margin",
    "vfloor_margin",
)


@dataclass
class DiagnosticTrace:
    """Per-accepted-step diagnostic series with strictly increasing times.

    The envelope and v-floor columns are NaN for runs without a
    BoundContext. Violations holds (t, monitor_name) pairs for every margin
    that dipped below its tolerance.
    """

    rows: list[tuple] = field(default_factory=list)
    violations: list[tuple[float, str]] = field(default_factory=list)

    def append(self, **kw) -> None:
        row = tuple(float(kw[name]) for name in TRACE_FIELDS)
        if self.rows and not row[0] > self.rows[-1][0]:
            raise ValueError("trace times must be strictly increasing")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        idx = TRACE_FIELDS.index(name)
        return np.array([r[idx] for r in self.rows])

    def min_margin(self, name: str) -> float:
        col = self.column(name)
        return float(np.min(col)) if len(col) else math.nan

    def record_violation(self, t: float, name: str) -> None:
        self.violations.append((float(t), name))

    def violated(self, name: str) -> bool:
        return any(v_name == name for _, v_name in self.violations)

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(TRACE_FIELDS) + "\n")
            for row in self.rows:
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
