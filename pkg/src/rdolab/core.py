"""Parameters, nonlinearity family, spatial grid, and simulation state.

Everything here is an immutable value object and every constructor enforces
the sign and shape constraints the rest of the package relies on, so
downstream code never re-checks them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


class ConstraintViolation(ValueError):
    """A parameter violates its sign or range constraint."""


class DomainError(ValueError):
    """An argument lies outside a function's mathematical domain."""


class SizeMismatch(ValueError):
    """A per-cell array does not match the grid it is paired with."""


@dataclass(frozen=True)
class Params:
    """Coefficients of the two-component system

        u_t = d*Lap(u) - a*u + u^p * f(v)
        v_t = D*Lap(v) - b*v - u^p * f(v) + kappa

    with d >= 0, D > 0, p > 1, a > 0, b > 0, kappa >= 0. d = 0 is the
    ODE-coupled regime where concentrated data can blow up.
    """

    d: float
    D: float
    p: float
    a: float
    b: float
    kappa: float

    def __post_init__(self):
        checks = (
            (self.d >= 0, "d must be >= 0"),
            (self.D > 0, "D must be > 0"),
            (self.p > 1, "p must be > 1"),
            (self.a > 0, "a must be > 0"),
            (self.b > 0, "b must be > 0"),
            (self.kappa >= 0, "kappa must be >= 0"),
        )
        for ok, msg in checks:
            if not ok:
                raise ConstraintViolation(msg)


def validate_params(d, D, p, a, b, kappa) -> Params:
    """Build Params from six raw reals, rejecting anything outside the
    admissible parameter set."""
    return Params(float(d), float(D), float(p), float(a), float(b), float(kappa))


@dataclass(frozen=True)
class Kinetics:
    """Nonlinearity f drawn from a closed family of admissible choices.

    Families:
        identity     f(v) = v
        power        f(v) = v^q,        q >= 1
        saturating   f(v) = v / (1 + v)

    Every member is C1 on [0, inf), vanishes at 0, is positive for v > 0
    and nondecreasing, so infima and suprema over v-intervals are exact
    endpoint evaluations. Keeping the family closed (rather than accepting
    arbitrary callables) is what makes those extrema trustworthy.
    """

    family: str = "identity"
    q: float = 1.0

    def __post_init__(self):
        if self.family not in ("identity", "power", "saturating"):
            raise ConstraintViolation(f"unknown kinetics family {self.family!r}")
        if self.family == "power" and not self.q >= 1:
            raise ConstraintViolation("power family requires exponent q >= 1")

    def value(self, v):
        """f(v) for scalar or array v >= 0."""
        v = np.asarray(v, dtype=float)
        if np.any(v < 0):
            raise DomainError("f(v) is only defined for v >= 0")
        if self.family == "identity":
            out = v + 0.0
        elif self.family == "power":
            out = v**self.q
        else:
            out = v / (1.0 + v)
        return float(out) if out.ndim == 0 else out

    def derivative(self, v):
        """f'(v) for scalar or array v >= 0."""
        v = np.asarray(v, dtype=float)
        if np.any(v < 0):
            raise DomainError("f'(v) is only defined for v >= 0")
        if self.family == "identity":
            out = np.ones_like(v)
        elif self.family == "power":
            # q = 1 reduces to the identity slope, including at v = 0.
            out = np.ones_like(v) if self.q == 1 else self.q * v ** (self.q - 1.0)
        else:
            out = 1.0 / (1.0 + v) ** 2
        return float(out) if out.ndim == 0 else out

    def inf_above(self, R: float) -> float:
        """inf of f over [R, inf) for R > 0; exact because f is nondecreasing."""
        if not R > 0:
            raise DomainError("inf_above requires R > 0")
        return float(self.value(R))

    def sup_below(self, R1: float) -> float:
        """sup of f over [0, R1] for R1 > 0; exact because f is nondecreasing."""
        if not R1 > 0:
            raise DomainError("sup_below requires R1 > 0")
        return float(self.value(R1))


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centered grid on the symmetric interval (-L, L).

    ncells must be even so x = 0 falls on a cell boundary: every center then
    keeps |x| >= h/2 and the singular monitor weights |x|^(-gamma) stay
    finite. min |center| is the distance-to-origin proxy used by the
    envelope and blow-up diagnostics.
    """

    half_length: float
    ncells: int

    def __post_init__(self):
        if not self.half_length > 0:
            raise ConstraintViolation("half_length must be > 0")
        if self.ncells < 2 or self.ncells % 2 != 0:
            raise ConstraintViolation("ncells must be an even integer >= 2")

    @property
    def h(self) -> float:
        return 2.0 * self.half_length / self.ncells

    @cached_property
    def centers(self) -> np.ndarray:
        x = -self.half_length + (np.arange(self.ncells) + 0.5) * self.h
        x.setflags(write=False)
        return x

    def check_field(self, values: np.ndarray) -> np.ndarray:
        """Validate that an array is a field on this grid; returns it as float64."""
        arr = np.asarray(values, dtype=float)
        if arr.shape != (self.ncells,):
            raise SizeMismatch(
                f"field has shape {arr.shape}, grid expects ({self.ncells},)"
            )
        return arr


@dataclass(frozen=True)
class State:
    """Paired (u, v) fields at time t; both componentwise nonnegative."""

    u: np.ndarray
    v: np.ndarray
    t: float

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise SizeMismatch("u and v must be 1-D arrays of equal length")
        if not np.all(np.isfinite(u)) or not np.all(np.isfinite(v)):
            raise ConstraintViolation("state fields must be finite")
        if np.any(u < 0) or np.any(v < 0):
            raise ConstraintViolation("state fields must be nonnegative")
        if not self.t >= 0:
            raise ConstraintViolation("time must be nonnegative")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
