"""Right-hand side and time stepping of the periodic 2-component mu-Hunter-Saxton system.

The integrated form is the nonlocal transport system

    u_t   = (u + gamma1) u_x + d_x A^{-1} (2 mu(u) u + u_x^2 / 2 + rho^2 / 2)
    rho_t = (u + 2 gamma2) rho_x + u_x rho

with A = mu - d_x^2.  Quadratic products are formed from two-thirds-rule
truncated factors and truncated again, so the evolved spectrum stays inside
|k| <= N/3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .spectral import Field, PeriodicGrid, deriv

if TYPE_CHECKING:
    from .diagnostics import ConservedSet


class GridMismatch(ValueError):
    pass


class NonFinite(FloatingPointError):
    """A time step produced NaN or infinite samples."""

    def __init__(self, t: float, dt: float):
        super().__init__(f"non-finite samples after step from t={t!r} with dt={dt!r}")
        self.t = t
        self.dt = dt


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Params:
    gamma1: float = 0.0
    gamma2: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.gamma1) and math.isfinite(self.gamma2)):
            raise ValueError(f"gamma1, gamma2 must be finite, got {self.gamma1}, {self.gamma2}")

    @property
    def gauge_aligned(self) -> bool:
        """True when gamma1 == 2 gamma2, the hypothesis shared by the blow-up and global results."""
        return self.gamma1 == 2.0 * self.gamma2


@dataclass(frozen=True)
class MuHSState:
    t: float
    u: Field
    rho: Field

    def __post_init__(self):
        if self.u.grid != self.rho.grid:
            raise GridMismatch(f"u lives on {self.u.grid} but rho on {self.rho.grid}")

    @property
    def grid(self) -> PeriodicGrid:
        return self.u.grid

    @classmethod
    def from_arrays(cls, t: float, grid: PeriodicGrid, u, rho) -> "MuHSState":
        return cls(t, Field(grid, u), Field(grid, rho))


@dataclass(frozen=True)
class StepController:
    """Step-size policy and blow-up stopping rules for :func:`muhs.evolve.run`.

    ``resolution_tol`` and ``slope_growth_factor`` add a stopping rule the
    slope threshold alone cannot provide: once the steepening front is no
    longer resolved by the grid (spectral tail of u above ``resolution_tol``)
    while sup u_x has grown past ``slope_growth_factor`` times its reference
    scale, the run is declared a blow-up.
    """

    cfl_number: float = 0.5
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    blowup_slope_threshold: float = 1e6
    resolution_tol: float = 1e-2
    slope_growth_factor: float = 2.0
    velocity_floor: float = 1e-8

    def validate(self) -> None:
        if not 0.0 < self.cfl_number <= 1.0:
            raise ConfigError(f"cfl_number must lie in (0, 1], got {self.cfl_number}")
        if not 0.0 < self.dt_min < self.dt_max:
            raise ConfigError(f"need 0 < dt_min < dt_max, got {self.dt_min}, {self.dt_max}")
        if not self.blowup_slope_threshold > 0.0:
            raise ConfigError("blowup_slope_threshold must be positive")
        if not self.resolution_tol > 0.0:
            raise ConfigError("resolution_tol must be positive")
        if not self.slope_growth_factor >= 1.0:
            raise ConfigError("slope_growth_factor must be >= 1")

    def time_step(self, state: MuHSState, params: Params) -> float:
        speed = (
            float(np.max(np.abs(state.u.samples)))
            + abs(params.gamma1)
            + 2.0 * abs(params.gamma2)
            + self.velocity_floor
        )
        return min(self.dt_max, self.cfl_number / (state.grid.n_points * speed))


def _rhs_arrays(grid: PeriodicGrid, u: np.ndarray, rho: np.ndarray, gamma1: float, gamma2: float):
    """Array-level RHS; returns (du_dt, drho_dt, u_x).

    Kept as a module attribute so instrumentation can wrap every evaluation.
    """
    n = grid.n_points
    mask = grid.dealias_mask
    ik = grid.ik
    rfft, irfft = np.fft.rfft, np.fft.irfft

    uh = rfft(u) * mask
    rh = rfft(rho) * mask
    ud = irfft(uh, n)
    rd = irfft(rh, n)
    ux = irfft(ik * uh, n)
    rx = irfft(ik * rh, n)
    mu = uh[0].real / n

    adv_h = rfft((ud + gamma1) * ux) * mask
    # mean of (u + gamma1) u_x vanishes identically; drop its round-off so mu(u_t) = 0 holds exactly
    adv_h[0] = 0.0
    src_h = rfft(2.0 * mu * ud + 0.5 * ux * ux + 0.5 * rd * rd) * mask
    du = irfft(adv_h + ik * grid.a_inv_symbol() * src_h, n)

    drho = irfft(rfft((ud + 2.0 * gamma2) * rx + ux * rd) * mask, n)
    return du, drho, ux


def rhs(state: MuHSState, params: Params) -> tuple[Field, Field]:
    """Time derivatives (u_t, rho_t) of the state."""
    if state.u.grid != state.rho.grid:
        raise GridMismatch("u and rho grids differ")
    du, drho, _ = _rhs_arrays(
        state.grid, state.u.samples, state.rho.samples, params.gamma1, params.gamma2
    )
    return Field(state.grid, du), Field(state.grid, drho)


@dataclass
class RK4Step:
    """Result of one RK4 step together with the velocity seen at each stage."""

    state: MuHSState
    dt: float
    stage_u: list = field(default_factory=list)


def rk4_step(state: MuHSState, params: Params, dt: float) -> RK4Step:
    """Classical RK4 step that also reports the four stage velocity fields."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = state.grid
    g1, g2 = params.gamma1, params.gamma2
    u0 = state.u.samples
    r0 = state.rho.samples

    k1u, k1r, _ = _rhs_arrays(grid, u0, r0, g1, g2)
    u1, r1 = u0 + 0.5 * dt * k1u, r0 + 0.5 * dt * k1r
    k2u, k2r, _ = _rhs_arrays(grid, u1, r1, g1, g2)
    u2, r2 = u0 + 0.5 * dt * k2u, r0 + 0.5 * dt * k2r
    k3u, k3r, _ = _rhs_arrays(grid, u2, r2, g1, g2)
    u3, r3 = u0 + dt * k3u, r0 + dt * k3r
    k4u, k4r, _ = _rhs_arrays(grid, u3, r3, g1, g2)

    u_new = u0 + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
    r_new = r0 + (dt / 6.0) * (k1r + 2.0 * k2r + 2.0 * k3r + k4r)
    if not (np.all(np.isfinite(u_new)) and np.all(np.isfinite(r_new))):
        raise NonFinite(state.t, dt)
    new = MuHSState(state.t + dt, Field(grid, u_new), Field(grid, r_new))
    return RK4Step(new, dt, [u0, u1, u2, u3])


def step_rk4(state: MuHSState, params: Params, dt: float) -> MuHSState:
    return rk4_step(state, params, dt).state


def residual_eq23(state: MuHSState, params: Params, conserved: "ConservedSet") -> float:
    """Sup norm of the pointwise residual of the differentiated equation

        u_tx = -2 mu0 u + u_x^2 / 2 + u u_xx - rho^2 / 2 + gamma1 u_xx + a

    with u_t taken from :func:`rhs` and ``a`` frozen at its initial value.
    """
    du, _ = rhs(state, params)
    u = state.u.samples
    rho = state.rho.samples
    ux = deriv(state.u, 1).samples
    uxx = deriv(state.u, 2).samples
    utx = deriv(du, 1).samples
    model = (
        -2.0 * conserved.mu0 * u
        + 0.5 * ux * ux
        + u * uxx
        - 0.5 * rho * rho
        + params.gamma1 * uxx
        + conserved.a
    )
    return float(np.max(np.abs(utx - model)))
