"""Characteristics of the density equation and the quantities carried along them.

A track follows y(t) with dy/dt = -(u(t, y) + 2 gamma2), y(0) = -x0, so the
classical flow map is q(t, x0) = -y(t).  Along it we carry the Jacobian
q_x = exp(-int u_x(s, y(s)) ds), the slope m = u_x(t, y), the density
gamma = rho(t, y) and the Lyapunov value w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .diagnostics import ConservedSet
from .dynamics import MuHSState, Params, RK4Step
from .spectral import TWO_PI, PeriodicGrid, deriv

SQRT3_OVER_3 = math.sqrt(3.0) / 3.0


class NonPositiveA(ValueError):
    pass


class ZeroDensity(ValueError):
    pass


@dataclass(frozen=True)
class CharacteristicTrack:
    label_x0: float
    y: float
    jac_qx: float
    m: float
    gamma: float
    w: float
    alpha0: float
    M0: float
    t: float = 0.0
    u_at_y: float = 0.0

    @property
    def q(self) -> float:
        return -self.y


def _eval(grid: PeriodicGrid, samples: np.ndarray, ys: np.ndarray, with_derivative: bool = True):
    """Trigonometric interpolant of ``samples`` (and its x-derivative) at the points ``ys``."""
    c = np.fft.rfft(samples) * (grid.mode_weights / grid.n_points)
    phase = np.exp(1j * TWO_PI * np.multiply.outer(np.mod(ys, 1.0), grid.wavenumbers))
    vals = (phase @ c).real
    if not with_derivative:
        return vals, None
    return vals, (phase @ (c * grid.ik)).real


def lyapunov_w(track: CharacteristicTrack) -> float:
    """gamma alpha0 + (alpha0 / gamma)(1 + m^2)."""
    if track.gamma == 0.0:
        raise ZeroDensity(f"density vanishes on the track labelled {track.label_x0!r}")
    return track.gamma * track.alpha0 + (track.alpha0 / track.gamma) * (1.0 + track.m ** 2)


def _w_or_nan(gamma: float, alpha0: float, m: float) -> float:
    if gamma == 0.0:
        return math.nan
    return gamma * alpha0 + (alpha0 / gamma) * (1.0 + m * m)


def init_track(x0: float, state0: MuHSState) -> CharacteristicTrack:
    y0 = float(np.mod(-x0, 1.0))
    ys = np.array([y0])
    u, ux = _eval(state0.grid, state0.u.samples, ys)
    rho, _ = _eval(state0.grid, state0.rho.samples, ys, with_derivative=False)
    m, g = float(ux[0]), float(rho[0])
    return CharacteristicTrack(
        label_x0=float(x0),
        y=y0,
        jac_qx=1.0,
        m=m,
        gamma=g,
        w=_w_or_nan(g, g, m),
        alpha0=g,
        M0=m,
        t=float(state0.t),
        u_at_y=float(u[0]),
    )


def _advance_arrays(
    grid: PeriodicGrid,
    ys: np.ndarray,
    log_j: np.ndarray,
    stage_u: Sequence[np.ndarray],
    shift: float,
    dt: float,
):
    """One RK4 step of (y, log q_x) driven by the four stage velocities of the PDE step."""
    ky, kj = [], []
    offsets = (0.0, 0.5 * dt, 0.5 * dt, dt)
    for i, u_stage in enumerate(stage_u):
        y_stage = ys + (offsets[i] * ky[-1] if i else 0.0)
        u, ux = _eval(grid, u_stage, y_stage)
        ky.append(-(u + shift))
        kj.append(-ux)
    y_new = ys + dt / 6.0 * (ky[0] + 2.0 * ky[1] + 2.0 * ky[2] + ky[3])
    lj_new = log_j + dt / 6.0 * (kj[0] + 2.0 * kj[1] + 2.0 * kj[2] + kj[3])
    return np.mod(y_new, 1.0), lj_new


def _resample(
    tracks: Sequence[CharacteristicTrack], ys: np.ndarray, log_j: np.ndarray, state: MuHSState
) -> list[CharacteristicTrack]:
    u, ux = _eval(state.grid, state.u.samples, ys)
    rho, _ = _eval(state.grid, state.rho.samples, ys, with_derivative=False)
    out = []
    for i, tr in enumerate(tracks):
        m, g = float(ux[i]), float(rho[i])
        out.append(
            replace(
                tr,
                y=float(ys[i]),
                jac_qx=float(np.exp(log_j[i])),
                m=m,
                gamma=g,
                w=_w_or_nan(g, tr.alpha0, m),
                t=float(state.t),
                u_at_y=float(u[i]),
            )
        )
    return out


def advance_tracks(
    tracks: Sequence[CharacteristicTrack], step: RK4Step, params: Params
) -> list[CharacteristicTrack]:
    """Advance every track in lockstep with one PDE step.

    Position and log-Jacobian are integrated together by RK4 using the stage
    velocities of ``step``; m, gamma and w are then sampled from the new state.
    """
    if not tracks:
        return []
    grid = step.state.grid
    ys = np.array([tr.y for tr in tracks])
    log_j = np.log(np.array([tr.jac_qx for tr in tracks]))
    ys, log_j = _advance_arrays(grid, ys, log_j, step.stage_u, 2.0 * params.gamma2, step.dt)
    return _resample(tracks, ys, log_j, step.state)


def advance_track(track: CharacteristicTrack, step: RK4Step, params: Params) -> CharacteristicTrack:
    return advance_tracks([track], step, params)[0]


def transport_identity_error(track: CharacteristicTrack, state: MuHSState) -> float:
    """|rho(t, y) q_x - rho0(-x0)| for the track at the time of ``state``."""
    rho, _ = _eval(state.grid, state.rho.samples, np.array([track.y]), with_derivative=False)
    return abs(float(rho[0]) * track.jac_qx - track.alpha0)


def riccati_rhs(track: CharacteristicTrack, u_at_y: float, conserved: ConservedSet) -> float:
    """m^2/2 - gamma^2/2 + a - 2 mu0 u(t, y)."""
    return (
        0.5 * track.m ** 2
        - 0.5 * track.gamma ** 2
        + conserved.a
        - 2.0 * conserved.mu0 * u_at_y
    )


def riccati_reference(m0: float, a: float) -> tuple[Callable, float]:
    """Exact solution of dm/dt = m^2/2 + a with m(0) = m0 and its blow-up time."""
    if not a > 0.0:
        raise NonPositiveA(f"a must be positive, got {a!r}")
    s = math.sqrt(2.0 * a)
    omega = math.sqrt(a / 2.0)
    phase = math.atan(m0 / s)

    def m_of_t(t):
        return s * np.tan(omega * np.asarray(t, dtype=float) + phase)

    return m_of_t, (math.pi / 2.0 - phase) / omega


def lyapunov_rate(c: ConservedSet) -> float:
    return 4.0 * c.mu0 ** 2 + 0.5 * c.mu1 ** 2 + SQRT3_OVER_3 * abs(c.mu0) * c.mu1 + 0.5


def lyapunov_constant(state0: MuHSState) -> float:
    """1 + max over the circle of rho0^2 + u0_x^2, from grid samples."""
    ux = deriv(state0.u, 1).samples
    return 1.0 + float(np.max(state0.rho.samples ** 2 + ux ** 2))


def lyapunov_bound(c: ConservedSet, c1: float, t: float) -> float:
    return c1 * math.exp(lyapunov_rate(c) * t)


def equispaced_labels(count: int = 16, mandated: Optional[float] = None) -> list[float]:
    labels = [i / count for i in range(count)]
    if mandated is not None:
        x = float(mandated)
        if not any(abs(x - l) < 1e-15 for l in labels):
            labels.append(x)
    return labels


class TrackObserver:
    """Advances a bundle of tracks with every PDE step and stores them at record times.

    At each record the largest transport-identity error over the bundle is
    stored in ``transport_errors``.
    """

    def __init__(self, labels: Sequence[float], params: Params):
        self.labels = list(labels)
        self.params = params
        self.tracks: list[CharacteristicTrack] = []
        self.history: list[list[CharacteristicTrack]] = []
        self.transport_errors: list[float] = []

    def start(self, state0: MuHSState) -> None:
        self.tracks = [init_track(x0, state0) for x0 in self.labels]
        self.history = []
        self.transport_errors = []
        self.record(state0)

    def step(self, before: MuHSState, step: RK4Step) -> None:
        self.tracks = advance_tracks(self.tracks, step, self.params)

    def record(self, state: MuHSState) -> None:
        if self.history and self.history[-1] and self.history[-1][0].t == state.t:
            return
        self.history.append(list(self.tracks))
        if self.tracks:
            ys = np.array([tr.y for tr in self.tracks])
            rho, _ = _eval(state.grid, state.rho.samples, ys, with_derivative=False)
            jac = np.array([tr.jac_qx for tr in self.tracks])
            alpha0 = np.array([tr.alpha0 for tr in self.tracks])
            self.transport_errors.append(float(np.max(np.abs(rho * jac - alpha0))))
        else:
            self.transport_errors.append(0.0)

    def index_of(self, label_x0: float) -> int:
        return min(range(len(self.labels)), key=lambda i: abs(self.labels[i] - label_x0))

    def series(self, label_x0: float) -> list[CharacteristicTrack]:
        idx = self.index_of(label_x0)
        return [snap[idx] for snap in self.history]

    def rows(self):
        for snap in self.history:
            yield from snap
