"""Time loop: steps the PDE, feeds observers, records diagnostics and stops on blow-up."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import numpy as np

from .diagnostics import (
    ConservedSet,
    DiagnosticsRecord,
    RunOutcome,
    classify_outcome,
    conserved_set,
    record,
)
from .dynamics import MuHSState, NonFinite, Params, RK4Step, StepController, rk4_step
from .spectral import deriv, spectral_tail

TRIGGER_SLOPE = "slope_threshold"
TRIGGER_DT = "dt_collapse"
TRIGGER_NONFINITE = "non_finite"
TRIGGER_RESOLUTION = "resolution_loss"


class Observer(Protocol):
    def start(self, state0: MuHSState) -> None: ...

    def step(self, before: MuHSState, step: RK4Step) -> None: ...

    def record(self, state: MuHSState) -> None: ...


@dataclass
class RunResult:
    history: list[DiagnosticsRecord]
    final: MuHSState
    outcome: RunOutcome
    conserved: ConservedSet
    n_steps: int = 0
    observers: Sequence[Observer] = field(default_factory=tuple)

    def __iter__(self):
        # unpacks as (trajectory, final_or_last, outcome)
        return iter((self.history, self.final, self.outcome))


def _blowup_trigger(state: MuHSState, controller: StepController, slope_ref: float) -> Optional[str]:
    sup_ux = float(np.max(deriv(state.u, 1).samples))
    if sup_ux >= controller.blowup_slope_threshold:
        return TRIGGER_SLOPE
    if (
        sup_ux > controller.slope_growth_factor * slope_ref
        and spectral_tail(state.u) > controller.resolution_tol
    ):
        return TRIGGER_RESOLUTION
    return None


def run(
    state0: MuHSState,
    params: Params,
    t_end: float,
    controller: StepController = StepController(),
    observers: Sequence[Observer] = (),
    record_every: int = 1,
    conserved: Optional[ConservedSet] = None,
    sobolev_s: float = 2.0,
) -> RunResult:
    """Integrate from ``state0`` to ``t_end`` or until a blow-up trigger fires.

    Blow-up is declared when sup u_x reaches the slope threshold, when the CFL
    step falls below ``dt_min``, when a step produces non-finite values, or when
    u is no longer resolved while its slope has grown well beyond its reference
    scale max(sup u0_x, sqrt(2a)).  Records are taken every ``record_every``
    steps and always at the first and last state.
    """
    controller.validate()
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    if not t_end >= state0.t:
        raise ValueError(f"t_end={t_end} precedes the initial time {state0.t}")
    if conserved is None:
        conserved = conserved_set(state0)

    for ob in observers:
        ob.start(state0)
    first = record(state0, params, conserved, sobolev_s)
    history = [first]
    slope_ref = max(first.sup_ux, math.sqrt(2.0 * conserved.a))

    state = state0
    trigger: Optional[str] = _blowup_trigger(state0, controller, slope_ref)
    n_steps = 0
    recorded_last = True
    while trigger is None and state.t < t_end:
        dt_cfl = controller.time_step(state, params)
        if dt_cfl < controller.dt_min:
            trigger = TRIGGER_DT
            break
        dt = min(dt_cfl, t_end - state.t)
        # land exactly on t_end instead of leaving a sliver below round-off
        if t_end - (state.t + dt) < 1e-12 * max(1.0, abs(t_end)):
            dt = t_end - state.t
        try:
            step = rk4_step(state, params, dt)
        except NonFinite:
            trigger = TRIGGER_NONFINITE
            break
        before, state = state, step.state
        if t_end - state.t < 1e-12 * max(1.0, abs(t_end)):
            state = MuHSState(t_end, state.u, state.rho)
            step = RK4Step(state, step.dt, step.stage_u)
        n_steps += 1
        for ob in observers:
            ob.step(before, step)
        trigger = _blowup_trigger(state, controller, slope_ref)
        recorded_last = False
        if n_steps % record_every == 0 or trigger is not None or state.t >= t_end:
            history.append(record(state, params, conserved, sobolev_s))
            for ob in observers:
                ob.record(state)
            recorded_last = True

    if not recorded_last:
        history.append(record(state, params, conserved, sobolev_s))
        for ob in observers:
            ob.record(state)

    outcome = classify_outcome(history, trigger is not None, trigger)
    return RunResult(history, state, outcome, conserved, n_steps, tuple(observers))
