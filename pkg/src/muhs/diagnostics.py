"""Conserved quantities, norm monitors and the sharp inequalities as predicates."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .dynamics import MuHSState, Params, residual_eq23
from .spectral import Field, NonZeroMean, deriv, mean, sobolev_norm, spectral_tail

SQRT3_OVER_6 = math.sqrt(3.0) / 6.0

GLOBAL = "GlobalUpToHorizon"
BLOWUP = "BlowUp"


class EmptyHistory(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class ConservedSet:
    mu0: float
    mu1: float
    a: float

    def as_dict(self) -> dict:
        return {"mu0": self.mu0, "mu1": self.mu1, "a": self.a}


def energy(state: MuHSState) -> float:
    """Integral of u_x^2 + rho^2 over the circle (exact for the interpolants)."""
    ux = deriv(state.u, 1).samples
    rho = state.rho.samples
    return float(np.mean(ux * ux + rho * rho))


def conserved_set(state0: MuHSState) -> ConservedSet:
    mu0 = mean(state0.u)
    mu1 = math.sqrt(energy(state0))
    return ConservedSet(mu0, mu1, 2.0 * mu0 * mu0 + 0.5 * mu1 * mu1)


def live_a(state: MuHSState) -> float:
    """Gauge constant recomputed from the current state: 2 mu(u)^2 + energy / 2."""
    m = mean(state.u)
    return 2.0 * m * m + 0.5 * energy(state)


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    sup_ux: float
    inf_ux: float
    linf_u: float
    linf_rho: float
    linf_rhox: float
    energy: float
    mean_u: float
    h2_norm_u: float
    h1_norm_rho: float
    hs_norm_u: float
    hsm1_norm_rho: float
    residual23: float
    tail_u: float = 0.0


RECORD_FIELDS = tuple(f.name for f in fields(DiagnosticsRecord))


def record(
    state: MuHSState, params: Params, conserved: ConservedSet, sobolev_s: float = 2.0
) -> DiagnosticsRecord:
    ux = deriv(state.u, 1).samples
    rhox = deriv(state.rho, 1).samples
    u = state.u.samples
    rho = state.rho.samples
    return DiagnosticsRecord(
        t=float(state.t),
        sup_ux=float(np.max(ux)),
        inf_ux=float(np.min(ux)),
        linf_u=float(np.max(np.abs(u))),
        linf_rho=float(np.max(np.abs(rho))),
        linf_rhox=float(np.max(np.abs(rhox))),
        energy=float(np.mean(ux * ux + rho * rho)),
        mean_u=mean(state.u),
        h2_norm_u=sobolev_norm(state.u, 2.0),
        h1_norm_rho=sobolev_norm(state.rho, 1.0),
        hs_norm_u=sobolev_norm(state.u, sobolev_s),
        hsm1_norm_rho=sobolev_norm(state.rho, max(sobolev_s - 1.0, 0.0)),
        residual23=residual_eq23(state, params, conserved),
        tail_u=spectral_tail(state.u),
    )


def linf_bound(c: ConservedSet) -> float:
    """|mu0| + (sqrt(3)/6) mu1, the a-priori sup bound on u."""
    return abs(c.mu0) + SQRT3_OVER_6 * c.mu1


def check_linf_bound(rec: DiagnosticsRecord, c: ConservedSet, slack: float = 1e-9) -> bool:
    return rec.linf_u <= linf_bound(c) + slack


def poincare_margin(f: Field, mean_tolerance: float = 1e-10) -> float:
    """(1/12) int f_x^2 - max f^2 for a zero-mean field; nonnegative when the inequality holds."""
    m = mean(f)
    if abs(m) > mean_tolerance:
        raise NonZeroMean(m, mean_tolerance)
    fx = deriv(f, 1).samples
    return float(np.mean(fx * fx) / 12.0 - np.max(f.samples ** 2))


def check_poincare(f: Field, slack: float = 1e-9, mean_tolerance: float = 1e-10) -> bool:
    return poincare_margin(f, mean_tolerance) >= -slack


def check_rho_growth(
    track_history: Sequence[DiagnosticsRecord],
    rho0_linf: float,
    M: float,
    slack: float = 1e-9,
) -> bool:
    """Every record satisfies ||rho||_inf <= exp(M t) ||rho0||_inf (1 + slack)."""
    observed = max((r.sup_ux for r in track_history), default=-math.inf)
    if M < observed:
        raise ValueError(f"M={M!r} is below the observed sup of sup_ux {observed!r}")
    return all(
        r.linf_rho <= math.exp(M * r.t) * rho0_linf * (1.0 + slack) for r in track_history
    )


def norm_growth_constant(history: Sequence[DiagnosticsRecord], M: float) -> float:
    """Smallest c with H(t) <= exp(c (M+1) t) H(0), H = ||u||_{H^2}^2 + ||rho||_{H^1}^2 + 1."""
    if not history:
        raise EmptyHistory("no records")
    h0 = history[0].h2_norm_u ** 2 + history[0].h1_norm_rho ** 2 + 1.0
    c = 0.0
    for r in history[1:]:
        if r.t <= history[0].t:
            continue
        h = r.h2_norm_u ** 2 + r.h1_norm_rho ** 2 + 1.0
        c = max(c, math.log(h / h0) / ((M + 1.0) * (r.t - history[0].t)))
    return c


def estimate_blowup_time(history: Sequence[DiagnosticsRecord], window: int = 8) -> float:
    """Extrapolate the zero of 1/sup_ux from an affine least-squares fit.

    Uses the last ``window`` records of the latest stretch in which sup_ux is
    positive and strictly increasing.
    """
    if window < 2:
        raise ValueError("window must be at least 2")
    run: list[DiagnosticsRecord] = []
    for r in reversed(history):
        if r.sup_ux > 0.0 and math.isfinite(r.sup_ux) and (not run or r.sup_ux < run[-1].sup_ux):
            run.append(r)
            if len(run) == window:
                break
        elif len(run) >= window:
            break
        else:
            run = [r] if r.sup_ux > 0.0 and math.isfinite(r.sup_ux) else []
    if len(run) < window:
        raise InsufficientData(
            f"need {window} records with increasing positive sup_ux, found {len(run)}"
        )
    run.reverse()
    t = np.array([r.t for r in run])
    inv = np.array([1.0 / r.sup_ux for r in run])
    t_ref = t[-1]
    slope, intercept = np.polyfit(t - t_ref, inv, 1)
    if not slope < 0.0:
        raise InsufficientData("1/sup_ux is not decreasing over the fit window")
    root = t_ref - intercept / slope
    if not root > t_ref:
        raise InsufficientData(f"fitted root {root!r} does not exceed last time {t_ref!r}")
    return float(root)


@dataclass(frozen=True)
class RunOutcome:
    kind: str
    t_star_estimate: Optional[float]
    t_star_lower: float
    trigger: Optional[str] = None
    estimate_method: Optional[str] = None

    @property
    def blew_up(self) -> bool:
        return self.kind == BLOWUP

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "t_star_estimate": self.t_star_estimate,
            "t_star_lower": self.t_star_lower,
            "trigger": self.trigger,
            "estimate_method": self.estimate_method,
        }


def classify_outcome(
    history: Sequence[DiagnosticsRecord],
    terminated_early: bool,
    trigger: Optional[str] = None,
    window: int = 8,
) -> RunOutcome:
    """Map a finished run to GlobalUpToHorizon or BlowUp with a T* estimate.

    If the affine fit cannot be made, the estimate falls back to the last
    computed time, which is still a valid lower bound for the blow-up time.
    """
    if not history:
        raise EmptyHistory("cannot classify a run without records")
    t_last = history[-1].t
    if not terminated_early:
        return RunOutcome(GLOBAL, None, t_last)
    try:
        est = estimate_blowup_time(history, window)
        method = "affine_fit"
    except InsufficientData:
        est, method = t_last, "last_time"
    return RunOutcome(BLOWUP, est, t_last, trigger or "unspecified", method)
