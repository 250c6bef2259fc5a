"""Quantitative versions of the inequality and consistency checks, shared by the CLI and tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .characteristics import (
    TrackObserver,
    lyapunov_bound,
    lyapunov_constant,
    riccati_rhs,
)
from .diagnostics import ConservedSet, DiagnosticsRecord, linf_bound, poincare_margin
from .dynamics import MuHSState
from .scenarios import TrigPoly
from .spectral import PeriodicGrid

TRANSPORT_TOL = 1e-6
RICCATI_TOL = 1e-2
SLACK = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    case: Optional[dict] = field(default=None)

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "value": self.value,
            "tolerance": self.tolerance,
            "case": self.case,
        }


def random_zero_mean_poly(rng: np.random.Generator, max_degree: int) -> TrigPoly:
    degree = int(rng.integers(1, max_degree + 1))
    scale = rng.exponential(1.0)
    terms = tuple(
        (k, float(scale * rng.standard_normal()), float(scale * rng.standard_normal()))
        for k in range(1, degree + 1)
    )
    return TrigPoly(0.0, terms)


def poincare_suite(n_points: int, cases: int = 1000, seed: int = 0) -> CheckResult:
    """(1/12) int f_x^2 >= max f^2 for random zero-mean trig polynomials of degree <= N/4."""
    grid = PeriodicGrid(n_points)
    rng = np.random.default_rng(seed)
    worst, worst_poly = math.inf, None
    for _ in range(cases):
        poly = random_zero_mean_poly(rng, n_points // 4)
        f = poly.field(grid)
        # relative margin so that large random amplitudes do not hide a violation
        scale = max(1.0, float(np.max(f.samples ** 2)))
        margin = poincare_margin(f) / scale
        if margin < worst:
            worst, worst_poly = margin, poly
    ok = worst >= -SLACK
    case = None if ok else {"poly": str(worst_poly), "n_points": n_points, "seed": seed}
    return CheckResult("poincare", ok, -worst, SLACK, case)


def linf_check(history: Sequence[DiagnosticsRecord], c: ConservedSet) -> CheckResult:
    bound = linf_bound(c)
    excess = [r.linf_u - bound for r in history]
    i = int(np.argmax(excess))
    ok = excess[i] <= SLACK
    case = None if ok else {"t": history[i].t, "linf_u": history[i].linf_u, "bound": bound}
    return CheckResult("linf", ok, excess[i], SLACK, case)


def rho_growth_check(history: Sequence[DiagnosticsRecord]) -> CheckResult:
    """||rho(t)||_inf <= exp(M t) ||rho0||_inf with M the largest recorded sup u_x."""
    rho0 = history[0].linf_rho
    M = max(0.0, max(r.sup_ux for r in history))
    t0 = history[0].t
    worst, at = -math.inf, None
    for r in history:
        cap = math.exp(M * (r.t - t0)) * rho0
        excess = r.linf_rho - cap * (1.0 + SLACK)
        if excess > worst:
            worst, at = excess, r
    ok = worst <= 0.0
    case = None if ok else {"t": at.t, "linf_rho": at.linf_rho, "M": M, "rho0_linf": rho0}
    return CheckResult("rho_growth", ok, worst, 0.0, case)


def transport_check(
    observer: TrackObserver, t_max: Optional[float] = None, tol: float = TRANSPORT_TOL
) -> CheckResult:
    errs = [
        e
        for e, snap in zip(observer.transport_errors, observer.history)
        if t_max is None or (snap and snap[0].t <= t_max)
    ]
    worst = max(errs, default=0.0)
    ok = worst <= tol
    case = None
    if not ok:
        i = observer.transport_errors.index(worst)
        case = {"t": observer.history[i][0].t, "error": worst}
    return CheckResult("transport", ok, worst, tol, case)


def lyapunov_check(
    observer: TrackObserver, state0: MuHSState, c: ConservedSet, beta: float
) -> CheckResult:
    """w <= C1 exp(rate t)(1 + 1e-6) and |m| <= w / (2 beta) on every track and record.

    The value reported is the largest violation ratio minus one (negative when satisfied).
    """
    c1 = lyapunov_constant(state0)
    worst, where = -math.inf, None
    for snap in observer.history:
        for tr in snap:
            if not math.isfinite(tr.w):
                return CheckResult(
                    "lyapunov", False, math.inf, 1e-6,
                    {"t": tr.t, "label_x0": tr.label_x0, "reason": "density vanished"},
                )
            r1 = tr.w / lyapunov_bound(c, c1, tr.t) - 1.0
            r2 = (abs(tr.m) - tr.w / (2.0 * beta)) / max(tr.w / (2.0 * beta), 1.0)
            r = max(r1 - 1e-6, r2 - SLACK)
            if r > worst:
                worst, where = r, (tr, r1, r2)
    ok = worst <= 0.0
    case = None
    if not ok:
        tr, r1, r2 = where
        case = {"t": tr.t, "label_x0": tr.label_x0, "w": tr.w, "m": tr.m, "bound_excess": r1, "slope_excess": r2}
    return CheckResult("lyapunov", ok, worst, 0.0, case)


def riccati_residuals(
    observer: TrackObserver, c: ConservedSet, t_max: Optional[float] = None
) -> tuple[float, dict]:
    """Max over tracks of |dm/dt - riccati_rhs| / max|riccati_rhs|, with dm/dt by central differences."""
    worst, info = 0.0, {}
    snaps = [s for s in observer.history if s and (t_max is None or s[0].t <= t_max)]
    if len(snaps) < 5:
        return 0.0, {"reason": "too few records"}
    t = np.array([s[0].t for s in snaps])
    for j in range(len(snaps[0])):
        m = np.array([s[j].m for s in snaps])
        dm = np.gradient(m, t)
        rhs = np.array([riccati_rhs(s[j], s[j].u_at_y, c) for s in snaps])
        scale = float(np.max(np.abs(rhs)))
        err = np.abs(dm - rhs)[1:-1]
        rel = float(np.max(err)) / scale if scale > 0 else float(np.max(err))
        if rel > worst:
            i = int(np.argmax(err)) + 1
            worst = rel
            info = {"label_x0": snaps[0][j].label_x0, "t": float(t[i]), "dm_dt": float(dm[i]), "rhs": float(rhs[i])}
    return worst, info


def riccati_check(
    observer: TrackObserver, c: ConservedSet, t_max: Optional[float] = None, tol: float = RICCATI_TOL
) -> CheckResult:
    worst, info = riccati_residuals(observer, c, t_max)
    ok = worst <= tol
    return CheckResult("riccati", ok, worst, tol, None if ok else info)
