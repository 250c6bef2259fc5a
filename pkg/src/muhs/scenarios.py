"""Preset initial data, hypothesis validation and grid convergence studies."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .diagnostics import (
    SQRT3_OVER_6,
    ConservedSet,
    InsufficientData,
    conserved_set,
    estimate_blowup_time,
)
from .dynamics import MuHSState, Params, StepController
from .spectral import TWO_PI, Field, PeriodicGrid

__all__ = [
    "TrigPoly",
    "ScenarioSpec",
    "HypothesisViolation",
    "PRESETS",
    "preset",
    "validate_hypotheses",
    "build_scenario",
    "convergence_study",
    "estimate_blowup_time",
    "InsufficientData",
]

THEOREMS = ("thm41", "thm42", "thm51")


class HypothesisViolation(ValueError):
    def __init__(self, theorem: str, condition: str):
        super().__init__(f"{theorem}: hypothesis '{condition}' does not hold")
        self.theorem = theorem
        self.condition = condition


@dataclass(frozen=True)
class TrigPoly:
    """const + sum_k (a_k cos(2 pi k x) + b_k sin(2 pi k x)) with terms stored as (k, a_k, b_k)."""

    const: float = 0.0
    terms: tuple[tuple[int, float, float], ...] = ()

    def __post_init__(self):
        merged: dict[int, list[float]] = {}
        for k, a, b in self.terms:
            if isinstance(k, bool) or int(k) != k or k < 1:
                raise ValueError(f"wavenumbers must be positive integers, got {k!r}")
            acc = merged.setdefault(int(k), [0.0, 0.0])
            acc[0] += float(a)
            acc[1] += float(b)
        terms = tuple((k, a, b) for k, (a, b) in sorted(merged.items()) if a != 0.0 or b != 0.0)
        object.__setattr__(self, "const", float(self.const))
        object.__setattr__(self, "terms", terms)

    @property
    def degree(self) -> int:
        return max((k for k, _, _ in self.terms), default=0)

    @property
    def is_zero(self) -> bool:
        return self.const == 0.0 and not self.terms

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, self.const)
        for k, a, b in self.terms:
            out = out + a * np.cos(TWO_PI * k * x) + b * np.sin(TWO_PI * k * x)
        return out

    def at(self, x: float) -> float:
        """Point value with the argument reduced to whole quarter periods where possible."""
        total = self.const
        for k, a, b in self.terms:
            turns = (k * x) % 1.0
            quarter = turns * 4.0
            if quarter == int(quarter):
                c, s = ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[int(quarter)]
            else:
                c, s = math.cos(TWO_PI * turns), math.sin(TWO_PI * turns)
            total += a * c + b * s
        return total

    def derivative(self) -> "TrigPoly":
        return TrigPoly(0.0, tuple((k, TWO_PI * k * b, -TWO_PI * k * a) for k, a, b in self.terms))

    def mean_square(self) -> float:
        """Integral of the square over the circle."""
        return self.const ** 2 + 0.5 * sum(a * a + b * b for _, a, b in self.terms)

    def field(self, grid: PeriodicGrid) -> Field:
        return Field(grid, self(grid.nodes))

    def __str__(self) -> str:
        out = repr(self.const)
        for k, a, b in self.terms:
            for coef, fn in ((a, "cos"), (b, "sin")):
                if coef:
                    out += f" {'-' if coef < 0 else '+'} {abs(coef)!r}*{fn}({k})"
        return out

    _TERM = re.compile(
        r"\s*(?P<sign>[+-])?\s*"
        r"(?:(?P<coef>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<star>\s*\*)?)?\s*"
        r"(?:(?P<fn>sin|cos)\s*\(\s*(?P<k>\d+)\s*\))?\s*"
    )

    @classmethod
    def parse(cls, text: str) -> "TrigPoly":
        """Parse sums such as ``0.5 + 1*sin(1) - 0.2*cos(3)``; the argument is the wavenumber."""
        if not text.strip():
            raise ValueError("empty trigonometric polynomial")
        const = 0.0
        terms = []
        pos = 0
        first = True
        while pos < len(text):
            m = cls._TERM.match(text, pos)
            sign, coef, star, fn = m.group("sign"), m.group("coef"), m.group("star"), m.group("fn")
            if m.end() == pos or (coef is None and fn is None):
                raise ValueError(f"cannot parse term at column {pos + 1} of {text!r}")
            if sign is None and not first:
                raise ValueError(f"missing + or - before column {m.start() + 1} of {text!r}")
            if (star is not None) != (coef is not None and fn is not None):
                raise ValueError(f"malformed term {m.group(0).strip()!r}")
            value = float(coef) if coef is not None else 1.0
            if sign == "-":
                value = -value
            if fn is None:
                const += value
            else:
                k = int(m.group("k"))
                if k < 1:
                    raise ValueError(f"wavenumber must be >= 1 in {m.group(0).strip()!r}")
                terms.append((k, value, 0.0) if fn == "cos" else (k, 0.0, value))
            pos = m.end()
            first = False
        return cls(const, tuple(terms))


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    u0: TrigPoly
    rho0: TrigPoly
    params: Params = field(default_factory=Params)
    n_points: int = 256
    t_end: float = 1.0
    mandated_x0: Optional[float] = None
    theorem: Optional[str] = None

    def __post_init__(self):
        if self.theorem is not None and self.theorem not in THEOREMS:
            raise ValueError(f"unknown theorem {self.theorem!r}; expected one of {THEOREMS}")
        if not self.t_end > 0.0:
            raise ValueError("t_end must be positive")

    def with_grid(self, n_points: int) -> "ScenarioSpec":
        return replace(self, n_points=n_points)


SIN1 = TrigPoly(0.0, ((1, 0.0, 1.0),))

PRESETS: dict[str, ScenarioSpec] = {
    "steady": ScenarioSpec("steady", TrigPoly(1.0), TrigPoly(0.0), n_points=64, t_end=1.0),
    "zero": ScenarioSpec("zero", TrigPoly(0.0), TrigPoly(0.0), n_points=64, t_end=1.0),
    "thm41": ScenarioSpec(
        "thm41", SIN1, SIN1, n_points=256, t_end=2.0, mandated_x0=0.0, theorem="thm41"
    ),
    "thm42": ScenarioSpec(
        "thm42",
        TrigPoly(0.5, ((1, 0.0, 1.0),)),
        SIN1,
        n_points=256,
        t_end=2.0,
        mandated_x0=0.0,
        theorem="thm42",
    ),
    "thm51": ScenarioSpec(
        "thm51",
        TrigPoly(0.0, ((1, 0.0, 0.1),)),
        TrigPoly(1.0, ((1, 0.5, 0.0),)),
        n_points=256,
        t_end=5.0,
        theorem="thm51",
    ),
}


def preset(name: str) -> ScenarioSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; available: {sorted(PRESETS)}") from None


def _closed_form_conserved(spec: ScenarioSpec) -> ConservedSet:
    mu0 = spec.u0.const
    mu1 = math.sqrt(spec.u0.derivative().mean_square() + spec.rho0.mean_square())
    return ConservedSet(mu0, mu1, 2.0 * mu0 * mu0 + 0.5 * mu1 * mu1)


def density_floor(rho0: TrigPoly, samples: int = 4096) -> float:
    """min |rho0| over a dense sampling, refined by the spectrally exact polynomial itself."""
    n = max(samples, 64 * max(rho0.degree, 1))
    x = np.arange(n) / n
    vals = rho0(x)
    if np.any(vals > 0) and np.any(vals < 0):
        return 0.0
    i = int(np.argmin(np.abs(vals)))
    # golden-section polish around the sampled minimiser
    lo, hi = (i - 1) / n, (i + 1) / n
    g = (math.sqrt(5.0) - 1.0) / 2.0
    f = lambda s: abs(float(rho0(s)))  # noqa: E731
    for _ in range(80):
        c, d = hi - g * (hi - lo), lo + g * (hi - lo)
        if f(c) < f(d):
            hi = d
        else:
            lo = c
    return min(float(np.min(np.abs(vals))), f(0.5 * (lo + hi)))


def validate_hypotheses(spec: ScenarioSpec) -> dict:
    """Evaluate every hypothesis of every blow-up/global theorem for ``spec``.

    Returns ``{theorem: {condition: bool}}`` together with the derived numbers
    under the key ``"values"``.
    """
    c = _closed_form_conserved(spec)
    gauge = spec.params.gauge_aligned
    x0 = spec.mandated_x0
    rho_at = spec.rho0.at(-x0) if x0 is not None else None
    vanishes = x0 is not None and rho_at == 0.0
    nonzero = not (spec.u0.is_zero and spec.rho0.is_zero)
    beta = density_floor(spec.rho0)
    linf = abs(c.mu0) + SQRT3_OVER_6 * c.mu1
    small = c.mu0 != 0.0 and linf < c.a / (2.0 * abs(c.mu0))
    return {
        "thm41": {
            "gauge_aligned": gauge,
            "zero_mean_u0": c.mu0 == 0.0,
            "rho0_vanishes_at_minus_x0": vanishes,
            "nontrivial_data": nonzero,
        },
        "thm42": {
            "gauge_aligned": gauge,
            "nonzero_mean_u0": c.mu0 != 0.0,
            "smallness": small,
            "rho0_vanishes_at_minus_x0": vanishes,
        },
        "thm51": {
            "gauge_aligned": gauge,
            "rho0_nonvanishing": beta > 0.0,
        },
        "values": {
            "mu0": c.mu0,
            "mu1": c.mu1,
            "a": c.a,
            "beta": beta,
            "linf_bound": linf,
            "smallness_rhs": c.a / (2.0 * abs(c.mu0)) if c.mu0 else None,
            "rho0_at_minus_x0": rho_at,
        },
    }


class BuiltScenario(NamedTuple):
    state: MuHSState
    params: Params
    conserved: ConservedSet
    report: dict


def build_scenario(spec: ScenarioSpec, n_points: Optional[int] = None) -> BuiltScenario:
    """Sample the initial data and check the hypotheses of the named theorem."""
    grid = PeriodicGrid(n_points or spec.n_points)
    limit = grid.n_points / 3
    for label, poly in (("u0", spec.u0), ("rho0", spec.rho0)):
        if poly.degree > limit:
            raise ValueError(
                f"{label} has degree {poly.degree}, above the retained band N/3 = {limit:g}"
            )
    report = validate_hypotheses(spec)
    if spec.theorem is not None:
        for cond, ok in report[spec.theorem].items():
            if not ok:
                raise HypothesisViolation(spec.theorem, cond)
    state = MuHSState(0.0, spec.u0.field(grid), spec.rho0.field(grid))
    return BuiltScenario(state, spec.params, conserved_set(state), report)


class ConvergenceRow(NamedTuple):
    n_points: int
    energy_drift: float
    residual23_max: float
    t_star_estimate: Optional[float]


def check_grid_list(n_list: Sequence[int]) -> list[int]:
    out = []
    for n in n_list:
        if isinstance(n, bool) or int(n) != n or n < 8 or int(n) % 2:
            raise ValueError(f"grid sizes must be even integers >= 8, got {n!r}")
        out.append(int(n))
    if out != sorted(out) or len(set(out)) != len(out):
        raise ValueError(f"grid sizes must be strictly ascending, got {out}")
    if not out:
        raise ValueError("empty grid list")
    return out


def convergence_study(
    spec: ScenarioSpec,
    n_list: Sequence[int],
    controller: StepController = StepController(),
    t_end: Optional[float] = None,
) -> list[ConvergenceRow]:
    """Run ``spec`` at each grid size and tabulate drift, residual and T* estimate."""
    from .evolve import run

    rows = []
    for n in check_grid_list(n_list):
        built = build_scenario(spec, n)
        res = run(built.state, built.params, t_end or spec.t_end, controller, conserved=built.conserved)
        e0 = res.history[0].energy
        drifts = [abs(r.energy - e0) for r in res.history]
        drift = max(drifts) / e0 if e0 > 0 else max(drifts)
        resid = max(r.residual23 for r in res.history)
        rows.append(ConvergenceRow(n, drift, resid, res.outcome.t_star_estimate))
    return rows
