"""Plain-text run configuration and byte-stable CSV/JSON writers."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .dynamics import Params, StepController
from .scenarios import PRESETS, THEOREMS, ScenarioSpec, TrigPoly

OUTPUT_ENV = "MUHS_OUTPUT_DIR"
CHECK_NAMES = ("linf", "rho_growth", "transport", "lyapunov", "riccati")

DIAGNOSTICS_HEADER = (
    "t", "sup_ux", "inf_ux", "linf_u", "linf_rho", "linf_rhox",
    "energy", "mean_u", "h2_u", "h1_rho", "residual23",
)
_DIAGNOSTICS_ATTRS = (
    "t", "sup_ux", "inf_ux", "linf_u", "linf_rho", "linf_rhox",
    "energy", "mean_u", "h2_norm_u", "h1_norm_rho", "residual23",
)
TRACKS_HEADER = ("t", "label_x0", "y", "jac_qx", "m", "gamma", "w")
CONVERGENCE_HEADER = ("N", "energy_drift", "residual23_max", "t_star_estimate")


class ParseError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class ValidationError(ValueError):
    def __init__(self, key: str, reason: str):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "thm51"
    theorem: Optional[str] = None
    u0: Optional[TrigPoly] = None
    rho0: Optional[TrigPoly] = None
    gamma1: Optional[float] = None
    gamma2: Optional[float] = None
    n_points: Optional[int] = None
    t_end: Optional[float] = None
    x0: Optional[float] = None
    output_dir: str = "muhs_output"
    record_every: int = 1
    cfl_number: float = 0.5
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    blowup_slope_threshold: float = 1e6
    resolution_tol: float = 1e-2
    slope_growth_factor: float = 2.0
    checks: tuple[str, ...] = CHECK_NAMES
    sobolev_s: float = 2.0
    n_tracks: int = 16
    seed: int = 20240601
    poincare_cases: int = 1000
    check_horizon: float = 1.0
    figures: bool = True

    @property
    def controller(self) -> StepController:
        return StepController(
            cfl_number=self.cfl_number,
            dt_min=self.dt_min,
            dt_max=self.dt_max,
            blowup_slope_threshold=self.blowup_slope_threshold,
            resolution_tol=self.resolution_tol,
            slope_growth_factor=self.slope_growth_factor,
        )

    def scenario_spec(self) -> ScenarioSpec:
        """The preset named by ``scenario`` with every explicitly configured field overriding it."""
        base = PRESETS.get(self.scenario)
        if base is None:
            base = ScenarioSpec(self.scenario, TrigPoly(0.0), TrigPoly(0.0))
        params = Params(
            base.params.gamma1 if self.gamma1 is None else self.gamma1,
            base.params.gamma2 if self.gamma2 is None else self.gamma2,
        )
        return replace(
            base,
            u0=self.u0 if self.u0 is not None else base.u0,
            rho0=self.rho0 if self.rho0 is not None else base.rho0,
            params=params,
            n_points=self.n_points if self.n_points is not None else base.n_points,
            t_end=self.t_end if self.t_end is not None else base.t_end,
            mandated_x0=self.x0 if self.x0 is not None else base.mandated_x0,
            theorem=self._theorem(base),
        )

    def _theorem(self, base: ScenarioSpec) -> Optional[str]:
        if self.theorem is None:
            return base.theorem
        return None if self.theorem == "none" else self.theorem

    def resolved_output_dir(self, override: Optional[str] = None) -> Path:
        return Path(override or os.environ.get(OUTPUT_ENV) or self.output_dir)


def _float(key: str, raw: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ValidationError(key, f"expected a real number, got {raw!r}") from None
    if not math.isfinite(v):
        raise ValidationError(key, f"must be finite, got {raw!r}")
    return v


def _int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(key, f"expected an integer, got {raw!r}") from None


def _positive(key: str, v):
    if not v > 0:
        raise ValidationError(key, f"must be positive, got {v!r}")
    return v


def _nonnegative(key: str, v):
    if v < 0:
        raise ValidationError(key, f"must be >= 0, got {v!r}")
    return v


def _bool(key: str, raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValidationError(key, f"expected a boolean, got {raw!r}")


def _trig(key: str, raw: str) -> TrigPoly:
    try:
        return TrigPoly.parse(raw)
    except ValueError as exc:
        raise ValidationError(key, str(exc)) from None


def _n_points(key: str, raw: str) -> int:
    n = _int(key, raw)
    if n < 8 or n % 2:
        raise ValidationError(key, f"must be even and >= 8, got {n}")
    return n


def _scenario(key: str, raw: str) -> str:
    if not raw.isidentifier():
        raise ValidationError(key, f"must be an identifier, got {raw!r}")
    return raw


def _theorem_value(key: str, raw: str) -> str:
    if raw not in THEOREMS + ("none",):
        raise ValidationError(key, f"must be one of {THEOREMS + ('none',)}, got {raw!r}")
    return raw


def _checks(key: str, raw: str) -> tuple[str, ...]:
    names = tuple(n.strip() for n in raw.split(",") if n.strip())
    for n in names:
        if n not in CHECK_NAMES:
            raise ValidationError(key, f"unknown check {n!r}; known: {', '.join(CHECK_NAMES)}")
    return names


_CONVERTERS = {
    "scenario": _scenario,
    "theorem": _theorem_value,
    "u0": _trig,
    "rho0": _trig,
    "gamma1": _float,
    "gamma2": _float,
    "n_points": _n_points,
    "t_end": lambda k, r: _positive(k, _float(k, r)),
    "x0": _float,
    "output_dir": lambda k, r: r,
    "record_every": lambda k, r: _positive(k, _int(k, r)),
    "cfl_number": _float,
    "dt_min": _float,
    "dt_max": _float,
    "blowup_slope_threshold": _float,
    "resolution_tol": _float,
    "slope_growth_factor": _float,
    "checks": _checks,
    "sobolev_s": lambda k, r: _nonnegative(k, _float(k, r)),
    "n_tracks": lambda k, r: _nonnegative(k, _int(k, r)),
    "seed": _int,
    "poincare_cases": lambda k, r: _positive(k, _int(k, r)),
    "check_horizon": lambda k, r: _positive(k, _float(k, r)),
    "figures": _bool,
}
assert set(_CONVERTERS) == {f.name for f in fields(RunConfig)}


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines (``#`` starts a comment) into a validated RunConfig."""
    values: dict[str, object] = {}
    seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ParseError(lineno, f"expected 'key = value', got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if not key:
            raise ParseError(lineno, "missing key")
        if key not in _CONVERTERS:
            raise ParseError(lineno, f"unknown key {key!r}")
        if key in seen:
            raise ParseError(lineno, f"duplicate key {key!r} (first set on line {seen[key]})")
        if not raw:
            raise ParseError(lineno, f"missing value for {key!r}")
        seen[key] = lineno
        values[key] = _CONVERTERS[key](key, raw)
    cfg = RunConfig(**values)
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    try:
        cfg.controller.validate()
    except ValueError as exc:
        raise ValidationError("controller", str(exc)) from None
    if cfg.scenario not in PRESETS and (cfg.u0 is None or cfg.rho0 is None):
        raise ValidationError(
            "scenario", f"{cfg.scenario!r} is not a preset; give u0 and rho0 explicitly"
        )
    try:
        spec = cfg.scenario_spec()
    except ValueError as exc:
        raise ValidationError("scenario", str(exc)) from None
    limit = spec.n_points / 3
    for key, poly in (("u0", spec.u0), ("rho0", spec.rho0)):
        if poly.degree > limit:
            raise ValidationError(key, f"degree {poly.degree} exceeds N/3 = {limit:g}")


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def parse_grid_list(text: str) -> list[int]:
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        out.append(_n_points("n", piece))
    if not out:
        raise ValidationError("n", "empty grid list")
    if out != sorted(out) or len(set(out)) != len(out):
        raise ValidationError("n", f"grid sizes must be strictly ascending, got {out}")
    return out


def fmt(x) -> str:
    """Shortest round-trip decimal for floats; plain text otherwise."""
    if x is None:
        return ""
    if isinstance(x, (bool, int)) and not isinstance(x, float):
        return str(x)
    return repr(float(x))


def _write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_diagnostics_csv(path, history) -> None:
    _write_rows(
        Path(path),
        DIAGNOSTICS_HEADER,
        ([getattr(r, a) for a in _DIAGNOSTICS_ATTRS] for r in history),
    )


def write_tracks_csv(path, snapshots) -> None:
    rows = (
        (tr.t, tr.label_x0, tr.y, tr.jac_qx, tr.m, tr.gamma, tr.w)
        for snap in snapshots
        for tr in snap
    )
    _write_rows(Path(path), TRACKS_HEADER, rows)


def write_convergence_csv(path, rows) -> None:
    _write_rows(
        Path(path),
        CONVERGENCE_HEADER,
        ((r.n_points, r.energy_drift, r.residual23_max, r.t_star_estimate) for r in rows),
    )


def read_csv(path) -> tuple[list[str], list[list[float]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], [[float(v) if v != "" else None for v in row] for row in rows[1:]]


def _json_safe(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if hasattr(obj, "item") and callable(obj.item):
        return _json_safe(obj.item())
    return obj


def write_json(path, payload: dict) -> None:
    text = json.dumps(_json_safe(payload), sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")
