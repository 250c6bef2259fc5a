"""Pseudospectral simulation of the periodic two-component mu-Hunter-Saxton system."""

from .characteristics import CharacteristicTrack, TrackObserver, riccati_reference
from .diagnostics import ConservedSet, DiagnosticsRecord, RunOutcome, conserved_set
from .dynamics import MuHSState, Params, StepController, rhs, step_rk4
from .evolve import RunResult, run
from .scenarios import PRESETS, ScenarioSpec, TrigPoly, build_scenario, preset
from .spectral import Field, PeriodicGrid

__version__ = "0.1.0"

__all__ = [
    "CharacteristicTrack",
    "ConservedSet",
    "DiagnosticsRecord",
    "Field",
    "MuHSState",
    "PRESETS",
    "Params",
    "PeriodicGrid",
    "RunOutcome",
    "RunResult",
    "ScenarioSpec",
    "StepController",
    "TrackObserver",
    "TrigPoly",
    "build_scenario",
    "conserved_set",
    "preset",
    "rhs",
    "riccati_reference",
    "run",
    "step_rk4",
]
