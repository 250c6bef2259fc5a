import math

import numpy as np
import pytest

from muhs.diagnostics import BLOWUP, GLOBAL
from muhs.dynamics import ConfigError, MuHSState, Params, StepController
from muhs.evolve import TRIGGER_DT, TRIGGER_NONFINITE, TRIGGER_RESOLUTION, TRIGGER_SLOPE, run
from muhs.scenarios import build_scenario, preset
from muhs.spectral import Field, PeriodicGrid

TWO_PI = 2 * math.pi


def steady(n=16, c=1.0):
    g = PeriodicGrid(n)
    return MuHSState(0.0, Field.constant(g, c), Field.constant(g, 0.0))


def test_steady_to_horizon():
    history, final, outcome = run(steady(), Params(), 1.0)
    assert outcome.kind == GLOBAL and outcome.t_star_lower == 1.0
    assert final.t == 1.0
    assert {r.sup_ux for r in history} == {0.0}
    assert {r.mean_u for r in history} == {1.0}


def test_invalid_controller():
    with pytest.raises(ConfigError):
        run(steady(), Params(), 1.0, StepController(cfl_number=2.0))


def test_bad_arguments():
    with pytest.raises(ValueError):
        run(steady(), Params(), -1.0)
    with pytest.raises(ValueError):
        run(steady(), Params(), 1.0, record_every=0)


def test_record_cadence_keeps_endpoints():
    built = build_scenario(preset("thm51"), 32)
    res = run(built.state, built.params, 0.37, record_every=7)
    assert res.history[0].t == 0.0 and res.history[-1].t == 0.37
    assert len(res.history) == 2 + (res.n_steps - 1) // 7


def test_lands_exactly_on_horizon():
    built = build_scenario(preset("thm51"), 32)
    res = run(built.state, built.params, 0.123456)
    assert res.final.t == 0.123456


def test_thm41_blows_up_by_resolution_loss():
    built = build_scenario(preset("thm41"), 128)
    res = run(built.state, built.params, 2.0)
    assert res.outcome.kind == BLOWUP
    assert res.outcome.trigger == TRIGGER_RESOLUTION
    assert res.outcome.t_star_estimate > res.outcome.t_star_lower > 0


def test_slope_threshold_trigger():
    built = build_scenario(preset("thm41"), 128)
    res = run(built.state, built.params, 2.0, StepController(blowup_slope_threshold=10.0))
    assert res.outcome.trigger == TRIGGER_SLOPE
    assert res.history[-1].sup_ux >= 10.0


def test_dt_collapse_trigger():
    g = PeriodicGrid(16)
    s = MuHSState(0.0, Field.constant(g, 1e6), Field.constant(g, 0.0))
    res = run(s, Params(), 1.0, StepController(dt_min=1e-6))
    assert res.outcome.trigger == TRIGGER_DT and res.n_steps == 0


def test_non_finite_trigger(monkeypatch):
    import muhs.dynamics as dyn

    def broken(grid, u, rho, g1, g2):
        return np.full_like(u, np.nan), rho * 0, u * 0

    monkeypatch.setattr(dyn, "_rhs_arrays", broken)
    res = run(steady(), Params(), 1.0)
    assert res.outcome.trigger == TRIGGER_NONFINITE


def test_global_run_is_not_stopped_by_density_steepening():
    built = build_scenario(preset("thm51"), 128)
    res = run(built.state, built.params, 5.0)
    assert res.outcome.kind == GLOBAL
