import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muhs.diagnostics import BLOWUP, GLOBAL
from muhs.dynamics import Params
from muhs.evolve import run
from muhs.scenarios import (
    PRESETS,
    HypothesisViolation,
    ScenarioSpec,
    TrigPoly,
    build_scenario,
    check_grid_list,
    convergence_study,
    density_floor,
    preset,
    validate_hypotheses,
)

TWO_PI = 2 * math.pi


class TestTrigPoly:
    def test_evaluation_and_merge(self):
        p = TrigPoly(1.0, ((2, 0.5, 0.0), (1, 0.0, 1.0), (2, 0.5, 0.0)))
        assert p.terms == ((1, 0.0, 1.0), (2, 1.0, 0.0))
        assert p.degree == 2
        x = np.array([0.0, 0.25])
        np.testing.assert_allclose(p(x), [2.0, 1 + 1 + math.cos(math.pi)])

    def test_exact_quarter_points(self):
        p = TrigPoly(0.0, ((1, 0.0, 1.0), (3, 0.0, 2.0)))
        assert p.at(0.5) == 0.0 and p.at(0.0) == 0.0
        assert p.at(0.25) == 1.0 - 2.0

    def test_closed_form_integrals(self):
        p = TrigPoly(0.5, ((1, 0.0, 1.0), (2, 0.3, 0.0)))
        x = np.arange(256) / 256
        assert p.mean_square() == pytest.approx(np.mean(p(x) ** 2), rel=1e-14)
        dp = p.derivative()
        np.testing.assert_allclose(dp(x), TWO_PI * np.cos(TWO_PI * x) - 0.6 * TWO_PI * np.sin(2 * TWO_PI * x), atol=1e-13)

    def test_rejects_bad_wavenumbers(self):
        with pytest.raises(ValueError):
            TrigPoly(0.0, ((0, 1.0, 0.0),))
        with pytest.raises(ValueError):
            TrigPoly(0.0, ((1.5, 1.0, 0.0),))

    @pytest.mark.parametrize(
        "text, const, terms",
        [
            ("0.5 + 1*sin(1) + 0.2*cos(3)", 0.5, ((1, 0.0, 1.0), (3, 0.2, 0.0))),
            ("-sin(2)", 0.0, ((2, 0.0, -1.0),)),
            ("1e-3*cos(1) - 2", -2.0, ((1, 0.001, 0.0),)),
            ("  4 ", 4.0, ()),
        ],
    )
    def test_parse(self, text, const, terms):
        p = TrigPoly.parse(text)
        assert p.const == const and p.terms == terms

    @pytest.mark.parametrize("text", ["", "sin", "2 sin(1)", "1 2", "2*", "sin(0)", "tan(1)"])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            TrigPoly.parse(text)

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(-1e6, 1e6, allow_nan=False),
        st.lists(st.tuples(st.integers(1, 40), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6)), max_size=6),
    )
    def test_text_round_trip(self, const, terms):
        p = TrigPoly(const, tuple(terms))
        assert TrigPoly.parse(str(p)) == p


class TestHypotheses:
    def test_thm41_default(self):
        built = build_scenario(preset("thm41"))
        assert built.conserved.mu0 == pytest.approx(0.0, abs=1e-16)
        assert built.conserved.a == pytest.approx(math.pi ** 2 + 0.25, rel=1e-13)
        assert all(built.report["thm41"].values())

    def test_thm51_default(self):
        built = build_scenario(preset("thm51"))
        assert all(built.report["thm51"].values())
        assert built.report["values"]["beta"] == pytest.approx(0.5, abs=1e-12)

    def test_thm42_default(self):
        report = validate_hypotheses(preset("thm42"))
        assert all(report["thm42"].values())
        v = report["values"]
        assert v["linf_bound"] < v["smallness_rhs"]

    def test_thm42_smallness_violation(self):
        spec = ScenarioSpec(
            # holds only while |mu0| < (sqrt(3)/2) mu1; here mu1 = sqrt(2 pi^2 + 1/2)
            "big_mean", TrigPoly(10.0, ((1, 0.0, 1.0),)), TrigPoly(0.0, ((1, 0.0, 1.0),)),
            mandated_x0=0.0, theorem="thm42",
        )
        with pytest.raises(HypothesisViolation) as err:
            build_scenario(spec)
        assert err.value.condition == "smallness"

    def test_thm41_requires_density_zero(self):
        spec = ScenarioSpec("bad", TrigPoly(0.0, ((1, 0.0, 1.0),)), TrigPoly(1.0), mandated_x0=0.0, theorem="thm41")
        with pytest.raises(HypothesisViolation) as err:
            build_scenario(spec)
        assert err.value.condition == "rho0_vanishes_at_minus_x0"

    def test_gauge_flag(self):
        spec = ScenarioSpec("g", TrigPoly(0.0), TrigPoly(1.0), params=Params(0.2, 0.1), theorem="thm51")
        assert build_scenario(spec).report["thm51"]["gauge_aligned"]
        spec = ScenarioSpec("g", TrigPoly(0.0), TrigPoly(1.0), params=Params(0.3, 0.1), theorem="thm51")
        with pytest.raises(HypothesisViolation):
            build_scenario(spec)

    def test_density_floor(self):
        assert density_floor(TrigPoly(1.0, ((1, 0.5, 0.0),))) == pytest.approx(0.5, abs=1e-12)
        assert density_floor(TrigPoly(0.0, ((1, 0.0, 1.0),))) == 0.0
        assert density_floor(TrigPoly(-2.0, ((3, 0.0, 0.5),))) == pytest.approx(1.5, abs=1e-12)

    def test_degree_above_band(self):
        spec = ScenarioSpec("hi", TrigPoly(0.0, ((30, 1.0, 0.0),)), TrigPoly(0.0))
        with pytest.raises(ValueError):
            build_scenario(spec, 64)

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            preset("nope")

    def test_fields_synthesised_exactly(self):
        built = build_scenario(preset("thm51"), 64)
        x = built.state.grid.nodes
        np.testing.assert_array_equal(built.state.rho.samples, 1.0 + 0.5 * np.cos(TWO_PI * x))


@pytest.mark.parametrize("name", ["thm41", "thm42"])
def test_blowup_presets_terminate(name):
    spec = PRESETS[name]
    built = build_scenario(spec)
    res = run(built.state, built.params, 20.0)
    assert res.outcome.kind == BLOWUP and res.outcome.t_star_lower < 20


class TestConvergenceStudy:
    def test_grid_list_validation(self):
        assert check_grid_list([64, 128]) == [64, 128]
        for bad in ([63], [128, 64], [], [64, 64]):
            with pytest.raises(ValueError):
                check_grid_list(bad)

    def test_steady(self):
        rows = convergence_study(preset("steady"), [16, 32])
        assert all(r.energy_drift == 0.0 for r in rows)
        assert all(r.t_star_estimate is None for r in rows)

    def test_thm41_self_convergence(self):
        rows = convergence_study(preset("thm41"), [128, 256, 512])
        est = [r.t_star_estimate for r in rows]
        assert abs(est[2] - est[1]) < abs(est[1] - est[0])
