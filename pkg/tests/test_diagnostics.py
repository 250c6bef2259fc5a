import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muhs.diagnostics import (
    BLOWUP,
    GLOBAL,
    ConservedSet,
    DiagnosticsRecord,
    EmptyHistory,
    InsufficientData,
    check_linf_bound,
    check_poincare,
    check_rho_growth,
    classify_outcome,
    conserved_set,
    estimate_blowup_time,
    linf_bound,
    live_a,
    norm_growth_constant,
    poincare_margin,
    record,
)
from muhs.dynamics import MuHSState, Params
from muhs.spectral import Field, NonZeroMean, PeriodicGrid

TWO_PI = 2 * math.pi


def state(n, u, rho):
    g = PeriodicGrid(n)
    return MuHSState(0.0, Field(g, u(g.nodes)), Field(g, rho(g.nodes)))


def rec(t, sup_ux, **kw):
    base = dict(
        t=t, sup_ux=sup_ux, inf_ux=-sup_ux, linf_u=0.0, linf_rho=0.0, linf_rhox=0.0, energy=1.0,
        mean_u=0.0, h2_norm_u=1.0, h1_norm_rho=1.0, hs_norm_u=1.0, hsm1_norm_rho=1.0, residual23=0.0,
    )
    base.update(kw)
    return DiagnosticsRecord(**base)


class TestConserved:
    def test_zero(self):
        c = conserved_set(state(16, np.zeros_like, np.zeros_like))
        assert (c.mu0, c.mu1, c.a) == (0.0, 0.0, 0.0)

    def test_sin_cos(self):
        # int u_x^2 = 2 pi^2, int rho^2 = 1/2
        c = conserved_set(state(32, lambda x: np.sin(TWO_PI * x), lambda x: np.cos(TWO_PI * x)))
        assert c.mu0 == pytest.approx(0.0, abs=1e-16)
        assert c.mu1 ** 2 == pytest.approx(2 * math.pi ** 2 + 0.5, rel=1e-14)
        assert c.a == pytest.approx(math.pi ** 2 + 0.25, rel=1e-14)

    def test_constant(self):
        c = conserved_set(state(16, lambda x: 0 * x - 1.5, np.zeros_like))
        assert c.mu0 == pytest.approx(-1.5)
        assert c.mu1 == 0.0
        assert c.a == pytest.approx(4.5)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-5, 5), min_size=16, max_size=16), st.lists(st.floats(-5, 5), min_size=16, max_size=16))
    def test_invariants(self, u, rho):
        g = PeriodicGrid(16)
        s = MuHSState(0.0, Field(g, u), Field(g, rho))
        c = conserved_set(s)
        assert c.mu1 >= 0
        assert c.a >= 2 * c.mu0 ** 2
        assert c.a == 2 * c.mu0 ** 2 + 0.5 * c.mu1 ** 2
        assert live_a(s) == pytest.approx(c.a, rel=1e-14, abs=1e-300)


class TestRecord:
    def test_steady(self):
        s = state(16, lambda x: 2 + 0 * x, np.zeros_like)
        r = record(s, Params(), conserved_set(s))
        assert r.sup_ux == pytest.approx(0.0, abs=1e-14) and r.inf_ux == pytest.approx(0.0, abs=1e-14)
        assert r.energy == pytest.approx(0.0, abs=1e-26)
        assert r.mean_u == pytest.approx(2.0)

    def test_sine_slope(self):
        s = state(32, lambda x: np.sin(TWO_PI * x), np.zeros_like)
        r = record(s, Params(), conserved_set(s))
        assert r.sup_ux == pytest.approx(TWO_PI, rel=1e-14)
        assert r.inf_ux == pytest.approx(-TWO_PI, rel=1e-14)
        assert r.linf_u == pytest.approx(1.0)

    def test_norms_against_quadrature(self):
        s = state(64, lambda x: np.sin(TWO_PI * x) + 0.5, lambda x: np.cos(2 * TWO_PI * x))
        r = record(s, Params(), conserved_set(s))
        # |c0|^2 + (2 pi)^4 / 2 for u; (4 pi)^2 / 2 for rho
        assert r.h2_norm_u == pytest.approx(math.sqrt(0.25 + TWO_PI ** 4 / 2), rel=1e-13)
        assert r.h1_norm_rho == pytest.approx(math.sqrt((2 * TWO_PI) ** 2 / 2), rel=1e-13)
        # loose consistency: the H^2 norm dominates the sup norm up to the Sobolev constant
        assert r.h2_norm_u >= r.linf_u / math.sqrt(12)


class TestLinfBound:
    def test_equality_case(self):
        s = state(16, lambda x: 0 * x + 3.0, np.zeros_like)
        c = conserved_set(s)
        assert check_linf_bound(record(s, Params(), c), c)

    def test_sine(self):
        s = state(32, lambda x: np.sin(TWO_PI * x), np.zeros_like)
        c = conserved_set(s)
        assert linf_bound(c) == pytest.approx(math.sqrt(3) / 6 * math.pi * math.sqrt(2), rel=1e-14)
        assert linf_bound(c) == pytest.approx(1.2825, abs=1e-4)
        assert check_linf_bound(record(s, Params(), c), c)

    def test_violation_detected(self):
        c = ConservedSet(0.0, 1.0, 0.5)
        assert not check_linf_bound(rec(0, 0, linf_u=1.0), c)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 8), st.floats(-3, 3))
    def test_holds_for_any_state(self, seed, degree, c):
        rng = np.random.default_rng(seed)
        g = PeriodicGrid(32)
        x = g.nodes
        u, rho = (
            c + sum(rng.normal() * np.cos(TWO_PI * k * x) + rng.normal() * np.sin(TWO_PI * k * x) for k in range(1, degree + 1))
            for _ in range(2)
        )
        s = MuHSState(0.0, Field(g, u), Field(g, rho))
        c = conserved_set(s)
        assert check_linf_bound(record(s, Params(), c), c)


class TestPoincare:
    def test_sine(self):
        f = state(32, lambda x: np.sin(TWO_PI * x), np.zeros_like).u
        assert poincare_margin(f) == pytest.approx(math.pi ** 2 / 6 - 1, rel=1e-12)
        assert check_poincare(f)

    def test_zero(self):
        assert check_poincare(Field.constant(PeriodicGrid(8), 0.0))

    def test_rejects_mean(self):
        with pytest.raises(NonZeroMean):
            check_poincare(Field.constant(PeriodicGrid(8), 1.0))

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 16), st.integers(0, 2**32 - 1))
    def test_random_polynomials(self, degree, seed):
        rng = np.random.default_rng(seed)
        g = PeriodicGrid(64)
        x = g.nodes
        f = sum(
            rng.standard_normal() * np.cos(TWO_PI * k * x) + rng.standard_normal() * np.sin(TWO_PI * k * x)
            for k in range(1, degree + 1)
        )
        assert check_poincare(Field(g, f), mean_tolerance=1e-9)

    def test_near_extremal_function_is_tight(self):
        # the Bernoulli-type extremal (x - 1/2)^2 - 1/12 approaches equality as N grows
        g = PeriodicGrid(1024)
        x = g.nodes
        f = Field(g, (x - 0.5) ** 2 - 1 / 12)
        f = f - float(np.mean(f.samples))
        assert poincare_margin(f) < 0.01 * float(np.max(f.samples ** 2))


class TestRhoGrowth:
    def test_zero_density(self):
        assert check_rho_growth([rec(0, 0), rec(1, 0.5)], 0.0, 0.5)

    def test_equality(self):
        assert check_rho_growth([rec(t, 0, linf_rho=2.0) for t in (0, 1, 2)], 2.0, 0.0)

    def test_violation(self):
        assert not check_rho_growth([rec(0, 0, linf_rho=1.0), rec(1, 0, linf_rho=3.0)], 1.0, 0.5)

    def test_M_below_observed(self):
        with pytest.raises(ValueError):
            check_rho_growth([rec(0, 2.0)], 1.0, 1.0)


class TestBlowupEstimate:
    def test_exact_affine(self):
        hist = [rec(t, 2 / (1 - t)) for t in np.linspace(0.5, 0.9, 9)]
        assert estimate_blowup_time(hist) == pytest.approx(1.0, abs=1e-6)

    def test_uses_latest_increasing_stretch(self):
        early = [rec(t, 5 - t) for t in np.linspace(0, 0.4, 5)]
        late = [rec(t, 2 / (1 - t)) for t in np.linspace(0.5, 0.9, 10)]
        assert estimate_blowup_time(early + late) == pytest.approx(1.0, abs=1e-6)

    def test_insufficient(self):
        with pytest.raises(InsufficientData):
            estimate_blowup_time([rec(t, 2 / (1 - t)) for t in np.linspace(0.5, 0.9, 5)])
        with pytest.raises(InsufficientData):
            estimate_blowup_time([rec(t, 3.0 - t) for t in np.linspace(0, 1, 20)])

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.5, 20), st.floats(0, 10), st.integers(0, 20))
    def test_left_truncation_stable(self, a, m0, drop):
        # sup u_x following the exact Riccati profile sqrt(2a) tan(sqrt(a/2) t + phase)
        s, w, ph = math.sqrt(2 * a), math.sqrt(a / 2), math.atan(m0 / math.sqrt(2 * a))
        T = (math.pi / 2 - ph) / w
        hist = [rec(t, s * math.tan(w * t + ph)) for t in np.linspace(0, 0.9 * T, 30)]
        full = estimate_blowup_time(hist)
        assert abs(estimate_blowup_time(hist[drop:]) - full) <= 0.01 * full
        assert full > hist[-1].t


class TestClassify:
    def test_empty(self):
        with pytest.raises(EmptyHistory):
            classify_outcome([], False)

    def test_global(self):
        out = classify_outcome([rec(0, 1), rec(1, 1)], False)
        assert out.kind == GLOBAL and out.t_star_estimate is None and out.t_star_lower == 1

    def test_blowup_with_fit(self):
        hist = [rec(t, 2 / (1 - t)) for t in np.linspace(0.5, 0.9, 9)]
        out = classify_outcome(hist, True, "slope_threshold")
        assert out.kind == BLOWUP and out.blew_up
        assert out.t_star_estimate == pytest.approx(1.0)
        assert out.t_star_estimate >= out.t_star_lower > 0
        assert out.estimate_method == "affine_fit"

    def test_blowup_fallback(self):
        out = classify_outcome([rec(0, 1), rec(0.3, 2)], True, "dt_collapse")
        assert out.kind == BLOWUP
        assert out.t_star_estimate == out.t_star_lower == 0.3
        assert out.estimate_method == "last_time"


def test_norm_growth_constant():
    hist = [rec(t, 0, h2_norm_u=math.sqrt(math.exp(2 * t)), h1_norm_rho=0.0) for t in (0, 0.5, 1)]
    c = norm_growth_constant(hist, 1.0)
    h0 = 2.0
    for r in hist:
        assert r.h2_norm_u ** 2 + 1 <= math.exp(c * 2 * r.t) * h0 * (1 + 1e-12)
