import numpy as np
import pytest

import muhs.dynamics as dyn

GAUGE_TOL = 1e-13

# Every right-hand-side evaluation made anywhere in the session passes through this monitor.
_gauge = {"calls": 0, "max_abs_mean": 0.0, "worst_shape": None}
# Acceptance tests file their verdicts here; printed in the terminal summary.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def _install_gauge_monitor():
    original = dyn._rhs_arrays
    if getattr(original, "_gauge_wrapped", False):
        return

    def monitored(grid, u, rho, gamma1, gamma2):
        du, drho, ux = original(grid, u, rho, gamma1, gamma2)
        m = abs(float(np.mean(du)))
        _gauge["calls"] += 1
        if m > _gauge["max_abs_mean"]:
            _gauge["max_abs_mean"] = m
            _gauge["worst_shape"] = grid.n_points
        return du, drho, ux

    monitored._gauge_wrapped = True
    dyn._rhs_arrays = monitored


_install_gauge_monitor()


@pytest.fixture
def gauge_stats():
    return _gauge


@pytest.fixture
def acceptance():
    return ACCEPTANCE


def pytest_sessionfinish(session, exitstatus):
    if _gauge["max_abs_mean"] > GAUGE_TOL and session.exitstatus == 0:
        session.exitstatus = 1


def pytest_terminal_summary(terminalreporter):
    tr = terminalreporter
    if not ACCEPTANCE and not _gauge["calls"]:
        return
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        tr.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    ok = _gauge["max_abs_mean"] <= GAUGE_TOL
    tr.write_line(
        f"gauge (session-wide): {'PASS' if ok else 'FAIL'}  "
        f"max |mean(du_dt)| = {_gauge['max_abs_mean']:.3e} over {_gauge['calls']} RHS evaluations"
    )
