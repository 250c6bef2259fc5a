"""Report figures rendered off-screen with the Agg backend."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib import rc_context  # noqa: E402
from matplotlib.backends.backend_agg import FigureCanvasAgg  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
    "figure.dpi": 100,
    "savefig.dpi": 120,
    "svg.hashsalt": "muhs",
}

# keeps PNG bytes independent of the matplotlib version string
_METADATA = {"Software": None}


def _figure(nrows: int = 1, ncols: int = 1, size=(6.4, 4.0)):
    fig = Figure(figsize=size)
    FigureCanvasAgg(fig)
    axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, metadata=_METADATA)
    return path


def plot_diagnostics(history, path, title: Optional[str] = None) -> Path:
    """Slope extremes, energy drift and the residual over time."""
    t = np.array([r.t for r in history])
    with rc_context(STYLE):
        fig, ax = _figure(2, 2, size=(7.2, 5.0))
        a = ax[0, 0]
        a.plot(t, [r.sup_ux for r in history], label="sup $u_x$")
        a.plot(t, [r.inf_ux for r in history], label="inf $u_x$")
        a.set_xlabel("t")
        a.legend()

        a = ax[0, 1]
        a.plot(t, [r.linf_u for r in history], label=r"$\|u\|_\infty$")
        a.plot(t, [r.linf_rho for r in history], label=r"$\|\rho\|_\infty$")
        a.plot(t, [r.linf_rhox for r in history], label=r"$\|\rho_x\|_\infty$")
        a.set_xlabel("t")
        a.legend()

        a = ax[1, 0]
        e0 = history[0].energy
        drift = [abs(r.energy - e0) / e0 if e0 > 0 else abs(r.energy) for r in history]
        a.semilogy(t, np.maximum(drift, 1e-18))
        a.set_xlabel("t")
        a.set_ylabel("relative energy drift")

        a = ax[1, 1]
        a.semilogy(t, np.maximum([r.residual23 for r in history], 1e-18))
        a.set_xlabel("t")
        a.set_ylabel("residual of the integrated form")
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def plot_blowup_fit(history, t_star: float, path, window: int = 8) -> Path:
    """1/sup u_x against t with the extrapolated blow-up time marked."""
    rows = [r for r in history if r.sup_ux > 0]
    t = np.array([r.t for r in rows])
    inv = np.array([1.0 / r.sup_ux for r in rows])
    with rc_context(STYLE):
        fig, ax = _figure()
        a = ax[0, 0]
        a.plot(t, inv, "o", ms=2.5, label=r"$1/\sup u_x$")
        if len(t) >= 2:
            tw, iw = t[-window:], inv[-window:]
            slope, icpt = np.polyfit(tw, iw, 1)
            ts = np.linspace(tw[0], t_star, 50)
            a.plot(ts, slope * ts + icpt, "--", label="affine fit")
        a.axvline(t_star, color="0.4", lw=0.8)
        a.annotate(f"T* = {t_star:.5g}", (t_star, 0), xytext=(-60, 20), textcoords="offset points")
        a.set_xlabel("t")
        a.set_ylim(bottom=0)
        a.legend()
        return _save(fig, path)


def plot_tracks(snapshots, path, highlight: Optional[float] = None, reference=None) -> Path:
    """m(t) along every track; ``reference`` is an optional callable drawn against the highlighted one."""
    if not snapshots or not snapshots[0]:
        raise ValueError("no tracks to plot")
    t = np.array([snap[0].t for snap in snapshots])
    m = np.array([[tr.m for tr in snap] for snap in snapshots])
    jac = np.array([[tr.jac_qx for tr in snap] for snap in snapshots])
    labels = [tr.label_x0 for tr in snapshots[0]]
    with rc_context(STYLE):
        fig, ax = _figure(1, 2, size=(7.6, 3.4))
        for j, x0 in enumerate(labels):
            lw, color = (1.6, "C3") if highlight is not None and x0 == highlight else (0.6, "0.6")
            ax[0, 0].plot(t, m[:, j], color=color, lw=lw)
            ax[0, 1].semilogy(t, jac[:, j], color=color, lw=lw)
        if reference is not None:
            ax[0, 0].plot(t, reference(t), "k:", label="Riccati solution")
            ax[0, 0].legend()
        ax[0, 0].set_xlabel("t")
        ax[0, 0].set_ylabel("m = $u_x$ along track")
        ax[0, 1].set_xlabel("t")
        ax[0, 1].set_ylabel("$q_x$")
        return _save(fig, path)


def plot_convergence(rows: Sequence, path) -> Path:
    n = np.array([r.n_points for r in rows], dtype=float)
    with rc_context(STYLE):
        fig, ax = _figure(1, 2, size=(7.2, 3.2))
        ax[0, 0].loglog(n, np.maximum([r.energy_drift for r in rows], 1e-18), "o-")
        ax[0, 0].set_xlabel("N")
        ax[0, 0].set_ylabel("energy drift")
        ax[0, 1].loglog(n, np.maximum([r.residual23_max for r in rows], 1e-18), "s-")
        ax[0, 1].set_xlabel("N")
        ax[0, 1].set_ylabel("max residual")
        return _save(fig, path)
