"""Command-line driver: ``muhs run|check|sweep <config>``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import checks as chk
from .characteristics import TrackObserver, equispaced_labels, riccati_reference
from .diagnostics import BLOWUP
from .evolve import run
from .io import (
    ParseError,
    RunConfig,
    ValidationError,
    load_config,
    parse_grid_list,
    write_convergence_csv,
    write_diagnostics_csv,
    write_json,
    write_tracks_csv,
)
from .scenarios import HypothesisViolation, build_scenario, convergence_study

EXIT_GLOBAL = 0
EXIT_ERROR = 1
EXIT_BLOWUP = 2


def _simulate(cfg: RunConfig, t_end: Optional[float] = None):
    spec = cfg.scenario_spec()
    built = build_scenario(spec)
    labels = equispaced_labels(cfg.n_tracks, spec.mandated_x0) if cfg.n_tracks else (
        [spec.mandated_x0] if spec.mandated_x0 is not None else []
    )
    observer = TrackObserver(labels, built.params)
    result = run(
        built.state,
        built.params,
        spec.t_end if t_end is None else t_end,
        cfg.controller,
        observers=[observer],
        record_every=cfg.record_every,
        conserved=built.conserved,
        sobolev_s=cfg.sobolev_s,
    )
    return spec, built, observer, result


def _smooth_cutoff(result) -> Optional[float]:
    """Checks that presume a resolved solution skip the final stretch of blow-up runs."""
    if result.outcome.kind == BLOWUP:
        return 0.8 * result.outcome.t_star_lower
    return None


def _run_checks(cfg: RunConfig, spec, built, observer, result) -> list[chk.CheckResult]:
    out = []
    cut = _smooth_cutoff(result)
    if "linf" in cfg.checks:
        out.append(chk.linf_check(result.history, built.conserved))
    if "rho_growth" in cfg.checks:
        out.append(chk.rho_growth_check(result.history))
    if "transport" in cfg.checks:
        out.append(chk.transport_check(observer, cut))
    if "riccati" in cfg.checks and observer.labels:
        out.append(chk.riccati_check(observer, built.conserved, cut))
    beta = built.report["values"]["beta"]
    if "lyapunov" in cfg.checks and observer.labels and beta > 0:
        out.append(chk.lyapunov_check(observer, built.state, built.conserved, beta))
    return out


def cmd_run(cfg: RunConfig, output_dir: Optional[str] = None) -> int:
    spec, built, observer, result = _simulate(cfg)
    out = cfg.resolved_output_dir(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_diagnostics_csv(out / "diagnostics.csv", result.history)
    write_tracks_csv(out / "tracks.csv", observer.history)
    results = _run_checks(cfg, spec, built, observer, result)
    summary = {
        "scenario": spec.name,
        "theorem": spec.theorem,
        "n_points": spec.n_points,
        "t_end": spec.t_end,
        "gamma1": spec.params.gamma1,
        "gamma2": spec.params.gamma2,
        "u0": str(spec.u0),
        "rho0": str(spec.rho0),
        "n_steps": result.n_steps,
        "outcome": result.outcome.as_dict(),
        "conserved": built.conserved.as_dict(),
        "hypotheses": built.report,
        "checks": {r.name: r.as_dict() for r in results},
    }
    write_json(out / "summary.json", summary)
    if cfg.figures:
        _figures(out, spec, built, observer, result)
    kind = result.outcome.kind
    est = result.outcome.t_star_estimate
    print(f"{spec.name}: {kind}" + (f" T*~{est!r}" if est is not None else "") + f" -> {out}")
    return EXIT_BLOWUP if kind == BLOWUP else EXIT_GLOBAL


def _figures(out: Path, spec, built, observer, result) -> None:
    from . import plotting

    plotting.plot_diagnostics(result.history, out / "diagnostics.png", title=spec.name)
    if result.outcome.kind == BLOWUP and result.outcome.t_star_estimate is not None:
        plotting.plot_blowup_fit(result.history, result.outcome.t_star_estimate, out / "blowup_fit.png")
    if observer.labels:
        reference = None
        x0 = spec.mandated_x0
        # the closed form applies on the zero-density track when mu0 = 0
        if x0 is not None and built.conserved.a > 0 and built.conserved.mu0 == 0.0:
            reference, _ = riccati_reference(observer.series(x0)[0].m, built.conserved.a)
        plotting.plot_tracks(observer.history, out / "tracks.png", highlight=x0, reference=reference)


def cmd_check(cfg: RunConfig, output_dir: Optional[str] = None) -> int:
    spec = cfg.scenario_spec()
    results = [chk.poincare_suite(spec.n_points, cfg.poincare_cases, cfg.seed)]
    horizon = min(spec.t_end, cfg.check_horizon)
    _, built, observer, result = _simulate(cfg, horizon)
    results += _run_checks(cfg, spec, built, observer, result)

    width = max(len(r.name) for r in results)
    print(f"{'check':<{width}}  result  value")
    for r in results:
        print(f"{r.name:<{width}}  {'pass' if r.passed else 'FAIL'}    {r.value!r}")
    failed = [r for r in results if not r.passed]
    if not failed:
        return EXIT_GLOBAL
    out = cfg.resolved_output_dir(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "check_failures.json"
    write_json(
        path,
        {
            "scenario": spec.name,
            "u0": str(spec.u0),
            "rho0": str(spec.rho0),
            "gamma1": spec.params.gamma1,
            "gamma2": spec.params.gamma2,
            "n_points": spec.n_points,
            "horizon": horizon,
            "seed": cfg.seed,
            "failures": {r.name: r.as_dict() for r in failed},
        },
    )
    print(f"failing cases written to {path}", file=sys.stderr)
    return EXIT_ERROR


def cmd_sweep(cfg: RunConfig, n_list: Sequence[int], output_dir: Optional[str] = None) -> int:
    if isinstance(n_list, str):
        n_list = parse_grid_list(n_list)
    for n in n_list:
        if isinstance(n, bool) or int(n) != n or n < 8 or n % 2:
            raise ValidationError("n", f"grid sizes must be even integers >= 8, got {n!r}")
    if list(n_list) != sorted(n_list) or len(set(n_list)) != len(n_list):
        raise ValidationError("n", f"grid sizes must be strictly ascending, got {list(n_list)}")
    rows = convergence_study(cfg.scenario_spec(), n_list, cfg.controller)
    out = cfg.resolved_output_dir(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_convergence_csv(out / "convergence.csv", rows)
    if cfg.figures:
        from . import plotting

        plotting.plot_convergence(rows, out / "convergence.png")
    for r in rows:
        est = "" if r.t_star_estimate is None else f"  T*~{r.t_star_estimate!r}"
        print(f"N={r.n_points:<6d} drift={r.energy_drift:.3e}  residual={r.residual23_max:.3e}{est}")
    return EXIT_GLOBAL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="muhs", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("config", help="path to a key = value configuration file")
        sp.add_argument("--output-dir", help="overrides output_dir and $MUHS_OUTPUT_DIR")
        sp.add_argument("--no-figures", action="store_true", help="skip the PNG figures")

    common(sub.add_parser("run", help="integrate one scenario and write CSV/JSON output"))
    common(sub.add_parser("check", help="run the inequality and consistency suites"))
    sp = sub.add_parser("sweep", help="grid convergence study")
    common(sp)
    sp.add_argument("--n", required=True, help="comma-separated ascending even grid sizes")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.no_figures:
            cfg = replace(cfg, figures=False)
        if args.command == "run":
            return cmd_run(cfg, args.output_dir)
        if args.command == "check":
            return cmd_check(cfg, args.output_dir)
        return cmd_sweep(cfg, parse_grid_list(args.n), args.output_dir)
    except (ParseError, ValidationError, HypothesisViolation, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
