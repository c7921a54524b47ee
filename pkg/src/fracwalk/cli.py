"""Command-line interface.

Subcommands wrap the library: ``kernel`` builds and dumps a jump law,
``simulate`` runs walker ensembles, ``density`` tabulates the analytic
fundamental solution, ``study`` runs an h-refinement convergence report,
``oracle`` checks the symbol identity matrix, and ``defaults`` prints every
configurable default.  Exit codes: 0 success, 1 runtime or numerical
failure, 2 validation failure.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .analytic import (
    DiffusionSymbol,
    QuadParams,
    default_radial_grid,
    green_density,
    symbol_oracle,
)
from .config import ConfigError, DEFAULTS, RunConfig, defaults_yaml
from .diagnostics import ks_distance, refinement_study
from .kernel import StabilityError, build_kernel, stability_sigma
from .montecarlo import build_sampler, run_walks
from .quadrature import QuadratureError

EXIT_RUNTIME = 1
EXIT_VALIDATION = 2


def _handle_errors(fn):
    """Map failures to the exit-code contract: 2 validation, 1 runtime."""
    import functools

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ConfigError, StabilityError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)
        except (QuadratureError, RuntimeError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_RUNTIME)

    return wrapper


def _load_config(path: str | None) -> RunConfig:
    if path is None:
        raise ConfigError("this command requires --config <file>")
    return RunConfig.from_file(path)


def _out_dir(out: str | None, cfg: RunConfig | None = None) -> Path:
    if out is None and cfg is not None:
        out = cfg.raw.get("out")
    d = Path(out) if out else Path(".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)


def _resolve_kernel(cfg: RunConfig, h: float | None = None):
    h = float(h if h is not None else cfg.h)
    report = stability_sigma(cfg.measure, cfg.dim, h, 0.0, cfg.zeta_tol)
    tau = cfg.tau_for(h, report.tau_max)
    kernel = build_kernel(cfg.measure, cfg.dim, h, tau, cfg.trunc_radius, cfg.zeta_tol)
    return kernel, report


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Lattice walks for distributed-order fractional diffusion."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out", type=click.Path(), default=None, help="output directory")
@_handle_errors
def kernel(config_path: str, out: str | None) -> None:
    """Build the transition kernel and write it as JSON."""
    cfg = _load_config(config_path)
    k, report = _resolve_kernel(cfg)
    payload = k.to_json_dict()
    payload["tau_max"] = report.tau_max
    payload.update(cfg.echo())
    path = _out_dir(out, cfg) / "kernel.json"
    _write_json(path, payload)
    click.echo(
        f"kernel: dim={k.dim} h={k.h} tau={k.tau:.10g} K={k.trunc_radius}\n"
        f"  sigma={k.sigma:.10g}  p0={k.p0:.10g}  tau_max={report.tau_max:.10g}\n"
        f"  tail_mass={k.tail_mass:.3e}"
        + ("  [WARNING: truncation tail exceeds 10% of sigma]" if k.tail_warning else "")
        + f"\n  written to {path}"
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out", type=click.Path(), default=None)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="override config seed")
@click.option("--threads", type=click.IntRange(1, None), default=None, help="worker threads (no effect on results)")
@_handle_errors
def simulate(config_path: str, out: str | None, seed: int | None, threads: int | None) -> None:
    """Sample a walker ensemble; write positions CSV and a summary JSON."""
    cfg = _load_config(config_path)
    k, _ = _resolve_kernel(cfg)
    if cfg.n_steps is not None:
        n_steps = cfg.n_steps
    elif k.tau > 0.0:
        n_steps = math.ceil(cfg.t / k.tau)
    else:
        n_steps = 0  # frozen walk: no jumps regardless of step count
    use_seed = int(seed if seed is not None else cfg.seed)
    use_threads = int(threads if threads is not None else cfg.threads)
    ensemble = run_walks(build_sampler(k), int(n_steps), int(cfg.walkers), use_seed, use_threads)

    out_dir = _out_dir(out, cfg)
    csv_path = out_dir / "ensemble.csv"
    ensemble.to_csv(csv_path)
    summary = ensemble.summary_dict()
    summary["tail_mass"] = k.tail_mass

    reference = cfg.ks_reference
    if reference == "auto":
        single_cauchy = (
            cfg.dim == 1
            and len(cfg.measure.terms) == 1
            and abs(cfg.measure.terms[0][0] - 1.0) < 1e-12
        )
        reference = "cauchy" if single_cauchy else "none"
    if reference == "cauchy" and ensemble.n_steps * ensemble.tau > 0.0:
        scale = cfg.measure.terms[0][1] * ensemble.n_steps * ensemble.tau
        cdf = lambda x: 0.5 + np.arctan(x / scale) / math.pi
        summary["ks"] = ks_distance(ensemble, cdf)
        summary["ks_reference"] = "cauchy"
    elif reference == "analytic":
        t_sim = ensemble.n_steps * ensemble.tau
        dens = green_density(
            DiffusionSymbol(cfg.measure, cfg.dim), t_sim,
            quad_params=QuadParams(tol=cfg.quad_tol),
        )
        if cfg.dim == 1:
            summary["ks"] = ks_distance(ensemble, dens.axis_cdf, "first")
        else:
            summary["ks"] = ks_distance(ensemble, dens.radial_cdf, "radial")
        summary["ks_reference"] = "analytic"
    summary.update(cfg.echo())
    _write_json(out_dir / "summary.json", summary)
    click.echo(
        f"simulate: {ensemble.n_walkers} walkers x {ensemble.n_steps} steps "
        f"(h={k.h}, tau={k.tau:.6g}, seed={use_seed})\n"
        + (f"  ks={summary['ks']:.5f} vs {summary['ks_reference']}\n" if "ks" in summary else "")
        + f"  written to {csv_path} and summary.json"
    )


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out", type=click.Path(), default=None)
@click.option("--selfcheck", is_flag=True, help="verify the tabulated mass integrates to 1")
@_handle_errors
def density(config_path: str, out: str | None, selfcheck: bool) -> None:
    """Tabulate the analytic fundamental solution on a radial grid."""
    cfg = _load_config(config_path)
    if cfg.t is None or cfg.t <= 0.0:
        raise ConfigError("density requires t > 0")
    sym = DiffusionSymbol(cfg.measure, cfg.dim)
    if cfg.r_max is not None:
        r_grid = np.concatenate(
            [[0.0], np.geomspace(1e-4 * cfg.r_max, cfg.r_max, int(cfg.r_points) - 1)]
        )
    else:
        r_grid = default_radial_grid(sym, cfg.t, int(cfg.r_points))
    dens = green_density(sym, cfg.t, r_grid, QuadParams(tol=cfg.quad_tol))

    out_dir = _out_dir(out, cfg)
    csv_path = out_dir / "density.csv"
    dens.to_csv(csv_path)
    payload = dens.to_json_dict()
    payload.update(cfg.echo())
    mass = dens.mass()
    payload["mass"] = mass
    _write_json(out_dir / "density.json", payload)
    click.echo(
        f"density: dim={cfg.dim} t={cfg.t} grid [0, {r_grid[-1]:.6g}] x {len(r_grid)}\n"
        f"  G(t, 0)={dens.values[0]:.10g}  mass={mass:.8f}\n"
        f"  written to {csv_path} and density.json"
    )
    if selfcheck:
        if abs(mass - 1.0) > 1e-3:
            click.echo(f"selfcheck FAILED: mass {mass:.8f} deviates from 1 by > 1e-3", err=True)
            sys.exit(EXIT_RUNTIME)
        click.echo("selfcheck passed: mass within 1e-3 of 1")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out", type=click.Path(), default=None)
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None)
@click.option("--threads", type=click.IntRange(1, None), default=None)
@_handle_errors
def study(config_path: str, out: str | None, seed: int | None, threads: int | None) -> None:
    """Refinement study: CF and KS convergence metrics along decreasing h."""
    cfg = _load_config(config_path)
    if not cfg.h_list:
        raise ConfigError("study requires h_list (strictly decreasing)")
    report = refinement_study(
        cfg.measure,
        cfg.dim,
        cfg.t,
        cfg.h_list,
        int(cfg.walkers),
        int(seed if seed is not None else cfg.seed),
        theta=cfg.theta,
        xi_max=cfg.xi_max,
        xi_points=int(cfg.xi_points),
        trunc_radius=cfg.trunc_radius,
        threads=int(threads if threads is not None else cfg.threads),
        quad_params=QuadParams(tol=cfg.quad_tol),
    )
    out_dir = _out_dir(out, cfg)
    payload = report.to_json_dict()
    payload.update(cfg.echo())
    _write_json(out_dir / "study.json", payload)
    report.to_csv(out_dir / "study.csv")
    # plot data: one (x, y) CSV per metric plus a sidecar describing the axes
    with open(out_dir / "plot_cf_error.csv", "w") as f:
        f.write("h,cf_sup_error\n")
        for row in report.rows:
            f.write(f"{row.h!r},{row.cf_sup_error!r}\n")
    with open(out_dir / "plot_ks.csv", "w") as f:
        f.write("h,ks_distance\n")
        for row in report.rows:
            f.write(f"{row.h!r},{row.ks_distance!r}\n")
    _write_json(
        out_dir / "plot_axes.json",
        {
            "plot_cf_error.csv": {
                "x": {"column": "h", "label": "mesh width h", "scale": "log"},
                "y": {"column": "cf_sup_error",
                      "label": f"sup |cf error| on |xi| <= {cfg.xi_max}", "scale": "log"},
            },
            "plot_ks.csv": {
                "x": {"column": "h", "label": "mesh width h", "scale": "log"},
                "y": {"column": "ks_distance", "label": "KS distance", "scale": "log"},
            },
        },
    )
    click.echo("h        tau          n      cf_sup_error   ks_distance   tail_mass")
    for r in report.rows:
        click.echo(
            f"{r.h:<8g} {r.tau:<12.6g} {r.n_steps:<6d} {r.cf_sup_error:<14.6g} "
            f"{r.ks_distance:<13.6g} {r.tail_mass:.3e}"
        )
    click.echo(f"written to {out_dir}/study.json, study.csv, plot_*.csv")


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="optional override of the check matrix")
@click.option("--out", "out", type=click.Path(), default=None)
@_handle_errors
def oracle(config_path: str | None, out: str | None) -> None:
    """Verify the hypersingular symbol identity over a (alpha, dim, |xi|) matrix."""
    if config_path is not None:
        cfg = _load_config(config_path)
        alphas, dims, xis = cfg.oracle_alphas, cfg.oracle_dims, cfg.oracle_xis
        rtol = cfg.oracle_rtol
    else:
        alphas, dims, xis = (
            DEFAULTS["oracle_alphas"], DEFAULTS["oracle_dims"], DEFAULTS["oracle_xis"],
        )
        rtol = DEFAULTS["oracle_rtol"]

    rows, worst = [], 0.0
    click.echo("alpha   dim   |xi|   numeric            target             rel_error")
    for a in alphas:
        for n in dims:
            for q in xis:
                got = symbol_oracle(float(a), int(n), float(q))
                want = -float(q) ** float(a)
                rel = abs(got - want) / abs(want)
                worst = max(worst, rel)
                rows.append(
                    {"alpha": a, "dim": n, "xi": q, "numeric": got,
                     "target": want, "rel_error": rel, "pass": rel <= rtol}
                )
                click.echo(f"{a:<7g} {n:<5d} {q:<6g} {got:<18.12g} {want:<18.12g} {rel:.3e}")
    n_fail = sum(not r["pass"] for r in rows)
    if out is not None:
        _write_json(_out_dir(out) / "oracle.json",
                    {"rtol": rtol, "worst_rel_error": worst, "cases": rows})
    click.echo(f"{len(rows)} cases, worst relative error {worst:.3e} (tolerance {rtol:g})")
    if n_fail:
        click.echo(f"{n_fail} case(s) FAILED", err=True)
        sys.exit(EXIT_RUNTIME)


@main.command()
def defaults() -> None:
    """Print every configurable default as a YAML document."""
    click.echo(defaults_yaml().rstrip())


if __name__ == "__main__":
    main()
