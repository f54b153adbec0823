"""Command-line front end: equilibria | bifurcation | simulate | connections | verify.

Exit codes: 0 ok, 1 verify failure, 2 config error, 3 solver failure,
4 Morse violation (including required edges missing from the probe results).
Report paths write figures next to the delimited output unless outputs.plots
is false or --no-plots is given.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import basis, dynamics, equilibria, plots, stability, verify
from .config import build_problem_spec, load_config, output_directory
from .errors import ConfigError, MorseViolationError, NlChafeeError

EXIT_VERIFY_FAIL = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_MORSE = 4


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _load(config_path, output_dir, no_plots):
    cfg = load_config(config_path)
    if output_dir is not None:
        cfg.outputs.directory = str(output_dir)
    if no_plots:
        cfg.outputs = type(cfg.outputs)(directory=cfg.outputs.directory,
                                        formats=cfg.outputs.formats, plots=False)
    spec = build_problem_spec(cfg)
    return cfg, spec


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    try:
        fn()
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    except MorseViolationError:
        raise
    except NlChafeeError as exc:
        _fail(EXIT_SOLVER, str(exc))


@click.group()
def main():
    """Numerical laboratory for the nonlocal Chafee-Infante equation."""


_config_opt = click.option("--config", "config_path", required=True,
                           type=click.Path(), help="YAML run configuration.")
_outdir_opt = click.option("--output-dir", default=None, type=click.Path(),
                           help="Override outputs.directory.")
_noplots_opt = click.option("--no-plots", is_flag=True, help="Skip PNG rendering.")


@main.command("equilibria")
@_config_opt
@_outdir_opt
@_noplots_opt
def cmd_equilibria(config_path, output_dir, no_plots):
    """Enumerate all stationary points and write the EquilibriumSet JSON."""

    def run():
        cfg, spec = _load(config_path, output_dir, no_plots)
        out = output_directory(cfg)
        eqset = equilibria.enumerate_equilibria(spec)
        ids = equilibria.entry_ids(eqset)
        (out / "equilibria.json").write_text(equilibria.equilibrium_set_to_json(eqset))
        noun = "equilibrium" if eqset.count == 1 else "equilibria"
        click.echo(f"{eqset.count} {noun}" + (" (zero)" if eqset.count == 1 else ""))
        click.echo("id      k  sign  d_star                 E                      sup|u|")
        for ident, p in zip(ids, eqset.entries):
            click.echo(f"{ident:7s} {p.k}  {p.sign:+d}    "
                       f"{p.d:<22.16g} {p.E:<22.16g} {p.u_max:.16g}")
        if cfg.outputs.plots:
            plots.save_equilibria_png(eqset, ids, out / "equilibria.png")

    _guard(run)


@main.command("bifurcation")
@_config_opt
@_outdir_opt
@_noplots_opt
@click.option("--lambda-min", type=float, required=True)
@click.option("--lambda-max", type=float, required=True)
@click.option("--steps", type=int, required=True, help="Number of lambda grid points.")
def cmd_bifurcation(config_path, output_dir, no_plots, lambda_min, lambda_max, steps):
    """Sweep lambda and write the branch CSV (one row per branch)."""

    def run():
        if steps < 1:
            raise ConfigError("steps must be >= 1")
        if not 0 < lambda_min < lambda_max:
            raise ConfigError("need 0 < lambda_min < lambda_max")
        cfg, spec = _load(config_path, output_dir, no_plots)
        out = output_directory(cfg)
        diagram = equilibria.bifurcation_diagram(spec, (lambda_min, lambda_max), steps)
        (out / "bifurcation.csv").write_text(equilibria.bifurcation_to_csv(diagram))
        click.echo(f"{len(diagram.rows)} branch points over "
                   f"{steps} lambda values -> {out / 'bifurcation.csv'}")
        if cfg.outputs.plots:
            plots.save_bifurcation_png(diagram, out / "bifurcation.png")

    _guard(run)


def _parse_initial(text: str):
    if text in ("zero", "random"):
        return text, None
    if text.startswith("mode:"):
        return "mode", int(text.split(":", 1)[1])
    if text.startswith("file:"):
        return "file", text.split(":", 1)[1]
    raise ConfigError(f"unknown initial condition {text!r} "
                      "(zero | random | mode:J | file:PATH)")


def _initial_from_file(path: str, N: int):
    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read initial state file {path}: {exc}")
    if isinstance(payload, list):          # EquilibriumSet JSON: take first entry
        if not payload:
            raise ConfigError(f"{path} holds an empty equilibrium array")
        payload = payload[0]
    if "coeffs" in payload:
        c = np.asarray(payload["coeffs"], dtype=float)
        out = np.zeros(N)
        out[:min(N, c.size)] = c[:N]
        return out
    if "samples" in payload:
        return basis.project_closed_samples(np.asarray(payload["samples"]), N)
    raise ConfigError(f"{path} must contain 'coeffs' or 'samples'")


@main.command("simulate")
@_config_opt
@_outdir_opt
@_noplots_opt
@click.option("--initial", default="random", show_default=True,
              help="zero | random | mode:J | file:PATH")
@click.option("--amplitude", type=float, default=1e-3, show_default=True,
              help="Amplitude for mode/random initial data.")
@click.option("--snapshots", is_flag=True, help="Also write full states JSON.")
def cmd_simulate(config_path, output_dir, no_plots, initial, amplitude, snapshots):
    """Integrate one trajectory and write the trajectory CSV."""

    def run():
        cfg, spec = _load(config_path, output_dir, no_plots)
        out = output_directory(cfg)
        sol = cfg.solver
        kind, arg = _parse_initial(initial)
        if kind == "file":
            state = dynamics.GalerkinState(sol.N, _initial_from_file(arg, sol.N))
        elif kind == "mode":
            state = dynamics.initial_state(spec, sol.N, "mode", mode=arg,
                                           amplitude=amplitude)
        else:
            state = dynamics.initial_state(spec, sol.N, kind, seed=cfg.seed,
                                           amplitude=amplitude if kind == "random" else 0.0)
        traj = dynamics.integrate(state, spec, t_end=sol.t_end, dt=sol.dt,
                                  sample_interval=sol.sample_interval,
                                  deadband=sol.deadband,
                                  lap_grid_points=sol.grid_points,
                                  stop_rhs_norm=1e-7)

        if spec.h == 0.0:
            eqset = equilibria.enumerate_equilibria(spec)
            targets = dynamics.equilibrium_coefficients(eqset, sol.N)
            jj = basis.eigenvalues(sol.N)
            dists = []
            for s in traj.states:
                best = min(float(np.sqrt(jj @ (s.coeffs - c) ** 2))
                           for _, c in targets)
                dists.append(best)
            omega = dynamics.classify_omega_limit(traj, eqset)
        else:
            dists = [float("nan")] * len(traj.states)
            omega = dynamics.OmegaLimit(dynamics.UNRESOLVED, float("nan"))

        lines = ["t,energy,lap,l2_norm,h1_norm,dist_to_nearest_eq"]
        for i, s in enumerate(traj.states):
            lines.append(",".join([
                _fmt(s.time), _fmt(traj.energies[i]), str(traj.lap_numbers[i]),
                _fmt(np.sqrt(s.l2_norm_sq())), _fmt(np.sqrt(s.h1_norm_sq())),
                _fmt(dists[i])]))
        (out / "trajectory.csv").write_text("\n".join(lines) + "\n")
        if snapshots:
            payload = [{"t": s.time, "coeffs": s.coeffs.tolist()} for s in traj.states]
            (out / "states.json").write_text(json.dumps(payload))
        if cfg.outputs.plots:
            times = traj.times
            l2 = [np.sqrt(s.l2_norm_sq()) for s in traj.states]
            h1 = [np.sqrt(s.h1_norm_sq()) for s in traj.states]
            plots.save_trajectory_png(times, traj.energies, traj.lap_numbers,
                                      l2, h1, out / "trajectory.png")
        click.echo(f"omega_limit={omega.ident} distance={omega.distance:.6g} "
                   f"final_energy={traj.energies[-1]:.12g} final_lap={traj.lap_numbers[-1]}")

    _guard(run)


@main.command("connections")
@_config_opt
@_outdir_opt
@_noplots_opt
@click.option("--epsilon", type=float, default=1e-4, show_default=True,
              help="Probe amplitude along unstable eigenvectors.")
@click.option("--t-end", "t_end", type=float, default=200.0, show_default=True)
def cmd_connections(config_path, output_dir, no_plots, epsilon, t_end):
    """Probe unstable manifolds and write the connection graph (JSON + dot)."""

    def run():
        cfg, spec = _load(config_path, output_dir, no_plots)
        out = output_directory(cfg)
        eqset = equilibria.enumerate_equilibria(spec)
        try:
            graph = stability.probe_connections(eqset, spec, epsilon=epsilon,
                                                t_end=t_end, N=cfg.solver.N,
                                                dt=cfg.solver.dt)
            violations = stability.check_morse_order(graph)
        except MorseViolationError as exc:
            graph = exc.graph
            violations = exc.violations
        (out / "graph.json").write_text(stability.graph_to_json(graph))
        (out / "graph.dot").write_text(stability.graph_to_dot(graph))
        if cfg.outputs.plots:
            plots.save_graph_png(graph, out / "graph.png")
        for w in graph.warnings:
            click.echo(f"warning: {w}", err=True)

        unwitnessed = [f"{e.src}->{e.dst}" for e in graph.edges
                       if e.provenance == "required" and not e.witnessed]
        for v in violations:
            click.echo(f"violation: {v}", err=True)
        for edge in unwitnessed:
            click.echo(f"violation: required edge {edge} not observed by any probe",
                       err=True)
        click.echo(f"{len(graph.nodes)} nodes, {len(graph.edges)} edges "
                   f"-> {out / 'graph.json'}")
        if violations or unwitnessed:
            sys.exit(EXIT_MORSE)

    _guard(run)


@main.command("verify")
@_config_opt
@_outdir_opt
def cmd_verify(config_path, output_dir):
    """Run the full property suite and write the pass/fail report JSON."""

    def run():
        cfg, _ = _load(config_path, output_dir, False)
        out = output_directory(cfg)
        results = verify.run_all(cfg, echo=click.echo)
        report = [r.as_dict() for r in results]
        (out / "verify_report.json").write_text(json.dumps(report, indent=2))
        failed = [r.criterion_id for r in results if not r.passed]
        if failed:
            click.echo(f"FAILED: {', '.join(failed)}", err=True)
            sys.exit(EXIT_VERIFY_FAIL)
        click.echo(f"all {len(results)} criteria passed")

    _guard(run)


if __name__ == "__main__":
    main()
