"""Command-line entry point.

Subcommands: simulate | pde | oja-theory | steady | sweep. Every run
resolves its configuration (defaults < config file < flags), validates
it up front, writes plot-ready CSV (or JSON) tables plus a manifest
with the resolved config, and is a pure function of (config, seed):
identical invocations produce byte-identical table bodies. Exit codes:
0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, config as cfgmod, pde as pdemod
from .errors import ConfigError, NumericError
from .oja import OjaParams, closed_form_q
from .simulate import run_trajectory
from .steady import default_r_init, solve_fixed_point, steady_density, sweep_omega


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _native(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(value)
    return str(value)


def write_table(path: Path, header: list[str], rows, fmt: str) -> Path:
    if fmt == "json":
        path = path.with_suffix(".json")
        payload = [dict(zip(header, [_native(v) for v in row])) for row in rows]
        path.write_text(json.dumps(payload, indent=1) + "\n")
    else:
        lines = [",".join(header)]
        lines.extend(",".join(_fmt(v) for v in row) for row in rows)
        path.write_text("\n".join(lines) + "\n")
    return path


def write_manifest(outdir: Path, command: str, cfg: dict, started: float, extras: dict) -> Path:
    manifest = {
        "command": command,
        "config": cfg,
        "seed": cfg["simulation"]["seed"],
        "version": __version__,
        "wall_time_s": time.time() - started,
        **extras,
    }
    path = outdir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def cmd_simulate(cfg: dict, outdir: Path, fmt: str, threads: int) -> list[Path]:
    prior = cfgmod.build_prior(cfg)
    sim = cfg["simulation"]
    record_times = cfgmod.resolve_record_times(sim)
    records = run_trajectory(
        prior=prior,
        stream_cfg=cfgmod.build_stream_config(cfg),
        algo_cfg=cfgmod.build_algo_config(cfg),
        t_max=float(sim["t_max"]),
        record_times=record_times,
        replicas=int(sim["replicas"]),
        x0_spec=(float(sim["x0_mean"]), float(sim["x0_var"])),
        histogram_times=cfgmod.resolve_histogram_times(cfg),
        bin_edges=cfgmod.resolve_bin_edges(cfg),
        theta=cfgmod.resolve_theta(cfg),
        n_workers=threads,
    )

    traj_rows = [
        (rec.replica_id, t, q, mc)
        for rec in records
        for t, q, mc in zip(rec.times, rec.q_values, rec.misclass)
    ]
    hist_rows = []
    for rec in records:
        centers = 0.5 * (rec.bin_edges[:-1] + rec.bin_edges[1:])
        for t, hists in zip(rec.histogram_times, rec.histograms):
            for hist in hists:
                if hist.density is None:
                    continue
                hist_rows.extend(
                    (rec.replica_id, t, hist.atom, c, d)
                    for c, d in zip(centers, hist.density)
                )
    q_matrix = np.array([rec.q_values for rec in records])
    n_rep = len(records)
    q_std = q_matrix.std(axis=0, ddof=1) if n_rep > 1 else np.zeros(q_matrix.shape[1])
    summary_rows = [
        (t, mean, std, n_rep)
        for t, mean, std in zip(record_times, q_matrix.mean(axis=0), q_std)
    ]
    return [
        write_table(outdir / "trajectory.csv", ["replica", "t", "Q", "misclass"], traj_rows, fmt),
        write_table(outdir / "histograms.csv",
                    ["replica", "t", "xi_atom", "bin_center", "density"], hist_rows, fmt),
        write_table(outdir / "summary.csv", ["t", "Q_mean", "Q_std", "n_replicas"],
                    summary_rows, fmt),
    ]


def cmd_pde(cfg: dict, outdir: Path, fmt: str, threads: int) -> list[Path]:
    prior = cfgmod.build_discrete_prior(cfg)
    pde_cfg = cfgmod.build_pde_config(cfg, prior)
    sim = cfg["simulation"]
    moment_times = cfgmod.resolve_record_times(cfg["pde"])
    density_times = [float(t) for t in (cfg["pde"]["density_times"] or [])
                     if 0.0 <= float(t) <= pde_cfg.t_max]
    all_times = sorted(set(moment_times) | set(density_times))
    solution = pdemod.solve(pde_cfg, prior, all_times,
                            x0_mean=float(sim["x0_mean"]), x0_var=float(sim["x0_var"]))

    by_time = dict(zip(solution.times.tolist(), solution.snapshots))
    moment_rows = [(t, by_time[t].q, by_time[t].r) for t in moment_times]
    density_rows = []
    for t in density_times:
        snap = by_time[t]
        centers = snap.grid.centers
        for atom, dens in zip(snap.atoms, snap.densities):
            density_rows.extend((t, atom, x, d) for x, d in zip(centers, dens))
    return [
        write_table(outdir / "moments.csv", ["t", "Q", "R"], moment_rows, fmt),
        write_table(outdir / "densities.csv", ["t", "xi_atom", "x", "density"],
                    density_rows, fmt),
    ]


def cmd_oja_theory(cfg: dict, outdir: Path, fmt: str, q0_override: float | None) -> list[Path]:
    params = OjaParams(tau=cfg["algorithm"]["tau"], omega=cfg["model"]["omega"])
    q0 = cfgmod.initial_overlap(cfg) if q0_override is None else q0_override
    if q0 == 0.0:
        raise ConfigError(
            "initial overlap q0 is zero for this configuration; the overlap "
            "dynamics are only defined for a nonzero starting overlap"
        )
    times = cfgmod.resolve_record_times(cfg["simulation"])
    rows = [(t, closed_form_q(t, q0, params)) for t in times]
    return [write_table(outdir / "oja_theory.csv", ["t", "Q"], rows, fmt)]


def _selected_fixed_point(results):
    converged = [r for r in results if r.converged]
    pool = converged or results
    return max(pool, key=lambda r: abs(r.q))


def cmd_steady(cfg: dict, outdir: Path, fmt: str, with_density: bool) -> list[Path]:
    prior = cfgmod.build_discrete_prior(cfg)
    steady_cfg = cfgmod.build_steady_config(cfg)
    st = cfg["steady"]
    results = []
    rows = []
    for init in st["inits"]:
        q0 = float(init[0])
        r0 = default_r_init(q0, steady_cfg, prior) if init[1] is None else float(init[1])
        fp = solve_fixed_point(steady_cfg, prior, (q0, r0), damping=float(st["damping"]),
                               tol=float(st["tol"]), max_iter=int(st["max_iter"]))
        results.append(fp)
        rows.append((q0, r0, fp.q, fp.r, fp.residual, fp.branch, fp.converged, fp.iterations))
    files = [
        write_table(outdir / "fixed_point.csv",
                    ["init_Q", "init_R", "Q", "R", "residual", "branch", "converged", "iterations"],
                    rows, fmt)
    ]
    if with_density or st["density"]:
        fp = _selected_fixed_point(results)
        if fp.branch == "uninformative":
            # exact boundary solution: zero overlap, r = tau^2/2, Laplace law
            q_eval, r_eval = 0.0, 0.5 * steady_cfg.tau ** 2
        else:
            q_eval, r_eval = fp.q, fp.r
        grid = cfgmod.build_grid(cfg, prior)
        centers = grid.centers
        density_rows = []
        for atom in prior.atom_values:
            dens = steady_density(atom, q_eval, r_eval, steady_cfg)(centers)
            density_rows.extend((atom, x, d) for x, d in zip(centers, dens))
        files.append(write_table(outdir / "steady_density.csv",
                                 ["xi_atom", "x", "density"], density_rows, fmt))
    return files


def _sweep_chunk(args):
    steady_cfg, prior, chunk, starts, damping, tol, max_iter = args
    return sweep_omega(steady_cfg, prior, chunk, starts=starts, damping=damping,
                       tol=tol, max_iter=max_iter).points


def cmd_sweep(cfg: dict, outdir: Path, fmt: str, threads: int) -> tuple[list[Path], dict]:
    prior = cfgmod.build_discrete_prior(cfg)
    steady_cfg = cfgmod.build_steady_config(cfg)
    sw = cfg["sweep"]
    omega_grid = np.linspace(float(sw["omega_min"]), float(sw["omega_max"]), int(sw["n_points"]))
    starts = tuple(float(v) for v in sw["starts"])
    damping, tol, max_iter = float(sw["damping"]), float(sw["tol"]), int(sw["max_iter"])

    if threads > 1:
        chunks = np.array_split(omega_grid, min(threads, len(omega_grid)))
        jobs = [(steady_cfg, prior, chunk, starts, damping, tol, max_iter)
                for chunk in chunks if len(chunk)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            points = [pt for part in pool.map(_sweep_chunk, jobs) for pt in part]
        omega_c = None
        for pt in points:
            if pt.converged and pt.q_star > 1e-3:
                omega_c = pt.omega
                break
    else:
        result = sweep_omega(steady_cfg, prior, omega_grid, starts=starts,
                             damping=damping, tol=tol, max_iter=max_iter)
        points, omega_c = result.points, result.omega_c

    rows = [
        (pt.omega, pt.q_star, pt.converged, pt.branch,
         ";".join(format(v, ".9g") for v in pt.distinct_q))
        for pt in points
    ]
    path = write_table(outdir / "sweep.csv",
                       ["omega", "Q_star", "converged", "branch", "distinct_Q"], rows, fmt)
    return [path], {"omega_c": omega_c}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oistlab",
        description="Online sparse PCA laboratory: simulation, scaling limit, steady states.",
    )
    parser.add_argument("--version", action="version", version=f"oistlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--output", type=str, default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override simulation seed")
        p.add_argument("--threads", type=int, default=1, help="worker process cap")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="output table format")

    common(sub.add_parser("simulate", help="run Monte Carlo replicas of the online estimator"))
    common(sub.add_parser("pde", help="solve the deterministic scaling limit"))
    p_oja = sub.add_parser("oja-theory", help="closed-form overlap curve for plain Oja")
    common(p_oja)
    p_oja.add_argument("--q0", type=float, default=None, help="override the initial overlap")
    p_steady = sub.add_parser("steady", help="solve the stationary fixed-point system")
    common(p_steady)
    p_steady.add_argument("--density", action="store_true",
                          help="also emit the stationary conditional densities")
    common(sub.add_parser("sweep", help="fixed points across an SNR grid (phase transition)"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = time.time()
    try:
        cfg = cfgmod.load_config(args.config)
        if args.seed is not None:
            cfg["simulation"]["seed"] = args.seed
        if args.output is not None:
            cfg["output"]["directory"] = args.output
        if args.format is not None:
            cfg["output"]["format"] = args.format
        cfgmod.validate_config(cfg)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")

        outdir = Path(cfg["output"]["directory"])
        outdir.mkdir(parents=True, exist_ok=True)
        fmt = cfg["output"]["format"]
        extras: dict = {}

        if args.command == "simulate":
            files = cmd_simulate(cfg, outdir, fmt, args.threads)
        elif args.command == "pde":
            files = cmd_pde(cfg, outdir, fmt, args.threads)
        elif args.command == "oja-theory":
            files = cmd_oja_theory(cfg, outdir, fmt, args.q0)
        elif args.command == "steady":
            files = cmd_steady(cfg, outdir, fmt, args.density)
        else:
            files, extras = cmd_sweep(cfg, outdir, fmt, args.threads)

        files.append(write_manifest(outdir, args.command, cfg, started, extras))
        for path in files:
            print(path)
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
