"""Command-line surface: config in, CSV + figures + manifest out.

Subcommands: transform-check, linear-decay, solve, lifespan-sweep,
bounds.  Flags --config/--out/--seed/--threads (env overrides
LIEWAVE_CONFIG/OUT/SEED/THREADS, and LIEWAVE_PLOTS for --plots).

Exit codes: 0 success, 1 assertion/tolerance failure, 2 config error,
3 resource limit.  CSV bodies are byte-identical across runs with the
same (command, config, seed): RFC-4180 CRLF rows, '.' decimals, 17
significant digits.  One master seed expands to per-task seeds by a
splitmix64 derivation, so sweep members are individually reproducible.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import blowup as bl
from . import semilinear as sl
from .config import AppConfig, ConfigError, load_config, parse_transform_cases
from .harmonics import (
    GridField,
    ResourceLimitError,
    build_grid,
    enumerate_irreps,
    forward,
    irrep_table,
    random_real_field,
    representation_matrices,
)
from .propagator import decay_report, partition_dual

__all__ = ["main", "ToleranceFailure", "derive_seed"]

_MASK64 = (1 << 64) - 1


class ToleranceFailure(RuntimeError):
    """A configured numerical assertion did not hold."""


def derive_seed(seed: int, index: int) -> int:
    """splitmix64 stream: independent per-task seeds from one master seed."""
    z = (seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_kv(path: Path, pairs: list[tuple[str, object]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in pairs:
            fh.write(f"{key} = {_fmt(value)}\n")


def _write_manifest(out_dir: Path, command: str, seed: int, cfg: AppConfig,
                    outputs: list[Path], wall: float) -> None:
    lines = [("command", command), ("seed", seed), ("wall_time", wall)]
    lines += [("output", str(p.name)) for p in outputs]
    lines += [("config." + text.split(" = ")[0], text.split(" = ", 1)[1]) for text in cfg.echo()]
    _write_kv(out_dir / "manifest.txt", lines)


# ---------------------------------------------------------------------------
# transform-check


def _unitarity_error(spec, grid) -> float:
    worst = 0.0
    for r in irrep_table(spec).irreps:
        D = representation_matrices(spec.kind, r, grid.points, grid.axes)
        gram = np.einsum("pij,pkj->pik", D, D.conj())
        worst = max(worst, float(np.abs(gram - np.eye(r.dim)).max()))
    return worst


def _exactness_error(spec, grid) -> float:
    """Quadrature of single matrix entries up to band 2B vs the exact Haar values."""
    from .harmonics import _unchecked_spec

    double = _unchecked_spec(spec.kind, 2 * spec.bandwidth, n=spec.n, oversampling=1.0)
    worst = 0.0
    for r in irrep_table(double).irreps:
        D = representation_matrices(spec.kind, r, grid.points, grid.axes)
        integ = np.einsum("p,pij->ij", grid.weights, D)
        if r.is_trivial:
            integ = integ - 1.0
        worst = max(worst, float(np.abs(integ).max()))
    return worst


def _schur_error(spec, grid) -> float:
    """Spot check: a lowest-mode character transforms to its exact coefficients."""
    table = irrep_table(spec)
    if spec.kind == "su2":
        r = table.irrep(0.5)
        D = representation_matrices("su2", r, grid.points, grid.axes)
        chi = np.trace(D, axis1=1, axis2=2)
        F = forward(GridField(grid, chi))
        err = float(np.abs(F.matrix(0.5) - np.eye(2) / 2.0).max())
        rest = F.coeffs.copy()
        rest[table.slot(0.5)] = 0.0
        return max(err, float(np.abs(rest).max()))
    k = tuple([1] + [0] * (spec.n - 1))
    f = np.cos(grid.points[:, 0]).astype(complex)
    F = forward(GridField(grid, f))
    err = max(
        float(abs(F.matrix(k)[0, 0] - 0.5)),
        float(abs(F.matrix(tuple(-v for v in k))[0, 0] - 0.5)),
    )
    rest = F.coeffs.copy()
    rest[table.slot(k)] = 0.0
    rest[table.slot(tuple(-v for v in k))] = 0.0
    return max(err, float(np.abs(rest).max()))


def cmd_transform_check(cfg: AppConfig, out_dir: Path) -> list[Path]:
    section = cfg["transform-check"]
    tol = section["tolerance"]
    outputs = []
    report_lines: list[tuple[str, object]] = []
    failures = []
    for idx, (name, spec) in enumerate(parse_transform_cases(cfg)):
        grid = build_grid(spec, max_points=cfg["group"]["max_grid_points"])
        rng = np.random.default_rng(derive_seed(cfg.seed, idx))
        coeffs = rng.standard_normal(irrep_table(spec).n_entries) * (1 + 0j)
        coeffs += 1j * rng.standard_normal(coeffs.shape[0])
        f_vals = grid.synthesis @ coeffs
        round_trip = float(np.abs(grid.analysis @ f_vals - coeffs).max())
        plancherel = abs(
            float(np.sum(irrep_table(spec).entry_dim * np.abs(coeffs) ** 2))
            - float(np.dot(grid.weights, np.abs(f_vals) ** 2))
        )
        checks = {
            "weight_sum": abs(float(grid.weights.sum()) - 1.0),
            "unitarity": _unitarity_error(spec, grid),
            "round_trip": round_trip,
            "plancherel": plancherel,
            "schur": _schur_error(spec, grid),
            "exactness": _exactness_error(spec, grid),
        }
        for check, err in checks.items():
            report_lines.append((f"{name}.{check}", err))
            if err > tol:
                failures.append(f"{name}.{check} = {err:.3e} > {tol:g}")
        table_path = out_dir / f"irreps_{name}.csv"
        rows = []
        for r in enumerate_irreps(spec):
            label = " ".join(str(v) for v in r.label) if spec.kind == "torus" else _fmt(float(r.label))
            rows.append((label, r.dim, r.eigenvalue))
        write_csv(table_path, ["label", "dim", "eigenvalue"], rows)
        outputs.append(table_path)
        grid_path = out_dir / f"grid_{name}.csv"
        coord_names = [f"x{i}" for i in range(grid.points.shape[1])]
        write_csv(grid_path, coord_names + ["weight"],
                  (tuple(pt) + (w,) for pt, w in zip(grid.points, grid.weights)))
        outputs.append(grid_path)

    report = out_dir / "report.txt"
    _write_kv(report, report_lines + [("tolerance", tol), ("status", "fail" if failures else "ok")])
    outputs.append(report)
    for line in report_lines:
        print(f"{line[0]}: {_fmt(line[1])}")
    if failures:
        raise ToleranceFailure("; ".join(failures))
    return outputs


# ---------------------------------------------------------------------------
# linear-decay


def cmd_linear_decay(cfg: AppConfig, out_dir: Path) -> list[Path]:
    section = cfg["linear-decay"]
    spec = cfg.group_spec(bandwidth=section["band"], oversampling=1.0)
    times = np.geomspace(section["t_min"], section["t_max"], section["points"])
    fine = np.geomspace(section["t_min"], section["t_max"], 2 * section["points"])
    slack = section["recheck_slack"]

    reports = []
    for i in range(section["count"]):
        rng = np.random.default_rng(derive_seed(cfg.seed, i))
        u0 = random_real_field(spec, rng)
        u1 = random_real_field(spec, rng)
        rep = decay_report(u0, u1, times)
        reports.append(rep)
        refit = decay_report(u0, u1, fine)
        c1, c2, c3 = rep.bound_constants
        d = rep.data_norm
        bad = (
            np.any(refit.l2_u > slack * c1 * d)
            or np.any(refit.hdot1_u * np.sqrt(1 + fine) > slack * c2 * d)
            or np.any(refit.l2_ut * (1 + fine) > slack * c3 * d)
        )
        if bad:
            raise ToleranceFailure(f"decay envelope recheck failed for dataset {i}")

    rep0 = reports[0]
    env = rep0.envelopes()
    csv_path = out_dir / "decay.csv"
    write_csv(
        csv_path,
        ["t", "l2_u", "hdot1_u", "l2_ut", "bound1", "bound2", "bound3"],
        zip(rep0.times, rep0.l2_u, rep0.hdot1_u, rep0.l2_ut, *env),
    )
    d1, d2 = partition_dual(enumerate_irreps(spec), cfg["group"]["dual_threshold"])
    fit_path = out_dir / "fit.txt"
    pairs: list[tuple[str, object]] = [("datasets", section["count"]),
                                       ("low_modes", len(d1)), ("high_modes", len(d2))]
    for i, rep in enumerate(reports):
        c1, c2, c3 = rep.bound_constants
        pairs += [(f"dataset{i}.C1", c1), (f"dataset{i}.C2", c2), (f"dataset{i}.C3", c3)]
    _write_kv(fit_path, pairs)
    outputs = [csv_path, fit_path]
    if cfg.plots:
        from .plotting import save_decay_figure

        fig_path = out_dir / "decay.png"
        save_decay_figure(rep0, fig_path)
        outputs.append(fig_path)
    print(f"fitted constants (dataset 0): C1={rep0.bound_constants[0]:.4g} "
          f"C2={rep0.bound_constants[1]:.4g} C3={rep0.bound_constants[2]:.4g}")
    return outputs


# ---------------------------------------------------------------------------
# solve


def _solve_config(cfg: AppConfig, t_max: float | None = None) -> sl.SolveConfig:
    s = cfg["solve"]
    try:
        return sl.SolveConfig(
            spec=cfg.group_spec(),
            p=s["p"],
            epsilon=s["epsilon"],
            u0=s["u0"],
            u1=s["u1"],
            dt=s["dt"],
            t_max=t_max if t_max is not None else s["t_max"],
            blowup_threshold=s["blowup_threshold"],
            seed=derive_seed(cfg.seed, 0),
            record_every=s["record_every"],
            record_source=s["record_source"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _trajectory_rows(traj: sl.Trajectory):
    return zip(traj.times, traj.U0_values, traj.l2_u, traj.hdot1_u, traj.l2_ut)


def cmd_solve(cfg: AppConfig, out_dir: Path) -> list[Path]:
    run_cfg = _solve_config(cfg)
    traj = sl.solve(run_cfg)
    csv_path = out_dir / "trajectory.csv"
    write_csv(csv_path, ["t", "U0", "l2_u", "hdot1_u", "l2_ut"], _trajectory_rows(traj))
    meta_path = out_dir / "run.txt"
    _write_kv(meta_path, [
        ("blew_up", traj.blew_up),
        ("T_num", traj.T_num if traj.T_num is not None else "none"),
        ("records", traj.times.size),
        ("final_t", traj.times[-1]),
        ("final_l2", traj.l2_u[-1]),
    ] + [tuple(line.split(" = ", 1)) for line in cfg.echo()])
    outputs = [csv_path, meta_path]
    if cfg.plots:
        from .plotting import save_trajectory_figure

        fig_path = out_dir / "trajectory.png"
        save_trajectory_figure(traj, fig_path)
        outputs.append(fig_path)
    print(f"blew_up={traj.blew_up} T_num={traj.T_num}")
    return outputs


# ---------------------------------------------------------------------------
# lifespan-sweep


def cmd_lifespan_sweep(cfg: AppConfig, out_dir: Path) -> list[Path]:
    section = cfg["lifespan-sweep"]
    if section["mode"] not in ("pde", "scalar"):
        raise ConfigError(f"lifespan-sweep.mode must be pde or scalar, got {section['mode']!r}")
    if section["count"] < 4:
        raise ConfigError("lifespan-sweep.count must be at least 4")
    base = _solve_config(cfg, t_max=section["t_max"])
    eps_grid = np.geomspace(section["eps_min"], section["eps_max"], section["count"])
    result = bl.lifespan_sweep(base, eps_grid, mode=section["mode"], threads=cfg.threads)

    csv_path = out_dir / "sweep.csv"
    write_csv(
        csv_path,
        ["epsilon", "T_num", "bound", "compensated"],
        ((r.epsilon, r.T_num, r.bound, r.T_num * r.epsilon ** (base.p - 1.0)) for r in result.records),
    )
    expected = -(base.p - 1.0)
    tolerance = section["slope_tolerance"]
    within = abs(result.slope - expected) <= tolerance * abs(expected)
    fit_path = out_dir / "fit.txt"
    _write_kv(fit_path, [
        ("mode", section["mode"]),
        ("slope", result.slope),
        ("slope_ci_low", result.slope_ci[0]),
        ("slope_ci_high", result.slope_ci[1]),
        ("expected", expected),
        ("tolerance", tolerance),
        ("within_tolerance", within),
        ("compensated_max", result.compensated_max),
        ("compensated_min", result.compensated_min),
        ("compensated_ratio", result.compensated_ratio),
        ("failed_epsilons", ",".join(_fmt(e) for e in result.failed) or "none"),
    ])
    outputs = [csv_path, fit_path]
    if cfg.plots:
        from .plotting import save_sweep_figure

        fig_path = out_dir / "lifespan.png"
        save_sweep_figure(result, fig_path)
        outputs.append(fig_path)
    print(f"slope={result.slope:.4f} expected={expected} within={within}")
    if not within:
        raise ToleranceFailure(
            f"fitted slope {result.slope:.4f} outside {expected} +- {tolerance * abs(expected):.3f}"
        )
    return outputs


# ---------------------------------------------------------------------------
# bounds


def _read_trajectory_csv(path: Path) -> sl.Trajectory:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if "t" not in header or "U0" not in header:
            raise ConfigError(f"trajectory CSV {path} lacks t/U0 columns")
        it, iu = header.index("t"), header.index("U0")
        t, u0 = [], []
        for row in reader:
            t.append(float(row[it]))
            u0.append(float(row[iu]))
    arr = np.array(t)
    nan = np.full(arr.size, math.nan)
    return sl.Trajectory(times=arr, U0_values=np.array(u0), du0_values=nan,
                         source_means=nan, l2_u=nan, hdot1_u=nan, l2_ut=nan,
                         blew_up=False, T_num=None)


def cmd_bounds(cfg: AppConfig, out_dir: Path) -> list[Path]:
    section = cfg["bounds"]
    s = cfg["solve"]
    p, epsilon = s["p"], s["epsilon"]
    c_data = section["c_data"]
    if c_data <= 0.0:
        data0 = sl.preset_field(cfg.group_spec(), str(s["u0"]), derive_seed(cfg.seed, 0))
        c_data = sl.mean_functional(data0)
    if c_data <= 0.0:
        raise ConfigError("bounds needs positive c_data (or a positive-mean u0 preset)")
    try:
        seqs = bl.build_sequences(p, c_data, epsilon, J=section["depth"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    csv_path = out_dir / "sequences.csv"
    L = seqs.L_partial
    write_csv(
        csv_path,
        ["j", "gamma_j", "ell_j", "L_j", "log_C_j"],
        ((j, seqs.gamma[j], seqs.ell[j], L[min(j, L.size - 1)], seqs.log_C[j])
         for j in range(seqs.J + 1)),
    )
    const_path = out_dir / "constants.txt"
    _write_kv(const_path, [
        ("p", p), ("epsilon", epsilon), ("C_data", c_data), ("C0", seqs.C0),
        ("K", seqs.K), ("M", seqs.M), ("E0", seqs.E0), ("E1", seqs.E1),
        ("epsilon0", seqs.epsilon0), ("j0", seqs.j0), ("L_limit", seqs.L_limit),
        ("lifespan_bound", (seqs.E1 * epsilon) ** (-(p - 1.0)) if epsilon > 0 else "inf"),
    ])
    outputs = [csv_path, const_path]

    traj = None
    if section["trajectory"]:
        traj = _read_trajectory_csv(Path(section["trajectory"]))
        report = bl.verify_lower_bounds(traj, seqs, min(section["jmax"], seqs.J))
        verify_path = out_dir / "verify.txt"
        pairs: list[tuple[str, object]] = []
        for j, slack, ok in zip(report.js, report.min_slack, report.passed):
            pairs.append((f"j{j}.min_slack", slack))
            pairs.append((f"j{j}.passed", ok))
        if report.warning:
            pairs.append(("warning", report.warning))
        _write_kv(verify_path, pairs)
        outputs.append(verify_path)
        if not all(report.passed):
            raise ToleranceFailure("lower-bound verification failed; see verify.txt")
    if cfg.plots:
        from .plotting import save_bounds_figure

        fig_path = out_dir / "bounds.png"
        save_bounds_figure(seqs, fig_path, traj=traj, jmax=section["jmax"])
        outputs.append(fig_path)
    return outputs


# ---------------------------------------------------------------------------
# driver

_COMMANDS = {
    "transform-check": cmd_transform_check,
    "linear-decay": cmd_linear_decay,
    "solve": cmd_solve,
    "lifespan-sweep": cmd_lifespan_sweep,
    "bounds": cmd_bounds,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liewave",
        description="Spectral damped-wave simulation and blow-up analysis on compact groups.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="path to INI config (env LIEWAVE_CONFIG)")
        p.add_argument("--out", help="output directory (env LIEWAVE_OUT)")
        p.add_argument("--seed", type=int, help="master seed (env LIEWAVE_SEED)")
        p.add_argument("--threads", type=int, help="sweep parallelism (env LIEWAVE_THREADS)")
        p.add_argument("--plots", action=argparse.BooleanOptionalAction, default=None,
                       help="render figures next to CSV outputs (env LIEWAVE_PLOTS)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    start = time.monotonic()
    try:
        config_path = args.config or os.environ.get("LIEWAVE_CONFIG")
        cfg = load_config(config_path)
        if args.seed is not None:
            cfg["run"]["seed"] = args.seed
        elif os.environ.get("LIEWAVE_SEED"):
            cfg["run"]["seed"] = int(os.environ["LIEWAVE_SEED"])
        if args.threads is not None:
            cfg["run"]["threads"] = args.threads
        elif os.environ.get("LIEWAVE_THREADS"):
            cfg["run"]["threads"] = int(os.environ["LIEWAVE_THREADS"])
        if args.plots is not None:
            cfg["run"]["plots"] = args.plots
        elif os.environ.get("LIEWAVE_PLOTS"):
            cfg["run"]["plots"] = os.environ["LIEWAVE_PLOTS"].lower() in ("1", "true", "yes", "on")
        out_dir = Path(args.out or os.environ.get("LIEWAVE_OUT") or "liewave-out")
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = _COMMANDS[args.command](cfg, out_dir)
        _write_manifest(out_dir, args.command, cfg.seed, cfg, outputs, time.monotonic() - start)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return 3
    except ToleranceFailure as exc:
        print(f"tolerance failure: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
