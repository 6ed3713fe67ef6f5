"""``holstein-ec`` command line: solve-segment, stitch, sweep, oracle."""
from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .hamiltonian import SegmentSpec, strong_coupling_energy
from .oracle import exact_ground
from .results import (ResultRow, csv_header, format_row, load_reference_table,
                      lookup_reference, read_rows)
from .solver import ConvergenceError
from .stitching import SolverConfig, StitchingError, ec_ground_energy, solve_segment
from .vqe import OptimizerConfig, VqeSettings, ec_vqe_ground_energy, vqe_segment_state

log = logging.getLogger("holstein_ec")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_SWEEP = 0, 1, 2, 3


def _solver_config(cfg: RunConfig) -> SolverConfig:
    m = cfg.method
    return SolverConfig(tol=m.tol, max_iter=m.max_iter, krylov_dim=m.krylov_dim, seed=m.seed,
                        s_cutoff=m.s_cutoff)


def _vqe_settings(cfg: RunConfig) -> VqeSettings:
    m = cfg.method
    return VqeSettings(depth=m.depth, reduced=m.reduced_ansatz,
                       optimizer=OptimizerConfig(method=m.optimizer, restarts=m.restarts,
                                                 max_evaluations=m.max_evaluations))


def _base_row(cfg: RunConfig, **values) -> dict:
    model, m = cfg.model, cfg.method
    row = dict(ns=model.num_sites, nk=m.segment_size, np=model.phonon_levels,
               omega=float(model.omega), t=float(model.t), eps=float(model.eps),
               g=model.resolved_g(), lam=model.resolved_lambda(), method=m.name,
               overlaps=m.overlaps, k=None, retained_rank=None, dk=None, n_qubits=None,
               energy=None, seed=m.seed)
    row.update(values)
    return row


def _reference(cfg: RunConfig, lam: float) -> float | None:
    ref = cfg.output.reference
    if not ref:
        return None
    if ref == "strong-coupling":
        if lam <= 0:
            return None
        return strong_coupling_energy(cfg.model.eps, cfg.model.t, cfg.model.omega, lam)
    return lookup_reference(load_reference_table(ref), lam)


def _finish(cfg: RunConfig, start: float, **values) -> ResultRow:
    row = ResultRow(**_base_row(cfg, **values), wall_time_seconds=time.perf_counter() - start)
    return row.with_reference(_reference(cfg, row.lam))


def cmd_solve_segment(cfg: RunConfig) -> ResultRow:
    cfg.validate()
    start = time.perf_counter()
    lattice = cfg.model.lattice()
    size = cfg.method.segment_size
    SegmentSpec(0, size).check_within(lattice.num_sites)
    dk = size * lattice.phonon_levels**size
    if cfg.method.name == "ec-vqe":
        vec, outcome, _, n = vqe_segment_state(lattice, size, _vqe_settings(cfg), cfg.method.seed)
        return _finish(cfg, start, k=1, retained_rank=1, dk=dk, n_qubits=n, energy=outcome.energy)
    res = solve_segment(lattice, size, _solver_config(cfg))
    return _finish(cfg, start, k=1, retained_rank=1, dk=dk, energy=res.energy)


def cmd_oracle(cfg: RunConfig) -> ResultRow:
    cfg = replace(cfg, method=replace(cfg.method, name="oracle"))
    cfg.validate()
    start = time.perf_counter()
    lattice = cfg.model.lattice()
    res = exact_ground(lattice, tol=cfg.method.tol, seed=cfg.method.seed)
    return _finish(cfg, start, nk=lattice.num_sites, overlaps=False,
                   dk=lattice.num_sites * lattice.phonon_levels**lattice.num_sites,
                   energy=res.energy)


def cmd_stitch(cfg: RunConfig) -> ResultRow:
    cfg.validate()
    if cfg.method.name == "oracle":
        return cmd_oracle(cfg)
    start = time.perf_counter()
    lattice = cfg.model.lattice()
    m = cfg.method
    if m.name == "ec-vqe":
        run = ec_vqe_ground_energy(lattice, m.segment_size, m.overlaps, _vqe_settings(cfg),
                                   _solver_config(cfg), m.seed)
        n_qubits = run.extra["n_qubits"]
        leak = max(run.extra["leakage"].values())
        if leak > 1e-3:
            log.warning("VQE leakage into padded states %.2e exceeds 1e-3", leak)
    else:
        run = ec_ground_energy(lattice, m.segment_size, m.overlaps, _solver_config(cfg))
        n_qubits = None
    return _finish(cfg, start, k=run.k, retained_rank=run.retained_rank,
                   dk=run.segment_dimension, n_qubits=n_qubits, energy=run.energy)


def _run_point(cfg: RunConfig) -> ResultRow:
    try:
        return cmd_stitch(cfg)
    except (ConvergenceError, StitchingError, ValueError, ArithmeticError) as exc:
        log.error("sweep point failed: %s", exc)
        return ResultRow(**_base_row(cfg), error=f"{type(exc).__name__}: {exc}")


def cmd_sweep(cfg: RunConfig) -> list[ResultRow]:
    """Evaluate every grid point in order, appending rows to the output as they finish.

    Rows already present in the output file are kept and their points skipped.
    """
    points = cfg.grid()
    if not cfg.sweep.phonon_levels and not cfg.sweep.lam and not cfg.sweep.g:
        raise ConfigError("sweep needs at least one list under 'sweep' "
                          "(phonon_levels, lambda or g)")
    for point in points:
        point.validate()
    fmt, path = cfg.output.format, cfg.output.path
    done: dict[tuple, ResultRow] = {}
    if path and Path(path).exists() and Path(path).stat().st_size:
        for row in read_rows(path, fmt):
            if row.energy is not None:
                done[row.key()] = row
        # rewrite so failed or stale rows are dropped and order stays canonical
    keys = [ResultRow(**_base_row(p)).key() for p in points]
    todo = [p for p, key in zip(points, keys) if key not in done]

    handle = None
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        handle = open(path, "w")
        if fmt == "csv":
            handle.write(csv_header())
    rows: list[ResultRow] = []
    try:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            fresh = iter(pool.map(_run_point, todo))
            for key in keys:
                row = done[key] if key in done else next(fresh)
                rows.append(row)
                if handle:
                    handle.write(format_row(row, fmt))
                    handle.flush()
    finally:
        if handle:
            handle.close()
    return rows


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML file with model/method/sweep/output blocks")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", help="output file")
    common.add_argument("--format", choices=("csv", "jsonl"))
    common.add_argument("--overlaps", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--method", choices=("ec-exact", "ec-vqe", "oracle"))
    common.add_argument("--reference",
                        help="'strong-coupling' or a two-column (lambda, energy) file")
    model = common.add_argument_group("model")
    model.add_argument("--ns", type=int, help="lattice sites")
    model.add_argument("--np", type=int, help="oscillator levels per site")
    model.add_argument("--omega", type=float)
    model.add_argument("--t", type=float)
    model.add_argument("--eps", type=float)
    model.add_argument("--g", type=float)
    model.add_argument("--lambda", dest="lam", type=float)
    method = common.add_argument_group("method")
    method.add_argument("--nk", type=int, help="segment size")
    method.add_argument("--s-cutoff", type=float)
    method.add_argument("--tol", type=float)
    method.add_argument("--max-iter", type=int)
    method.add_argument("--depth", type=int, help="ansatz depth p")
    method.add_argument("--final-layer-only", "--reduced-ansatz", dest="reduced_ansatz",
                        action=argparse.BooleanOptionalAction, default=None,
                        help="drop the leading rotation layer: n*p angles instead of n*(p+1)")
    method.add_argument("--optimizer", choices=("nelder-mead", "parameter-shift", "none"))
    method.add_argument("--restarts", type=int)
    method.add_argument("--max-evaluations", type=int)
    sweep = common.add_argument_group("sweep")
    sweep.add_argument("--np-list", type=_int_list)
    sweep.add_argument("--lambda-list", type=_float_list)
    sweep.add_argument("--g-list", type=_float_list)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="holstein-ec",
                                     description="Holstein polaron lattice stitching")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve-segment", parents=[common], help="ground state of one segment")
    sub.add_parser("stitch", parents=[common], help="stitched lattice ground state")
    sub.add_parser("sweep", parents=[common], help="grid over phonon levels and coupling")
    sub.add_parser("oracle", parents=[common], help="exact diagonalization of the full lattice")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(args.config)
    model, method = cfg.model, cfg.method
    for flag, attr in (("ns", "num_sites"), ("np", "phonon_levels"), ("omega", "omega"),
                       ("t", "t"), ("eps", "eps")):
        if getattr(args, flag) is not None:
            setattr(model, attr, getattr(args, flag))
    if args.g is not None and args.lam is not None:
        raise ConfigError("give either --g or --lambda, not both")
    if args.g is not None:
        model.g, model.lam = args.g, None
    if args.lam is not None:
        model.lam, model.g = args.lam, None
    for flag, attr in (("method", "name"), ("nk", "segment_size"), ("overlaps", "overlaps"),
                       ("s_cutoff", "s_cutoff"), ("tol", "tol"), ("max_iter", "max_iter"),
                       ("depth", "depth"), ("reduced_ansatz", "reduced_ansatz"),
                       ("optimizer", "optimizer"), ("restarts", "restarts"),
                       ("max_evaluations", "max_evaluations"), ("seed", "seed")):
        if getattr(args, flag) is not None:
            setattr(method, attr, getattr(args, flag))
    if args.np_list is not None:
        cfg.sweep.phonon_levels = args.np_list
    if args.lambda_list is not None:
        cfg.sweep.lam, cfg.sweep.g = args.lambda_list, []
    if args.g_list is not None:
        cfg.sweep.g, cfg.sweep.lam = args.g_list, []
    if args.out is not None:
        cfg.output.path = args.out
    if args.format is not None:
        cfg.output.format = args.format
    if args.reference is not None:
        cfg.output.reference = args.reference
    if args.threads is not None:
        cfg.threads = args.threads
    return cfg


def _emit(rows: list[ResultRow], cfg: RunConfig, write_file: bool) -> None:
    fmt = cfg.output.format
    text = (csv_header() if fmt == "csv" else "") + "".join(format_row(r, fmt) for r in rows)
    sys.stdout.write(text)
    if write_file and cfg.output.path:
        Path(cfg.output.path).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.output.path).write_text(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = config_from_args(args)
        if args.command == "sweep":
            rows = cmd_sweep(cfg)
            _emit(rows, cfg, write_file=False)
            return EXIT_SWEEP if any(r.error for r in rows) else EXIT_OK
        command = {"solve-segment": cmd_solve_segment, "stitch": cmd_stitch,
                   "oracle": cmd_oracle}[args.command]
        _emit([command(cfg)], cfg, write_file=True)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (StitchingError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
