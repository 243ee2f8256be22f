"""
Command-line front end of the beta-plane laboratory

Each subcommand runs one experiment from a key=value config and writes its artifacts into
<out>/<run_id>/ next to an index.json of hashes. The JSON summary also goes to stdout.
"""

import argparse
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from analysis import (
    asymptotic_deficit,
    boundary_mass,
    branch_window,
    decay_series,
    dispersive_scan,
    fit_decay,
    is_nonincreasing,
    spectral_tail_fraction,
    strichartz_quadrature,
    validity_window,
)
from config import (
    ADMISSIBLE_JSON,
    DECAY_CSV,
    DECAY_JSON,
    DEFICIT_CSV,
    DISPERSIVE_CSV,
    DISPERSIVE_GUARD_FACTOR,
    ENERGY_JSON,
    EXIT_ANALYSIS_ERROR,
    EXIT_BLOW_UP,
    EXIT_CONFIG_ERROR,
    EXIT_SUCCESS,
    LOG_LEVEL,
    NORMS_CSV,
    PICARD_JSON,
    RUN_LOG,
    STRICHARTZ_JSON,
    STRICHARTZ_MIN_SPAN,
    SUMMARY_JSON,
)
from evolution import Trajectory, energy_check, evolve, linear_trajectory, picard_solve
from exceptions import (
    AnalysisPreconditionError,
    BetaPlaneError,
    BlowUpError,
    ConfigError,
    DomainError,
    NonContractiveError,
)
from exponents import (
    MAX_DELTA,
    ExponentTuple,
    RatePrediction,
    canonical_family,
    check_admissible,
    check_strichartz_admissible,
    smallness_value,
)
from initial_data import build_initial_data
from logger_config import add_file_handler, setup_logging
from run_config import RunConfig, load_run_config
from run_store import RunStore, to_jsonable
from spectral_core import LPBank, RealField, set_fft_workers

logger = logging.getLogger(__name__)

RUN_COMMANDS = ("simulate", "decay", "asymptotics", "strichartz", "dispersive", "picard", "energy")


def norm_label(s: float, a: float) -> str:
    return f"norm_s{s:g}_a{'inf' if math.isinf(a) else f'{a:g}'}"


# ---------------------------------------------------------------------------
# Shared steps
# ---------------------------------------------------------------------------


def _initial(cfg: RunConfig) -> RealField:
    return build_initial_data(cfg.grid, cfg.initial)


def _trajectory(
    cfg: RunConfig, omega0: RealField, norms: Sequence[Tuple[float, float]] = ()
) -> Trajectory:
    if cfg.linear_only:
        return linear_trajectory(omega0, cfg.evolve_config, norms)
    return evolve(omega0, cfg.evolve_config, norms)


def _require_horizon(cfg: RunConfig, times: Sequence[float], what: str) -> None:
    if not times:
        raise AnalysisPreconditionError(f"no {what} requested in the config")
    if max(times) > cfg.t_end * (1.0 + 1e-12):
        raise AnalysisPreconditionError(f"{what} extend past t_end={cfg.t_end}")


def norms_table(trajectory: Trajectory, norms: Sequence[Tuple[float, float]]) -> pd.DataFrame:
    """Saved times, the requested norms and the dissipation ||grad w||^2"""
    steps = np.rint(trajectory.times / trajectory.dt).astype(int)
    columns: Dict[str, Any] = {"t": trajectory.times}
    for s, a in norms:
        columns[norm_label(s, a)] = trajectory.norm_series[(s, a)]
    columns["dissipation"] = trajectory.dissipation_series[steps]
    return pd.DataFrame(columns)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_simulate(cfg: RunConfig, store: RunStore) -> Dict[str, Any]:
    """Evolve, checkpoint, tabulate norms and write the energy ledger"""
    omega0 = _initial(cfg)
    trajectory = _trajectory(cfg, omega0, cfg.norms)

    for t in cfg.checkpoint_times:
        store.write_checkpoint(trajectory.snapshot_at(t), t, cfg.beta)
    store.write_csv(NORMS_CSV, norms_table(trajectory, cfg.norms))

    ledger = energy_check(trajectory, cfg.energy_t_start)
    store.write_json(ENERGY_JSON, ledger)

    window = validity_window(cfg.grid)
    if cfg.t_end > window:
        logger.warning(f"t_end={cfg.t_end} exceeds the validity window L^2/16 = {window:.4g}")
    summary = {
        "run_id": store.run_id,
        "command": "simulate",
        "n": cfg.n,
        "box_length": cfg.box_length,
        "beta": cfg.beta,
        "t_end": trajectory.t_end,
        "snapshots": len(trajectory.snapshots),
        "mass": omega0.mass,
        "energy_residual": ledger.residual,
        "energy_degenerate": ledger.degenerate,
        "boundary_mass_peak": max(boundary_mass(snap).fraction for snap in trajectory.snapshots),
        "spectral_tail_peak": max(spectral_tail_fraction(snap) for snap in trajectory.snapshots),
        "validity_window": window,
        "validity_exceeded": cfg.t_end > window,
    }
    store.write_json(SUMMARY_JSON, summary)
    return summary


def cmd_decay(cfg: RunConfig, store: RunStore) -> Dict[str, Any]:
    """Fit log-log slopes of the requested norms and compare with the reference rate"""
    omega0 = _initial(cfg)
    trajectory = _trajectory(cfg, omega0, cfg.norms)

    span = (float(trajectory.times[1]), trajectory.t_end)
    window = cfg.fit_window or branch_window(cfg.beta, cfg.fit_branch, span)
    if window[0] < span[0] or window[1] > span[1] * (1.0 + 1e-12):
        raise AnalysisPreconditionError(f"fit window {window} lies outside the trajectory {span}")

    fits, frames = [], []
    for s, a in cfg.norms:
        prediction = RatePrediction(s=s, a=a, beta=cfg.beta)
        fit = fit_decay(trajectory.times, trajectory.norm_series[(s, a)], window, prediction)
        fits.append({"s": s, "a": a, "crossover_time": prediction.crossover_time, "fit": fit})
        series = decay_series(trajectory, s, a, cfg.beta)
        series.insert(0, "a", a)
        series.insert(0, "s", s)
        frames.append(series)

    store.write_csv(DECAY_CSV, pd.concat(frames, ignore_index=True))
    summary = {"run_id": store.run_id, "command": "decay", "window": window, "fits": fits}
    store.write_json(DECAY_JSON, summary)
    return summary


def cmd_asymptotics(cfg: RunConfig, store: RunStore) -> Dict[str, Any]:
    """Normalized distance to mass * K_{beta,t} at the requested times"""
    times = sorted(cfg.deficit_times)
    _require_horizon(cfg, times, "deficit times")
    omega0 = _initial(cfg)
    trajectory = _trajectory(cfg, omega0)
    mass = omega0.mass

    rows, verdicts = [], []
    for s, a in cfg.norms:
        deficits = [
            asymptotic_deficit(trajectory.snapshot_at(t), mass, cfg.beta, t, s, a) for t in times
        ]
        rows.extend({"s": s, "a": a, "t": t, "deficit": d} for t, d in zip(times, deficits))
        verdicts.append(
            {
                "s": s,
                "a": a,
                "deficits": deficits,
                "nonincreasing": is_nonincreasing(deficits),
                "last_over_first": deficits[-1] / deficits[0] if deficits[0] > 0 else 0.0,
            }
        )

    store.write_csv(DEFICIT_CSV, pd.DataFrame(rows, columns=["s", "a", "t", "deficit"]))
    summary = {
        "run_id": store.run_id,
        "command": "asymptotics",
        "mass": mass,
        "times": times,
        "series": verdicts,
    }
    store.write_json(SUMMARY_JSON, summary)
    return summary


def cmd_strichartz(cfg: RunConfig, store: RunStore) -> Dict[str, Any]:
    """Space-time norms of the linear flow for each requested (s, p, r)"""
    if not cfg.strichartz:
        raise AnalysisPreconditionError("no Strichartz triples requested in the config")
    if cfg.beta == 0:
        raise DomainError("the Strichartz estimate is vacuous for beta = 0")
    omega0 = _initial(cfg)
    t_max = cfg.strichartz_t_max or 2.0 * STRICHARTZ_MIN_SPAN * abs(cfg.beta) ** (-2.0 / 3.0)
    t_grid = np.linspace(0.0, t_max, cfg.strichartz_samples)

    results = []
    for s, p, r in cfg.strichartz:
        quad = strichartz_quadrature(omega0, cfg.beta, s, p, r, t_grid)
        results.append(
            {
                "s": s,
                "p": p,
                "r": r,
                "admissible": check_strichartz_admissible(s, p, r),
                "quadrature": quad,
            }
        )
    summary = {
        "run_id": store.run_id,
        "command": "strichartz",
        "beta": cfg.beta,
        "results": results,
    }
    store.write_json(STRICHARTZ_JSON, summary)
    return summary


def cmd_dispersive(cfg: RunConfig, store: RunStore) -> Dict[str, Any]:
    """Dispersive ratio table over LP blocks and a geometric time grid"""
    omega0 = _initial(cfg)
    lo, hi = cfg.dispersive_t_range
    t_grid = np.geomspace(lo, hi, cfg.dispersive_samples)
    bank = LPBank.build(cfg.grid)
    scan = dispersive_scan(omega0, cfg.beta, cfg.dispersive_k, t_grid, bank, cfg.oversample)
    store.write_csv(DISPERSIVE_CSV, scan.table)

    middle = math.sqrt(lo * hi)
    blocks = []
    for k in cfg.dispersive_k:
        early, late = scan.sup_over(lo, middle, k), scan.sup_over(middle, hi, k)
        blocks.append(
            {
                "k": k,
                "early_sup": early,
                "late_sup": late,
                "guard_holds": late <= DISPERSIVE_GUARD_FACTOR * early,
            }
        )
    summary = {
        "run_id": store.run_id,
        "command": "dispersive",
        "beta": cfg.beta,
        "supremum": scan.supremum,
        "split_time": middle,
        "blocks": blocks,
    }
    store.write_json(SUMMARY_JSON, summary)
    return summary


def cmd_picard(cfg: RunConfig, store: RunStore) -> Dict[str, Any]:
    """Picard iteration of the Duhamel formula; a non-contracting map is exit code 3"""
    omega0 = _initial(cfg)
    exponents = cfg.exponent_tuple
    smallness = smallness_value(omega0, cfg.beta, exponents.delta)
    if smallness > cfg.smallness_threshold:
        logger.warning(
            f"smallness value {smallness:.4g} exceeds threshold {cfg.smallness_threshold}"
        )
    report, _ = picard_solve(
        omega0,
        cfg.beta,
        exponents,
        cfg.t_end,
        cfg.picard_iterations,
        steps=cfg.picard_steps,
        dealias=cfg.dealias,
        nonlinear=not cfg.linear_only,
    )
    summary = {
        "run_id": store.run_id,
        "command": "picard",
        "smallness": smallness,
        "smallness_threshold": cfg.smallness_threshold,
        "report": report,
    }
    store.write_json(PICARD_JSON, summary)
    if report.non_contractive:
        logger.error("Picard map failed to contract")
        raise NonContractiveError(
            f"distance grew by more than the divergence factor: {report.d_distances}"
        )
    return summary


def cmd_energy(cfg: RunConfig, store: RunStore) -> Dict[str, Any]:
    """Energy identity residual on [energy_t_start, t_end]"""
    trajectory = _trajectory(cfg, _initial(cfg))
    ledger = energy_check(trajectory, cfg.energy_t_start)
    store.write_json(ENERGY_JSON, ledger)
    return {"run_id": store.run_id, "command": "energy", "ledger": ledger}


COMMANDS: Dict[str, Callable[[RunConfig, RunStore], Dict[str, Any]]] = {
    "simulate": cmd_simulate,
    "decay": cmd_decay,
    "asymptotics": cmd_asymptotics,
    "strichartz": cmd_strichartz,
    "dispersive": cmd_dispersive,
    "picard": cmd_picard,
    "energy": cmd_energy,
}


def parse_tuple(text: str) -> ExponentTuple:
    """'delta,p1,r1,p2,r2' -> ExponentTuple (range errors surface as ValidationError)"""
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != 5:
        raise ConfigError(f"expected five comma-separated exponents, got {text!r}")
    try:
        values = [float(part) for part in parts]
    except ValueError as e:
        raise ConfigError(f"exponents must be numbers: {e}") from e
    return ExponentTuple(**dict(zip(("delta", "p1", "r1", "p2", "r2"), values)))


def cmd_admissible(
    cfg: RunConfig, store: RunStore, tuple_text: Optional[str], sweep: Optional[int]
) -> Dict[str, Any]:
    """Admissibility report for one tuple, a canonical delta sweep or the config's tuple"""
    if tuple_text:
        candidates = [parse_tuple(tuple_text)]
    elif sweep:
        candidates = [canonical_family(float(d)) for d in np.linspace(0.0, MAX_DELTA, sweep)]
    else:
        candidates = [cfg.exponent_tuple]

    reports = [check_admissible(exponents) for exponents in candidates]
    summary = {
        "run_id": store.run_id,
        "command": "admissible",
        "count": len(reports),
        "all_thm1_1": all(r.thm1_1 for r in reports),
        "reports": reports,
    }
    store.write_json(ADMISSIBLE_JSON, summary)
    return summary


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value run configuration file")
    parser.add_argument("--out", help="output directory (overrides out_dir)")
    parser.add_argument("--run-id", help="run identifier (overrides run_id)")
    parser.add_argument("--linear-only", action="store_true", help="drop the transport term")
    parser.add_argument("--threads", type=int, help="FFT worker threads")
    parser.add_argument("--log-level", default=LOG_LEVEL, help="logging level")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="betaplane",
        description="Pseudo-spectral laboratory for the viscous beta-plane vorticity equation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  betaplane simulate --config samples/dipole.cfg --run-id dipole
  betaplane decay --config samples/linear_decay.cfg --linear-only
  betaplane admissible --tuple 0,3,6,3,4
  betaplane sweep samples/dipole.cfg samples/ring.cfg --workers 2
        """,
    )
    commands = parser.add_subparsers(dest="command", required=True)
    for name in RUN_COMMANDS:
        _add_common(commands.add_parser(name, help=COMMANDS[name].__doc__))

    admissible = commands.add_parser("admissible", help="check exponent tuples")
    _add_common(admissible)
    choice = admissible.add_mutually_exclusive_group()
    choice.add_argument("--tuple", help="delta,p1,r1,p2,r2")
    choice.add_argument("--delta-sweep", type=int, help="points of a canonical delta sweep")

    sweep = commands.add_parser("sweep", help="run several configs concurrently")
    sweep.add_argument("configs", nargs="+", help="config files, one run each")
    sweep.add_argument("--task", choices=RUN_COMMANDS, default="simulate")
    sweep.add_argument("--workers", type=int, default=2)
    sweep.add_argument("--out", help="output directory for every run")
    sweep.add_argument("--linear-only", action="store_true")
    sweep.add_argument("--threads", type=int)
    sweep.add_argument("--log-level", default=LOG_LEVEL)
    return parser


def _load(args: argparse.Namespace, default_run_id: Optional[str] = None) -> RunConfig:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    return cfg.with_overrides(
        out_dir=args.out,
        run_id=args.run_id or (None if args.config else default_run_id),
        linear_only=True if args.linear_only else None,
    )


def _sweep_run(argv: List[str]) -> int:
    return main(argv)


def run_sweep(args: argparse.Namespace) -> int:
    """Run each config in its own process; the worst exit code wins"""
    runs = []
    seen = {}
    for path in args.configs:
        cfg = load_run_config(path).with_overrides(out_dir=args.out)
        key = (cfg.out_dir, cfg.run_id)
        if key in seen:
            raise ConfigError(f"{path} and {seen[key]} share run id {cfg.run_id!r}")
        seen[key] = path
        argv = [args.task, "--config", path, "--log-level", args.log_level]
        if args.out:
            argv += ["--out", args.out]
        if args.linear_only:
            argv.append("--linear-only")
        if args.threads:
            argv += ["--threads", str(args.threads)]
        runs.append(argv)

    logger.info(f"Sweep: {len(runs)} runs of {args.task} on {args.workers} workers")
    with ProcessPoolExecutor(max_workers=args.workers) as pool:
        codes = list(pool.map(_sweep_run, runs))
    for argv, code in zip(runs, codes):
        logger.info(f"{argv[2]}: exit code {code}")
    return max(codes)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    handler = None
    try:
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError(f"--threads must be positive, got {args.threads}")
            set_fft_workers(args.threads)
        if args.command == "sweep":
            return run_sweep(args)

        cfg = _load(args, default_run_id=args.command)
        store = RunStore(cfg.out_dir, cfg.run_id)
        handler = add_file_handler(store.path(RUN_LOG))
        logger.info(f"Starting {args.command} run {store.run_id}")
        if args.command == "admissible":
            summary = cmd_admissible(cfg, store, args.tuple, args.delta_sweep)
        else:
            summary = COMMANDS[args.command](cfg, store)
        print(json.dumps(to_jsonable(summary), sort_keys=True))
        return EXIT_SUCCESS
    except (ConfigError, ValidationError) as e:
        logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except (BlowUpError, NonContractiveError) as e:
        logger.error(f"Numerical failure: {e}")
        return EXIT_BLOW_UP
    except BetaPlaneError as e:
        logger.error(f"Analysis failed: {e}")
        return EXIT_ANALYSIS_ERROR
    finally:
        if handler is not None:
            logging.getLogger().removeHandler(handler)
            handler.close()


if __name__ == "__main__":
    sys.exit(main())
