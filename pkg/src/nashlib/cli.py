import argparse
import glob
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import attr
import numpy as np
from vistir.contextmanagers import atomic_open_for_write

from .environment import MYPY_RUNNING
from .exceptions import (
    EXIT_OK,
    ConfigError,
    ConfigNotFound,
    EmptySchedule,
    NashlibError,
)
from .models import analysis, schedule as schedules
from .models.config import ExperimentConfig
from .models.dynamics import error_traces, simulate
from .models.game import solve_nash
from .models.project import write_json
from .utils import format_float, setup_logger, to_jsonable

if MYPY_RUNNING:
    from typing import Any, Dict, List, Optional, Sequence, Tuple


logger = logging.getLogger(__name__)

FIXTURE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "fixtures")
#: Published equilibrium values carry four decimals.
REFERENCE_TOLERANCE = 5e-4


def fixture_path(name):
    # type: (str) -> str
    path = os.path.join(FIXTURE_DIR, "%s.json" % name)
    if not os.path.exists(path):
        raise ConfigError(
            "Unknown fixture %r; available: %s" % (name, ", ".join(fixture_names()))
        )
    return path


def fixture_names():
    # type: () -> List[str]
    return sorted(
        os.path.splitext(os.path.basename(p))[0]
        for p in glob.glob(os.path.join(FIXTURE_DIR, "*.json"))
    )


def emit(payload, out=None, filename=None):
    # type: (Any, Optional[str], Optional[str]) -> None
    payload = to_jsonable(payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    if out and filename:
        write_json(os.path.join(out, filename), payload)


def _discrepancies(reference, computed):
    # type: (Dict[str, Any], Dict[str, Optional[float]]) -> List[Dict[str, Any]]
    found = []
    for key, value in sorted(computed.items()):
        published = reference.get(key)
        if published is None or value is None:
            continue
        if abs(float(published) - value) > 1e-9:
            logger.warning(
                "Published %s = %s differs from the computed value %s", key, published, value
            )
            found.append({"key": key, "published": published, "computed": value})
    return found


def cmd_solve_ne(config, out=None):
    # type: (ExperimentConfig, Optional[str]) -> int
    game = config.build_game()
    solution = solve_nash(game)
    payload = solution.as_dict()
    published = config.reference.get("x_star")
    if published is not None:
        deviation = float(np.max(np.abs(np.asarray(published) - solution.x_star)))
        if deviation > REFERENCE_TOLERANCE:
            logger.warning(
                "Computed equilibrium deviates from the published one by %.3g", deviation
            )
        payload["reference"] = {"x_star": published, "max_deviation": deviation}
    emit(payload, out, "nash.json")
    return EXIT_OK


def schedule_report(schedule, theta, mode, reference=None):
    # type: (schedules.Schedule, float, str, Optional[Dict[str, Any]]) -> Dict[str, Any]
    report = {
        "schedule": schedule.as_config(),
        "horizon": schedule.horizon,
        "acr": schedules.check_acr(schedule, theta, mode).as_dict(),
    }  # type: Dict[str, Any]
    computed = {}  # type: Dict[str, Optional[float]]
    try:
        stats = schedules.interval_stats(schedule)
        qp = schedules.quasi_periodic_stats(schedule)
    except EmptySchedule as exc:
        logger.warning("%s", exc.message)
        report.update(interval_stats=None, quasi_periodic_stats=None, max_silent_ratio=None)
    else:
        report["interval_stats"] = {
            "min": stats.min_width,
            "mean": stats.mean_width,
            "max": stats.max_width,
            "count": stats.count,
        }
        report["quasi_periodic_stats"] = {
            "inf_width": qp.inf_width,
            "sup_period": qp.sup_period,
            "period_count": qp.period_count,
        }
        report["max_silent_ratio"] = schedules.max_silent_ratio(schedule)
        computed = {
            "min_width": stats.min_width,
            "mean_width": stats.mean_width,
            "max_width": stats.max_width,
            "theta_bar": qp.inf_width,
            "T_bar": qp.sup_period,
        }
    if reference:
        report["discrepancies"] = _discrepancies(reference, computed)
    return report


def cmd_check_schedule(config, theta=None, mode=None, out=None):
    # type: (ExperimentConfig, Optional[float], Optional[str], Optional[str]) -> int
    schedule = config.build_schedule()
    settings = config.analysis
    theta = theta if theta is not None else settings.get("vartheta", settings["theta"])
    mode = mode or settings["mode"]
    reference = {
        k: v for k, v in config.reference.items() if k not in ("x_star", "note")
    }
    emit(schedule_report(schedule, theta, mode, reference), out, "schedule.json")
    return EXIT_OK


def condition_reports(constants, schedule, settings):
    # type: (analysis.TheoremConstants, schedules.Schedule, Dict[str, Any]) -> List[analysis.ConditionReport]
    """Evaluate every applicable condition for ``schedule``."""
    reports = []
    theta_tilde = schedule.ratio if schedule.ratio is not None else settings.get("theta_tilde")
    if theta_tilde is not None:
        reports.append(analysis.check_pic(constants, theta_tilde))
    if len(schedule):
        qp = schedules.quasi_periodic_stats(schedule)
        if qp.sup_period is not None and qp.inf_width < qp.sup_period:
            reports.append(analysis.check_aic(constants, qp.inf_width, qp.sup_period))
        zeta = settings.get("zeta_bar", schedules.max_silent_ratio(schedule))
        reports.append(analysis.check_min_ratio(constants, zeta))
    vartheta = settings.get("vartheta", settings.get("theta"))
    if vartheta is not None:
        reports.append(analysis.check_acr_condition(constants, vartheta))
    return reports


def sweep_points(count):
    # type: (int) -> np.ndarray
    return np.arange(1, count + 1) / float(count + 1)


def write_sweep_csv(path, rows):
    # type: (str, Sequence[Tuple[float, float]]) -> None
    lines = ["theta,margin"] + [
        "%s,%s" % (format_float(t), format_float(m)) for t, m in rows
    ]
    with atomic_open_for_write(path, newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_check_conditions(config, sweep=None, out=None):
    # type: (ExperimentConfig, Optional[int], Optional[str]) -> int
    game = config.build_game()
    graph = config.build_graph()
    schedule = config.build_schedule()
    settings = config.analysis
    epsilon, source, kbar = config.gains(game, graph)
    _, constants = analysis.analyze(
        game,
        graph,
        kbar,
        epsilon=epsilon,
        q_scale=settings["q_scale"],
        diagonal=settings["diagonal_p"],
    )
    payload = {
        "epsilon": epsilon,
        "epsilon_source": source,
        "constants": constants.as_dict(),
        "conditions": [r.as_dict() for r in condition_reports(constants, schedule, settings)],
    }  # type: Dict[str, Any]
    if settings["compare_mu2"]:
        printed = attr.evolve(constants, mu2_variant=analysis.MU2_AS_PRINTED)
        payload["conditions_mu2_as_printed"] = [
            r.as_dict() for r in condition_reports(printed, schedule, settings)
        ]
    if sweep:
        rows = analysis.theta_sweep(constants, sweep_points(sweep))
        payload["sweep"] = [{"theta": t, "margin": m} for t, m in rows]
        payload["acr_threshold"] = analysis.acr_threshold(constants)
        if out:
            _ensure_dir(out)
            write_sweep_csv(os.path.join(out, "sweep.csv"), rows)
    emit(payload, out, "conditions.json")
    return EXIT_OK


def _ensure_dir(path):
    # type: (str) -> str
    if not os.path.isdir(path):
        os.makedirs(path)
    return path


def run_experiment(config, out=None, seed=None):
    # type: (ExperimentConfig, Optional[str], Optional[int]) -> Dict[str, Any]
    """Simulate ``config`` and write the trajectory CSV and summary JSON."""
    out = _ensure_dir(out or config.output_dir)
    settings = config.analysis
    game = config.build_game()
    graph = config.build_graph()
    schedule = config.build_schedule()
    cfg = config.sim_config(game, graph, seed=seed)
    traj = simulate(game, graph, schedule, cfg)
    x_star = solve_nash(game).x_star
    e_norms, ex_norms = error_traces(traj, x_star)

    summary = {
        "name": config.name,
        "config": config.as_dict(),
        "sim": cfg.as_dict(),
        "x_star": x_star,
        "final": {
            "t": float(traj.times[-1]),
            "x": traj.final_x,
            "e_norm": float(e_norms[-1]),
            "ex_norm": float(ex_norms[-1]),
            "e_norm_initial": float(e_norms[0]),
            "ex_norm_initial": float(ex_norms[0]),
        },
        "samples": int(traj.times.shape[0]),
    }  # type: Dict[str, Any]
    if cfg.seed is not None:
        summary["config"]["sim"]["seed"] = cfg.seed

    extra = {}
    if settings["lyapunov"] or settings["conditions"]:
        try:
            cert, constants = analysis.analyze(
                game,
                graph,
                cfg.kbar,
                epsilon=cfg.epsilon,
                q_scale=settings["q_scale"],
                diagonal=settings["diagonal_p"],
            )
        except NashlibError as exc:
            logger.warning("Skipping Lyapunov analysis: %s", exc.message)
        else:
            summary["constants"] = constants.as_dict()
            if settings["conditions"]:
                summary["conditions"] = [
                    r.as_dict() for r in condition_reports(constants, schedule, settings)
                ]
            if settings["lyapunov"]:
                values = analysis.lyapunov_trace(traj, x_star, cert)
                extra["V"] = values
                summary["lyapunov"] = {"initial": values[0], "final": values[-1]}
                if settings["rate_fit"]:
                    summary["rate"] = _rate_summary(traj, values, constants, settings)
    csv_path = os.path.join(out, config.output["csv"])
    traj.write_csv(csv_path, extra=extra)
    summary_path = os.path.join(out, config.output["summary"])
    summary["files"] = {"csv": csv_path, "summary": summary_path}
    write_json(summary_path, summary)
    return summary


def _rate_summary(traj, values, constants, settings):
    # type: (Any, np.ndarray, analysis.TheoremConstants, Dict[str, Any]) -> Dict[str, Any]
    window = settings.get("rate_window")
    vartheta = settings.get("vartheta", settings.get("theta"))
    bound = None
    if vartheta is not None and 0.0 < vartheta < 1.0:
        bound = analysis.check_acr_condition(constants, vartheta).margin
    try:
        fitted = analysis.fit_exponential_rate(traj.times, values, window)
    except NashlibError as exc:
        logger.warning("Rate fit failed: %s", exc.message)
        fitted = None
    return {"fitted": fitted, "bound": bound, "window": window}


def cmd_run(config, out=None, seed=None):
    # type: (ExperimentConfig, Optional[str], Optional[int]) -> int
    summary = run_experiment(config, out=out, seed=seed)
    emit(
        {
            "name": summary["name"],
            "final": summary["final"],
            "rate": summary.get("rate"),
            "files": summary["files"],
        }
    )
    return EXIT_OK


def _run_one(location, out, seed, level):
    # type: (str, Optional[str], Optional[int], str) -> Tuple[str, int]
    setup_logger(level)
    try:
        config = ExperimentConfig.load(location)
        target = os.path.join(out, config.name) if out else None
        run_experiment(config, out=target, seed=seed)
    except (NashlibError, ConfigNotFound) as exc:
        exc.show()
        return location, exc.exit_code
    return location, EXIT_OK


def cmd_run_batch(locations, out=None, seed=None, jobs=1, level="WARNING"):
    # type: (Sequence[str], Optional[str], Optional[int], int, str) -> int
    """Run independent configs concurrently, one output directory each."""
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        results = list(
            pool.map(
                _run_one,
                locations,
                [out] * len(locations),
                [seed] * len(locations),
                [level] * len(locations),
            )
        )
    emit({"runs": [{"config": loc, "exit_code": code} for loc, code in results]})
    return max(code for _, code in results)


def cmd_list_fixtures():
    # type: () -> int
    rows = []
    for name in fixture_names():
        config = ExperimentConfig.load(fixture_path(name))
        rows.append(
            {
                "name": name,
                "game": config.game["kind"],
                "schedule": config.schedule.get("kind"),
                "path": fixture_path(name),
            }
        )
    emit(rows)
    return EXIT_OK


def get_parser():
    # type: () -> argparse.ArgumentParser
    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument(
        "--config", action="append", default=[], help="Experiment config (JSON or TOML)"
    )
    source.add_argument(
        "--fixture", action="append", default=[], help="Name of a bundled config"
    )
    common.add_argument("--out", help="Output directory")
    common.add_argument("--seed", type=int, help="Override the random initial state seed")
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="Log more (repeatable)"
    )

    parser = argparse.ArgumentParser(
        prog="nashlib",
        description="Distributed Nash equilibrium seeking with intermittent communication",
    )
    commands = parser.add_subparsers(dest="command")
    commands.required = True
    commands.add_parser("solve-ne", parents=[common], help="Solve for the Nash equilibrium")
    check = commands.add_parser(
        "check-schedule", parents=[common], help="Schedule statistics and ACR check"
    )
    check.add_argument("--theta", type=float, help="Average communication ratio to test")
    check.add_argument("--mode", choices=schedules.ACR_MODES, help="ACR evaluation mode")
    conditions = commands.add_parser(
        "check-conditions", parents=[common], help="Evaluate the convergence conditions"
    )
    conditions.add_argument(
        "--sweep", type=int, metavar="N", help="Tabulate the margin over N ratios in (0, 1)"
    )
    run = commands.add_parser("run", parents=[common], help="Simulate and write results")
    run.add_argument("--jobs", type=int, default=1, help="Concurrent runs for several configs")
    commands.add_parser("list-fixtures", help="List the bundled configs")
    return parser


def _log_level(verbose):
    # type: (int) -> Optional[str]
    if verbose >= 2:
        return "DEBUG"
    if verbose == 1:
        return "INFO"
    return None


def _locations(options):
    # type: (argparse.Namespace) -> List[str]
    locations = list(options.config) + [fixture_path(n) for n in options.fixture]
    if not locations:
        raise ConfigError("Pass --config PATH or --fixture NAME")
    return locations


def main(argv=None):
    # type: (Optional[Sequence[str]]) -> int
    options = get_parser().parse_args(argv)
    logger_ = setup_logger(_log_level(getattr(options, "verbose", 0)))
    try:
        if options.command == "list-fixtures":
            return cmd_list_fixtures()
        locations = _locations(options)
        if options.command == "run" and (len(locations) > 1 or options.jobs > 1):
            return cmd_run_batch(
                locations,
                out=options.out,
                seed=options.seed,
                jobs=max(1, options.jobs),
                level=logging.getLevelName(logger_.level),
            )
        if len(locations) > 1:
            raise ConfigError("%s takes a single config" % options.command)
        config = ExperimentConfig.load(locations[0])
        if options.command == "solve-ne":
            return cmd_solve_ne(config, out=options.out)
        if options.command == "check-schedule":
            return cmd_check_schedule(
                config, theta=options.theta, mode=options.mode, out=options.out
            )
        if options.command == "check-conditions":
            return cmd_check_conditions(config, sweep=options.sweep, out=options.out)
        return cmd_run(config, out=options.out, seed=options.seed)
    except (NashlibError, ConfigNotFound) as exc:
        exc.show()
        return exc.exit_code


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()
