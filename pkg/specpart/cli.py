"""
Command-line driver: read a run configuration, solve, audit and write the
run directory (manifest, phase dumps, support raster, energy history).
"""
from collections import OrderedDict
import argparse
import json
import logging
import logging.config
import os
import sys
import time

import numpy as np

from specpart import get_version
from specpart.energy import PhaseVector
from specpart.exceptions import (
    ConfigError,
    DomainError,
    EigenSolverError,
    PhaseCollapseError,
    SolverStalledError,
)
from specpart.exporters import (
    history_to_csv,
    write_manifest,
    write_phase_dumps,
    write_support_raster,
)
from specpart.grid import build_domain, domain_measure, parse_domain
from specpart.importers import read_phase_dumps
from specpart.multiple import best_run, run_restarts
from specpart.optimizer import SolverConfig, solve
from specpart.oracles import equal_ball_prediction, equal_balls_fit
from specpart.partition import audit_partition, axial_symmetry_defect, extract_partition
from specpart.stats import restart_summary_statistics, restarts_to_csv, summarize_restarts

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_IO_ERROR = 1
EXIT_CONFIG_ERROR = 2
EXIT_SOLVER_ERROR = 3

REQUIRED_KEYS = ["domain", "k", "a"]
INT_KEYS = ["k", "resolution", "seed", "max_outer", "max_inner", "polish_rounds"]
FLOAT_KEYS = ["a", "step", "mu_safety", "tol_energy", "eps_rel", "eig_tol", "mu_fixed"]
LIST_KEYS = ["beta_schedule", "eps_schedule"]
STRING_KEYS = ["domain", "segregation_mode"]
ORACLE_SHAPES = ["square", "rectangle", "cube"]


def _convert(key, value, lineno):
    try:
        if key in INT_KEYS:
            return int(value)
        if key in FLOAT_KEYS:
            if key == "mu_fixed" and value.lower() == "none":
                return None
            return float(value)
        if key in LIST_KEYS:
            return tuple(float(v) for v in value.split(",") if v.strip())
    except ValueError:
        message = "line {}: malformed value '{}' for key '{}'.".format(lineno, value, key)
        raise ConfigError(message)
    return value


def parse_config(path):
    """ Read a ``key = value`` run configuration.

    Blank lines and ``#`` comments are ignored; schedules are comma
    separated. ``domain``, ``k`` and ``a`` are required, every other key
    falls back to ``SolverConfig.DEFAULTS``.

    Parameters
    ----------
    path : str

    Returns
    -------
    config : SolverConfig
    domain : DomainSpec
    """
    known = set(REQUIRED_KEYS) | set(SolverConfig.DEFAULTS)
    values, seen = OrderedDict(), {}
    with open(path, "r") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("line {}: expected 'key = value', got '{}'.".format(lineno, line))
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError("line {}: unknown key '{}'.".format(lineno, key))
            if key in seen:
                message = "line {}: duplicate key '{}' (first set on line {}).".format(
                    lineno, key, seen[key])
                raise ConfigError(message)
            seen[key] = lineno
            values[key] = _convert(key, value, lineno)

    missing = [key for key in REQUIRED_KEYS if key not in values]
    if missing:
        raise ConfigError("{}: missing required keys {}.".format(path, missing))

    try:
        domain = parse_domain(values.pop("domain"))
    except DomainError as e:
        raise ConfigError(str(e))
    if domain.kind == "mask" and not os.path.isabs(domain.path):
        domain = domain._replace(path=os.path.join(os.path.dirname(os.path.abspath(path)),
                                                   domain.path))

    config = SolverConfig(**values)
    config.validate(domain_measure=domain_measure(domain))
    return config, domain


def _oracle_comparison(grid, domain, config, objective):
    if domain.kind not in ORACLE_SHAPES:
        return None
    prediction = equal_ball_prediction(grid.ndim, config.k, config.a)
    if not equal_balls_fit(grid.lengths, config.k, prediction.radius):
        return None
    return OrderedDict([
        ("radius", prediction.radius),
        ("per_ball_lambda", prediction.per_ball_lambda),
        ("predicted_objective", prediction.total_objective),
        ("objective", objective),
        ("relative_gap", (objective - prediction.total_objective) / prediction.total_objective),
    ])


def _partition_summary(result):
    return OrderedDict([
        ("objective", result.objective),
        ("lambdas", result.lambdas),
        ("quotients", result.quotients),
        ("measures", result.measures),
        ("measure_total", float(np.sum(result.measures))),
        ("components_per_phase", result.components_per_phase),
        ("rayleigh_gap", result.rayleigh_gap),
        ("saturation_gap", result.saturation_gap),
    ])


def _write_run_files(out_dir, grid, state, result):
    write_phase_dumps(out_dir, grid, state.U)
    write_support_raster(os.path.join(out_dir, "support.ppm"), grid, result.supports)
    history_to_csv(state.energy_history, os.path.join(out_dir, "history.csv"))


def run_experiment(config, domain, out_dir, restarts=1, parallel=False):
    """ Solve, audit and write one run directory.

    Parameters
    ----------
    config : SolverConfig
    domain : DomainSpec
    out_dir : str
        Created if missing.
    restarts : int
        Number of seeds ``config.seed, config.seed + 1, ...``; the best
        feasible run is reported and every run gets ``restarts/seed_<s>/``.
    parallel : boolean
        Solve the restarts in a multiprocessing pool.

    Returns
    -------
    manifest : collections.OrderedDict
    """
    timings = OrderedDict()
    started = time.time()
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)

    grid = build_domain(domain, config.resolution)
    config.validate(domain_measure=grid.measure)

    restart_stats = None
    if restarts > 1:
        seeds = [config.seed + i for i in range(restarts)]
        runs = run_restarts(grid, config, seeds, parallel=parallel)
        for run in runs:
            if run.error is None:
                seed_dir = os.path.join(out_dir, "restarts", "seed_{}".format(run.seed))
                if not os.path.isdir(seed_dir):
                    os.makedirs(seed_dir)
                _write_run_files(seed_dir, grid, run.state, run.result)
        restart_df = summarize_restarts(runs)
        restarts_to_csv(restart_df, os.path.join(out_dir, "restarts.csv"))
        restart_stats = restart_summary_statistics(restart_df)
        best = best_run(runs, config.a)
        state, result, seed = best.state, best.result, best.seed
    else:
        state, result = solve(grid, config)
        seed = config.seed
    timings["solve_seconds"] = time.time() - started

    audit = audit_partition(grid, result, state.U, config.a)
    symmetry = axial_symmetry_defect(grid, state.U)

    manifest = OrderedDict()
    manifest["version"] = get_version()
    manifest["config"] = config.replace(seed=seed).as_dict()
    manifest["domain"] = OrderedDict([
        ("descriptor", grid.descriptor),
        ("dims", grid.dims),
        ("spacing", grid.spacing),
        ("measure", grid.measure),
    ])
    manifest["energy"] = OrderedDict(state.breakdown._asdict())
    manifest["partition"] = _partition_summary(result)
    manifest["audit"] = audit.as_dict()
    manifest["oracle"] = _oracle_comparison(grid, domain, config, result.objective)
    manifest["symmetry"] = symmetry
    if restart_stats is not None:
        manifest["restarts"] = restart_stats

    _write_run_files(out_dir, grid, state, result)
    write_manifest(os.path.join(out_dir, "manifest.json"), manifest)
    timings["total_seconds"] = time.time() - started
    with open(os.path.join(out_dir, "timings.json"), "w") as f:
        json.dump(timings, f, indent=2)
    return manifest


def run_audit(config, domain, dump_dir, out_dir):
    """ Audit the phase dumps of a previous run without solving. """
    if not os.path.isdir(out_dir):
        os.makedirs(out_dir)
    grid = build_domain(domain, config.resolution)
    fields, spacing = read_phase_dumps(dump_dir)
    if fields.shape[1:] != grid.dims or abs(spacing - grid.spacing) > 1e-12 * grid.spacing:
        message = "Phase dumps in {} (dims {}, h = {}) do not match the configured grid" \
                  " (dims {}, h = {}).".format(dump_dir, fields.shape[1:], spacing,
                                               grid.dims, grid.spacing)
        raise ConfigError(message)
    U = PhaseVector(grid, fields, config.a)
    U.validate()
    result = extract_partition(grid, U, config.eps_rel, tol=config.eig_tol)
    audit = audit_partition(grid, result, U, config.a)

    manifest = OrderedDict()
    manifest["version"] = get_version()
    manifest["mode"] = "audit-only"
    manifest["source"] = dump_dir
    manifest["audit"] = audit.as_dict()
    write_manifest(os.path.join(out_dir, "manifest.json"), manifest)
    return manifest


def _defaults_epilog():
    lines = ["config keys (required: {}); defaults:".format(", ".join(REQUIRED_KEYS))]
    for key, value in SolverConfig.DEFAULTS.items():
        if isinstance(value, tuple):
            value = ", ".join(str(v) for v in value)
        lines.append("  {} = {}".format(key, value))
    return "\n".join(lines)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="specpart",
        description="Optimal k-phase spectral partitions under a volume budget.",
        epilog=_defaults_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--config", required=True, help="run configuration (key = value)")
    parser.add_argument("--out-dir", default="specpart_output", help="output directory")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--restarts", type=int, default=1, help="number of seeds to try")
    parser.add_argument("--parallel", action="store_true",
                        help="solve restarts in a process pool")
    parser.add_argument("--audit-only", metavar="PATH",
                        help="audit the phase dumps in PATH instead of solving")
    parser.add_argument("--resolution", type=int, help="override the configured resolution")
    parser.add_argument("--logging-config", metavar="PATH",
                        help="JSON file for logging.config.dictConfig")
    parser.add_argument("--version", action="version", version=get_version())
    return parser


def configure_logging(path=None):
    if path is None:
        logging.basicConfig(level=logging.INFO,
                            format="%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    else:
        with open(path, "r") as logging_config:
            logging.config.dictConfig(json.load(logging_config))
    logging.captureWarnings(True)


def main(argv=None):
    args = build_parser().parse_args(argv)
    configure_logging(args.logging_config)

    try:
        config, domain = parse_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.resolution is not None:
            overrides["resolution"] = args.resolution
        if overrides:
            config = config.replace(**overrides)
        if args.restarts < 1:
            raise ConfigError("--restarts must be at least 1, got {}.".format(args.restarts))

        if args.audit_only:
            run_audit(config, domain, args.audit_only, args.out_dir)
        else:
            run_experiment(config, domain, args.out_dir, restarts=args.restarts,
                           parallel=args.parallel)
    except (ConfigError, DomainError) as e:
        logger.error("Configuration error: {}".format(e))
        return EXIT_CONFIG_ERROR
    except (SolverStalledError, PhaseCollapseError, EigenSolverError) as e:
        logger.error("Solver failure: {}".format(e))
        return EXIT_SOLVER_ERROR
    except (IOError, OSError) as e:
        logger.error("I/O error: {}".format(e))
        return EXIT_IO_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
