from collections import namedtuple
from functools import partial
from multiprocessing import Pool
import logging
import warnings

import numpy as np

from specpart.exceptions import (
    EigenSolverError,
    PhaseCollapseError,
    SolverStalledError,
)
from specpart.optimizer import FEASIBILITY_SLACK, solve

logger = logging.getLogger(__name__)

RestartRun = namedtuple("RestartRun", ["seed", "state", "result", "error"])


def _solve_seed(seed, grid, config):
    """ Solve for one seed. This is a module-level function so that the
    multiprocessing pool can pickle it; failures are returned, not raised.
    """
    logger.info("Solving seed {}".format(seed))
    try:
        state, result = solve(grid, config.replace(seed=seed))
    except (SolverStalledError, PhaseCollapseError, EigenSolverError) as e:
        warnings.warn("Skipping seed {} because of the following error: {}".format(seed, e))
        return RestartRun(seed, None, None, "{}: {}".format(type(e).__name__, e))
    return RestartRun(seed, state, result, None)


def run_restarts(grid, config, seeds, parallel=False, processes=None):
    """ Solve the same problem from several random initializations.

    Parameters
    ----------
    grid : DomainGrid
    config : SolverConfig
        ``config.seed`` is replaced by each entry of ``seeds``.
    seeds : iterable of int
    parallel : boolean
        Use a multiprocessing pool instead of a sequential loop.
    processes : int, optional
        Pool size; defaults to the number of CPUs.

    Returns
    -------
    runs : list of RestartRun
        One per distinct seed, in the order the seeds were given.
    """
    seeds = list(seeds)
    func = partial(_solve_seed, grid=grid, config=config)
    if parallel:
        with Pool(processes) as pool:
            runs = list(pool.imap(func, seeds))
    else:
        runs = [func(seed) for seed in seeds]

    # Duplicate seeds produce identical runs, keep the first occurrence
    runs_by_seed = {}
    for run in runs:
        runs_by_seed.setdefault(run.seed, run)
    ordered = []
    for seed in seeds:
        run = runs_by_seed.pop(seed, None)
        if run is not None:
            ordered.append(run)
    return ordered


def best_run(runs, a):
    """ The successful run of lowest objective, feasible runs first.

    Raises
    ------
    SolverStalledError
        When every run failed.
    """
    successful = [run for run in runs if run.error is None]
    if not successful:
        message = "All {} restarts failed: {}".format(
            len(runs), "; ".join(run.error for run in runs))
        raise SolverStalledError(message)
    feasible = [run for run in successful
                if np.sum(run.result.measures) <= (1.0 + FEASIBILITY_SLACK) * a]
    candidates = feasible if feasible else successful
    if not feasible:
        logger.warning("No restart met the measure budget; keeping the best infeasible run.")
    return min(candidates, key=lambda run: run.result.objective)
