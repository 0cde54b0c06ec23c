import os
import logging
import logging.config
import json

from specpart.cli import parse_config
from specpart.grid import build_domain
from specpart.multiple import best_run, run_restarts
from specpart.oracles import equal_ball_prediction
from specpart.partition import audit_partition
from specpart.stats import restart_summary_statistics, restarts_to_csv, summarize_restarts


# Example of a multi-seed study with the process pool. Windows needs the
# pool code wrapped in a main() function, as below.


def main():

    logging.basicConfig()
    # logging.json: normal logging
    # logging_noisy.json: every descent step and eigensolve
    # logging_quiet.json: errors only
    with open("logging.json", "r") as logging_config:
        logging.config.dictConfig(json.load(logging_config))

    logger = logging.getLogger('specpart')
    logger.debug("Starting...")
    logging.captureWarnings(True)  # route audit and domain warnings to the log

    config, domain = parse_config("square_k2.cfg")
    grid = build_domain(domain, config.resolution)

    output_dir = "."
    for a in [0.10, 0.15, 0.20]:
        study = config.replace(a=a)
        runs = run_restarts(grid, study, seeds=range(5), parallel=True)

        restarts_df = summarize_restarts(runs)
        restarts_to_csv(restarts_df, os.path.join(output_dir, "restarts_a{:.2f}.csv".format(a)))
        stats = restart_summary_statistics(restarts_df)

        best = best_run(runs, a)
        report = audit_partition(grid, best.result, best.state.U, a)
        prediction = equal_ball_prediction(grid.ndim, study.k, a)
        logger.info("a = {:.2f}: best objective {:.2f} (seed {}), equal balls {:.2f}, "
                    "audit {}".format(a, stats["objective_min"], best.seed,
                                      prediction.total_objective,
                                      "ok" if report.all_ok else report.failed()))


if __name__ == "__main__":
    main()
