from collections import OrderedDict
import logging

import numpy as np
import pandas as pd

from specpart import get_version

logger = logging.getLogger(__name__)

QUANTILE = [10, 25, 50, 75, 90]

RESTART_COLUMNS = [
    'seed',
    'status',
    'objective',
    'rayleigh_gap',
    'saturation_gap',
    'measure_total',
    'components',
    'error',
]


def summarize_restarts(runs):
    """ One row per restart run.

    Parameters
    ----------
    runs : list of specpart.multiple.RestartRun

    Returns
    -------
    df : pandas.DataFrame
        Columns as in ``RESTART_COLUMNS``; failed runs carry NaN metrics.
    """
    rows = []
    for run in runs:
        if run.error is None:
            result = run.result
            rows.append({
                'seed': run.seed,
                'status': 'ok',
                'objective': result.objective,
                'rayleigh_gap': result.rayleigh_gap,
                'saturation_gap': result.saturation_gap,
                'measure_total': float(np.sum(result.measures)),
                'components': " ".join(str(c) for c in result.components_per_phase),
                'error': '',
            })
        else:
            rows.append({
                'seed': run.seed,
                'status': 'failed',
                'objective': np.nan,
                'rayleigh_gap': np.nan,
                'saturation_gap': np.nan,
                'measure_total': np.nan,
                'components': '',
                'error': run.error,
            })
    return pd.DataFrame(rows, columns=RESTART_COLUMNS)


def restart_summary_statistics(df):
    """ Summary statistics of the objectives of the successful restarts.

    Returns
    -------
    stats : collections.OrderedDict
    """
    objective = df.objective.dropna()
    stats = OrderedDict([
        ('sw_version', get_version()),
        ('n_runs', int(len(df))),
        ('n_failed', int((df.status != 'ok').sum())),
    ])
    if objective.empty:
        logger.warning("No successful restart to summarize.")
        return stats
    stats['objective_mean'] = float(objective.mean())
    stats['objective_sem'] = float(objective.sem()) if len(objective) > 1 else np.nan
    stats['objective_min'] = float(objective.min())
    stats['objective_max'] = float(objective.max())
    stats['best_seed'] = int(df.seed[objective.idxmin()])
    for q in QUANTILE:
        stats['objective_q{}'.format(q)] = float(objective.quantile(q / 100.0))
    return stats


def restarts_to_csv(df, filepath):
    """ Write the per-restart table. """
    df.to_csv(filepath, index=False, columns=RESTART_COLUMNS)
    return df
