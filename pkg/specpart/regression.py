import numpy as np
from scipy.optimize import leastsq


def loglog_fit(x, y):
    """
    Least squares fit of log(y) = order * log(x) + offset.

    Parameters
    ----------
    x : array_like
        Positive abscissae (grid steps, deformation steps, ...).
    y : array_like
        Positive errors or remainders, same length as ``x``.

    Returns
    -------
    order : float
        Fitted slope on the log-log scale.
    offset : float
        Fitted intercept.
    root_mean_sq_err : float
        Root mean squared residual of the fit, in log units.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("Need at least two matching (x, y) pairs for a log-log fit.")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("Log-log fits need strictly positive data.")

    log_x, log_y = np.log(x), np.log(y)

    def model(params):
        order, offset = params
        return log_y - (order * log_x + offset)

    x0 = (1, 0)
    params = leastsq(model, x0)[0]
    order, offset = params
    rmse = np.sqrt(np.mean(model(params) ** 2))
    return order, offset, rmse


def convergence_order(steps, errors):
    """ Slope of log(error) against log(step). """
    order, _, _ = loglog_fit(steps, errors)
    return float(order)
