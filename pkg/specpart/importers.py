import glob
import logging
import os
import re

import numpy as np

from specpart.exceptions import DomainError

logger = logging.getLogger(__name__)

PHASE_DUMP_PATTERN = "phase_*.txt"


def _read_header(path, line):
    """ Parse ``N n_1 .. n_N h`` into (dims, h). """
    tokens = line.split()
    try:
        ndim = int(tokens[0])
    except (IndexError, ValueError):
        raise DomainError("{}: header must start with the dimension N.".format(path))
    if ndim not in (2, 3) or len(tokens) != ndim + 2:
        message = "{}: header '{}' must read 'N n_1 .. n_N h' with N = 2 or 3." \
                  .format(path, line.strip())
        raise DomainError(message)
    try:
        dims = tuple(int(t) for t in tokens[1:ndim + 1])
        spacing = float(tokens[-1])
    except ValueError:
        raise DomainError("{}: malformed header '{}'.".format(path, line.strip()))
    if min(dims) < 1 or not spacing > 0:
        raise DomainError("{}: cell counts and spacing must be positive.".format(path))
    return dims, spacing


def _read_matrix(path):
    with open(path, "r") as f:
        header = f.readline()
        dims, spacing = _read_header(path, header)
        values = np.loadtxt(f, dtype=float, ndmin=1).ravel()
    if values.size != int(np.prod(dims)):
        message = "{}: expected {} values for dims {}, found {}.".format(
            path, int(np.prod(dims)), dims, values.size)
        raise DomainError(message)
    return values.reshape(dims), spacing


def read_mask_file(path):
    """ Read a mask file.

    The first line is ``N n_1 [n_2 [n_3]] h``; then the 0/1 cell flags follow
    in row-major order, the last axis running along each row.

    Parameters
    ----------
    path : str

    Returns
    -------
    mask : numpy.ndarray of bool
    spacing : float
    """
    values, spacing = _read_matrix(path)
    if not np.all((values == 0) | (values == 1)):
        raise DomainError("{}: mask flags must be 0 or 1.".format(path))
    mask = values.astype(bool)
    if not mask.any():
        raise DomainError("{}: the mask has no interior cell.".format(path))
    return mask, spacing


def read_field_dump(path):
    """ Read a field dump written by ``specpart.exporters.write_field_dump``.

    Returns
    -------
    values : numpy.ndarray
    spacing : float
    """
    return _read_matrix(path)


def _phase_index(path):
    match = re.search(r"phase_(\d+)\.txt$", path)
    return int(match.group(1))


def read_phase_dumps(directory):
    """ Read ``phase_<i>.txt`` dumps of a run directory, ordered by phase index.

    Returns
    -------
    fields : numpy.ndarray
        Shape ``(k,) + dims``.
    spacing : float
    """
    paths = sorted(glob.glob(os.path.join(directory, PHASE_DUMP_PATTERN)), key=_phase_index)
    if not paths:
        raise DomainError("No {} files found in {}.".format(PHASE_DUMP_PATTERN, directory))
    fields, spacings = [], set()
    for path in paths:
        values, spacing = read_field_dump(path)
        fields.append(values)
        spacings.add(spacing)
        logger.debug("Read phase dump {}".format(path))
    if len(spacings) > 1 or len(set(f.shape for f in fields)) > 1:
        raise DomainError("Phase dumps in {} disagree on grid shape or spacing.".format(directory))
    return np.array(fields), spacings.pop()
