from collections import OrderedDict
import json
import logging
import os

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

HISTORY_COLUMNS = [
    'iteration',
    'outer',
    'inner',
    'total',
    'dirichlet',
    'measure_excess',
    'measure_penalty',
    'segregation_penalty',
    'mu',
    'c_tilde',
    'beta',
    'eps_measure',
]

# colours by phase index; cells of no phase are black, cells outside the mask white
PALETTE = [
    (228, 26, 28),
    (55, 126, 184),
    (77, 175, 74),
    (152, 78, 163),
    (255, 127, 0),
    (255, 255, 51),
    (166, 86, 40),
    (247, 129, 191),
]
EMPTY_COLOR = (0, 0, 0)
EXTERIOR_COLOR = (255, 255, 255)

FIELD_FORMAT = '%.17g'


def _write_matrix(path, values, spacing, fmt):
    header = "{} {} {}".format(values.ndim, " ".join(str(n) for n in values.shape),
                               FIELD_FORMAT % spacing)
    rows = values.reshape(-1, values.shape[-1])
    with open(path, "w") as f:
        f.write(header + "\n")
        np.savetxt(f, rows, fmt=fmt)


def write_field_dump(path, grid, u):
    """ Write a field in the mask-file layout with 17 significant digits,
    enough to read it back bit for bit.
    """
    _write_matrix(path, grid.check_field(u), grid.spacing, FIELD_FORMAT)
    return path


def write_mask_file(path, mask, spacing):
    _write_matrix(path, np.asarray(mask, dtype=int), spacing, '%d')
    return path


def write_phase_dumps(directory, grid, U):
    """ One ``phase_<i>.txt`` dump per phase. Returns the written paths. """
    return [write_field_dump(os.path.join(directory, "phase_{}.txt".format(i)), grid, u)
            for i, u in enumerate(U.fields)]


def support_labels(grid, supports):
    """ -1 outside the mask, 0 on uncovered interior cells, i + 1 on support i. """
    labels = np.where(grid.mask, 0, -1)
    for i, support in enumerate(supports):
        labels[support] = i + 1
    return labels


def write_support_raster(path, grid, supports):
    """ Write the supports as a binary portable pixmap (P6).

    The first axis runs left to right and the second bottom to top; three
    dimensional grids are cut at the middle of the last axis.

    Parameters
    ----------
    path : str
    grid : DomainGrid
    supports : numpy.ndarray of bool
        Shape ``(k,) + grid.dims``.
    """
    labels = support_labels(grid, supports)
    if labels.ndim == 3:
        labels = labels[:, :, labels.shape[2] // 2]
    colors = np.array([EXTERIOR_COLOR, EMPTY_COLOR] +
                      [PALETTE[i % len(PALETTE)] for i in range(len(supports))], dtype=np.uint8)
    image = colors[labels.T[::-1] + 1]
    height, width = image.shape[:2]
    with open(path, "wb") as f:
        f.write("P6\n{} {}\n255\n".format(width, height).encode("ascii"))
        f.write(image.tobytes())
    return path


def history_to_csv(history, path):
    """ Write the energy history, one row per accepted step. """
    history_df = pd.DataFrame(list(history), columns=HISTORY_COLUMNS)
    history_df.to_csv(path, index=False, columns=HISTORY_COLUMNS)
    return history_df


def _jsonable(value):
    if isinstance(value, dict):
        return OrderedDict((str(k), _jsonable(v)) for k, v in value.items())
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        # NaN and infinities have no JSON literal
        return float(value) if np.isfinite(value) else None
    return value


def write_manifest(path, manifest):
    """ Write a run manifest as indented JSON, keeping key order. Non-finite
    numbers are written as ``null``.
    """
    with open(path, "w") as f:
        json.dump(_jsonable(manifest), f, indent=2, allow_nan=False)
        f.write("\n")
    logger.info("Wrote manifest {}".format(path))
    return path
