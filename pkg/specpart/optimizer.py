from collections import OrderedDict
import logging

import numpy as np
from scipy import ndimage

from specpart.eigensolver import DEFAULT_TOL, smallest_dirichlet_eig
from specpart.energy import (
    PhaseVector,
    energy_gradient,
    mu_threshold,
    penalized_energy,
    support_cells,
)
from specpart.exceptions import ConfigError, PhaseCollapseError, SolverStalledError
from specpart.grid import inner

logger = logging.getLogger(__name__)

SEGREGATION_MODES = ["hard", "soft"]
MAX_HALVINGS = 30
FEASIBILITY_SLACK = 0.02

# budget enforcement
SCORE_DECIMALS = 8
SETTLE_ROUNDS = 4
SWAP_FRACTION = 20
ACCEPT_RTOL = 1e-9


class SolverConfig(object):
    """ Parameters of one phase-field solve.

    Parameters
    ----------
    k : int
        Number of phases, at least 2.
    a : float
        Total measure budget, ``0 < a < |Omega|``.
    resolution : int
        Cells per unit length.
    seed : int
        Seed of the random initialization.
    step : float
        Initial gradient step, in units of ``h^2 / (2N)``; backtracking halves it.
    beta_schedule : sequence of float
        Increasing segregation weights, one per outer round (the last repeats).
    mu_safety : float
        Factor (at least 1) applied to the penalty threshold.
    eps_schedule : sequence of float
        Decreasing smoothing widths of the measure surrogate.
    segregation_mode : str
        ``"hard"`` (per-cell winner projection) or ``"soft"`` (penalty only).
    max_outer, max_inner : int
        Iteration caps of the continuation and of each descent loop.
    tol_energy : float
        Relative energy tolerance for step acceptance and stagnation.
    eps_rel : float
        Relative support threshold.
    eig_tol : float
        Relative residual of the eigensolves run on the final partition.
    mu_fixed : float or None
        Pins the measure penalty; ``None`` derives it from the threshold.
    polish_rounds : int
        Cap on the cell-swap rounds of the final budget enforcement; zero
        skips the enforcement and extracts the descent iterate as is.
    """

    DEFAULTS = OrderedDict([
        ("resolution", 64),
        ("seed", 0),
        ("step", 0.25),
        ("beta_schedule", (1.0, 10.0, 100.0)),
        ("mu_safety", 2.0),
        ("eps_schedule", (1.0, 0.3, 0.1)),
        ("segregation_mode", "hard"),
        ("max_outer", 12),
        ("max_inner", 200),
        ("tol_energy", 1e-6),
        ("eps_rel", 1e-3),
        ("eig_tol", 1e-6),
        ("mu_fixed", None),
        ("polish_rounds", 40),
    ])

    def __init__(self, k, a, **kwargs):
        unknown = set(kwargs) - set(self.DEFAULTS)
        if unknown:
            raise ConfigError("Unknown solver options: {}.".format(", ".join(sorted(unknown))))
        self.k = k
        self.a = a
        for key, default in self.DEFAULTS.items():
            setattr(self, key, kwargs.get(key, default))
        self.beta_schedule = tuple(float(b) for b in self.beta_schedule)
        self.eps_schedule = tuple(float(e) for e in self.eps_schedule)
        self.validate()

    def __repr__(self):
        return "SolverConfig({})".format(", ".join(
            "{}={!r}".format(key, value) for key, value in self.as_dict().items()))

    def as_dict(self):
        values = OrderedDict([("k", self.k), ("a", self.a)])
        for key in self.DEFAULTS:
            value = getattr(self, key)
            values[key] = list(value) if isinstance(value, tuple) else value
        return values

    def replace(self, **kwargs):
        values = self.as_dict()
        values.update(kwargs)
        return SolverConfig(**values)

    def validate(self, domain_measure=None):
        self._validate_counts()
        self._validate_schedules()
        self._validate_tolerances()
        if domain_measure is not None and self.a >= domain_measure:
            message = "a must be < |Omega|: got a = {} with |Omega| = {:.6g}.".format(
                self.a, domain_measure)
            raise ConfigError(message)

    def _validate_counts(self):
        if int(self.k) != self.k or self.k < 2:
            raise ConfigError("k must be an integer of at least 2, got {}.".format(self.k))
        if not self.a > 0:
            raise ConfigError("a must be positive, got {}.".format(self.a))
        if int(self.resolution) != self.resolution or self.resolution < 8:
            raise ConfigError("resolution must be an integer of at least 8, got {}."
                              .format(self.resolution))
        if self.max_outer < 1 or self.max_inner < 1:
            raise ConfigError("max_outer and max_inner must be at least 1.")
        if int(self.polish_rounds) != self.polish_rounds or self.polish_rounds < 0:
            raise ConfigError("polish_rounds must be a nonnegative integer, got {}."
                              .format(self.polish_rounds))
        if self.segregation_mode not in SEGREGATION_MODES:
            message = "segregation_mode must be one of {}, got '{}'.".format(
                SEGREGATION_MODES, self.segregation_mode)
            raise ConfigError(message)

    def _validate_schedules(self):
        if not self.beta_schedule or not self.eps_schedule:
            raise ConfigError("beta_schedule and eps_schedule must not be empty.")
        if any(b < 0 for b in self.beta_schedule) or \
                any(b1 >= b2 for b1, b2 in zip(self.beta_schedule, self.beta_schedule[1:])):
            raise ConfigError("beta_schedule must be nonnegative and strictly increasing, got {}."
                              .format(list(self.beta_schedule)))
        if any(e <= 0 for e in self.eps_schedule) or \
                any(e1 <= e2 for e1, e2 in zip(self.eps_schedule, self.eps_schedule[1:])):
            raise ConfigError("eps_schedule must be positive and strictly decreasing, got {}."
                              .format(list(self.eps_schedule)))

    def _validate_tolerances(self):
        if not self.step > 0:
            raise ConfigError("step must be positive, got {}.".format(self.step))
        if self.mu_safety < 1:
            raise ConfigError("mu_safety must be at least 1, got {}.".format(self.mu_safety))
        if not self.tol_energy > 0 or not self.eig_tol > 0:
            raise ConfigError("tol_energy and eig_tol must be positive.")
        if not 0 <= self.eps_rel < 1:
            raise ConfigError("eps_rel must lie in [0, 1), got {}.".format(self.eps_rel))
        if self.mu_fixed is not None and self.mu_fixed < 0:
            raise ConfigError("mu_fixed must be nonnegative, got {}.".format(self.mu_fixed))

    def round_parameters(self, outer):
        """ (beta, eps_measure) of outer round ``outer``; schedules hold their last value. """
        beta = self.beta_schedule[min(outer, len(self.beta_schedule) - 1)]
        eps = self.eps_schedule[min(outer, len(self.eps_schedule) - 1)]
        return beta, eps

    @property
    def schedule_length(self):
        return max(len(self.beta_schedule), len(self.eps_schedule))


class SolverState(object):
    """ Iterate of the descent together with its energy and bookkeeping. """

    def __init__(self, U, breakdown, mu, beta, eps_measure, step,
                 outer=0, inner=0, iterations=0, energy_history=None, c_tilde=None):
        self.U = U
        self.breakdown = breakdown
        self.mu = mu
        # level the penalty threshold was computed from
        self.c_tilde = c_tilde
        self.beta = beta
        self.eps_measure = eps_measure
        self.step = step
        self.outer = outer
        self.inner = inner
        self.iterations = iterations
        self.energy_history = [] if energy_history is None else energy_history

    def __repr__(self):
        return "SolverState(outer={}, inner={}, total={:.6g})".format(
            self.outer, self.inner, self.breakdown.total)

    @property
    def objective(self):
        """ Rayleigh sum of the current iterate, without penalties. """
        return float(np.sum(self.breakdown.dirichlet))

    def history_entry(self):
        b = self.breakdown
        return OrderedDict([
            ("iteration", self.iterations),
            ("outer", self.outer),
            ("inner", self.inner),
            ("total", b.total),
            ("dirichlet", float(np.sum(b.dirichlet))),
            ("measure_excess", b.measure_excess),
            ("measure_penalty", b.measure_penalty),
            ("segregation_penalty", b.segregation_penalty),
            ("mu", self.mu),
            ("c_tilde", self.c_tilde),
            ("beta", self.beta),
            ("eps_measure", self.eps_measure),
        ])


def _cell_distances(grid, center):
    # integer index offsets keep the distances exactly mirror-symmetric
    offsets = np.indices(grid.dims) - np.reshape(center, (-1,) + (1,) * grid.ndim)
    return grid.spacing * np.sqrt(np.sum(offsets ** 2, axis=0))


def random_centers(grid, k, seed):
    """ k distinct interior cells drawn from ``numpy.random.default_rng(seed)``. """
    interior = np.flatnonzero(grid.mask.ravel())
    if k > interior.size:
        message = "Cannot seed k = {} phases on {} interior cells.".format(k, interior.size)
        raise ValueError(message)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(interior, size=k, replace=False)
    return np.array(np.unravel_index(chosen, grid.dims)).T


def initialize_phases(grid, k, seed, a, centers=None):
    """ Voronoi bumps around k seed cells, clipped to a total support of about ``a``.

    Parameters
    ----------
    grid : DomainGrid
    k : int
    seed : int
        Seed of the random centre cells; ignored when ``centers`` is given.
    a : float
        Measure budget.
    centers : array_like of int, optional
        ``(k, N)`` cell indices of the seeds.

    Returns
    -------
    U : PhaseVector
        Hard-segregated, unit-norm phases.
    """
    if k < 2:
        raise ValueError("k must be at least 2, got {}.".format(k))
    if centers is None:
        centers = random_centers(grid, k, seed)
    centers = np.asarray(centers, dtype=np.int64)
    if centers.shape != (k, grid.ndim):
        raise ValueError("Expected {} centre cells of dimension {}, got shape {}.".format(
            k, grid.ndim, centers.shape))
    if not all(grid.mask[tuple(c)] for c in centers):
        raise ValueError("Every centre must be an interior cell.")

    distances = np.array([_cell_distances(grid, c) for c in centers])
    owner = np.argmin(distances, axis=0)
    nearest = np.min(distances, axis=0)

    n_cells = max(int(round(a / grid.cell_volume)), k)
    interior = np.sort(nearest[grid.mask])
    cutoff = interior[min(n_cells, interior.size) - 1]
    kept = grid.mask & (nearest <= cutoff)

    bump = np.where(kept, cutoff + grid.spacing - nearest, 0.0)
    fields = np.array([np.where(owner == i, bump, 0.0) for i in range(k)])
    for i in range(k):
        norm_sq = inner(grid, fields[i], fields[i])
        if norm_sq == 0:
            raise PhaseCollapseError("Initial phase {} is empty.".format(i), phase=i)
        fields[i] /= np.sqrt(norm_sq)

    logger.debug("Initialized {} phases on {} cells (seed {})".format(k, int(kept.sum()), seed))
    return PhaseVector(grid, fields, a)


def project_constraints(U, mode="hard"):
    """ Project a phase vector onto nonnegative, unit-norm (and, in hard
    mode, pointwise segregated) fields.

    In hard mode each cell keeps only its largest phase, ties going to the
    lowest index.

    Raises
    ------
    PhaseCollapseError
        When a phase is identically zero after projection.
    """
    if mode not in SEGREGATION_MODES:
        raise ValueError("Unknown segregation mode '{}'.".format(mode))
    grid = U.grid
    fields = np.where(grid.mask, np.maximum(U.fields, 0.0), 0.0)
    if mode == "hard":
        winner = np.argmax(fields, axis=0)
        fields = np.where(np.arange(U.k).reshape((-1,) + (1,) * grid.ndim) == winner,
                          fields, 0.0)
    for i in range(U.k):
        norm_sq = inner(grid, fields[i], fields[i])
        if norm_sq == 0:
            message = "Phase {} collapsed during projection; restart with another seed.".format(i)
            raise PhaseCollapseError(message, phase=i)
        fields[i] = fields[i] / np.sqrt(norm_sq)
    return U.with_fields(fields)


def _tau(grid, step):
    return step * grid.spacing ** 2 / (2.0 * grid.ndim)


def descent_step(grid, state, config):
    """ One backtracking projected-gradient step.

    Parameters
    ----------
    grid : DomainGrid
    state : SolverState
    config : SolverConfig

    Returns
    -------
    state : SolverState
        The accepted iterate, whose energy exceeds the previous one by at
        most ``tol_energy`` relative. Its history is a copy of the input
        history with one entry appended; ``state`` is left untouched.

    Raises
    ------
    SolverStalledError
        When no step is accepted within 30 halvings.
    """
    energy = state.breakdown.total
    gradient = energy_gradient(grid, state.U, state.mu, state.beta, state.eps_measure)
    step = state.step

    for _ in range(MAX_HALVINGS + 1):
        trial = state.U.with_fields(state.U.fields - _tau(grid, step) * gradient)
        try:
            trial = project_constraints(trial, config.segregation_mode)
        except PhaseCollapseError:
            step /= 2.0
            continue
        breakdown = penalized_energy(grid, trial, state.mu, state.beta,
                                     state.eps_measure, config.eps_rel)
        if breakdown.total <= energy + config.tol_energy * abs(energy):
            new_state = SolverState(
                trial, breakdown, state.mu, state.beta, state.eps_measure,
                min(2.0 * step, config.step), outer=state.outer, inner=state.inner + 1,
                iterations=state.iterations + 1, energy_history=list(state.energy_history),
                c_tilde=state.c_tilde)
            new_state.energy_history.append(new_state.history_entry())
            return new_state
        step /= 2.0

    message = "Backtracking exhausted {} halvings at outer round {}, inner step {}" \
              " (energy {:.6g}).".format(MAX_HALVINGS, state.outer, state.inner, energy)
    raise SolverStalledError(message)


def trim_tails(U, eps_rel):
    """ Zero every cell at or below ``eps_rel`` times its phase maximum, then renormalize. """
    fields = np.array([np.where(support_cells(u, eps_rel), u, 0.0) for u in U.fields])
    return project_constraints(U.with_fields(fields), "soft")


def _eigenpairs(grid, supports, tol):
    fields, lambdas = [], []
    for i, support in enumerate(supports):
        if not support.any():
            message = "Phase {} lost every cell while fitting the budget.".format(i)
            raise PhaseCollapseError(message, phase=i)
        result = smallest_dirichlet_eig(grid, support, tol=tol)
        fields.append(result.eigenfunction)
        lambdas.append(result.lambda_)
    return np.array(fields), np.array(lambdas)


def _scores(values):
    # rounded so that mirror-image cells tie exactly
    return np.round(values, SCORE_DECIMALS)


def _neighbour_sums(grid, fields):
    cross = ndimage.generate_binary_structure(grid.ndim, 1).astype(float)
    cross[(1,) * grid.ndim] = 0.0
    return np.array([ndimage.convolve(v, cross, mode="constant", cval=0.0) for v in fields])


def _growth_candidates(grid, supports, fields):
    """ Free cells touching a support, each offered to the phase whose
    eigenfunction is largest around it. Returns ``(scores, candidates)``.
    """
    sums = _neighbour_sums(grid, fields)
    free = grid.mask & ~supports.any(axis=0)
    owner = np.argmax(sums, axis=0)
    phases = np.arange(len(fields)).reshape((-1,) + (1,) * grid.ndim)
    candidates = free & (owner == phases) & (sums > 0)
    return _scores(np.where(candidates, sums, 0.0)), candidates


def _lowest(scores, candidates, count):
    """ The ``count`` lowest-scoring candidates plus every cell tied with the last one. """
    if count <= 0:
        return np.zeros_like(candidates)
    values = np.sort(scores[candidates])
    if count >= values.size:
        return candidates.copy()
    return candidates & (scores <= values[count - 1])


def _highest(scores, candidates, count):
    """ At most ``count`` highest-scoring candidates; ties at the cut are left out. """
    if count <= 0:
        return np.zeros_like(candidates)
    values = np.sort(scores[candidates])[::-1]
    if count >= values.size:
        return candidates.copy()
    return candidates & (scores > values[count])


def _fit_budget(grid, supports, fields, n_budget):
    supports = supports & (fields > 0)
    n = np.count_nonzero(supports)
    if n > n_budget:
        return supports & ~_lowest(_scores(fields), supports, n - n_budget)
    if n < n_budget:
        gains, candidates = _growth_candidates(grid, supports, fields)
        return supports | _highest(gains, candidates, n_budget - n)
    return supports


def _settle(grid, supports, n_budget, tol):
    """ Fit the supports to ``n_budget`` cells and return them with their eigenpairs. """
    fields, lambdas = _eigenpairs(grid, supports, tol)
    for _ in range(SETTLE_ROUNDS):
        fitted = _fit_budget(grid, supports, fields, n_budget)
        if np.array_equal(fitted, supports):
            break
        supports = fitted
        fields, lambdas = _eigenpairs(grid, supports, tol)
    return supports, fields, lambdas


def _swap(grid, supports, fields, batch):
    costs = _scores(fields)
    removed = _lowest(costs, supports, batch)
    gains, candidates = _growth_candidates(grid, supports, fields)
    added = _highest(gains, candidates, np.count_nonzero(removed))
    if not added.any() or gains[added].min() <= costs[removed].max():
        return None
    return (supports & ~removed) | added


def enforce_budget(grid, U, tol=DEFAULT_TOL, max_rounds=40):
    """ Fit hard-segregated phases to the measure budget, then improve
    their supports by exchanging boundary cells.

    The supports are cut (lowest eigenfunction values first) or grown
    (free cells next to the largest values first) to ``floor(a / h^N)``
    cells, cells where the eigenfunction vanishes are dropped. Each round
    then trades a batch of the lowest-valued support cells for the free
    cells with the largest neighbouring values; the trade is kept when
    the eigenvalue sum drops and the batch is halved otherwise.

    Parameters
    ----------
    grid : DomainGrid
    U : PhaseVector
        Hard-segregated phases; their positive cells are the starting supports.
    tol : float
        Relative residual of the eigensolves.
    max_rounds : int
        Cap on the exchange rounds.

    Returns
    -------
    U : PhaseVector
        Unit-norm first eigenfunctions of the fitted supports.

    Raises
    ------
    ConfigError
        When the budget holds fewer cells than phases.
    PhaseCollapseError
        When fitting the budget empties a phase.
    """
    n_budget = int(np.floor(U.a / grid.cell_volume * (1.0 + 1e-12)))
    if n_budget < U.k:
        message = "A budget of {} cells cannot hold {} phases.".format(n_budget, U.k)
        raise ConfigError(message)
    supports, fields, lambdas = _settle(grid, U.fields > 0, n_budget, tol)
    start = float(lambdas.sum())

    largest = max(1, n_budget // SWAP_FRACTION)
    batch = largest
    rounds = accepted = 0
    while batch >= 1 and rounds < max_rounds:
        rounds += 1
        trial = _swap(grid, supports, fields, batch)
        if trial is not None:
            try:
                trial, trial_fields, trial_lambdas = _settle(grid, trial, n_budget, tol)
            except PhaseCollapseError:
                trial = None
        if trial is not None and trial_lambdas.sum() < lambdas.sum() * (1.0 - ACCEPT_RTOL):
            supports, fields, lambdas = trial, trial_fields, trial_lambdas
            batch = min(2 * batch, largest)
            accepted += 1
        else:
            batch //= 2

    logger.info("Budget enforcement: {} of {} cells, eigenvalue sum {:.6g} -> {:.6g}"
                " ({} of {} exchanges kept)".format(
                    int(np.count_nonzero(supports)), n_budget, start, float(lambdas.sum()),
                    accepted, rounds))
    return U.with_fields(fields)


def _round_mu(grid, config, U):
    """ ``(mu, c_tilde)`` of a round; ``c_tilde`` is the Rayleigh sum of ``U``. """
    level = penalized_energy(grid, U, 0.0, 0.0, 1.0, config.eps_rel)
    c_tilde = float(np.sum(level.dirichlet))
    if config.mu_fixed is not None:
        return float(config.mu_fixed), c_tilde
    return config.mu_safety * mu_threshold(c_tilde, grid.ndim, U.a, U.k), c_tilde


def solve(grid, config, initial=None):
    """ Minimize the penalized functional by continuation over the schedules.

    Each outer round refreshes ``mu`` from the threshold at the current
    Rayleigh sum (unless ``mu_fixed`` is set), takes its ``(beta, eps)``
    from the schedules and runs up to ``max_inner`` descent steps. Rounds
    stop once the schedules are exhausted and the energy stagnates. The
    best feasible iterate is then hard-projected and trimmed, fitted to the
    budget by ``enforce_budget`` (unless ``polish_rounds`` is zero) and
    extracted.

    Parameters
    ----------
    grid : DomainGrid
    config : SolverConfig
    initial : PhaseVector, optional
        Starting phases; defaults to ``initialize_phases`` with ``config.seed``.

    Returns
    -------
    state : SolverState
    result : PartitionResult
    """
    from specpart.partition import extract_partition

    config.validate(domain_measure=grid.measure)
    if initial is None:
        initial = initialize_phases(grid, config.k, config.seed, config.a)
    U = project_constraints(initial, config.segregation_mode)

    history = []
    best = None
    previous_round = None
    state = None
    for outer in range(config.max_outer):
        beta, eps = config.round_parameters(outer)
        mu, c_tilde = _round_mu(grid, config, U)
        breakdown = penalized_energy(grid, U, mu, beta, eps, config.eps_rel)
        state = SolverState(U, breakdown, mu, beta, eps, config.step, outer=outer,
                            iterations=len(history), energy_history=list(history),
                            c_tilde=c_tilde)
        state.energy_history.append(state.history_entry())

        for _ in range(config.max_inner):
            before = state.breakdown.total
            state = descent_step(grid, state, config)
            if before - state.breakdown.total <= config.tol_energy * abs(before):
                break
        U = state.U
        history = state.energy_history

        if state.breakdown.measure_excess <= FEASIBILITY_SLACK * config.a and \
                (best is None or state.objective < best.objective):
            best = state
        logger.info("Round {}: total {:.6g}, Rayleigh sum {:.6g}, excess {:.3g}"
                    " (mu {:.4g}, beta {:.4g}, eps {:.4g}, {} steps)".format(
                        outer, state.breakdown.total, state.objective,
                        state.breakdown.measure_excess, mu, beta, eps, state.inner))

        total = state.breakdown.total
        if outer + 1 >= config.schedule_length and previous_round is not None and \
                abs(previous_round - total) <= config.tol_energy * abs(total):
            break
        previous_round = total
    else:
        logger.warning("Reached max_outer = {} rounds without stagnation; keeping the best"
                       " feasible iterate.".format(config.max_outer))

    if best is None:
        logger.warning("No feasible iterate found; returning the last one.")
        best = state

    final = trim_tails(project_constraints(best.U, "hard"), config.eps_rel)
    if config.polish_rounds > 0:
        final = enforce_budget(grid, final, tol=config.eig_tol, max_rounds=config.polish_rounds)
    breakdown = penalized_energy(grid, final, best.mu, best.beta, best.eps_measure, config.eps_rel)
    state = SolverState(final, breakdown, best.mu, best.beta, best.eps_measure, best.step,
                        outer=state.outer, inner=state.inner, iterations=state.iterations,
                        energy_history=history, c_tilde=best.c_tilde)
    result = extract_partition(grid, final, config.eps_rel, tol=config.eig_tol)
    return state, result
