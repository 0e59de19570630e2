"""Data-driven choice of ``alpha`` and the re-solve loop that corrects it.

``alpha`` is estimated from a seeding distribution (nearest existing site), the
KPL model is solved with ``kappa = alpha * epsilon_0``, and the optimal
distribution yields a new ``alpha``.  The aversion actually realized by the
first estimate is ``alpha_in * epsilon_0 / alpha_out``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

from .errors import ConfigError, DataError, KpflError
from .instance import Instance, nearest_assignment_distribution
from .metrics import Distribution, InequalityParams, alpha, epsilon_out, kp_ede
from .models import ModelRequest
from .solvers import SolveResult, SolverBackend, solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CalibrationRecord:
    iteration: int
    alpha_in: float
    alpha_out: float
    epsilon_target: float
    epsilon_realized: float
    kp_ede: float
    open_sites: tuple = ()

    def to_dict(self):
        d = asdict(self)
        d["open_sites"] = list(self.open_sites)
        return d


@dataclass(frozen=True)
class Seed:
    params: InequalityParams
    distribution: Distribution
    source: str  # "existing" or "all"


def initial_alpha(instance: Instance, epsilon_0: float) -> Seed:
    """``alpha`` from each origin's distance to its nearest existing site.

    Falls back to all sites when none exist.
    """
    if not epsilon_0 < 0:
        raise ConfigError("epsilon_0 must be negative")
    source = "existing"
    if not instance.existing_mask.any():
        source = "all"
        log.info("no existing sites; seeding alpha from the nearest of all sites")
    dist = nearest_assignment_distribution(instance, source)
    if not dist.mean > 0:
        raise DataError("seeding distribution is all zero; alpha is undefined")
    return Seed(InequalityParams.from_alpha(alpha(dist), epsilon_0), dist, source)


class CalibrationError(KpflError):
    """A solve failed mid-loop; ``records`` holds the completed iterations."""

    def __init__(self, cause: KpflError, records):
        super().__init__(str(cause))
        self.cause = cause
        self.records = list(records)
        self.exit_code = cause.exit_code


@dataclass
class CalibrationRun:
    records: list = field(default_factory=list)
    results: list = field(default_factory=list)   # SolveResult per iteration
    seed: Seed | None = None

    @property
    def final(self) -> SolveResult:
        return self.results[-1]

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def calibrate(instance: Instance, request: ModelRequest, backend: SolverBackend | None = None,
              epsilon_0: float = -1.0, tol: float = 0.05, max_iters: int = 2,
              seed_alpha: float | None = None) -> CalibrationRun:
    """Solve, re-estimate ``alpha`` from the optimum, repeat.

    Stops when ``|epsilon_realized - epsilon_0| <= tol |epsilon_0|``, when the
    open set repeats, or after ``max_iters`` solves.  ``request.kind`` must be
    ``kpl`` or ``kpl_sd``; its params are replaced each iteration.
    """
    if max_iters < 1:
        raise ConfigError("max_iters must be at least 1")
    if not tol > 0:
        raise ConfigError("tol must be positive")
    if request.kind not in ("kpl", "kpl_sd"):
        raise ConfigError("calibration applies to kpl and kpl_sd")
    if max_iters > 2:
        log.warning("more than one recalibration can widen the coefficient range")
    run = CalibrationRun()
    if seed_alpha is None:
        run.seed = initial_alpha(instance, epsilon_0)
        a_in = run.seed.params.alpha
    else:
        a_in = float(seed_alpha)
    prev_open = None
    for it in range(1, max_iters + 1):
        params = InequalityParams.from_alpha(a_in, epsilon_0)
        try:
            res = solve(instance, request.replace(params=params), backend)
        except KpflError as exc:
            raise CalibrationError(exc, run.records) from exc
        z = res.distances(instance)
        a_out = alpha(Distribution(z, instance.populations))
        rec = CalibrationRecord(it, a_in, a_out, epsilon_0, epsilon_out(a_in, epsilon_0, a_out),
                                res.kp_ede, tuple(res.open_sites))
        run.records.append(rec)
        run.results.append(res)
        if abs(rec.epsilon_realized - epsilon_0) <= tol * abs(epsilon_0):
            break
        if prev_open is not None and set(res.open_sites) == prev_open:
            break
        prev_open = set(res.open_sites)
        a_in = a_out
    return run


def ede_gap(instance: Instance, first: SolveResult, second: SolveResult, kappa: float) -> dict:
    """Both solutions scored at the same ``kappa``; gap relative to the second."""
    p = instance.populations
    e1 = kp_ede(Distribution(first.distances(instance), p), kappa)
    e2 = kp_ede(Distribution(second.distances(instance), p), kappa)
    diff = abs(e1 - e2)
    return {"ede_first": e1, "ede_second": e2, "abs_diff": diff,
            "gap": diff / e2 if e2 else (0.0 if diff == 0 else math.inf)}
