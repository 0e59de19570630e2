"""Distance penalties for less-desirable sites.

A penalty of ``sigma`` meters on the EDE corresponds to adding
``T exp(-kappa K) (exp(-kappa sigma) - 1)`` to the linear proxy.  Because ``K``
must be estimated (``khat``) and ``exp(q)`` is replaced by tangent cuts, the
penalty actually applied differs from the intended one; the functions here
evaluate those errors and their bounds and plan ``khat``, ``c_s`` and the
tangent points.

Notation used throughout: ``delta = khat - K*``, ``sigma_star`` is the intended
penalty total at the optimum, ``sigma_hat`` the penalty applied with exact
``exp``, ``sigma_ddot`` the penalty applied through the tangent cuts.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, DataError, InfeasibleError
from .metrics import Distribution, alpha as alpha_of
from .models import ModelRequest, max_penalty

log = logging.getLogger(__name__)


def _check(kappa, sigma=0.0):
    if not kappa < 0:
        raise DataError("kappa must be negative")
    if sigma < 0:
        raise DataError("penalty must be nonnegative")


def expm1_minus_x(x: float) -> float:
    """``exp(x) - 1 - x`` without cancellation near 0."""
    if abs(x) < 1e-2:
        term, total = x * x / 2.0, 0.0
        for n in range(3, 14):
            total += term
            term *= x / n
        return total
    return math.expm1(x) - x


def rho(khat: float, sigma: float, kappa: float, T: float) -> float:
    """Proxy-objective increment equivalent to ``sigma`` meters on the EDE."""
    _check(kappa, sigma)
    if not T > 0:
        raise DataError("T must be positive")
    log_scale = math.log(T) - kappa * khat
    if log_scale > 700:
        raise OverflowError("T*exp(-kappa*khat) overflows; reduce |epsilon|")
    return math.exp(log_scale) * math.expm1(-kappa * sigma)


def tangent_shortfall(q: float, betas) -> float:
    """``exp(q) - max_i [exp(b_i) (1 + q - b_i)]``: gap of the tangent cuts at ``q``."""
    return min(math.exp(b) * expm1_minus_x(q - b) for b in betas)


def tangent_value(q: float, betas) -> float:
    return max(math.exp(b) * (1.0 + (q - b)) for b in betas)


def hat_error(delta: float, sigma_star: float, kappa: float) -> float:
    """``sigma_hat - sigma_star`` caused by using ``khat = K* + delta``."""
    _check(kappa, sigma_star)
    if delta >= 0:
        # delta - (1/kappa) ln(1 + exp(kappa sigma) expm1(kappa delta)); safe for large delta
        return delta - math.log1p(math.exp(kappa * sigma_star) * math.expm1(kappa * delta)) / kappa
    return -math.log1p(-math.expm1(kappa * sigma_star) * math.expm1(-kappa * delta)) / kappa


def hat_error_asymptote(delta: float, sigma_star: float, kappa: float) -> float:
    """Large-``delta`` limit ``delta - ln(1 - exp(kappa sigma)) / kappa`` (``sigma_star > 0``)."""
    _check(kappa, sigma_star)
    if sigma_star == 0:
        return 0.0
    return delta - math.log(-math.expm1(kappa * sigma_star)) / kappa


def hat_error_bounds(delta: float, sigma_star: float, kappa: float) -> tuple[float, float]:
    """Bounds ``(lower, upper)`` on ``|hat_error|``."""
    _check(kappa, sigma_star)
    shrink = -math.expm1(kappa * sigma_star)  # 1 - exp(kappa sigma)
    a = abs(delta)
    if delta > 0:
        return a * shrink, a
    if delta < 0:
        return 0.0, min(a * shrink, sigma_star)
    return 0.0, 0.0


def more_bounds(sigma_all: float, sigma_star: float, kappa: float) -> tuple[float, float]:
    """Bounds on ``sigma_star - sigma_hat`` when ``khat = K_all``.

    Returns ``(sigma_all (1 - exp(kappa sigma_star)), sigma_all (1 - exp(kappa sigma_all)))``;
    the second holds without knowing ``sigma_star``.
    """
    _check(kappa, sigma_star)
    if sigma_all < 0:
        raise DataError("sigma_all must be nonnegative")
    return -sigma_all * math.expm1(kappa * sigma_star), -sigma_all * math.expm1(kappa * sigma_all)


def tangent_gap(w: float) -> float:
    """Worst gap between ``exp`` and its tangents at 0 and ``w`` on ``[0, w]``."""
    if not w > 0:
        raise DataError("width must be positive")
    # crossing point t = w e^w / (e^w - 1) = 1 + u
    den = -math.expm1(-w)
    u = expm1_minus_x(-w) / den
    return expm1_minus_x(u)


def tangent_gap_at(a: float, w: float) -> float:
    """Worst tangent gap on ``[a, a + w]``; grows like ``exp(a)``."""
    return math.exp(a) * tangent_gap(w)


@dataclass(frozen=True)
class TangentBound:
    exact: float          # bound in terms of delta and sigma_star
    case: float | None    # delta-free bound for the applicable case, if any


def tangent_error_bound(w: float, delta: float, sigma_star: float, kappa: float,
                        khat_mode: str = "K_all") -> TangentBound:
    """Bound on ``sigma_hat - sigma_ddot`` for tangent points ``0, w, 2w, ...``."""
    _check(kappa, sigma_star)
    if not 0 < w < 1:
        raise DataError("tangent width must lie in (0, 1)")
    A = tangent_gap(w)
    den = 1.0 + math.exp(kappa * sigma_star) * math.expm1(kappa * delta)
    ratio = A / den
    if not ratio < 1:
        raise DataError("tangent width too large for this delta and penalty")
    exact = math.log1p(-ratio) / kappa
    if delta <= 0:
        case = math.log1p(-A) / kappa
    elif khat_mode == "K_rem":
        case = math.log1p(-1.25 * A) / kappa
    else:
        case = None
    return TangentBound(exact, case)


def combined_bound(sigma_all: float, sigma_star: float, w: float | None, kappa: float) -> float:
    """Bound on ``sigma_star - sigma_ddot`` with ``khat = K_all``.

    ``w=None`` means the tangent points hit every reachable ``q`` (equal penalties),
    leaving only the parameter-approximation term.
    """
    hat, _ = more_bounds(sigma_all, sigma_star, kappa)
    if w is None:
        return hat
    return hat + math.log1p(-tangent_gap(w)) / kappa


def width_for_budget(kappa: float, budget: float = 1e-3) -> float:
    """Largest ``w < 1`` whose delta<=0 tangent bound is at most ``budget`` meters."""
    _check(kappa)
    if not budget > 0:
        raise DataError("budget must be positive")
    target = -math.expm1(kappa * budget)
    hi = 1.0 - 1e-12
    if tangent_gap(hi) <= target:
        return hi
    return brentq(lambda w: tangent_gap(w) - target, 1e-300, hi, xtol=1e-300, rtol=1e-14)


def uniform_betas(w: float, q_max: float) -> list[float]:
    """``0, w, 2w, ...`` up to the first point at or above ``q_max``."""
    if not w > 0:
        raise DataError("width must be positive")
    n = max(0, math.ceil(q_max / w))
    while n * w < q_max:
        n += 1
    return [i * w for i in range(n + 1)]


def exact_betas(c: float, kappa: float, n: int) -> list[float]:
    """Tangent points at every reachable ``q`` when all penalties equal ``c``.

    ``c * i`` is the correctly rounded ``i``-fold sum, so ``q`` computed from an
    open set with ``i`` penalized sites lands exactly on a point.
    """
    return [-kappa * (c * i) for i in range(n + 1)]


@dataclass(frozen=True)
class PenaltyPlan:
    penalties: dict            # site id -> meters (the penalized set U)
    kappa: float
    k: int
    khat: float
    khat_source: str = "user"  # K_all | K_rem | user
    betas: tuple = (0.0,)
    w: float | None = None
    K_all: float | None = None
    K_rem: float | None = None
    N: int | None = None
    sigma_all: float | None = None
    exact: bool = False
    notes: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if any(c < 0 for c in self.penalties.values()):
            raise DataError("penalties must be nonnegative")
        b = list(self.betas)
        if not b or b[0] != 0 or any(x >= y for x, y in zip(b, b[1:])):
            raise ConfigError("betas must start at 0 and strictly increase")
        if b[-1] < -self.kappa * self.sigma_max * (1 - 1e-12):
            raise ConfigError("linearization range does not cover maximum penalty")

    @property
    def sigma_max(self) -> float:
        return max_penalty(self.penalties, self.k)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["betas"] = list(self.betas)
        d["notes"] = list(self.notes)
        d["sigma_max"] = self.sigma_max
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PenaltyPlan":
        d = dict(d)
        d.pop("sigma_max", None)
        d["betas"] = tuple(d.get("betas", (0.0,)))
        d["notes"] = tuple(d.get("notes", ()))
        return cls(**d)


def make_plan(penalties: dict, kappa: float, k: int, khat: float, *, khat_source: str = "user",
              w: float | None = None, budget: float = 1e-3, **anchors) -> PenaltyPlan:
    """Plan tangent points for given penalties.

    Equal penalties get exact points (no linearization error); otherwise a
    uniform width ``w`` (or the width meeting ``budget``) is used.
    """
    q_max = -kappa * max_penalty(penalties, k)
    vals = set(penalties.values())
    n_reach = min(k, len(penalties))
    if w is None and len(vals) == 1:
        c = vals.pop()
        if c > 0 and n_reach > 0:
            return PenaltyPlan(dict(penalties), kappa, k, khat, khat_source,
                               tuple(exact_betas(c, kappa, n_reach)), -kappa * c, exact=True, **anchors)
        return PenaltyPlan(dict(penalties), kappa, k, khat, khat_source, (0.0,), None, exact=True, **anchors)
    if w is None:
        w = width_for_budget(kappa, budget)
    return PenaltyPlan(dict(penalties), kappa, k, khat, khat_source,
                       tuple(uniform_betas(w, q_max)), w, exact=False, **anchors)


# -- anchors and the recommended strategy ------------------------------------

@dataclass(frozen=True)
class Anchors:
    K_all: float
    K_rem: float
    sigma_all: float
    N: int
    open_all: tuple
    open_rem: tuple


def _penalized_set(instance, request):
    if request.penalty_plan is not None:
        return dict(request.penalty_plan.penalties)
    return instance.penalties


def khat_anchors(instance, request: ModelRequest, backend=None, penalties: dict | None = None) -> Anchors:
    """Unpenalized optima with all sites (``K_all``) and without the penalized ones (``K_rem``)."""
    from .solvers import solve
    U = dict(penalties) if penalties is not None else _penalized_set(instance, request)
    base = request.replace(kind="kpl_sd" if instance.capacitated else "kpl", penalty_plan=None)
    res_all = solve(instance, base, backend)
    if len(set(instance.candidate_ids(request.fix_existing)) - set(U)) < request.k:
        raise InfeasibleError("removing the penalized sites leaves fewer than k candidates")
    try:
        reduced = instance.without_sites(U)
    except DataError as exc:
        raise InfeasibleError(f"model without penalized sites is infeasible: {exc}") from exc
    res_rem = solve(reduced, base, backend)
    opened = [s for s in res_all.open_sites if s in U]
    sigma_all = math.fsum(U[s] for s in opened)
    return Anchors(res_all.kp_ede, res_rem.kp_ede, sigma_all, len(opened),
                   res_all.open_sites, res_rem.open_sites)


def recommend_plan(instance, request: ModelRequest, backend=None, *, khat_source: str = "K_all",
                   khat: float | None = None, budget: float = 1e-3, exact: bool = True) -> PenaltyPlan:
    """Equal per-site penalty ``(K_rem - K_all) / N`` on the penalized set, ``khat = K_all``."""
    U = _penalized_set(instance, request)
    if not U:
        raise ConfigError("empty penalized set")
    kappa = request.params.kappa
    a = khat_anchors(instance, request, backend, penalties=U)
    notes = []
    gain = a.K_rem - a.K_all
    if a.N > 0:
        c = gain / a.N
    else:
        c = gain
        notes.append("no penalized site is opened without penalties (N=0); using c = K_rem - K_all")
        log.warning(notes[-1])
    penalties = {s: c for s in sorted(U)}
    sigma_all = c * a.N
    if khat_source == "K_all":
        kh = a.K_all
    elif khat_source == "K_rem":
        kh = a.K_rem
        notes.append("khat above K* over-penalizes penalized sites")
    elif khat_source == "user":
        if khat is None:
            raise ConfigError("khat_source 'user' needs a khat value")
        kh = float(khat)
        if kh > a.K_all:
            notes.append("khat above K_all may over-penalize penalized sites")
    else:
        raise ConfigError(f"unknown khat source {khat_source!r}")
    anchors = dict(K_all=a.K_all, K_rem=a.K_rem, N=a.N, sigma_all=sigma_all, notes=tuple(notes))
    if exact:
        return make_plan(penalties, kappa, request.k, kh, khat_source=khat_source, **anchors)
    return make_plan(penalties, kappa, request.k, kh, khat_source=khat_source,
                     w=width_for_budget(kappa, budget), **anchors)


def plan_bounds(plan: PenaltyPlan) -> dict:
    """Delta-free bounds available at planning time (``khat = K_all`` semantics)."""
    sigma_all = plan.sigma_all if plan.sigma_all is not None else plan.sigma_max
    _, hat = more_bounds(sigma_all, sigma_all, plan.kappa)
    tangent = 0.0 if plan.exact else math.log1p(-tangent_gap(plan.w)) / plan.kappa
    return {"hat": hat, "tangent": tangent, "combined": hat + tangent}


def practical_exponent_check(plan: PenaltyPlan, dist_for_alpha: Distribution,
                             epsilon: float | None = None) -> dict:
    """Whether the penalty exponent stays below ``|epsilon|`` (tangent cuts stay accurate)."""
    a = alpha_of(dist_for_alpha)
    mu = dist_for_alpha.mean
    eps = epsilon if epsilon is not None else plan.kappa / a
    exponent = -plan.kappa * plan.sigma_max
    n = min(plan.k, len(plan.penalties))
    max_c = max(plan.penalties.values(), default=0.0)
    return {
        "alpha": a,
        "mu": mu,
        "alpha_mu": a * mu,
        "exponent": exponent,
        "sigma_max": plan.sigma_max,
        "sigma_max_le_mu": plan.sigma_max <= mu,
        "exponent_le_abs_eps": exponent <= abs(eps) * (1 + 1e-12),
        "max_penalty_le_mu_over_n": n == 0 or max_c <= mu / n,
    }


# -- measured errors from the exact oracle -----------------------------------

@dataclass(frozen=True)
class PenaltyErrorReport:
    K_star: float
    delta: float
    sigma_star: float
    sigma_hat: float
    sigma_ddot: float
    hat_error: float              # sigma_hat - sigma_star, closed form
    under_hat: float              # sigma_star - sigma_hat, measured
    under_tangent: float          # sigma_hat - sigma_ddot, measured
    bound_hat: float | None
    bound_tangent: float
    bound_combined: float | None
    A_w: float
    open_sites: tuple
    linearized_open_sites: tuple

    def to_dict(self):
        return asdict(self)


def measure_errors(instance, request: ModelRequest, sigma_all: float | None = None) -> PenaltyErrorReport:
    """Solve the penalized model exactly (brute force) and measure the applied penalties."""
    from .solvers.brute_force import brute_force_solve
    plan = request.penalty_plan
    kappa = request.params.kappa
    T = instance.T
    exact = brute_force_solve(instance, request, linearized=False)
    lin = brute_force_solve(instance, request, linearized=True)
    proxy = exact.values["proxy"]
    K_star = exact.kp_ede
    sigma_star = math.fsum(plan.penalties[s] for s in exact.open_sites if s in plan.penalties)
    q = -kappa * sigma_star
    ratio = T * math.exp(-kappa * plan.khat) / proxy
    a = ratio * math.expm1(q)
    err = tangent_shortfall(q, plan.betas)
    b = ratio * (math.expm1(q) - err)
    sigma_hat = -math.log1p(a) / kappa
    sigma_ddot = -math.log1p(b) / kappa
    under_tangent = -math.log1p(ratio * err / (1.0 + b)) / kappa
    delta = plan.khat - K_star

    A_w = 0.0 if plan.exact else tangent_gap(plan.w)
    if plan.exact:
        bound_tangent = 0.0
    else:
        bound_tangent = tangent_error_bound(plan.w, delta, sigma_star, kappa, plan.khat_source).exact
    bound_hat = bound_combined = None
    if sigma_all is not None:
        bound_hat = more_bounds(sigma_all, sigma_star, kappa)[0]
        bound_combined = combined_bound(sigma_all, sigma_star, None if plan.exact else plan.w, kappa)
    return PenaltyErrorReport(K_star, delta, sigma_star, sigma_hat, sigma_ddot,
                              hat_error(delta, sigma_star, kappa), sigma_star - sigma_hat,
                              under_tangent, bound_hat, bound_tangent, bound_combined, A_w,
                              exact.open_sites, lin.open_sites)
