"""Solver-neutral MILP builders for p-median, p-center and the Kolm-Pollak proxy models.

Column order is fixed: ``x_j`` for every site (sorted by id), then ``y_i_j`` for
every retained (origin, site) pair, then auxiliaries (``z`` for p-center; ``q``
and ``v`` for the penalized model).  Indices refer to the instance's sorted
origin/site lists; the id mapping lives in ``metadata``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import ConfigError, DataError
from .instance import Instance
from .metrics import Distribution, InequalityParams, SummaryStats, summary

KINDS = ("pmedian", "pcenter", "kpl", "kpl_sd", "kpl_t")
KP_KINDS = ("kpl", "kpl_sd", "kpl_t")
COEFF_LIMIT = 1e300
INF = math.inf


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float = 0.0
    ub: float = 1.0
    integer: bool = True


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[str, float], ...]
    sense: str  # "<=", "=", ">="
    rhs: float

    def __post_init__(self):
        if self.sense not in ("<=", "=", ">="):
            raise ValueError(f"bad constraint sense {self.sense!r}")


@dataclass(frozen=True)
class MilpModel:
    """Minimization model ``min objective . x + objective_offset``."""
    variables: tuple[Variable, ...]
    objective: tuple[tuple[str, float], ...]
    constraints: tuple[Constraint, ...]
    objective_offset: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        # JSON-normalize so the model survives a text round trip unchanged
        object.__setattr__(self, "metadata", json.loads(json.dumps(self.metadata)))

    @property
    def kind(self) -> str:
        return self.metadata.get("kind", "")

    @property
    def params(self) -> InequalityParams | None:
        p = self.metadata.get("params")
        return InequalityParams(**p) if p else None

    def variable(self, name: str) -> Variable:
        return self.variables[self._index()[name]]

    def _index(self):
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {v.name: i for i, v in enumerate(self.variables)}
            object.__setattr__(self, "_idx", idx)
        return idx

    def counts(self) -> dict:
        n_x = sum(1 for v in self.variables if v.name.startswith("x_"))
        n_y = sum(1 for v in self.variables if v.name.startswith("y_"))
        return {"x": n_x, "y": n_y, "aux": len(self.variables) - n_x - n_y,
                "constraints": len(self.constraints)}

    def evaluate(self, values: Mapping[str, float]) -> float:
        """Objective value at a (possibly partial, missing = 0) variable assignment."""
        return math.fsum(c * values.get(n, 0.0) for n, c in self.objective) + self.objective_offset

    def violations(self, values: Mapping[str, float], tol: float = 1e-9) -> list[str]:
        out = []
        for v in self.variables:
            x = values.get(v.name, 0.0)
            if x < v.lb - tol or x > v.ub + tol:
                out.append(f"bound {v.name}={x}")
            if v.integer and abs(x - round(x)) > tol:
                out.append(f"integrality {v.name}={x}")
        for c in self.constraints:
            lhs = math.fsum(a * values.get(n, 0.0) for n, a in c.terms)
            scale = max(1.0, abs(c.rhs))
            if (c.sense == "<=" and lhs > c.rhs + tol * scale) or \
               (c.sense == ">=" and lhs < c.rhs - tol * scale) or \
               (c.sense == "=" and abs(lhs - c.rhs) > tol * scale):
                out.append(f"constraint {c.name}: {lhs} {c.sense} {c.rhs}")
        return out

    def canonical(self) -> str:
        from .solvers.lpformat import to_lp
        return to_lp(self)


@dataclass(frozen=True)
class ModelRequest:
    kind: str
    k: int
    params: InequalityParams | None = None
    penalty_plan: object | None = None
    fix_existing: bool = True
    # binary y combined with the capacity constraint (the polling-study variant)
    integral_capacitated: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if not isinstance(self.k, (int, np.integer)) or self.k < 0:
            raise ConfigError("k must be a nonnegative integer")
        if self.kind in KP_KINDS and self.params is None:
            raise ConfigError(f"{self.kind} requires inequality params")
        if self.kind == "kpl_t" and self.penalty_plan is None:
            raise ConfigError("kpl_t requires a penalty plan")

    def replace(self, **kw) -> "ModelRequest":
        d = dict(kind=self.kind, k=self.k, params=self.params, penalty_plan=self.penalty_plan,
                 fix_existing=self.fix_existing, integral_capacitated=self.integral_capacitated)
        d.update(kw)
        return ModelRequest(**d)


def check_request(instance: Instance, request: ModelRequest) -> None:
    n_cand = len(instance.candidate_ids(request.fix_existing))
    if request.k > n_cand:
        raise ConfigError(f"k={request.k} exceeds the {n_cand} candidate sites")
    if instance.capacitated and request.kind not in ("kpl_sd",) and not request.integral_capacitated:
        raise ConfigError(f"capacitated instance requires kind kpl_sd, not {request.kind}")
    if request.integral_capacitated and request.kind not in ("kpl", "kpl_sd"):
        raise ConfigError("integral_capacitated applies only to kpl/kpl_sd")
    if (request.kind == "kpl_sd" or request.integral_capacitated) and not instance.capacitated:
        raise ConfigError(f"{request.kind} requires site capacities")


def kp_coefficients(instance: Instance, kappa: float) -> np.ndarray:
    """``p_r exp(-kappa d_rs)`` evaluated in extended precision; ``inf`` for omitted pairs."""
    if not kappa < 0:
        raise DataError("kappa must be negative")
    D = instance.D
    finite = np.isfinite(D)
    expo = np.where(finite, -np.longdouble(kappa) * D.astype(np.longdouble), 0)
    with np.errstate(over="ignore"):
        C = (np.exp(expo) * instance.populations[:, None].astype(np.longdouble)).astype(float)
    C = np.where(finite, C, np.inf)
    worst = C[finite].max() if finite.any() else 0.0
    if not math.isfinite(worst) or worst > COEFF_LIMIT:
        raise DataError(f"objective coefficient {worst:.3g} exceeds {COEFF_LIMIT:g}; "
                        "reduce |epsilon| or sparsify with d_max")
    return C


def objective_matrix(instance: Instance, request: ModelRequest) -> np.ndarray:
    """Per-pair assignment cost in the model's objective (``inf`` where omitted)."""
    if request.kind == "pmedian":
        return instance.populations[:, None] * instance.D
    if request.kind == "pcenter":
        return instance.D.copy()
    return kp_coefficients(instance, request.params.kappa)


def _core(instance: Instance, request: ModelRequest, split: bool):
    check_request(instance, request)
    n_r, n_s = instance.D.shape
    candidates = set(instance.candidate_ids(request.fix_existing))
    variables, constraints = [], []
    for j, s in enumerate(instance.sites):
        fixed = s.id not in candidates
        variables.append(Variable(f"x_{j}", 1.0 if fixed else 0.0, 1.0, True))
    pairs = [(i, j) for i, j in zip(*np.nonzero(instance.distances.retained))]
    for i, j in pairs:
        variables.append(Variable(f"y_{i}_{j}", 0.0, 1.0, not split))

    count_terms = tuple((f"x_{j}", 1.0) for j, s in enumerate(instance.sites) if s.id in candidates)
    if count_terms:
        constraints.append(Constraint("count", count_terms, "=", float(request.k)))
    capacitated = split or request.integral_capacitated
    if capacitated:
        caps = instance.capacities
        pops = instance.populations
        by_site = {j: [] for j in range(n_s)}
        for i, j in pairs:
            by_site[j].append((f"y_{i}_{j}", float(pops[i])))
        for j in range(n_s):
            terms = tuple(by_site[j]) + ((f"x_{j}", -float(caps[j])),)
            constraints.append(Constraint(f"cap_{j}", terms, "<=", 0.0))
    else:
        for i, j in pairs:
            constraints.append(Constraint(f"link_{i}_{j}", ((f"y_{i}_{j}", 1.0), (f"x_{j}", -1.0)), "<=", 0.0))
    rows = {i: [] for i in range(n_r)}
    for i, j in pairs:
        rows[i].append((f"y_{i}_{j}", 1.0))
    for i in range(n_r):
        constraints.append(Constraint(f"assign_{i}", tuple(rows[i]), "=", 1.0))

    meta = {
        "kind": request.kind,
        "k": int(request.k),
        "T": instance.T,
        "fix_existing": request.fix_existing,
        "integral_capacitated": request.integral_capacitated,
        "params": request.params.to_dict() if request.params else None,
        "origin_ids": list(instance.origin_ids),
        "site_ids": list(instance.site_ids),
        "d_max": instance.distances.d_max,
    }
    return variables, constraints, pairs, meta


def _y_objective(instance, pairs, C):
    return [(f"y_{i}_{j}", float(C[i, j])) for i, j in pairs]


def build_pmedian(instance: Instance, request: ModelRequest) -> MilpModel:
    variables, constraints, pairs, meta = _core(instance, request, split=False)
    obj = _y_objective(instance, pairs, instance.populations[:, None] * instance.D)
    return MilpModel(tuple(variables), tuple(obj), tuple(constraints), 0.0, meta)


def build_pcenter(instance: Instance, request: ModelRequest) -> MilpModel:
    variables, constraints, pairs, meta = _core(instance, request, split=False)
    D = instance.D
    dmax = float(D[np.isfinite(D)].max())
    variables.append(Variable("z", 0.0, dmax, False))
    for i, j in pairs:
        constraints.append(Constraint(f"center_{i}_{j}", (("z", 1.0), (f"y_{i}_{j}", -float(D[i, j]))), ">=", 0.0))
    meta["aux"] = {"z": "z"}
    return MilpModel(tuple(variables), (("z", 1.0),), tuple(constraints), 0.0, meta)


def _kp_objective(instance, request, pairs, meta):
    C = kp_coefficients(instance, request.params.kappa)
    obj = _y_objective(instance, pairs, C)
    vals = [c for _, c in obj]
    meta["coeff_range"] = [min(vals), max(vals)] if vals else None
    return obj


def build_kpl(instance: Instance, request: ModelRequest) -> MilpModel:
    if request.kind not in KP_KINDS:
        request = request.replace(kind="kpl")
    variables, constraints, pairs, meta = _core(instance, request, split=False)
    obj = _kp_objective(instance, request, pairs, meta)
    return MilpModel(tuple(variables), tuple(obj), tuple(constraints), 0.0, meta)


def build_kpl_sd(instance: Instance, request: ModelRequest) -> MilpModel:
    variables, constraints, pairs, meta = _core(instance, request, split=not request.integral_capacitated)
    caps = instance.capacities
    if caps.sum() < instance.T:
        raise DataError(f"total capacity {caps.sum():g} is below total population {instance.T}")
    obj = _kp_objective(instance, request, pairs, meta)
    return MilpModel(tuple(variables), tuple(obj), tuple(constraints), 0.0, meta)


def build_kpl_t(instance: Instance, request: ModelRequest) -> MilpModel:
    plan = request.penalty_plan
    kappa = request.params.kappa
    variables, constraints, pairs, meta = _core(instance, request, split=False)
    candidates = set(instance.candidate_ids(request.fix_existing))
    for sid in plan.penalties:
        if sid not in candidates:
            raise ConfigError(f"penalized site {sid} is not a candidate site")
    betas = list(plan.betas)
    if not betas or betas[0] != 0 or any(a >= b for a, b in zip(betas, betas[1:])):
        raise ConfigError("linearization points must start at 0 and strictly increase")
    sigma_max = max_penalty(plan.penalties, request.k)
    if betas[-1] < -kappa * sigma_max * (1 - 1e-12):
        raise ConfigError("linearization range does not cover maximum penalty")
    obj = _kp_objective(instance, request, pairs, meta)

    scale = instance.T * math.exp(-kappa * plan.khat)
    if not math.isfinite(scale) or scale > COEFF_LIMIT:
        raise DataError("penalty scale T*exp(-kappa*khat) overflows; reduce |epsilon|")
    variables.append(Variable("q", 0.0, INF, False))
    variables.append(Variable("v", -INF, INF, False))
    q_terms = [("q", 1.0)] + [(f"x_{instance.site_index(sid)}", kappa * c)
                              for sid, c in sorted(plan.penalties.items(), key=lambda t: instance.site_index(t[0]))]
    constraints.append(Constraint("qdef", tuple(q_terms), "=", 0.0))
    for n, b in enumerate(betas):
        eb = math.exp(b)
        constraints.append(Constraint(f"tangent_{n}", (("v", 1.0), ("q", -eb)), ">=", eb * (1.0 - b)))
    obj.append(("v", scale))
    meta["aux"] = {"q": "q", "v": "v"}
    meta["penalty"] = {"khat": plan.khat, "betas": betas, "penalties": dict(plan.penalties),
                       "sigma_max": sigma_max, "scale": scale}
    return MilpModel(tuple(variables), tuple(obj), tuple(constraints), -scale, meta)


def max_penalty(penalties: Mapping[str, float], k: int) -> float:
    """Largest achievable penalty total when at most ``k`` penalized sites open."""
    vals = sorted(penalties.values(), reverse=True)[:k]
    return math.fsum(vals)


BUILDERS = {
    "pmedian": build_pmedian,
    "pcenter": build_pcenter,
    "kpl": build_kpl,
    "kpl_sd": build_kpl_sd,
    "kpl_t": build_kpl_t,
}


def build_model(instance: Instance, request: ModelRequest) -> MilpModel:
    return BUILDERS[request.kind](instance, request)


# -- evaluation ----------------------------------------------------------------

class AssignmentError(DataError):
    pass


def assignment_matrix(instance: Instance, assignment) -> np.ndarray:
    """Dense ``(|R|, |S|)`` fraction matrix from a mapping ``(origin_id, site_id) -> y``."""
    if isinstance(assignment, np.ndarray):
        Y = np.asarray(assignment, float)
        if Y.shape != instance.D.shape:
            raise AssignmentError("assignment matrix has the wrong shape")
        return Y
    Y = np.zeros(instance.D.shape)
    for (rid, sid), y in assignment.items():
        Y[instance.origin_index(rid), instance.site_index(sid)] = float(y)
    return Y


@dataclass(frozen=True)
class Evaluation:
    """Stats of an assignment under both readings of fractional assignment.

    ``mode_a``: every resident of an origin travels the y-weighted average distance.
    ``mode_b``: the fraction ``p_r y_rs`` of the origin travels ``d_rs``.
    """
    mode_a: SummaryStats
    mode_b: SummaryStats
    integral: bool
    distribution: Distribution


def check_assignment(instance: Instance, open_sites, Y: np.ndarray, tol: float = 1e-9) -> list[str]:
    problems = []
    open_mask = np.zeros(len(instance.sites), bool)
    for sid in open_sites:
        open_mask[instance.site_index(sid)] = True
    if (Y < -tol).any() or (Y > 1 + tol).any():
        problems.append("assignment fraction outside [0, 1]")
    for i, rid in enumerate(instance.origin_ids):
        total = Y[i].sum()
        if abs(total - 1.0) > tol:
            problems.append(f"origin {rid}: assignment sums to {total:.12g}")
    bad = np.argwhere((Y > tol) & ~open_mask[None, :])
    for i, j in bad:
        problems.append(f"assignment to closed site ({instance.origin_ids[i]}, {instance.site_ids[j]})")
    bad = np.argwhere((Y > tol) & ~instance.distances.retained)
    for i, j in bad:
        problems.append(f"assignment to omitted pair ({instance.origin_ids[i]}, {instance.site_ids[j]})")
    if instance.capacitated:
        load = instance.populations @ Y
        for j in np.nonzero(load > instance.capacities + 1e-6)[0]:
            problems.append(f"capacity exceeded at site {instance.site_ids[j]}: {load[j]:.6g}")
    return problems


def evaluate_solution(instance: Instance, model: MilpModel | None, open_sites, assignment,
                      params: InequalityParams | None = None) -> Evaluation:
    params = params or (model.params if model is not None else None)
    if params is None:
        raise ConfigError("evaluate_solution needs inequality params")
    Y = assignment_matrix(instance, assignment)
    problems = check_assignment(instance, open_sites, Y)
    if problems:
        raise AssignmentError("; ".join(problems))
    D = np.where(np.isfinite(instance.D), instance.D, 0.0)
    p = instance.populations
    z = (Y * D).sum(axis=1)
    dist_a = Distribution(z, p)
    mask = Y > 0
    dist_b = Distribution(D[mask], (p[:, None] * Y)[mask])
    integral = bool(np.all(np.isclose(Y, np.round(Y), atol=1e-12, rtol=0)))
    return Evaluation(summary(dist_a, params), summary(dist_b, params), integral, dist_a)
