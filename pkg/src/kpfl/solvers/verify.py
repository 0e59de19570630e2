from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..metrics import Distribution, ede_from_proxy, kp_ede
from ..models import KP_KINDS, MilpModel, assignment_matrix, check_assignment, kp_coefficients
from .result import SolveResult

OBJECTIVE_RTOL = 1e-9


@dataclass(frozen=True)
class VerificationReport:
    violations: list = field(default_factory=list)
    objective: float | None = None  # recomputed from the assignment
    kp_ede: float | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self):
        return {"ok": self.ok, "violations": list(self.violations),
                "objective": self.objective, "kp_ede": self.kp_ede}


def column_values(instance, model: MilpModel, result: SolveResult) -> dict:
    """Model column values implied by the result's open set and assignment."""
    vals = {}
    for sid in result.open_sites:
        vals[f"x_{instance.site_index(sid)}"] = 1.0
    for (rid, sid), y in result.assignment.items():
        vals[f"y_{instance.origin_index(rid)}_{instance.site_index(sid)}"] = float(y)
    if model.kind == "pcenter":
        D = instance.D
        vals["z"] = float(max((D[instance.origin_index(r), instance.site_index(s)]
                               for (r, s), y in result.assignment.items() if y > 0), default=0.0))
    elif model.kind == "kpl_t":
        from ..penalty import tangent_value
        pen = model.metadata["penalty"]
        kappa = model.params.kappa
        sigma = math.fsum(c for sid, c in pen["penalties"].items() if sid in set(result.open_sites))
        q = -kappa * sigma
        vals["q"] = q
        # an exact-penalty oracle reports v = exp(q), which also satisfies every tangent cut
        vals["v"] = float(result.values.get("v", tangent_value(q, pen["betas"])))
    return vals


def verify_solution(instance, model: MilpModel, result: SolveResult) -> VerificationReport:
    problems = []
    if list(model.metadata.get("site_ids", instance.site_ids)) != list(instance.site_ids):
        return VerificationReport(["model and instance site ids differ"])
    unknown = [s for s in result.open_sites if s not in set(instance.site_ids)]
    if unknown:
        return VerificationReport([f"unknown open site {s}" for s in unknown])

    candidates = set(instance.candidate_ids(model.metadata.get("fix_existing", True)))
    opened = set(result.open_sites)
    n_open = len(opened & candidates)
    k = model.metadata.get("k")
    if n_open != k:
        problems.append(f"facility count: {n_open} open candidate sites, expected {k}")
    for s in sorted(set(instance.site_ids) - candidates - opened):
        problems.append(f"fixed site {s} is not open")

    try:
        Y = assignment_matrix(instance, result.assignment)
    except KeyError as exc:
        return VerificationReport(problems + [f"unknown id in assignment: {exc}"])
    problems += check_assignment(instance, result.open_sites, Y)

    values = column_values(instance, model, result)
    problems += model.violations(values, tol=1e-6)

    objective = model.evaluate(values)
    mag = max(abs(objective), math.fsum(abs(c * values.get(n, 0.0)) for n, c in model.objective),
              abs(model.objective_offset))
    if not math.isfinite(result.objective) or abs(result.objective - objective) > OBJECTIVE_RTOL * max(mag, 1e-300):
        problems.append(f"objective mismatch: reported {result.objective!r}, recomputed {objective!r}")

    ede = None
    params = model.params
    if params is not None:
        if model.kind in KP_KINDS:
            C = kp_coefficients(instance, params.kappa)
            mask = Y > 0
            proxy = math.fsum((np.where(mask, C, 0.0) * Y)[mask].tolist())
            ede = ede_from_proxy(proxy, params.kappa, instance.T)
        else:
            D = np.where(np.isfinite(instance.D), instance.D, 0.0)
            ede = kp_ede(Distribution((Y * D).sum(axis=1), instance.populations), params.kappa)
        if result.kp_ede is not None and abs(result.kp_ede - ede) > OBJECTIVE_RTOL * max(1.0, abs(ede)):
            problems.append(f"kp_ede mismatch: reported {result.kp_ede!r}, recomputed {ede!r}")
    return VerificationReport(problems, objective, ede)
