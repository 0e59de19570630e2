"""Exact enumeration, transportation subproblems, model export and external solvers."""
from __future__ import annotations

from ..models import ModelRequest, build_model
from .brute_force import brute_force_solve
from .external import VerificationError, external_solve, parse_solution, result_from_values
from .lpformat import export_model, read_lp, read_mps, to_lp, to_mps
from .result import DEFAULT_MIP_GAP, LOOSE_MIP_GAP, SolveResult, SolverBackend
from .transportation import transportation_solve
from .verify import VerificationReport, verify_solution


def solve(instance, request: ModelRequest, backend: SolverBackend | None = None) -> SolveResult:
    """Solve ``request`` on ``instance`` with ``backend`` (brute force by default)."""
    backend = backend or SolverBackend()
    if backend.kind == "brute_force":
        return brute_force_solve(instance, request, cap=backend.enumeration_cap, n_jobs=backend.n_jobs)
    return external_solve(build_model(instance, request), backend, instance)


__all__ = [
    "DEFAULT_MIP_GAP", "LOOSE_MIP_GAP", "SolveResult", "SolverBackend", "VerificationError",
    "VerificationReport", "brute_force_solve", "export_model", "external_solve", "parse_solution",
    "read_lp", "read_mps", "result_from_values", "solve", "to_lp", "to_mps",
    "transportation_solve", "verify_solution",
]
