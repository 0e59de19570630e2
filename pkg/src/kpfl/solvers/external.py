"""Run a MILP solver as a subprocess on an exported model.

The backend command is a template; ``{model}``, ``{solution}``,
``{time_limit}`` and ``{mip_gap}`` are substituted before it is split with
shell quoting rules (no shell is involved).  The solver writes one
``name value`` pair per line to the solution path.  Lines starting with ``#``
are comments, except these directives::

    # status optimal|feasible-gap|infeasible
    # gap 0.0012
    # objective 123.4

Columns missing from the file are taken as zero.
"""
from __future__ import annotations

import math
import os
import shlex
import subprocess
import tempfile
import time
from pathlib import Path

from ..errors import BackendError, ConfigError, InfeasibleError
from ..metrics import ede_from_proxy
from ..models import KP_KINDS, MilpModel
from .lpformat import export_model
from .result import STATUSES, SolveResult, SolverBackend
from .verify import verify_solution

INTEGRALITY_TOL = 1e-6
TIMEOUT_GRACE = 30.0


class VerificationError(BackendError):
    def __init__(self, report):
        self.report = report
        super().__init__("solution failed verification: " + "; ".join(report.violations))


def parse_solution(text: str, model: MilpModel) -> tuple[dict, dict]:
    names = {v.name for v in model.variables}
    values, directives = {}, {}
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] in ("status", "gap", "objective"):
                directives[parts[0]] = parts[1]
            continue
        parts = line.split()
        if len(parts) != 2:
            raise BackendError(f"unparseable solution line {n}: {raw!r}")
        name, val = parts
        if name not in names:
            raise BackendError(f"unparseable solution line {n}: unknown column {name!r}")
        try:
            values[name] = float(val)
        except ValueError:
            raise BackendError(f"unparseable solution line {n}: bad value {val!r}") from None
    if "status" in directives and directives["status"] not in STATUSES:
        raise BackendError(f"unknown solver status {directives['status']!r}")
    return values, directives


def _round_integers(values: dict, model: MilpModel) -> dict:
    out = dict(values)
    for v in model.variables:
        x = out.get(v.name)
        if x is not None and v.integer and abs(x - round(x)) <= INTEGRALITY_TOL:
            out[v.name] = float(round(x))
    return out


def result_from_values(model: MilpModel, values: dict, *, status="optimal", gap=0.0,
                       runtime=0.0) -> SolveResult:
    meta = model.metadata
    site_ids, origin_ids = meta["site_ids"], meta["origin_ids"]
    open_sites = tuple(s for j, s in enumerate(site_ids) if values.get(f"x_{j}", 0.0) > 0.5)
    assignment = {}
    proxy_terms = []
    obj_coef = dict(model.objective)
    for v in model.variables:
        if v.name.startswith("y_"):
            y = values.get(v.name, 0.0)
            if y > 0:
                _, i, j = v.name.split("_")
                assignment[(origin_ids[int(i)], site_ids[int(j)])] = y
                proxy_terms.append(obj_coef.get(v.name, 0.0) * y)
    aux = {n: values.get(n, 0.0) for n in meta.get("aux", {})}
    kp = None
    if model.kind in KP_KINDS:
        proxy = math.fsum(proxy_terms)
        aux["proxy"] = proxy
        kp = ede_from_proxy(proxy, model.params.kappa, meta["T"])
    return SolveResult(open_sites, assignment, model.evaluate(values), kp, status, gap,
                       runtime, model.kind, aux)


def external_solve(model: MilpModel, backend: SolverBackend, instance=None) -> SolveResult:
    """Export, run the configured solver command, parse and verify its solution.

    Without ``instance`` only model-level checks (bounds, rows, integrality)
    are run on the returned columns.
    """
    if backend.kind != "external" or not backend.command:
        raise ConfigError("external_solve needs an external backend with a command")
    with tempfile.TemporaryDirectory(prefix="kpfl-") as tmp:
        model_path = Path(tmp) / f"model.{backend.format}"
        sol_path = Path(tmp) / "solution.txt"
        export_model(model, backend.format, model_path)
        try:
            cmd = backend.command.format(model=model_path, solution=sol_path,
                                         time_limit=backend.time_limit if backend.time_limit else "",
                                         mip_gap=backend.mip_gap)
            args = shlex.split(cmd)
        except (KeyError, IndexError, ValueError) as exc:
            raise ConfigError(f"bad solver command template: {exc}") from exc
        env = dict(os.environ)
        env.update(backend.env or {})
        timeout = backend.time_limit + TIMEOUT_GRACE if backend.time_limit else None
        t0 = time.perf_counter()
        try:
            proc = subprocess.run(args, capture_output=True, text=True, env=env, timeout=timeout)
        except FileNotFoundError as exc:
            raise BackendError(f"solver executable not found: {args[0]}") from exc
        except subprocess.TimeoutExpired as exc:
            raise BackendError(f"solver exceeded time limit plus {TIMEOUT_GRACE:g} s grace") from exc
        runtime = time.perf_counter() - t0
        if proc.returncode != 0:
            tail = (proc.stderr or proc.stdout).strip().splitlines()[-5:]
            raise BackendError(f"solver exited with code {proc.returncode}: " + " | ".join(tail))
        if not sol_path.exists():
            raise BackendError("solver wrote no solution file")
        values, directives = parse_solution(sol_path.read_text(), model)

    status = directives.get("status", "optimal")
    if status == "infeasible":
        raise InfeasibleError("solver reports the model infeasible")
    if status == "error":
        raise BackendError("solver reports an error status")
    gap = float(directives.get("gap", 0.0 if status == "optimal" else math.nan))
    if "status" not in directives and gap > backend.mip_gap:
        status = "feasible-gap"
    values = _round_integers(values, model)
    result = result_from_values(model, values, status=status, gap=gap, runtime=runtime)

    if instance is not None:
        report = verify_solution(instance, model, result)
    else:
        from .verify import VerificationReport
        report = VerificationReport(model.violations(values, tol=1e-6))
    if not report.ok:
        raise VerificationError(report)
    return result
