from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

STATUSES = ("optimal", "feasible-gap", "infeasible", "error")

DEFAULT_MIP_GAP = 1e-4
LOOSE_MIP_GAP = 5e-3


@dataclass(frozen=True)
class SolveResult:
    open_sites: tuple[str, ...]
    assignment: dict  # (origin_id, site_id) -> fraction
    objective: float
    kp_ede: float | None
    status: str = "optimal"
    gap: float = 0.0
    runtime: float = 0.0
    kind: str = ""
    values: dict = field(default_factory=dict)  # auxiliary columns (z, q, v)

    def matrix(self, instance) -> np.ndarray:
        from ..models import assignment_matrix
        return assignment_matrix(instance, self.assignment)

    def distances(self, instance) -> np.ndarray:
        """Per-origin y-weighted travel distance."""
        D = np.where(np.isfinite(instance.D), instance.D, 0.0)
        return (self.matrix(instance) * D).sum(axis=1)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "status": self.status,
            "open_sites": list(self.open_sites),
            "objective": self.objective,
            "kp_ede": self.kp_ede,
            "gap": self.gap if math.isfinite(self.gap) else None,
            "runtime": self.runtime,
            "values": dict(self.values),
            "assignment": [[r, s, y] for (r, s), y in sorted(self.assignment.items())],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolveResult":
        return cls(tuple(d["open_sites"]), {(r, s): y for r, s, y in d["assignment"]},
                   d["objective"], d.get("kp_ede"), d.get("status", "optimal"),
                   d.get("gap") if d.get("gap") is not None else math.nan,
                   d.get("runtime", 0.0), d.get("kind", ""), d.get("values", {}))


@dataclass(frozen=True)
class SolverBackend:
    """How to solve a model.

    ``command`` (external kind) is a template with ``{model}``, ``{solution}``,
    ``{time_limit}`` and ``{mip_gap}`` placeholders.
    """
    kind: str = "brute_force"
    command: str | None = None
    time_limit: float | None = None
    mip_gap: float = DEFAULT_MIP_GAP
    format: str = "lp"
    enumeration_cap: int = 2_000_000
    n_jobs: int = 1
    env: dict | None = None

    def __post_init__(self):
        from ..errors import ConfigError
        if self.kind not in ("brute_force", "external"):
            raise ConfigError(f"unknown backend kind {self.kind!r}")
        if self.kind == "external" and not self.command:
            raise ConfigError("external backend requires a command template")
        if self.format not in ("lp", "mps"):
            raise ConfigError("format must be lp or mps")
        if not self.mip_gap >= 0:
            raise ConfigError("mip_gap must be nonnegative")
