"""Exact solving by enumerating every k-subset of candidate sites.

Uncapacitated models assign each origin to its nearest open site, which is
optimal for p-median, p-center and the KP proxy alike (all costs increase with
distance).  The split-demand model solves a transportation problem per subset.
Subsets are visited in lexicographic order of site ids and only a strictly
better objective replaces the incumbent, so ties go to the smallest subset.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from itertools import combinations, islice

import numpy as np

from ..errors import BackendError, ConfigError, InfeasibleError
from ..metrics import ede_from_proxy
from ..models import ModelRequest, check_request, kp_coefficients
from .result import SolveResult
from .transportation import transportation_solve


def _subset_masks(subsets, cand, fixed, n_s):
    M = np.zeros((len(subsets), n_s), dtype=bool)
    M[:, fixed] = True
    if subsets.size:
        rows = np.repeat(np.arange(len(subsets)), subsets.shape[1])
        M[rows, cand[subsets.ravel()]] = True
    return M


class _Problem:
    """Everything the per-chunk search needs, picklable for worker processes."""

    def __init__(self, instance, request: ModelRequest, linearized: bool):
        self.kind = request.kind
        self.D = instance.D
        self.p = instance.populations
        self.T = float(instance.T)
        candidates = set(instance.candidate_ids(request.fix_existing))
        self.cand = np.array([j for j, s in enumerate(instance.site_ids) if s in candidates], dtype=int)
        self.fixed = np.array([j for j, s in enumerate(instance.site_ids) if s not in candidates], dtype=int)
        self.k = request.k
        self.C = kp_coefficients(instance, request.params.kappa) if self.kind in ("kpl", "kpl_t", "kpl_sd") else None
        self.pen = None
        if self.kind == "kpl_t":
            plan = request.penalty_plan
            kappa = request.params.kappa
            self.pen = np.zeros(len(instance.site_ids))
            for sid, c in plan.penalties.items():
                j = instance.site_index(sid)
                if j not in self.cand:
                    raise ConfigError(f"penalized site {sid} is not a candidate")
                self.pen[j] = c
            self.kappa = kappa
            self.scale = self.T * math.exp(-kappa * plan.khat)
            self.betas = np.array(plan.betas)
            self.linearized = linearized

    def penalty_terms(self, sigma):
        q = -self.kappa * sigma
        if self.linearized:
            g = (np.exp(self.betas)[None, :] * (1.0 + q[:, None] - self.betas[None, :])).max(axis=1)
            return self.scale * (g - 1.0)
        return self.scale * np.expm1(q)

    def objectives(self, subsets):
        """Objective per subset (``inf`` when some origin cannot reach an open site)."""
        n_s = self.D.shape[1]
        M = _subset_masks(subsets, self.cand, self.fixed, n_s)
        Dm = np.where(M[:, None, :], self.D[None, :, :], np.inf)
        a = Dm.argmin(axis=2)
        z = np.take_along_axis(Dm, a[:, :, None], axis=2)[:, :, 0]
        feasible = np.isfinite(z).all(axis=1)
        z = np.where(np.isfinite(z), z, 0.0)
        if self.kind == "pmedian":
            obj = z @ self.p
        elif self.kind == "pcenter":
            obj = z.max(axis=1)
        else:
            rows = np.arange(self.D.shape[0])[None, :]
            obj = np.where(np.isfinite(z), self.C[rows, a], 0.0).sum(axis=1)
            if self.kind == "kpl_t":
                obj = obj + self.penalty_terms(M.astype(float) @ self.pen)
        return np.where(feasible, obj, np.inf)


def _search(problem: _Problem, start: int, stop: int):
    """Best ``(objective, index)`` among subsets ``start..stop-1`` in enumeration order."""
    n_c = len(problem.cand)
    it = islice(combinations(range(n_c), problem.k), start, stop)
    best = (math.inf, -1)
    chunk = max(1, int(2_000_000 // max(1, problem.D.size)))
    idx = start
    while True:
        block = list(islice(it, chunk))
        if not block:
            break
        subsets = np.array(block, dtype=int).reshape(len(block), problem.k)
        obj = problem.objectives(subsets)
        j = int(np.argmin(obj))
        if obj[j] < best[0]:
            best = (float(obj[j]), idx + j)
        idx += len(block)
    return best


def _nth_subset(n_c, k, index):
    return next(islice(combinations(range(n_c), k), index, None))


def brute_force_solve(instance, request: ModelRequest, *, cap: int = 2_000_000, n_jobs: int = 1,
                      linearized: bool = False) -> SolveResult:
    """Exact optimum by enumeration.

    For ``kpl_t`` the penalty is charged exactly as ``rho`` by default, which is
    the reference for measuring linearization error; ``linearized=True`` solves
    the tangent-cut model instead.
    """
    t0 = time.perf_counter()
    check_request(instance, request)
    if request.integral_capacitated:
        raise ConfigError("brute force does not solve the binary-capacitated variant")
    problem = _Problem(instance, request, linearized)
    n_c = len(problem.cand)
    total = math.comb(n_c, request.k)
    if total > cap:
        raise BackendError(f"{total} subsets exceed the enumeration cap {cap}")

    if request.kind == "kpl_sd":
        best = _search_capacitated(instance, problem, total)
    elif n_jobs > 1 and total > 1000:
        bounds = np.linspace(0, total, n_jobs + 1).astype(int)
        with ProcessPoolExecutor(n_jobs) as pool:
            parts = list(pool.map(_search, [problem] * n_jobs, bounds[:-1], bounds[1:]))
        best = min(parts)
    else:
        best = _search(problem, 0, total)
    if not math.isfinite(best[0]):
        raise InfeasibleError("no subset of candidate sites is feasible")

    chosen = problem.cand[list(_nth_subset(n_c, request.k, best[1]))] if request.k else np.array([], int)
    open_idx = sorted(set(problem.fixed.tolist()) | set(chosen.tolist()))
    open_sites = tuple(instance.site_ids[j] for j in open_idx)
    if request.kind == "kpl_sd":
        Y = transportation_solve(open_sites, instance, problem.C / problem.p[:, None])
    else:
        Y = np.zeros(instance.D.shape)
        Dm = np.full(instance.D.shape, np.inf)
        Dm[:, open_idx] = instance.D[:, open_idx]
        Y[np.arange(len(Y)), Dm.argmin(axis=1)] = 1.0
    return _result(instance, request, problem, open_sites, Y, time.perf_counter() - t0)


def _search_capacitated(instance, problem, total):
    caps = instance.capacities
    unit = problem.C / problem.p[:, None]
    best = (math.inf, -1)
    for idx, sub in enumerate(combinations(range(len(problem.cand)), problem.k)):
        open_idx = sorted(set(problem.fixed.tolist()) | set(problem.cand[list(sub)].tolist()))
        if caps[open_idx].sum() < problem.T - 1e-9:
            continue
        try:
            Y = transportation_solve([instance.site_ids[j] for j in open_idx], instance, unit)
        except InfeasibleError:
            continue
        obj = float(np.sum(np.where(Y > 0, problem.C, 0.0) * Y))
        if obj < best[0]:
            best = (obj, idx)
    return best


def _result(instance, request, problem, open_sites, Y, runtime):
    from ..penalty import rho
    D = np.where(np.isfinite(instance.D), instance.D, 0.0)
    pairs = np.argwhere(Y > 0)
    assignment = {(instance.origin_ids[i], instance.site_ids[j]): float(Y[i, j]) for i, j in pairs}
    z = (Y * D).sum(axis=1)
    values = {}
    kp = None
    kappa = request.params.kappa if request.params else None
    if request.kind == "pmedian":
        objective = math.fsum(problem.p * z)
    elif request.kind == "pcenter":
        objective = float(max(D[i, j] for i, j in pairs))
        values["z"] = objective
    else:
        proxy = math.fsum(float(problem.C[i, j] * Y[i, j]) for i, j in pairs)
        values["proxy"] = proxy
        objective = proxy
        kp = ede_from_proxy(proxy, kappa, instance.T)
        if request.kind == "kpl_t":
            plan = request.penalty_plan
            sigma = math.fsum(plan.penalties[s] for s in open_sites if s in plan.penalties)
            q = -kappa * sigma
            values["q"] = q
            if problem.linearized:
                from ..penalty import tangent_value
                v = tangent_value(q, plan.betas)
                values["v"] = v
                objective = proxy + problem.scale * (v - 1.0)
            else:
                values["v"] = math.exp(q)
                objective = proxy + rho(plan.khat, sigma, kappa, instance.T)
            values["sigma"] = sigma
    if kp is None and kappa is not None:
        from ..metrics import Distribution, kp_ede
        kp = kp_ede(Distribution(z, problem.p), kappa)
    return SolveResult(open_sites, assignment, objective, kp, "optimal", 0.0, runtime,
                       request.kind, values)
