"""Command-line front end: ``kpfl <subcommand> [options]``.

Every subcommand reads an optional JSON config (``--config``); flags override
config values.  Reports are single JSON documents written to ``--out`` or
stdout.  Exit codes: 2 config, 3 data, 4 infeasible, 5 backend.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .calibration import CalibrationError, calibrate, ede_gap, initial_alpha
from .errors import BackendError, ConfigError, DataError, KpflError
from .instance import Instance, load_instance, sparsify, write_instance
from .metrics import (Distribution, InequalityParams, alpha as alpha_of, load_distribution,
                      summary, write_distribution)
from .models import ModelRequest, build_model, evaluate_solution
from .penalty import (PenaltyPlan, combined_bound, measure_errors, more_bounds,
                      plan_bounds, practical_exponent_check, recommend_plan, tangent_error_bound,
                      tangent_gap)
from .solvers import SolveResult, SolverBackend, solve, verify_solution
from .solvers.lpformat import export_model
from .synth import synth_instance

log = logging.getLogger("kpfl")

COMPARE_KINDS = ("pmedian", "pcenter", "kpl")


@dataclass
class RunConfig:
    # instance: a directory holding origins/sites/distances.csv, or the three paths
    instance: str | None = None
    origins: str | None = None
    sites: str | None = None
    distances: str | None = None
    distribution: str | None = None
    assignment: str | None = None       # CSV origin_id,site_id,fraction or a solve report
    kind: str = "kpl"
    k: int | None = None
    epsilon: list = field(default_factory=lambda: [-1.0])
    alpha: object = "auto"              # "auto" or a number
    d_max: float | None = None
    capacities: bool | None = None      # None: use capacities when the data has them
    fix_existing: bool = True
    integral_capacitated: bool = False
    penalty_plan: object = None         # inline dict or path to a penalty-plan JSON
    khat_source: str = "K_all"
    khat: float | None = None
    budget: float = 1e-3
    exact_betas: bool = True
    measure: bool = True
    # bounds-only penalty-plan mode
    kappa: float | None = None
    sigma_all: float | None = None
    sigma_star: list | None = None
    widths: list | None = None
    # calibration
    tol: float = 0.05
    max_iters: int = 2
    # solver backend
    backend: dict = field(default_factory=dict)
    # outputs
    out: str | None = None
    format: str | None = None
    dump_distribution: str | None = None
    # synthetic generation
    seed: int = 0
    n_origins: int = 40
    n_sites: int = 12
    n_existing: int = 0
    n_penalized: int = 0
    penalty: float = 1.0
    synth_capacities: bool = False
    extent: float = 5000.0

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self):
        if isinstance(self.epsilon, (int, float)):
            self.epsilon = [float(self.epsilon)]
        self.epsilon = [float(e) for e in self.epsilon]
        if not self.epsilon or any(not e < 0 for e in self.epsilon):
            raise ConfigError("epsilon must be negative")
        if self.alpha != "auto":
            try:
                self.alpha = float(self.alpha)
            except (TypeError, ValueError):
                raise ConfigError("alpha must be 'auto' or a positive number") from None
            if not self.alpha > 0:
                raise ConfigError("alpha must be positive")
        if self.k is not None and (not isinstance(self.k, int) or self.k < 0):
            raise ConfigError("k must be a nonnegative integer")
        if self.kind not in COMPARE_KINDS + ("kpl_sd", "kpl_t", "all"):
            raise ConfigError(f"unknown model kind {self.kind!r}")
        if self.d_max is not None and not self.d_max > 0:
            raise ConfigError("d_max must be positive")
        if self.max_iters < 1 or not self.tol > 0:
            raise ConfigError("max_iters must be >= 1 and tol > 0")
        if self.format not in (None, "lp", "mps"):
            raise ConfigError("format must be lp or mps")
        if not isinstance(self.backend, dict):
            raise ConfigError("backend must be a mapping")

    @property
    def epsilon_0(self) -> float:
        return self.epsilon[0]

    def solver_backend(self) -> SolverBackend:
        try:
            return SolverBackend(**self.backend)
        except TypeError as exc:
            raise ConfigError(f"bad backend config: {exc}") from exc

    def require_k(self) -> int:
        if self.k is None:
            raise ConfigError("k is required")
        return self.k


# -- loading -------------------------------------------------------------------

def _instance(cfg: RunConfig) -> Instance:
    if cfg.instance:
        base = Path(cfg.instance)
        paths = [base / "origins.csv", base / "sites.csv", base / "distances.csv"]
    elif cfg.origins and cfg.sites and cfg.distances:
        paths = [Path(cfg.origins), Path(cfg.sites), Path(cfg.distances)]
    else:
        raise ConfigError("an instance directory or origins/sites/distances paths are required")
    for p in paths:
        if not p.exists():
            raise ConfigError(f"missing input file {p}")
    inst = load_instance(*paths, dense=cfg.d_max is None)
    if cfg.d_max is not None:
        inst = sparsify(inst, cfg.d_max)
    if cfg.capacities is False and inst.capacitated:
        inst = inst.with_sites(dataclasses.replace(s, capacity=None) for s in inst.sites)
    elif cfg.capacities is True and not inst.capacitated:
        raise ConfigError("capacities requested but the site file has none")
    return inst


def _params(cfg: RunConfig, inst: Instance, epsilon: float):
    """Inequality params plus the seeding distribution summary (auto mode)."""
    if cfg.alpha == "auto":
        seed = initial_alpha(inst, epsilon)
        return seed.params, {"source": seed.source, "mean": seed.distribution.mean,
                             "max": seed.distribution.max, "alpha": seed.params.alpha}
    return InequalityParams.from_alpha(cfg.alpha, epsilon), {"source": "fixed", "alpha": cfg.alpha}


def _load_plan(cfg: RunConfig) -> PenaltyPlan | None:
    plan = cfg.penalty_plan
    if plan is None:
        return None
    if isinstance(plan, str):
        try:
            plan = json.loads(Path(plan).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read penalty plan: {exc}") from exc
    if "plan" in plan:
        plan = plan["plan"]
    try:
        return PenaltyPlan.from_dict(plan)
    except TypeError as exc:
        raise ConfigError(f"bad penalty plan: {exc}") from exc


def _model_kind(cfg: RunConfig, inst: Instance) -> str:
    if cfg.kind == "kpl" and inst.capacitated:
        return "kpl_sd"
    return cfg.kind


def _request(cfg: RunConfig, inst: Instance, kind: str, params, backend, plan=None) -> ModelRequest:
    base = "kpl" if kind == "kpl_t" else kind
    req = ModelRequest(base, cfg.require_k(), params=params, fix_existing=cfg.fix_existing,
                       integral_capacitated=cfg.integral_capacitated)
    if kind == "kpl_t":
        plan = plan or _load_plan(cfg)
        if plan is None:
            plan = recommend_plan(inst, req, backend, khat_source=cfg.khat_source,
                                  khat=cfg.khat, budget=cfg.budget, exact=cfg.exact_betas)
        if not math.isclose(plan.kappa, params.kappa, rel_tol=1e-12):
            raise ConfigError("penalty plan kappa differs from the run's kappa")
        req = req.replace(kind="kpl_t", penalty_plan=plan)
    return req


# -- reports -------------------------------------------------------------------

def _stats_block(dist: Distribution, params: InequalityParams) -> dict:
    return summary(dist, params).to_dict(params)


def solution_report(inst: Instance, req: ModelRequest, res: SolveResult, backend: SolverBackend,
                    verify: bool = True) -> dict:
    model = build_model(inst, req)
    rep = {"kind": req.kind, "k": req.k, "result": res.to_dict(),
           "model": {**model.counts(), "coeff_range": model.metadata.get("coeff_range")}}
    if verify:
        v = verify_solution(inst, model, res)
        if not v.ok and backend.kind == "brute_force":
            raise BackendError("solution failed verification: " + "; ".join(v.violations))
        rep["verification"] = v.to_dict()
    params = req.params
    if params is not None:
        ev = evaluate_solution(inst, model, res.open_sites, res.assignment, params)
        rep["stats"] = ev.mode_a.to_dict(params)
        rep["stats_mode_b"] = ev.mode_b.to_dict(params)
        rep["integral"] = ev.integral
    return rep


def _base(cfg: RunConfig, command: str) -> dict:
    return {"tool": "kpfl", "version": __version__, "command": command, "config": cfg.to_dict()}


def _instance_info(inst: Instance) -> dict:
    return {"origins": len(inst.origins), "sites": len(inst.sites), "T": inst.T,
            "existing": int(inst.existing_mask.sum()), "capacitated": inst.capacitated,
            "retained_pairs": len(inst.distances), "warnings": list(inst.warnings)}


def _read_assignment(cfg: RunConfig):
    """Assignment mapping plus, when read from a report, its params and open sites."""
    path = Path(cfg.assignment)
    if not path.exists():
        raise ConfigError(f"missing assignment file {path}")
    if path.suffix == ".json":
        rep = json.loads(path.read_text())
        if "final" in rep:
            rep = rep["final"]
        res = SolveResult.from_dict(rep["result"])
        params = rep.get("stats")
        params = InequalityParams(params["epsilon"], params["alpha"], params["kappa"]) if params else None
        return res.assignment, params, res.open_sites
    import csv
    out = {}
    with path.open(newline="") as fh:
        for row in csv.DictReader(fh):
            out[(row["origin_id"], row["site_id"])] = float(row.get("fraction") or 1.0)
    return out, None, tuple(sorted({s for _, s in out}))


def cmd_score(cfg: RunConfig) -> dict:
    rep = _base(cfg, "score")
    blocks = []
    if cfg.distribution:
        dist = load_distribution(cfg.distribution)
        for eps in cfg.epsilon:
            a = alpha_of(dist) if cfg.alpha == "auto" else cfg.alpha
            blocks.append(_stats_block(dist, InequalityParams.from_alpha(a, eps)))
    elif cfg.assignment:
        inst = _instance(cfg)
        assignment, rparams, open_sites = _read_assignment(cfg)
        D = np.where(np.isfinite(inst.D), inst.D, 0.0)
        from .models import assignment_matrix
        dist = Distribution((assignment_matrix(inst, assignment) * D).sum(axis=1), inst.populations)
        for eps in cfg.epsilon:
            if cfg.alpha != "auto":
                params = InequalityParams.from_alpha(cfg.alpha, eps)
            elif rparams is not None:
                params = InequalityParams.from_alpha(rparams.alpha, eps)
            else:
                params = InequalityParams.from_alpha(alpha_of(dist), eps)
            ev = evaluate_solution(inst, None, open_sites, assignment, params)
            blocks.append({**ev.mode_a.to_dict(params), "mode_b": ev.mode_b.to_dict(params)})
    else:
        raise ConfigError("score needs a distribution or an instance plus assignment")
    if cfg.dump_distribution:
        write_distribution(dist, cfg.dump_distribution)
    rep["stats"] = blocks
    return rep


def cmd_solve(cfg: RunConfig) -> dict:
    inst = _instance(cfg)
    backend = cfg.solver_backend()
    params, seed = _params(cfg, inst, cfg.epsilon_0)
    rep = _base(cfg, "solve")
    rep["instance"] = _instance_info(inst)
    rep["params"] = params.to_dict()
    rep["seed_distribution"] = seed
    if cfg.kind == "all":
        if inst.capacitated:
            raise ConfigError("kind=all compares uncapacitated models; drop capacities")
        runs = {}
        for kind in COMPARE_KINDS:
            req = _request(cfg, inst, kind, params, backend)
            runs[kind] = solution_report(inst, req, solve(inst, req, backend), backend)
        rep["runs"] = runs
        rep["comparison"] = comparison(runs, backend)
        return rep
    req = _request(cfg, inst, _model_kind(cfg, inst), params, backend)
    res = solve(inst, req, backend)
    rep.update(solution_report(inst, req, res, backend))
    if req.penalty_plan is not None:
        rep["penalty_plan"] = plan_report(req.penalty_plan, seed_dist(inst), cfg.epsilon_0)
    if cfg.dump_distribution:
        write_distribution(Distribution(res.distances(inst), inst.populations), cfg.dump_distribution)
    return rep


def comparison(runs: dict, backend: SolverBackend) -> dict:
    table = {k: {m: r["stats"][m] for m in ("mean", "max", "stdev", "kp_ede")} for k, r in runs.items()}
    slack = 0.0 if backend.kind == "brute_force" else backend.mip_gap

    def le(a, b):
        return a <= b * (1 + slack) + 1e-9 * max(1.0, abs(b)) if slack else a <= b

    others = lambda k: [o for o in table if o != k]
    checks = {
        "kpl_kp_ede_le_others": all(le(table["kpl"]["kp_ede"], table[o]["kp_ede"]) for o in others("kpl")),
        "pmedian_mean_le_others": all(le(table["pmedian"]["mean"], table[o]["mean"]) for o in others("pmedian")),
        "pcenter_max_le_others": all(le(table["pcenter"]["max"], table[o]["max"]) for o in others("pcenter")),
    }
    return {"table": table, "dominance": checks}


def seed_dist(inst: Instance) -> Distribution:
    from .instance import nearest_assignment_distribution
    return nearest_assignment_distribution(inst, "existing" if inst.existing_mask.any() else "all")


def plan_report(plan: PenaltyPlan, dist: Distribution, epsilon: float) -> dict:
    vals = sorted(set(plan.penalties.values()))
    checks = practical_exponent_check(plan, dist, epsilon)
    return {
        "K_all": plan.K_all, "K_rem": plan.K_rem, "sigma_all": plan.sigma_all, "N": plan.N,
        "c": vals[0] if len(vals) == 1 else vals,
        "w": plan.w, "betas": list(plan.betas), "khat": plan.khat, "khat_source": plan.khat_source,
        "exact": plan.exact, "bounds": plan_bounds(plan),
        "checks": {"sigma_max_le_mu": checks["sigma_max_le_mu"],
                   "exponent_le_abs_eps": checks["exponent_le_abs_eps"]},
        "diagnostics": checks, "notes": list(plan.notes), "plan": plan.to_dict(),
    }


def bounds_table(kappa: float, sigma_all: float, sigma_star, widths) -> dict:
    hat = [{"sigma_star": s, "bound": more_bounds(sigma_all, s, kappa)[0]} for s in sigma_star]
    tangent = [{"w": w, "A": tangent_gap(w), "bound": tangent_error_bound(w, 0.0, 0.0, kappa).case}
               for w in widths]
    combined = [{"sigma_star": s, "w": w, "bound": combined_bound(sigma_all, s, w, kappa)}
                for s in sigma_star for w in [None] + list(widths)]
    return {"kappa": kappa, "sigma_all": sigma_all, "hat": hat, "tangent": tangent,
            "combined": combined, "outer": more_bounds(sigma_all, sigma_all, kappa)[1]}


def cmd_penalty_plan(cfg: RunConfig) -> dict:
    rep = _base(cfg, "penalty-plan")
    has_instance = cfg.instance or (cfg.origins and cfg.sites and cfg.distances)
    if not has_instance:
        if cfg.kappa is None or cfg.sigma_all is None:
            raise ConfigError("penalty-plan needs an instance, or kappa and sigma_all for a bounds table")
        if not cfg.kappa < 0:
            raise ConfigError("kappa must be negative")
        rep["bounds_table"] = bounds_table(cfg.kappa, cfg.sigma_all, cfg.sigma_star or [cfg.sigma_all],
                                           cfg.widths or [1e-4, 1e-3, 1e-2])
        return rep
    inst = _instance(cfg)
    backend = cfg.solver_backend()
    params, seed = _params(cfg, inst, cfg.epsilon_0)
    base = ModelRequest("kpl_sd" if inst.capacitated else "kpl", cfg.require_k(), params=params,
                        fix_existing=cfg.fix_existing)
    plan = _load_plan(cfg)
    if plan is None:
        if not inst.penalties:
            raise ConfigError("empty penalized set")
        plan = recommend_plan(inst, base, backend, khat_source=cfg.khat_source, khat=cfg.khat,
                              budget=cfg.budget, exact=cfg.exact_betas)
    rep["params"] = params.to_dict()
    rep["seed_distribution"] = seed
    rep.update(plan_report(plan, seed_dist(inst), cfg.epsilon_0))
    if cfg.measure and not inst.capacitated:
        req = ModelRequest("kpl_t", base.k, params=params, penalty_plan=plan, fix_existing=cfg.fix_existing)
        try:
            rep["measured"] = measure_errors(inst, req, plan.sigma_all).to_dict()
        except BackendError as exc:
            rep["measured"] = {"skipped": str(exc)}
    return rep


def cmd_calibrate(cfg: RunConfig) -> dict:
    inst = _instance(cfg)
    backend = cfg.solver_backend()
    kind = "kpl_sd" if inst.capacitated else "kpl"
    if cfg.kind not in ("kpl", "kpl_sd"):
        raise ConfigError("calibrate runs kpl or kpl_sd")
    params, seed = _params(cfg, inst, cfg.epsilon_0)
    req = ModelRequest(kind, cfg.require_k(), params=params, fix_existing=cfg.fix_existing,
                       integral_capacitated=cfg.integral_capacitated)
    rep = _base(cfg, "calibrate")
    rep["seed_distribution"] = seed
    try:
        run = calibrate(inst, req, backend, cfg.epsilon_0, cfg.tol, cfg.max_iters,
                        seed_alpha=None if cfg.alpha == "auto" else cfg.alpha)
    except CalibrationError as exc:
        exc.args = (f"{exc} (after {len(exc.records)} completed iteration(s))",)
        raise
    rep["records"] = [r.to_dict() for r in run.records]
    last = run.records[-1]
    final_req = req.replace(params=InequalityParams.from_alpha(last.alpha_in, cfg.epsilon_0))
    rep["final"] = solution_report(inst, final_req, run.final, backend)
    if len(run.results) > 1:
        rep["ede_gap"] = ede_gap(inst, run.results[-2], run.results[-1], final_req.params.kappa)
    return rep


def cmd_export(cfg: RunConfig) -> dict:
    inst = _instance(cfg)
    if not cfg.out:
        raise ConfigError("export needs --out")
    fmt = cfg.format or ("mps" if cfg.out.endswith(".mps") else "lp")
    backend = cfg.solver_backend()
    kind = _model_kind(cfg, inst)
    params, _ = _params(cfg, inst, cfg.epsilon_0)
    model = build_model(inst, _request(cfg, inst, kind, params, backend))
    path = export_model(model, fmt, cfg.out)
    return {**_base(cfg, "export"), "path": str(path), "format": fmt, "model": model.counts(),
            "coeff_range": model.metadata.get("coeff_range"), "_no_out": True}


def cmd_synth(cfg: RunConfig) -> dict:
    if not cfg.out:
        raise ConfigError("synth needs --out DIRECTORY")
    inst = synth_instance(cfg.seed, cfg.n_origins, cfg.n_sites, cfg.k, n_existing=cfg.n_existing,
                          capacities=cfg.synth_capacities, n_penalized=cfg.n_penalized,
                          penalty=cfg.penalty, extent=cfg.extent)
    paths = write_instance(inst, cfg.out)
    return {**_base(cfg, "synth"), "files": [str(p) for p in paths], "instance": _instance_info(inst),
            "_no_out": True}


COMMANDS = {"score": cmd_score, "solve": cmd_solve, "calibrate": cmd_calibrate,
            "penalty-plan": cmd_penalty_plan, "export": cmd_export, "synth": cmd_synth}


# -- argument parsing ------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    g = common.add_argument_group("global")
    g.add_argument("--config", help="JSON config file")
    g.add_argument("--epsilon", type=float, action="append", help="inequality aversion (< 0); repeatable")
    g.add_argument("--k", type=int, help="number of candidate sites to open")
    g.add_argument("--backend", choices=["brute_force", "external"])
    g.add_argument("--solver-command", help="external solver command template")
    g.add_argument("--mip-gap", type=float)
    g.add_argument("--time-limit", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", help="report path (export: model path, synth: directory)")
    g.add_argument("-v", "--verbose", action="store_true")
    d = common.add_argument_group("data")
    d.add_argument("--instance", help="directory with origins.csv, sites.csv, distances.csv")
    d.add_argument("--origins")
    d.add_argument("--sites")
    d.add_argument("--distances")
    d.add_argument("--distribution", help="CSV value_meters,weight")
    d.add_argument("--assignment", help="CSV origin_id,site_id,fraction or a solve report JSON")
    d.add_argument("--alpha", help="'auto' or a fixed per-meter value")
    d.add_argument("--d-max", type=float)
    d.add_argument("--kind", choices=list(COMPARE_KINDS) + ["kpl_sd", "kpl_t", "all"])
    d.add_argument("--no-fix-existing", dest="fix_existing", action="store_false")
    d.add_argument("--plan", dest="penalty_plan", help="penalty-plan JSON")
    d.add_argument("--format", choices=["lp", "mps"])
    d.add_argument("--max-iters", type=int)
    d.add_argument("--tol", type=float)
    d.add_argument("--dump-distribution")
    d.add_argument("--n-origins", type=int)
    d.add_argument("--n-sites", type=int)
    d.add_argument("--n-existing", type=int)
    d.add_argument("--n-penalized", type=int)
    d.add_argument("--kappa", type=float)
    d.add_argument("--sigma-all", type=float)

    p = argparse.ArgumentParser(prog="kpfl", parents=[common], description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"kpfl {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], argument_default=S)
    return p


BACKEND_FLAGS = {"backend": "kind", "solver_command": "command", "mip_gap": "mip_gap",
                 "time_limit": "time_limit"}


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    args = vars(ns).copy()
    args.pop("command")
    args.pop("verbose", None)
    data = {}
    if "config" in args:
        try:
            data = json.loads(Path(args.pop("config")).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    backend = dict(data.get("backend") or {})
    for flag, key in BACKEND_FLAGS.items():
        if flag in args:
            backend[key] = args.pop(flag)
    if backend.get("command") and "kind" not in backend:
        backend["kind"] = "external"
    data["backend"] = backend
    if "alpha" in args and args["alpha"] != "auto":
        try:
            args["alpha"] = float(args["alpha"])
        except ValueError:
            raise ConfigError("alpha must be 'auto' or a number") from None
    data.update(args)
    return RunConfig.from_dict(data)


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = _parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(ns, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(ns)
        report = COMMANDS[ns.command](cfg)
    except KpflError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OverflowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    no_out = report.pop("_no_out", False)
    text = json.dumps(report, indent=2, sort_keys=False, default=_json_default, allow_nan=True) + "\n"
    if cfg.out and not no_out:
        try:
            Path(cfg.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            print(f"error: cannot write {cfg.out}: {exc}", file=sys.stderr)
            return ConfigError.exit_code
    else:
        stdout.write(text)
    return 0


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (tuple, set, np.ndarray)):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
