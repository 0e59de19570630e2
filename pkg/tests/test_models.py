import math

import numpy as np
import pytest

from kpfl.errors import ConfigError, DataError
from kpfl.metrics import Distribution, InequalityParams, kp_ede, linear_proxy
from kpfl.models import (AssignmentError, ModelRequest, build_model, build_pmedian,
                         evaluate_solution, kp_coefficients)
from kpfl.penalty import PenaltyPlan, rho, tangent_value
from kpfl.solvers import brute_force_solve
from kpfl.synth import synth_instance

from conftest import TINY_D, tiny_instance

E = math.e


def nearest_values(inst, open_idx):
    """Column values for the nearest-open assignment of ``open_idx``."""
    vals = {f"x_{j}": 1.0 for j in open_idx}
    for i in range(len(inst.origins)):
        j = min(open_idx, key=lambda j: (inst.D[i, j], j))
        vals[f"y_{i}_{j}"] = 1.0
    return vals


def test_pmedian_counts(tiny):
    m = build_pmedian(tiny, ModelRequest("pmedian", 1))
    c = m.counts()
    assert (c["x"], c["y"], c["aux"], c["constraints"]) == (3, 12, 0, 17)
    assert len(m.variables) == 15
    names = [v.name for v in m.variables]
    assert names[:3] == ["x_0", "x_1", "x_2"] and names[3] == "y_0_0" and names[-1] == "y_3_2"


def test_all_existing_k0_assignment_only():
    inst = tiny_instance(existing=[True, True, True])
    m = build_model(inst, ModelRequest("pmedian", 0))
    assert all(m.variable(f"x_{j}").lb == 1 for j in range(3))
    assert not any(c.name == "count" for c in m.constraints)
    r = brute_force_solve(inst, ModelRequest("pmedian", 0))
    assert r.objective == pytest.approx(0 + 0 + 100 + 100)


def test_fixed_existing_excluded_from_count():
    inst = tiny_instance(existing=[False, True, False])
    m = build_model(inst, ModelRequest("pmedian", 1))
    count = next(c for c in m.constraints if c.name == "count")
    assert [n for n, _ in count.terms] == ["x_0", "x_2"]
    assert m.variable("x_1").lb == 1.0
    relocate = build_model(inst, ModelRequest("pmedian", 1, fix_existing=False))
    assert [n for n, _ in next(c for c in relocate.constraints if c.name == "count").terms] == ["x_0", "x_1", "x_2"]


def test_k_too_large(tiny):
    with pytest.raises(ConfigError):
        build_model(tiny, ModelRequest("pmedian", 4))


def test_capacitated_requires_kpl_sd():
    inst = tiny_instance(capacities=[2, 2, 4])
    with pytest.raises(ConfigError):
        build_model(inst, ModelRequest("pmedian", 1))
    with pytest.raises(ConfigError):
        build_model(tiny_instance(), ModelRequest("kpl_sd", 1, params=InequalityParams(-1, 0.005, -0.005)))


def test_pcenter_tiny(tiny):
    req = ModelRequest("pcenter", 1)
    m = build_model(tiny, req)
    assert m.variable("z").ub == 200
    r = brute_force_solve(tiny, req)
    assert r.open_sites == ("s1",) and r.objective == 100
    vals = nearest_values(tiny, [0])
    vals["z"] = 100.0
    assert m.violations(vals) == [] and m.evaluate(vals) == 100


def test_pcenter_single_origin_and_constant():
    inst = type(tiny_instance()).from_arrays([5], [[30.0, 10.0, 20.0]])
    assert brute_force_solve(inst, ModelRequest("pcenter", 1)).objective == 10
    inst = type(tiny_instance()).from_arrays([1, 2, 3], np.full((3, 4), 75.0))
    r = brute_force_solve(inst, ModelRequest("pcenter", 2))
    assert r.objective == 75 and r.open_sites == ("s000", "s001")


def test_kpl_tiny_singletons(tiny, kp005):
    req = ModelRequest("kpl", 1, params=kp005)
    m = build_model(tiny, req)
    proxies = [m.evaluate(nearest_values(tiny, [j])) for j in range(3)]
    assert proxies == pytest.approx([4 * math.exp(0.5), math.exp(0.25) + math.exp(0.375) + math.exp(0.625)
                                     + math.exp(0.75), 2 + 2 * E], rel=1e-14)
    assert proxies == pytest.approx([6.5949, 6.7242, 7.4366], abs=1e-4)
    r = brute_force_solve(tiny, req)
    assert r.open_sites == ("s1",) and r.kp_ede == pytest.approx(100, rel=1e-14)
    assert m.metadata["coeff_range"] == pytest.approx([1.0, E], rel=1e-15)


def test_kpl_ranking_approaches_pmedian():
    inst = synth_instance(5, 20, 6)
    kp = InequalityParams.from_alpha(1e-9, -1.0)
    mk = build_model(inst, ModelRequest("kpl", 2, params=kp))
    mp = build_model(inst, ModelRequest("pmedian", 2))
    from itertools import combinations
    subsets = list(combinations(range(6), 2))
    pm = [mp.evaluate(nearest_values(inst, list(s))) for s in subsets]
    kv = [mk.evaluate(nearest_values(inst, list(s))) for s in subsets]
    assert np.argsort(pm, kind="stable").tolist() == np.argsort(kv, kind="stable").tolist()


def test_kpl_symmetric_tie_break():
    inst = type(tiny_instance()).from_arrays([3, 3, 3], np.full((3, 5), 40.0))
    r = brute_force_solve(inst, ModelRequest("kpl", 2, params=InequalityParams.from_alpha(0.01, -1)))
    assert r.open_sites == ("s000", "s001")


def test_coefficient_overflow_error(tiny):
    with pytest.raises(DataError, match="exceeds"):
        kp_coefficients(tiny, -5.0)


def test_kpl_sd_structure(kp005):
    inst = tiny_instance(capacities=[2, 2, 4])
    m = build_model(inst, ModelRequest("kpl_sd", 2, params=kp005))
    assert all(not m.variable(f"y_{i}_{j}").integer for i in range(4) for j in range(3))
    cap0 = next(c for c in m.constraints if c.name == "cap_0")
    assert cap0.terms[-1] == ("x_0", -2.0) and cap0.sense == "<="
    assert not any(c.name.startswith("link") for c in m.constraints)


def test_kpl_sd_slack_matches_kpl(tiny, kp005):
    big = tiny_instance(capacities=[10, 10, 10])
    a = brute_force_solve(big, ModelRequest("kpl_sd", 2, params=kp005))
    b = brute_force_solve(tiny, ModelRequest("kpl", 2, params=kp005))
    assert a.open_sites == b.open_sites and a.objective == pytest.approx(b.objective, rel=1e-12)
    assert all(y == 1.0 for y in a.assignment.values())


def test_kpl_sd_total_capacity_error(kp005):
    with pytest.raises(DataError, match="total capacity"):
        build_model(tiny_instance(capacities=[1, 1, 1]), ModelRequest("kpl_sd", 2, params=kp005))


def _plan(penalties, kappa, k, khat, betas):
    return PenaltyPlan(penalties, kappa, k, khat, "user", tuple(betas))


def test_kpl_t_empty_penalty_set(tiny, kp005):
    plan = _plan({}, kp005.kappa, 1, 100.0, [0.0])
    mt = build_model(tiny, ModelRequest("kpl_t", 1, params=kp005, penalty_plan=plan))
    mk = build_model(tiny, ModelRequest("kpl", 1, params=kp005))
    vals = nearest_values(tiny, [1])
    base = mk.evaluate(vals)
    vals.update(q=0.0, v=tangent_value(0.0, plan.betas))
    assert vals["v"] == 1.0
    assert mt.evaluate(vals) == pytest.approx(base, rel=1e-14)
    assert mt.violations(vals) == []


def test_kpl_t_single_site_exact_increment(tiny, kp005):
    c, kappa, khat = 50.0, kp005.kappa, 100.0
    plan = _plan({"s2": c}, kappa, 1, khat, [0.0, -kappa * c])
    mt = build_model(tiny, ModelRequest("kpl_t", 1, params=plan and kp005, penalty_plan=plan))
    mk = build_model(tiny, ModelRequest("kpl", 1, params=kp005))
    vals = nearest_values(tiny, [1])
    base = mk.evaluate(vals)
    q = -kappa * c
    vals.update(q=q, v=tangent_value(q, plan.betas))
    assert mt.violations(vals) == []
    assert mt.evaluate(vals) - base == pytest.approx(rho(khat, c, kappa, 4), rel=1e-12)


def test_kpl_t_coverage_error(tiny, kp005):
    with pytest.raises(ConfigError, match="linearization range does not cover maximum penalty"):
        PenaltyPlan({"s2": 50.0}, kp005.kappa, 1, 100.0, "user", (0.0, 0.1))


def test_kpl_t_penalty_must_be_candidate(kp005):
    inst = tiny_instance(existing=[False, True, False])
    plan = _plan({"s2": 10.0}, kp005.kappa, 1, 100.0, [0.0, 0.05])
    with pytest.raises(ConfigError):
        build_model(inst, ModelRequest("kpl_t", 1, params=kp005, penalty_plan=plan))


def test_kpl_t_moves_off_penalized_site(tiny, kp005):
    # s1 gives EDE 100; runner-up s2 has EDE 200 ln(6.7242/4) ~ 103.9 < 100 + 50
    khat = brute_force_solve(tiny, ModelRequest("kpl", 1, params=kp005)).kp_ede
    plan = _plan({"s1": 50.0}, kp005.kappa, 1, khat, [0.0, 0.25])
    r = brute_force_solve(tiny, ModelRequest("kpl_t", 1, params=kp005, penalty_plan=plan))
    assert r.open_sites == ("s2",)
    small = _plan({"s1": 2.0}, kp005.kappa, 1, khat, [0.0, 0.01])
    assert brute_force_solve(tiny, ModelRequest("kpl_t", 1, params=kp005, penalty_plan=small)).open_sites == ("s1",)


def test_evaluate_integral_modes_agree(tiny, kp005):
    r = brute_force_solve(tiny, ModelRequest("kpl", 2, params=kp005))
    ev = evaluate_solution(tiny, None, r.open_sites, r.assignment, kp005)
    assert ev.integral
    assert ev.mode_a.kp_ede == pytest.approx(ev.mode_b.kp_ede, rel=1e-12)


def test_evaluate_split_demand_modes():
    inst = type(tiny_instance()).from_arrays([1], [[0.0, 200.0]], capacities=[1, 1])
    kp = InequalityParams(-1.0, 0.005, -0.005)
    ev = evaluate_solution(inst, None, ("s000", "s001"), {("r000", "s000"): 0.5, ("r000", "s001"): 0.5}, kp)
    assert ev.mode_a.kp_ede == pytest.approx(100, rel=1e-14)
    assert ev.mode_b.kp_ede == pytest.approx(200 * math.log((1 + E) / 2), rel=1e-14)
    assert not ev.integral


def test_evaluate_split_equal_distances():
    inst = type(tiny_instance()).from_arrays([4], [[60.0, 60.0, 60.0]], capacities=[4, 4, 4])
    kp = InequalityParams(-1.0, 0.01, -0.01)
    ev = evaluate_solution(inst, None, ("s000", "s001"), {("r000", "s000"): 0.25, ("r000", "s001"): 0.75}, kp)
    assert ev.mode_a.kp_ede == pytest.approx(60) and ev.mode_b.kp_ede == pytest.approx(60)


@pytest.mark.parametrize("assignment, message", [
    ({("r1", "s1"): 1.0, ("r2", "s1"): 0.9, ("r3", "s1"): 1.0, ("r4", "s1"): 1.0}, "r2"),
    ({("r1", "s2"): 1.0, ("r2", "s1"): 1.0, ("r3", "s1"): 1.0, ("r4", "s1"): 1.0}, r"\(r1, s2\)"),
])
def test_evaluate_infeasible(tiny, kp005, assignment, message):
    with pytest.raises(AssignmentError, match=message):
        evaluate_solution(tiny, None, ("s1",), assignment, kp005)


def test_evaluate_capacity_violation(kp005):
    inst = tiny_instance(capacities=[2, 2, 4])
    with pytest.raises(AssignmentError, match="capacity"):
        evaluate_solution(inst, None, ("s1",), {(r, "s1"): 1.0 for r in ("r1", "r2", "r3", "r4")}, kp005)


def test_nonlinear_equals_proxy_on_integral_assignments():
    rng = np.random.default_rng(11)
    for t in range(200):
        inst = synth_instance(int(rng.integers(1 << 30)), int(rng.integers(2, 30)), int(rng.integers(1, 8)))
        kappa = -float(rng.uniform(1e-4, 1.5e-3))
        choice = rng.integers(0, len(inst.sites), size=len(inst.origins))
        z = inst.D[np.arange(len(inst.origins)), choice]
        p = inst.populations
        nonlinear = math.fsum(p * np.exp(-kappa * z))
        C = kp_coefficients(inst, kappa)
        proxy = math.fsum(C[np.arange(len(inst.origins)), choice])
        assert proxy == pytest.approx(nonlinear, rel=1e-12)


def test_builds_deterministic(tiny, kp005):
    for kind in ("pmedian", "pcenter", "kpl"):
        req = ModelRequest(kind, 2, params=kp005)
        assert build_model(tiny, req).canonical() == build_model(tiny_instance(), req).canonical()


def test_dominance_on_tiny_like_instance():
    inst = synth_instance(21, 30, 8)
    kp = InequalityParams.from_alpha(1 / 1500, -2.0)
    runs = {kind: brute_force_solve(inst, ModelRequest(kind, 2, params=kp)) for kind in ("pmedian", "pcenter", "kpl")}
    dist = {k: Distribution(r.distances(inst), inst.populations) for k, r in runs.items()}
    proxy = {k: linear_proxy(d, kp.kappa) for k, d in dist.items()}
    assert proxy["kpl"] <= proxy["pmedian"] and proxy["kpl"] <= proxy["pcenter"]
    assert dist["pmedian"].mean <= min(dist["kpl"].mean, dist["pcenter"].mean)
    assert dist["pcenter"].max <= min(dist["kpl"].max, dist["pmedian"].max)
