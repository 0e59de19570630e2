import itertools
import math
import re

import numpy as np
import pytest

from kpfl.errors import BackendError, ConfigError, DataError, InfeasibleError
from kpfl.metrics import InequalityParams
from kpfl.models import ModelRequest, MilpModel, Variable, build_model
from kpfl.penalty import make_plan, rho
from kpfl.solvers import (SolveResult, SolverBackend, VerificationError, brute_force_solve,
                          export_model, external_solve, parse_solution, read_lp, read_mps, solve,
                          to_lp, to_mps, transportation_solve, verify_solution)
from kpfl.synth import synth_instance

from conftest import highs_command, scripted_command, tiny_instance, TINY_D


def test_brute_force_tiny_examples(tiny, kp005):
    r = brute_force_solve(tiny, ModelRequest("kpl", 1, params=kp005))
    assert r.open_sites == ("s1",) and r.kp_ede == pytest.approx(100, rel=1e-14)
    r = brute_force_solve(tiny, ModelRequest("pcenter", 1))
    assert r.open_sites == ("s1",) and r.objective == 100
    r = brute_force_solve(tiny, ModelRequest("pmedian", 3))
    assert r.open_sites == ("s1", "s2", "s3")
    assert r.objective == 0 + 0 + 100 + 100
    assert verify_solution(tiny, build_model(tiny, ModelRequest("pmedian", 3)), r).ok


def test_brute_force_lexicographic_tie_break(tiny):
    # p-median k=1: all three sites cost 400
    r = brute_force_solve(tiny, ModelRequest("pmedian", 1))
    assert r.open_sites == ("s1",) and r.objective == 400


def test_brute_force_cap(tiny):
    with pytest.raises(BackendError, match="enumeration cap"):
        brute_force_solve(tiny, ModelRequest("pmedian", 2), cap=2)


def test_brute_force_infeasible_capacity(kp005):
    inst = tiny_instance(capacities=[1, 1, 1])
    with pytest.raises(InfeasibleError):
        brute_force_solve(inst, ModelRequest("kpl_sd", 2, params=kp005))


def test_brute_force_parallel_determinism():
    inst = synth_instance(3, 30, 16, 5)
    kp = InequalityParams.from_alpha(1 / 1500, -1.0)
    for kind in ("pmedian", "kpl"):
        req = ModelRequest(kind, 5, params=kp)
        a = brute_force_solve(inst, req)
        b = brute_force_solve(inst, req, n_jobs=3)
        assert (a.open_sites, a.objective, a.assignment) == (b.open_sites, b.objective, b.assignment)


def test_brute_force_kpl_t_objective_identity():
    inst = synth_instance(4, 25, 9, 3, n_penalized=3)
    kp = InequalityParams.from_alpha(1 / 1500, -1.0)
    plan = make_plan({s: 20.0 + 7 * i for i, s in enumerate(sorted(inst.penalties))}, kp.kappa, 3, 1000.0)
    r = brute_force_solve(inst, ModelRequest("kpl_t", 3, params=kp, penalty_plan=plan))
    sigma = math.fsum(plan.penalties[s] for s in r.open_sites if s in plan.penalties)
    assert r.objective == r.values["proxy"] + rho(plan.khat, sigma, kp.kappa, inst.T)


# -- transportation ----------------------------------------------------------

def vertex_optimum(p, caps, cost):
    """Minimum over basic feasible solutions of the capacitated transportation LP."""
    n_r, n_s = cost.shape
    n = n_r * n_s + n_s
    A = np.zeros((n_r + n_s, n))
    for i in range(n_r):
        A[i, i * n_s:(i + 1) * n_s] = 1
    for j in range(n_s):
        A[n_r + j, j:n_r * n_s:n_s] = 1
        A[n_r + j, n_r * n_s + j] = 1
    b = np.concatenate([p, caps]).astype(float)
    c = np.concatenate([cost.ravel(), np.zeros(n_s)])  # cost per unit of flow
    best = math.inf
    for basis in itertools.combinations(range(n), n_r + n_s):
        B = A[:, basis]
        if abs(np.linalg.det(B)) < 1e-9:
            continue
        xb = np.linalg.solve(B, b)
        if (xb < -1e-9).any():
            continue
        best = min(best, float(c[list(basis)] @ xb))
    return best


def _check_transport(p, caps, cost):
    inst = __import__("kpfl").Instance.from_arrays(p, np.ones_like(cost), capacities=caps)
    Y = transportation_solve(inst.site_ids, inst, cost)
    assert np.allclose(Y.sum(axis=1), 1, atol=1e-12)
    assert (p @ Y <= caps + 1e-9).all() and (Y >= 0).all()
    got = float(np.sum(p[:, None] * Y * cost))
    assert got == pytest.approx(vertex_optimum(p, caps, cost), abs=1e-9)
    assert np.count_nonzero(Y > 1e-12) <= len(p) + len(caps) - 1


def test_transportation_all_small_2x2():
    for p in itertools.product((1, 2), repeat=2):
        for caps in itertools.product((1, 2, 3), repeat=2):
            if sum(caps) < sum(p):
                continue
            for cost in itertools.product((0, 1, 2), repeat=4):
                _check_transport(np.array(p, float), np.array(caps, float), np.array(cost, float).reshape(2, 2))


def test_transportation_random_3x3():
    rng = np.random.default_rng(11)
    done = 0
    while done < 300:
        p = rng.integers(1, 5, 3).astype(float)
        caps = rng.integers(1, 7, 3).astype(float)
        if caps.sum() < p.sum():
            continue
        _check_transport(p, caps, rng.integers(0, 10, (3, 3)).astype(float))
        done += 1


def test_transportation_forced_split():
    p = np.array([3.0, 3.0])
    caps = np.array([3.0, 3.0])
    cost = np.array([[1.0, 4.0], [2.0, 9.0]])
    inst = __import__("kpfl").Instance.from_arrays(p, cost, capacities=caps)
    Y = transportation_solve(inst.site_ids, inst, cost)
    # r2 prefers s1 more strongly (7 > 3), so r1 is pushed to s2
    assert np.array_equal(Y, [[0, 1], [1, 0]])
    assert float(np.sum(p[:, None] * Y * cost)) == 3 * 4 + 3 * 2


def test_transportation_fractional_split():
    p = np.array([3.0, 1.0])
    caps = np.array([2.0, 4.0])
    cost = np.array([[1.0, 5.0], [1.0, 2.0]])
    inst = __import__("kpfl").Instance.from_arrays(p, cost, capacities=caps)
    Y = transportation_solve(inst.site_ids, inst, cost)
    # r1 saves 4 per person at s1, r2 only 1, so r1 fills s1
    assert Y[0] == pytest.approx([2 / 3, 1 / 3]) and Y[1] == pytest.approx([0, 1])


def test_transportation_slack_and_single_site():
    inst = tiny_instance(capacities=[10, 10, 10])
    Y = transportation_solve(inst.site_ids, inst, TINY_D)
    assert np.array_equal(Y, [[0, 0, 1], [0, 0, 1], [1, 0, 0], [1, 0, 0]])
    Y = transportation_solve(["s2"], inst, TINY_D)
    assert np.array_equal(Y[:, 1], np.ones(4))
    with pytest.raises(InfeasibleError):
        transportation_solve(["s1"], tiny_instance(capacities=[3, 3, 3]), TINY_D)


def test_capacitated_tiny(kp005):
    inst = tiny_instance(capacities=[2, 2, 4])
    r = brute_force_solve(inst, ModelRequest("kpl_sd", 2, params=kp005))
    assert r.open_sites == ("s1", "s3")
    assert r.assignment == {("r1", "s3"): 1.0, ("r2", "s3"): 1.0, ("r3", "s1"): 1.0, ("r4", "s1"): 1.0}
    assert verify_solution(inst, build_model(inst, ModelRequest("kpl_sd", 2, params=kp005)), r).ok


# -- export ------------------------------------------------------------------

def test_lp_tiny_pmedian_counts_and_round_trip(tiny, tmp_path):
    m = build_model(tiny, ModelRequest("pmedian", 1))
    path = export_model(m, "lp", tmp_path / "m.lp")
    text = path.read_text()
    assert len(m.variables) == 15 and len(m.constraints) == 17
    assert read_lp(text) == m
    assert to_lp(read_lp(text)) == text


def _normalized(m):
    rows = sorted((c.name, c.sense, c.rhs, tuple(sorted(c.terms))) for c in m.constraints)
    return m.variables, tuple(sorted(m.objective)), rows, m.objective_offset, m.metadata


def test_mps_round_trip(tiny, kp005):
    for req in (ModelRequest("pcenter", 2), ModelRequest("kpl", 1, params=kp005)):
        m = build_model(tiny, req)
        text = to_mps(m)
        back = read_mps(text)
        assert to_mps(back) == text
        assert _normalized(back) == _normalized(m)


def test_export_is_deterministic(tiny, kp005):
    m = build_model(tiny, ModelRequest("kpl", 2, params=kp005))
    assert to_lp(m) == to_lp(build_model(tiny, ModelRequest("kpl", 2, params=kp005)))


def test_coeff_range_comment(tiny, kp005):
    text = to_lp(build_model(tiny, ModelRequest("kpl", 1, params=kp005)))
    line = next(l for l in text.splitlines() if "coeff_range" in l)
    lo, hi = map(float, line.split()[-2:])
    assert lo == 1.0 and hi == pytest.approx(math.e, rel=1e-15)
    assert re.search(r"coeff_range 1\.0+e\+00 2\.71828182845904\d+e\+00", line)


def test_seventeen_significant_digits(tiny, kp005):
    text = to_lp(build_model(tiny, ModelRequest("kpl", 1, params=kp005)))
    for tok in re.findall(r"\d\.\d+e[+-]\d+", text):
        assert len(tok.split("e")[0].replace(".", "")) == 17


def test_export_errors(tmp_path):
    m = MilpModel((Variable("x_0", 0, 1, True),), (), (), metadata={"kind": "pmedian"})
    with pytest.raises(DataError, match="no objective terms"):
        to_lp(m)
    big = MilpModel((Variable("x_0", 0, 1, True),), (("x_0", 1e301),), (), metadata={"kind": "pmedian"})
    with pytest.raises(DataError, match="exceeds magnitude"):
        to_mps(big)
    ok = MilpModel((Variable("x_0", 0, 1, True),), (("x_0", 1.0),), (), metadata={"kind": "pmedian"})
    with pytest.raises(ConfigError):
        export_model(ok, "lp", tmp_path / "missing" / "dir" / "m.lp")
    with pytest.raises(ConfigError):
        export_model(ok, "xml", tmp_path / "m.xml")


# -- external ----------------------------------------------------------------

def _highs(fmt="lp", gap=1e-9):
    return SolverBackend("external", highs_command(), mip_gap=gap, format=fmt)


@pytest.mark.parametrize("fmt", ["lp", "mps"])
def test_external_matches_brute_force_tiny(tiny, kp005, fmt):
    for req in (ModelRequest("pmedian", 2), ModelRequest("pcenter", 1), ModelRequest("kpl", 1, params=kp005)):
        ref = brute_force_solve(tiny, req)
        got = solve(tiny, req, _highs(fmt))
        assert got.objective == pytest.approx(ref.objective, rel=1e-9)
        assert got.status == "optimal"
        if req.kind == "kpl":
            assert got.open_sites == ref.open_sites
            assert got.kp_ede == pytest.approx(ref.kp_ede, rel=1e-9)


def test_external_capacitated_and_penalized(kp005):
    inst = tiny_instance(capacities=[2, 2, 4])
    req = ModelRequest("kpl_sd", 2, params=kp005)
    assert solve(inst, req, _highs()).objective == pytest.approx(brute_force_solve(inst, req).objective, rel=1e-9)
    inst = synth_instance(5, 20, 8, 2, n_penalized=3)
    kp = InequalityParams.from_alpha(1 / 1500, -1.0)
    plan = make_plan({s: 30.0 for s in inst.penalties}, kp.kappa, 2, 900.0)
    req = ModelRequest("kpl_t", 2, params=kp, penalty_plan=plan)
    ref = brute_force_solve(inst, req, linearized=True)
    assert solve(inst, req, _highs()).objective == pytest.approx(ref.objective, rel=1e-9)


def test_external_oracle_equivalence_random():
    kp = InequalityParams.from_alpha(1 / 2000, -1.0)
    for seed in range(8):
        inst = synth_instance(100 + seed, 25, 10, 3)
        for kind in ("pmedian", "kpl"):
            req = ModelRequest(kind, 3, params=kp)
            ref, got = brute_force_solve(inst, req), solve(inst, req, _highs())
            assert got.objective == pytest.approx(ref.objective, rel=1e-9)


def _write(tmp_path, text):
    p = tmp_path / "prepared.sol"
    p.write_text(text)
    return p


def _tiny_kpl_solution(y_r1=1.0):
    lines = ["x_0 1"] + [f"y_{i}_0 1" for i in range(1, 4)] + [f"y_0_0 {y_r1}"]
    return "\n".join(lines) + "\n"


def test_external_scripted_ok(tiny, kp005, tmp_path):
    m = build_model(tiny, ModelRequest("kpl", 1, params=kp005))
    r = external_solve(m, SolverBackend("external", scripted_command(_write(tmp_path, _tiny_kpl_solution()))), tiny)
    assert r.open_sites == ("s1",) and r.kp_ede == pytest.approx(100, rel=1e-12)


def test_external_row_violation_names_origin(tiny, kp005, tmp_path):
    m = build_model(tiny, ModelRequest("kpl", 1, params=kp005))
    backend = SolverBackend("external", scripted_command(_write(tmp_path, _tiny_kpl_solution(0.9))))
    with pytest.raises(VerificationError, match="r1") as exc:
        external_solve(m, backend, tiny)
    assert exc.value.exit_code == 5 and not exc.value.report.ok


def test_external_feasible_gap(tiny, kp005, tmp_path):
    m = build_model(tiny, ModelRequest("kpl", 1, params=kp005))
    text = "# status feasible-gap\n# gap 0.02\n" + _tiny_kpl_solution()
    r = external_solve(m, SolverBackend("external", scripted_command(_write(tmp_path, text))), tiny)
    assert r.status == "feasible-gap" and r.gap == 0.02
    text = "# gap 0.02\n" + _tiny_kpl_solution()
    r = external_solve(m, SolverBackend("external", scripted_command(_write(tmp_path, text))), tiny)
    assert r.status == "feasible-gap"


def test_external_failures(tiny, kp005, tmp_path):
    m = build_model(tiny, ModelRequest("kpl", 1, params=kp005))
    with pytest.raises(BackendError, match="exited with code 3"):
        external_solve(m, SolverBackend("external", scripted_command("-", 3)), tiny)
    with pytest.raises(BackendError, match="no solution file"):
        external_solve(m, SolverBackend("external", scripted_command("-")), tiny)
    with pytest.raises(BackendError, match="unparseable"):
        external_solve(m, SolverBackend("external", scripted_command(_write(tmp_path, "x_0 one\n"))), tiny)
    with pytest.raises(InfeasibleError):
        external_solve(m, SolverBackend("external", scripted_command(_write(tmp_path, "# status infeasible\n"))), tiny)
    with pytest.raises(BackendError, match="not found"):
        external_solve(m, SolverBackend("external", "no-such-solver-binary {model} {solution}"), tiny)


def test_parse_solution_rounds_near_integers(tiny, kp005, tmp_path):
    m = build_model(tiny, ModelRequest("kpl", 1, params=kp005))
    text = _tiny_kpl_solution().replace("x_0 1", "x_0 0.9999996")
    r = external_solve(m, SolverBackend("external", scripted_command(_write(tmp_path, text))), tiny)
    assert r.open_sites == ("s1",)
    values, _ = parse_solution(text, m)
    assert values["x_0"] == 0.9999996
    with pytest.raises(BackendError, match="unknown column"):
        parse_solution("w_9 1\n", m)


# -- verify ------------------------------------------------------------------

def test_verify_tampered(tiny, kp005):
    req = ModelRequest("kpl", 2, params=kp005)
    m = build_model(tiny, req)
    r = brute_force_solve(tiny, req)
    assert verify_solution(tiny, m, r).ok
    fewer = SolveResult(r.open_sites[:1], {(o, r.open_sites[0]): 1.0 for o in tiny.origin_ids},
                        r.objective, r.kp_ede, kind="kpl")
    rep = verify_solution(tiny, m, fewer)
    assert any(v.startswith("facility count") for v in rep.violations)
    closed = next(s for s in tiny.site_ids if s not in r.open_sites)
    moved = dict(r.assignment)
    moved.pop(("r4", next(s for (o, s) in r.assignment if o == "r4")))
    moved[("r4", closed)] = 1.0
    rep = verify_solution(tiny, m, SolveResult(r.open_sites, moved, r.objective, r.kp_ede, kind="kpl"))
    assert any(f"(r4, {closed})" in v for v in rep.violations)
    bad_obj = SolveResult(r.open_sites, r.assignment, r.objective * (1 + 1e-6), r.kp_ede, kind="kpl")
    assert any("objective mismatch" in v for v in verify_solution(tiny, m, bad_obj).violations)
