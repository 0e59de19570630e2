"""Discourage a few candidate sites with distance penalties and check the error bounds."""
from kpfl.synth import synth_instance
from kpfl.calibration import initial_alpha
from kpfl.models import ModelRequest
from kpfl.penalty import make_plan, measure_errors, recommend_plan

city = synth_instance(14, n_origins=36, n_sites=10, n_penalized=4)
params = initial_alpha(city, -1.0).params
base = ModelRequest("kpl", 3, params=params)

plan = recommend_plan(city, base)
print(f"penalized: {sorted(plan.penalties)}  c={next(iter(plan.penalties.values())):.3f} m")
print(f"K_all={plan.K_all:.2f}  K_rem={plan.K_rem:.2f}  N={plan.N}  exact tangents={plan.exact}")

for label, p in [("exact", plan)] + [
        (f"w={w:g}", make_plan(plan.penalties, params.kappa, 3, plan.khat, khat_source="K_all", w=w,
                               K_all=plan.K_all, K_rem=plan.K_rem, N=plan.N, sigma_all=plan.sigma_all))
        for w in (1e-3, 1e-2)]:
    r = measure_errors(city, base.replace(kind="kpl_t", penalty_plan=p), plan.sigma_all)
    print(f"{label:8} open={r.open_sites}  sigma*={r.sigma_star:.3f}  "
          f"under-penalty {r.under_hat:.2e} <= {r.bound_hat:.2e}  "
          f"tangent {r.under_tangent:.2e} <= {r.bound_tangent:.2e}")
