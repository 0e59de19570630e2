"""Seed alpha from existing sites, solve, and re-solve with the alpha the optimum implies."""
from kpfl.synth import synth_instance
from kpfl.calibration import calibrate, ede_gap
from kpfl.metrics import InequalityParams
from kpfl.models import ModelRequest

city = synth_instance(11, n_origins=40, n_sites=12, n_existing=4)
# relocate all four existing sites; params are replaced inside the loop
req = ModelRequest("kpl", 4, params=InequalityParams.from_alpha(1.0, -2.0), fix_existing=False)
run = calibrate(city, req, epsilon_0=-2.0, tol=1e-9, max_iters=2)
for r in run:
    print(f"iter {r.iteration}: alpha_in={r.alpha_in:.4e} alpha_out={r.alpha_out:.4e} "
          f"eps_realized={r.epsilon_realized:+.3f} EDE={r.kp_ede:.1f} open={r.open_sites}")
if len(run.results) == 2:
    g = ede_gap(city, run.results[0], run.results[1], -2.0 * run.records[-1].alpha_in)
    print(f"EDE gap between iterations: {g['abs_diff']:.2f} m ({g['gap']:.3%})")
