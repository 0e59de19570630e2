"""Open k sites in a synthetic city under p-median, p-center and the KP-linear model.

All three solutions are scored with one kappa so the EDE column is comparable.
"""
import sys

from kpfl.synth import synth_instance
from kpfl.calibration import initial_alpha
from kpfl.metrics import Distribution, kp_ede
from kpfl.models import ModelRequest
from kpfl.solvers import solve

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1
city = synth_instance(seed, n_origins=40, n_sites=12)
params = initial_alpha(city, -1.0).params
print(f"T={city.T} people, kappa={params.kappa:.3e}")
for k in (1, 2, 4):
    print(f"\nk={k}")
    for kind in ("pmedian", "pcenter", "kpl"):
        res = solve(city, ModelRequest(kind, k, params=params))
        z = Distribution(res.distances(city), city.populations)
        print(f"  {kind:8} open={','.join(res.open_sites):16} mean={z.mean:7.1f} "
              f"max={z.max:7.1f} EDE={kp_ede(z, params.kappa):7.1f}")
