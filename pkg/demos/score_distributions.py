"""Four distance distributions with the same mean, ranked by the Kolm-Pollak EDE."""
from kpfl.metrics import Distribution, kp_ede_auto, weighted_stdev

DISTS = {
    "uniform": [100, 100, 100, 100],
    "spread": [50, 75, 125, 150],
    "split": [0, 0, 200, 200],
    "single": [0, 0, 0, 400],
}

print(f"{'name':8} {'mean':>6} {'stdev':>7} {'max':>5} {'EDE e=-1':>9} {'EDE e=-2':>9}")
for name, z in DISTS.items():
    d = Distribution(z)
    e1, _ = kp_ede_auto(d, -1.0)
    e2, _ = kp_ede_auto(d, -2.0)
    print(f"{name:8} {d.mean:6.1f} {weighted_stdev(d):7.2f} {d.max:5.0f} {e1:9.2f} {e2:9.2f}")
