"""Energy behaviour of three fourth-order methods on the Faou problem.

Gauss-4 oscillates, Lobatto IIIA-4 drifts and HBVM(6,2) stays at round-off.
Run: python3 demos/energy_drift.py [n_steps]
"""

import sys

from hbvm.harness import MethodSpec, drift_experiment

n_steps = int(sys.argv[1]) if len(sys.argv) > 1 else 10000
h = 0.16

print(f"faou, h = {h}, {n_steps} steps")
print(f"{'method':<22}{'max|dH|':>12}{'slope':>12}  drift")
for name, method in (
    ("Gauss-4 = HBVM(2,2)", MethodSpec(2, 2)),
    ("Lobatto IIIA-4", MethodSpec(2, 2, "lobatto")),
    ("HBVM(6,2)", MethodSpec(6, 2)),
):
    s = drift_experiment("faou", method, h, n_steps).summary
    print(f"{name:<22}{s['max_abs_dH']:>12.2e}{s['slope']:>12.2e}  {s['drift']}")
