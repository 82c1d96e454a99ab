"""Observed order of HBVM(6,2) on the Faou problem under step halving.

Run: python3 demos/convergence.py
"""

from hbvm.harness import MethodSpec, convergence_table

report = convergence_table("faou", MethodSpec(6, 2), [0.32, 0.16, 0.08, 0.04, 0.02])
print(f"reference step {report.summary['h_ref']}, t_final {report.inputs['t_final']}")
print(f"{'h':>8}{'steps':>8}{'error':>12}{'order':>8}")
for h, n, err, order in report.rows:
    print(f"{h:>8.3g}{n:>8d}{err:>12.3e}{order:>8.3f}")
