"""Optimal blending parameter and amplification factor for s = 2..10,
together with the conditioning of the fundamental-stage matrix C as k grows.

Run: python3 demos/blended_parameters.py
"""

from hbvm.harness import condition_sweep, gamma_table

table = gamma_table(range(2, 11))
print(f"{'s':>3}{'gamma':>10}{'rho*':>10}{'scan':>10}")
for s, g, rho, scan in table.rows:
    print(f"{s:>3}{g:>10.4f}{rho:>10.4f}{scan:>10.4f}")

print()
print("largest cond(C(k,s)) / cond(C(s,s)) for k <= 100")
for selection in ("rule_of_thumb", "first_s"):
    r = condition_sweep([2, 3, 4, 5], 100, selection)
    ratios = "  ".join(f"s={s}: {r.summary[f'max_ratio_s{s}']:.3g}" for s in (2, 3, 4, 5))
    print(f"{selection:<15}{ratios}")
