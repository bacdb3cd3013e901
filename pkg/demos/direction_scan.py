"""Scan constant directions (a, b, c) on S^6 and report the weakest violation."""
from gengeom.sphere6 import default_directions, scan_nonexistence, sphere6

s6 = sphere6()
out = scan_nonexistence(default_directions(40), s6.sample(30, seed=0), s6=s6)
worst = min(out["directions"], key=lambda r: r["max_residual"])
print("all violate:", out["all_violate"])
print("weakest direction", [round(x, 3) for x in worst["direction"]],
      f"max residual {worst['max_residual']:.1f}", "at", worst["argmax"])
