"""Condition residuals on the small built-in charts.

r2 is the flat plane, where everything vanishes.  r4 carries a rotated J whose
angle varies with the point, so its conditions do not vanish.
"""
from gengeom import condition_residuals
from gengeom.config import build_structure, builtin

for name, kinds in (("r2", ["lambda:-1", "omega"]), ("r4", ["lambda:-1", "omega", "g"])):
    setup = builtin(name)
    pts = setup.sample(20, 0)
    for kind in kinds:
        rep = condition_residuals(build_structure(setup, kind, pts), pts)
        print(f"{name:3s} {kind:10s} max residual {rep.max_abs():.2e}  verdict {rep.verdict()}")
