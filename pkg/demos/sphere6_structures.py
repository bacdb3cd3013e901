"""Calibrate the S^6 cross table, compare against the fixture rows, and
evaluate the conditions for the standard generalized structures."""
from gengeom import condition_residuals
from gengeom.genbundle import classify
from gengeom.sphere6 import fixture_mismatch, sphere6

s6 = sphere6()
print("cross table:", s6.table.describe())
pts = s6.sample(20, seed=1)
print(f"fixture mismatch {fixture_mismatch(s6.J, pts):.2e}")
for name, T in s6.structures(pts).items():
    cls = classify(T, pts)
    rep = condition_residuals(T, pts)
    print(f"{name:14s} strong={cls.strong!s:5s} max residual {rep.max_abs():9.3f} argmax {rep.argmax()}")
