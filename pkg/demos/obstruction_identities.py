"""The two identities behind nonexistence, evaluated at a few points."""
import math

from gengeom.sphere6 import ac_identity, sphere6, b_identity

s6 = sphere6()
pts = s6.sample(5, seed=2)
lhs, rhs = ac_identity(pts)
print("ac-identity  lhs - rhs:", abs(lhs - rhs).max())
lhs, rhs = b_identity(pts, b="sin(u2)")
print("b-identity   lhs - rhs:", abs(lhs - rhs).max())
l0, _ = b_identity((math.pi / 3, 1, 1, 1, 1, 1), b="1")
print(f"b-identity at u1 = pi/3: {l0:.10f}  (8/(3 sqrt 3) = {8 / (3 * math.sqrt(3)):.10f})")
