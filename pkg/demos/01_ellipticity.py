"""
Ellipticity of the cross-diffusion matrix
=========================================

Checks the admissibility conditions on a few coefficient sets and looks at
how much room the lower bound (P xi).xi >= (d0 + alpha (u + v)) |xi|^2 leaves.
"""
import numpy as np

from skt import Coefficients, check_admissibility, diffusion_matrix

# the worked example: everything equal to one
c = Coefficients(d1=1, d2=1, a11=1, a12=1, a21=1, a22=1)
rep = check_admissibility(c)
print("admissible:", rep.admissible, " alpha:", rep.alpha, " d0:", rep.d0)

# P at a state, and its smallest symmetric eigenvalue against the bound
u, v = 2.0, 3.0
P = diffusion_matrix(c, u, v)
print(P)
lowest = np.linalg.eigvalsh(0.5 * (P + P.T))[0]
print("smallest eigenvalue", lowest, ">= bound", rep.d0 + rep.alpha * (u + v))

# sitting on the boundary of a strict inequality is enough to fail
edge = Coefficients(d1=1, d2=1, a11=1, a12=2, a21=1, a22=1)
rep = check_admissibility(edge)
print("edge case violations:", rep.violations, " margin:", rep.margin)

# a set failing one condition badly: the quadratic form drops below d0
bad = Coefficients(d1=1, d2=1, a11=0.1, a12=1.5, a21=0.8, a22=1)
rep = check_admissibility(bad)
print("violations:", rep.violations)
for r in (1.0, 10.0, 100.0):
    P = diffusion_matrix(bad, r, 0.0)
    print(f"u = {r:6.1f}: smallest eigenvalue - d0 = {np.linalg.eigvalsh(0.5 * (P + P.T))[0] - 1:.4f}")
