"""
Absorbing ball
==============

Every trajectory enters the ball Y <= r alpha2/alpha1 (Y = |u|^2 + |v|^2)
no later than the closed-form entry time. Runs a small ensemble and
compares.
"""
import math

import numpy as np

from skt import Coefficients, Grid, SchemeConfig, State, absorbing_constants, ensemble
from skt.attractor import random_state
from skt.grid import l2_sq

c = Coefficients(d1=1, d2=1, a11=1, a12=1, a21=1, a22=1,
                 b1=1, b2=0.5, c1=0.5, c2=1, a1=1, a2=1)
g = Grid.unit_interval(64)
cfg = SchemeConfig(k=0.01)

ball = absorbing_constants(c, g.volume)
print("alpha1 =", ball.alpha1, " alpha2 =", ball.alpha2, " R =", ball.radius_sq)

# scale random fields to land between 2R and 4R
initials = []
for seed, target in enumerate(np.linspace(2.2, 4.0, 6) * ball.radius_sq):
    s = random_state(g, 1.0, seed)
    f = math.sqrt(target / (l2_sq(s.u, g) + l2_sq(s.v, g)))
    initials.append(State(f * s.u, f * s.v))

res = ensemble(initials, 2.0, c, g, cfg, r=2.0)
print(" Y0      predicted  observed  violations")
for m in res.members:
    print(f"{m.Y0:6.3f}  {m.entry_time_predicted:9.3f}  {m.entry_time_observed:8.3f}  {m.violations}")
print("post-entry sup of Y:", res.hull_sup, "<= 2R =", 2 * ball.radius_sq)
