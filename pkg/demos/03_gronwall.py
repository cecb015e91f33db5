"""
The discrete Gronwall bound
===========================

For a sequence with (a_n - a_{n-1})/tau <= g + (1-theta) lam a_{n-1} + theta lam a_n,
compare the closed-form bound A_n with the worst case obtained by running
the recursion with equality.
"""
import numpy as np

from skt import GronwallInput, discrete_gronwall
from skt.diagnostics import gronwall_factors

n, k, lam, g = 40, 0.05, 1.0, 0.5
gin = GronwallInput(a0=1.0, tau=[k] * n, lam=[lam] * (n + 1), g=[g] * n, theta=0.5)
A = discrete_gronwall(gin)

a = [1.0]
for _ in range(n):
    a.append((a[-1] * (1 + 0.5 * lam * k) + k * g) / (1 - 0.5 * lam * k))
a = np.array(a)

print("max |A_n - a_n|:", np.abs(A - a).max())
print("A_N =", A[-1], " e^{lam T} (a0 + g/lam) - g/lam =", np.exp(lam * n * k) * 1.5 - 0.5)

# each factor is (1 + k/2)/(1 - k/2) for lam = 1
print("omega:", gronwall_factors(gin)[0], (1 + k / 2) / (1 - k / 2))
