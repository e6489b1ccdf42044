"""Transverse squeezing in one dimension.

The square well of depth alpha/(2 eps) on (-eps, eps) keeps its integral
alpha while eps shrinks; its ground state approaches the point-interaction
value -alpha^2/4.  This is the 1D anchor for the 2D experiments.
"""

import numpy as np

from deltasqueeze import delta_point_eigenvalue, squeezed_1d_eigenvalue
from deltasqueeze.oracles import square_well_ground_state

alpha, beta = -5.0, 0.02
target = delta_point_eigenvalue(alpha)
print(f"alpha = {alpha}, point-interaction bound state = {target}\n")

g = lambda t: np.full_like(t, alpha / (2 * beta))

print("      eps        lam_eps       |lam_eps - target|")
eps_list = beta / 2.0 ** np.arange(1, 7)
gaps = []
for eps in eps_list:
    lam = squeezed_1d_eigenvalue(g, eps, beta, cells_per_eps=4, domain_halfwidth=4.0)
    gaps.append(abs(lam - target))
    print(f"  {eps:.6f}   {lam:+.8f}   {gaps[-1]:.3e}")

slope = np.polyfit(np.log(eps_list), np.log(gaps), 1)[0]
print(f"\nfitted slope of the gap: {slope:.3f}  (first-order in eps)")

# cross-check the fattest well against the transcendental equation
lam_fd = squeezed_1d_eigenvalue(g, beta, beta, cells_per_eps=16, domain_halfwidth=8.0)
lam_ex = square_well_ground_state(depth=abs(alpha) / (2 * beta), halfwidth=beta)
print(f"\neps = beta cross-check: FD+Richardson {lam_fd:.12f}")
print(f"                        bisection     {lam_ex:.12f}")
