"""Symmetry optimizes the star-graph ground state.

Among star graphs with fixed edge count, edge length, and attraction
strength, the symmetric one maximizes the lowest eigenvalue: bending the
star (here 150/150/60 degrees) pushes the ground state down.  Rotating the
symmetric star must change nothing beyond discretization error.
"""

from deltasqueeze.lab import run_stargraph

cfg = {
    "N": 3,
    "L": 1.0,
    "angles": [150.0, 150.0, 60.0],
    "alpha": -5.0,
    "mesh": {"box": [[-2.0, 2.0], [-2.0, 2.0]], "h": 1.0 / 32.0},
    "seed": 7,
}
report, status = run_stargraph(cfg)

print(f"bent star     lam1 = {report['lam_sigma']:+.6f}")
print(f"symmetric     lam1 = {report['lam_gamma']:+.6f}")
print(f"rotated sym.  lam1 = {report['lam_gamma_rotated']:+.6f}\n")
print(f"gap (symmetric - bent)      = {report['gap']:.6f}")
print(f"rotation gap (congruence)   = {report['rotation_gap']:.3e}")
print(f"h-refinement error estimate = {report['mesh_error_estimate']:.3e}")
print(f"inequality holds: {report['inequality_holds']}")
print("note: at this demo resolution the gap is genuine but not yet 5x the")
print("mesh error bar; the acceptance suite reruns this at h = 1/64.")
