"""Shared builders for the test suite."""

import numpy as np

from deltasqueeze.geometry import LineSegment, Network


def star_network(angles_deg, length=1.0, rot_deg=0.0, beta_cap=0.4):
    """Star of line segments from the origin; angles are the wedge openings."""
    azimuth = [0.0]
    for a in angles_deg[:-1]:
        azimuth.append(azimuth[-1] + a)
    segs = []
    for theta in azimuth:
        th = np.radians(theta + rot_deg)
        segs.append(
            LineSegment((0.0, 0.0), (length * np.cos(th), length * np.sin(th)))
        )
    return Network(segs, beta_cap=beta_cap)


def smooth_bump(center, radius):
    """C-infinity bump exp(1 - 1/(1 - (r/R)^2)) on r < R, with its gradient."""
    cx, cy = center

    def f(x, y):
        u2 = ((x - cx) ** 2 + (y - cy) ** 2) / radius**2
        out = np.zeros_like(np.asarray(u2, dtype=float))
        inside = u2 < 1.0
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - u2[inside]))
        return out

    def grad(x, y):
        dx, dy = x - cx, y - cy
        u2 = (dx**2 + dy**2) / radius**2
        gx = np.zeros_like(np.asarray(u2, dtype=float))
        gy = np.zeros_like(gx)
        inside = u2 < 1.0 - 1e-14
        pref = np.zeros_like(gx)
        pref[inside] = (
            np.exp(1.0 - 1.0 / (1.0 - u2[inside]))
            * (-2.0 / (1.0 - u2[inside]) ** 2)
            / radius**2
        )
        gx[inside] = pref[inside] * dx[inside]
        gy[inside] = pref[inside] * dy[inside]
        return gx, gy

    return f, grad
