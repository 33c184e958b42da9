"""Independent oracles shared by the planner and acceptance suites.

These deliberately avoid the solver code paths they check: dense grid scans
over the forward kinematics and exhaustive partition enumeration.
"""
import math

import numpy as np

from swingsim.leg_kinematics import DEG, LegGeometry

GEOM = LegGeometry()
LIMIT = 85.0 * DEG


def grid_boundary(z_h, z_m, theta_h, step=0.01 * DEG, interpolate=False,
                  geom=GEOM, limit=LIMIT):
    """Dense-scan oracle for the upward-exit boundary of M_z.

    Walks theta_k down from the knee limit to the lowest angle of the
    terminal above-z_m run; optionally interpolates the crossing linearly
    (used by the slope oracle, where grid quantization would dominate).
    """
    tks = np.arange(0.0, limit + step / 2, step)
    ts = theta_h - tks
    toe = (z_h - geom.thigh_m * math.cos(theta_h)
           - geom.shank_m * np.cos(ts) + geom.toe_m * np.sin(ts))
    above = toe >= z_m
    if not above[-1]:
        return None
    idx = len(tks) - 1
    while idx > 0 and above[idx - 1]:
        idx -= 1
    if idx == 0:
        return 0.0
    if not interpolate:
        return float(tks[idx])
    lo, hi = tks[idx - 1], tks[idx]
    flo, fhi = toe[idx - 1] - z_m, toe[idx] - z_m
    return float(lo - flo * (hi - lo) / (fhi - flo))


def brute_force_kmeans_sse(points, kmax):
    """Exhaustive minimum SSE over all partitions into at most kmax parts.

    Restricted-growth enumeration avoids counting label permutations.
    """
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    best = math.inf

    def rec(i, labels, used):
        nonlocal best
        if i == n:
            sse = 0.0
            for j in range(used):
                sel = pts[np.array(labels) == j]
                sse += float(((sel - sel.mean(axis=0)) ** 2).sum())
            best = min(best, sse)
            return
        for j in range(min(used + 1, kmax)):
            labels.append(j)
            rec(i + 1, labels, max(used, j + 1))
            labels.pop()

    rec(0, [], 0)
    return best
