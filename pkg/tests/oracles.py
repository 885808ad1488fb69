"""Independent oracles shared by the unit and acceptance tests."""

from __future__ import annotations

import math

import numpy as np

SECTION_DATA = [(1, -1), (2, 1), (3, -2)]
CURVES = [(1, 0), (0, 1), (1, 1), (2, -1), (1, 3), (-2, 3), (3, 2)]
# twenty (section data, curve class) pairs
CURVE_CLASSES = [(nm, pq) for nm in SECTION_DATA for pq in CURVES][:20]


def ext_gcd(a: int, b: int) -> tuple[int, int, int]:
    """(g, x, y) with a x + b y = g, by the iterative Euclidean algorithm."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def oracle_inverse(m: int, n: int) -> int:
    g, x, _ = ext_gcd(m % n, n)
    assert g == 1
    return x % n


def signed_crossings(alpha: np.ndarray, beta: np.ndarray) -> int:
    """Signed intersection count of two closed polylines on R^2 / Z^2.

    Both curves are given as lifts of one period.  Every translate of beta that
    can reach alpha is tested; the sign of a crossing is that of dbeta x dalpha.
    """
    a0, a1 = alpha[:-1], alpha[1:]
    da = a1 - a0
    total = 0
    lo = np.floor(alpha.min(axis=0) - beta.max(axis=0)).astype(int) - 1
    hi = np.ceil(alpha.max(axis=0) - beta.min(axis=0)).astype(int) + 1
    for i in range(lo[0], hi[0] + 1):
        for j in range(lo[1], hi[1] + 1):
            b = beta + np.array([i, j])
            b0, b1 = b[:-1], b[1:]
            db = b1 - b0
            # solve a0 + s da = b0 + t db for every segment pair
            cross = db[None, :, 0] * da[:, None, 1] - db[None, :, 1] * da[:, None, 0]
            w = b0[None, :, :] - a0[:, None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                s = (db[None, :, 0] * w[..., 1] - db[None, :, 1] * w[..., 0]) / cross
                t = (da[:, None, 0] * w[..., 1] - da[:, None, 1] * w[..., 0]) / cross
            hit = (cross != 0) & (s >= 0) & (s < 1) & (t >= 0) & (t < 1)
            total += int(np.sign(cross[hit]).sum())
    return total


def straight_curve(p_coeff: int, q_coeff: int, pieces: int = 40) -> np.ndarray:
    # an irrational offset keeps the crossings away from polyline vertices
    start = np.array([math.sqrt(2) / 10, math.sqrt(3) / 7])
    ts = np.linspace(0.0, 1.0, pieces + 1)
    return start + np.outer(ts, [p_coeff, q_coeff])
