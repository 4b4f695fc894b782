"""Convex polygons in the complex plane.

A polygon is a 1-d complex array of vertices in counterclockwise order.
A half-plane ``(a, c)`` is the set ``{z : Re(conj(a) z) <= c}``.
"""

from __future__ import annotations

import numpy as np


def cross(u, v):
    """z-component of the cross product of two plane vectors given as complex."""
    return (np.conj(u) * v).imag


def area(poly) -> float:
    p = np.asarray(poly, dtype=complex)
    if p.size < 3:
        return 0.0
    return 0.5 * float(np.sum(cross(p, np.roll(p, -1))))


def centroid(poly) -> complex:
    p = np.asarray(poly, dtype=complex)
    a = area(p)
    if a == 0:
        return complex(p.mean())
    q = np.roll(p, -1)
    w = cross(p, q)
    return complex(np.sum((p + q) * w) / (6.0 * a))


def clip_halfplane(poly, a: complex, c: float):
    """Sutherland-Hodgman clip of a convex polygon against one half-plane."""
    p = np.asarray(poly, dtype=complex)
    if p.size == 0:
        return p
    s = (np.conj(a) * p).real - c
    keep = s <= 0
    if np.all(keep):
        return p
    if not np.any(keep):
        return np.zeros(0, dtype=complex)
    out = []
    n = p.size
    for i in range(n):
        j = (i + 1) % n
        if keep[i]:
            out.append(p[i])
        if keep[i] != keep[j]:
            t = s[i] / (s[i] - s[j])
            out.append(p[i] + t * (p[j] - p[i]))
    return np.array(out, dtype=complex)


def clip_many(poly, halfplanes):
    p = np.asarray(poly, dtype=complex)
    for a, c in halfplanes:
        p = clip_halfplane(p, a, c)
        if p.size < 3:
            return np.zeros(0, dtype=complex)
    return p


def cleanup(poly, rel_tol: float = 1e-12):
    """Drop repeated and collinear vertices so strict convexity is testable."""
    p = np.asarray(poly, dtype=complex)
    if p.size < 3:
        return np.zeros(0, dtype=complex)
    scale = max(float(np.max(np.abs(p - p.mean()))), 1e-300)
    short = np.abs(p - np.roll(p, 1)) <= rel_tol * scale
    p = p[~short]
    while p.size >= 3:
        cr = cross(p - np.roll(p, 1), np.roll(p, -1) - p)
        k = int(np.argmin(np.abs(cr)))
        if abs(cr[k]) > rel_tol * scale * scale:
            break
        p = np.delete(p, k)
    return p if p.size >= 3 else np.zeros(0, dtype=complex)


def is_convex(poly) -> bool:
    """Strict counterclockwise convexity: every turn is a left turn."""
    p = np.asarray(poly, dtype=complex)
    if p.size < 3:
        return False
    e = np.roll(p, -1) - p
    turns = cross(e, np.roll(e, -1))
    if not np.all(turns > 0):
        return False
    # winding once: total turning of exterior angles is 2*pi
    ang = np.angle(np.roll(e, -1) / e)
    return bool(abs(np.sum(ang) - 2 * np.pi) < 1e-6)


def signed_edge_distance(poly, pts):
    """Minimum signed distance from ``pts`` to the edge lines (positive inside)."""
    p = np.asarray(poly, dtype=complex)
    pts = np.asarray(pts, dtype=complex)
    e = np.roll(p, -1) - p
    el = np.abs(e)
    d = cross(e[:, None], pts[None, :] - p[:, None]) / el[:, None]
    return d.min(axis=0)


def regular_polygon_halfplanes(center: complex, radius: float, n: int):
    """Half-planes of the regular n-gon circumscribed about a disk."""
    ang = 2 * np.pi * np.arange(n) / n
    normals = np.exp(1j * ang)
    return [(a, radius + (np.conj(a) * center).real) for a in normals]


def sample_in_polygon(poly, n: int, rng) -> np.ndarray:
    """Uniform samples in a convex polygon via a fan triangulation."""
    p = np.asarray(poly, dtype=complex)
    a0 = p[0]
    b = p[1:-1]
    c = p[2:]
    tri_area = 0.5 * cross(b - a0, c - a0)
    prob = tri_area / tri_area.sum()
    idx = rng.choice(tri_area.size, size=n, p=prob)
    r1 = np.sqrt(rng.random(n))
    r2 = rng.random(n)
    return a0 * (1 - r1) + b[idx] * (r1 * (1 - r2)) + c[idx] * (r1 * r2)
