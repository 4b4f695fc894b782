"""Convex decomposition of a disk adapted to the roots of ``phi^{(d)}``.

Around each distinct root ``b`` of ``P = phi^{(d)}`` the plane is cut into
narrow sectors and into radial bands (gap annuli, where ``P`` is comparable to
one monomial, and dyadic annuli around each root modulus). Bands are bounded by
chords rather than arcs so every piece is a convex polygon. Pieces are refined
until the factor ``g_j`` below has small angular spread, then clipped to the
Voronoi cell of ``b`` and to the working disk.

For local roots ``z_1, ..., z_N`` of ``P(z + b)`` sorted by modulus,

    g_j(z) = prod_{i <= j} (1 - z_i / z) * prod_{l > j} (1 - z / z_l)

so that ``P(z + b) = nu_j-ish * z^j * g_j(z)`` up to the constant
``D (-1)^{N-j} prod_{l > j} z_l``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from math import ceil, pi

import numpy as np

from . import geometry as geo
from .polycx import CLUSTER_RADIUS, CPolynomial, RootOrdering, distinct_roots, order_roots

B0 = 8.0
C0 = 3 * B0
DELTA0 = 0.1
K_MAX = 16.0
COVERAGE_TOL = 1e-3
SAGITTA_TOL = 1e-3
BOUNDARY_MARGIN = 1e-9


class DecompositionError(RuntimeError):
    def __init__(self, message, offending=None):
        super().__init__(message)
        self.offending = offending or []


@dataclass(frozen=True)
class Annulus:
    kind: str  # "gap" or "dyadic"
    index: int
    r_lo: float
    r_hi: float
    empty: bool
    modulus: float = 0.0


def gap_dyadic_annuli(roots: RootOrdering, A: float, A1: float, radius: float = np.inf):
    """Gap annuli ``A|z_j| <= |z| <= |z_{j+1}|/A`` and dyadic annuli
    ``|z_j|/A1 < |z| < A1|z_j|`` as radial intervals, clipped to ``radius``.

    Indices are 1-based. ``G_N`` is the outer region. When ``z_1 != 0`` an inner
    gap ``G_0 = [0, |z_1|/A]`` is added so the intervals cover ``[0, radius]``.
    """
    if not A > 1:
        raise ValueError("A must exceed 1")
    if not A1 > A:
        raise ValueError("A1 must exceed A")
    mod = np.asarray(roots.moduli, dtype=float)
    n = mod.size
    out = []
    if mod[0] > 0:
        hi = min(mod[0] / A, radius)
        out.append(Annulus("gap", 0, 0.0, hi, hi <= 0.0))
    for j in range(1, n + 1):
        lo = A * mod[j - 1]
        hi = mod[j] / A if j < n else np.inf
        hi = min(hi, radius)
        lo = min(lo, radius)
        empty = hi < lo or (hi == lo and j < n)
        out.append(Annulus("gap", j, lo, hi, bool(empty)))
    for j in range(1, n + 1):
        r = mod[j - 1]
        if r == 0:
            continue
        lo = min(r / A1, radius)
        hi = min(A1 * r, radius)
        out.append(Annulus("dyadic", j, lo, hi, bool(hi <= lo), float(r)))
    return out


def radial_partition(annuli, r_max: float):
    """Disjoint consecutive ``(kind, index, lo, hi)`` intervals covering
    ``[0, r_max]``. Dyadic annuli win overlaps with gap annuli; overlapping
    dyadic annuli go to the one whose root modulus is closest in log scale.
    The last interval is unbounded."""
    live = [a for a in annuli if not a.empty]
    pts = {0.0, float(r_max)}
    for a in live:
        for r in (a.r_lo, a.r_hi):
            if 0 < r < r_max:
                pts.add(float(r))
    pts = sorted(pts)
    labels = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi) if lo == 0 else np.sqrt(lo * hi)
        dy = [a for a in live if a.kind == "dyadic" and a.r_lo < mid < a.r_hi]
        if dy:
            best = min(dy, key=lambda a: (abs(np.log(mid / a.modulus)), a.index))
            labels.append(("dyadic", best.index, lo, hi))
            continue
        gp = [a for a in live if a.kind == "gap" and a.r_lo <= mid <= a.r_hi]
        if not gp:
            raise DecompositionError(f"radius {mid:.3g} not covered by any annulus")
        labels.append(("gap", gp[0].index, lo, hi))
    merged = []
    for lab in labels:
        if merged and merged[-1][:2] == lab[:2]:
            merged[-1] = (lab[0], lab[1], merged[-1][2], lab[3])
        else:
            merged.append(lab)
    k, j, lo, _ = merged[-1]
    merged[-1] = (k, j, lo, np.inf)
    return merged


def coefficient_comparability(p: CPolynomial, j: int):
    """``(nu_j, |D| prod_{l > j} |z_l|)`` with roots sorted by modulus."""
    n = p.degree
    if not 1 <= j <= n:
        raise ValueError(f"j must satisfy 1 <= j <= {n}, got {j}")
    roots = p.roots if p.roots is not None else None
    if roots is None:
        from .polycx import find_roots

        roots = find_roots(p)
    mod = order_roots(roots).moduli
    pred = abs(p.lead) * float(np.prod(mod[j:]))
    return complex(p.coeffs[j]), pred


def g_values(zeros, j: int, z):
    """``g_j`` at local points ``z`` for sorted local roots ``zeros`` (1-based j)."""
    z = np.asarray(z, dtype=complex)
    out = np.ones(z.shape, dtype=complex)
    for i, r in enumerate(zeros, start=1):
        if i <= j:
            if r != 0:
                out = out * (1 - r / z)
        else:
            out = out * (1 - z / r)
    return out


def angular_spread(g) -> float:
    g = np.asarray(g, dtype=complex)
    u = g / np.abs(g)
    mean = u.sum()
    if abs(mean) == 0:
        return pi
    return float(np.max(np.abs(np.angle(u / (mean / abs(mean))))))


@dataclass(frozen=True)
class RootFrame:
    """Local data for one distinct root ``b``: ``P(z + b)`` and its sorted roots."""

    b: complex
    coeffs: tuple
    zeros: tuple

    @property
    def N(self) -> int:
        return len(self.zeros)

    def poly(self) -> CPolynomial:
        return CPolynomial(np.array(self.coeffs, dtype=complex))


@dataclass
class ConvexCell:
    vertices: np.ndarray
    root_index: int
    sector_index: int
    annulus_kind: str
    annulus_index: int
    rotation: float
    K: float = 1.0
    spread: float = 0.0
    min_abs_g: float = 1.0

    @property
    def tags(self) -> dict:
        return {
            "root_index": self.root_index,
            "sector_index": self.sector_index,
            "annulus_kind": self.annulus_kind,
            "annulus_index": self.annulus_index,
        }


@dataclass(frozen=True)
class CertificateParams:
    b0: float = B0
    C0: float = C0
    delta0: float = DELTA0
    eps_start: float = 0.1
    eps_min: float = 0.1 / 64
    K_max: float = K_MAX
    coverage_tol: float = COVERAGE_TOL
    sagitta_tol: float = SAGITTA_TOL
    disk_sides: int = 512
    probes: int = 48
    max_depth: int = 16
    max_pieces: int = 40000
    coverage_samples: int = 20000
    seed: int = 0
    cluster_radius: float = CLUSTER_RADIUS

    @property
    def spread_target(self) -> float:
        return 1.0 / (2.0 * self.b0)


@dataclass
class DecompositionCertificate:
    cells: list
    center: complex
    radius: float
    frames: list
    eps: float
    params: CertificateParams
    coverage_fraction: float = 0.0
    overlap_count: int = 0
    trivial: bool = False

    def to_json(self) -> dict:
        return {
            "region": {"center": [self.center.real, self.center.imag], "radius": self.radius},
            "trivial": self.trivial,
            "eps": self.eps,
            "coverage_fraction": self.coverage_fraction,
            "overlap_count": self.overlap_count,
            "params": asdict(self.params),
            "frames": [
                {
                    "b": [f.b.real, f.b.imag],
                    "coeffs": [[c.real, c.imag] for c in f.coeffs],
                    "zeros": [[c.real, c.imag] for c in f.zeros],
                }
                for f in self.frames
            ],
            "cells": [
                {
                    "vertices": [[v.real, v.imag] for v in c.vertices],
                    "tags": c.tags,
                    "rotation": c.rotation,
                    "K": c.K,
                    "spread": c.spread,
                    "min_abs_g": c.min_abs_g,
                }
                for c in self.cells
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: dict) -> "DecompositionCertificate":
        cx = lambda p: complex(p[0], p[1])  # noqa: E731
        frames = [
            RootFrame(cx(f["b"]), tuple(cx(c) for c in f["coeffs"]), tuple(cx(c) for c in f["zeros"]))
            for f in data["frames"]
        ]
        cells = [
            ConvexCell(
                vertices=np.array([cx(v) for v in c["vertices"]], dtype=complex),
                rotation=c["rotation"],
                K=c["K"],
                spread=c["spread"],
                min_abs_g=c["min_abs_g"],
                **c["tags"],
            )
            for c in data["cells"]
        ]
        return cls(
            cells=cells,
            center=cx(data["region"]["center"]),
            radius=data["region"]["radius"],
            frames=frames,
            eps=data["eps"],
            params=CertificateParams(**data["params"]),
            coverage_fraction=data["coverage_fraction"],
            overlap_count=data["overlap_count"],
            trivial=data["trivial"],
        )


@dataclass
class _Piece:
    sector: int
    kind: str
    j: int
    r_lo: float
    r_hi: float
    t_lo: float
    t_hi: float
    depth: int = 0
    poly: np.ndarray = field(default=None, repr=False)
    K: float = 1.0
    spread: float = 0.0
    min_abs_g: float = 1.0


def _clip_convex(poly, halfplanes):
    """Clip against every half-plane the current polygon still violates."""
    if not halfplanes:
        return poly
    a = np.array([h[0] for h in halfplanes], dtype=complex)
    c = np.array([h[1] for h in halfplanes], dtype=float)
    tol = 1e-12 * (1 + np.abs(c))
    used = np.zeros(c.size, dtype=bool)
    p = poly
    while p.size >= 3:
        s = (np.conj(a)[:, None] * p[None, :]).real - c[:, None]
        worst = np.where(used, -np.inf, s.max(axis=1) - tol)
        k = int(np.argmax(worst))
        if worst[k] <= 0:
            break
        used[k] = True
        p = geo.clip_halfplane(p, a[k], c[k])
    return p if p.size >= 3 else np.zeros(0, dtype=complex)


def _frames(phi: CPolynomial, d: int, center: complex, cluster_radius: float):
    P = phi.derivative(d)
    if P.degree == 0:
        return [RootFrame(complex(center), (complex(P.coeffs[0]),), ())]
    centers, mult = distinct_roots(P, cluster_radius)
    order = np.lexsort((np.angle(centers), np.abs(centers - center)))
    frames = []
    for k in order:
        b = complex(centers[k])
        local = []
        for c, m in zip(centers, mult):
            local.extend([0j if c == b else complex(c - b)] * int(m))
        zeros = order_roots(local).roots
        shifted = P.shifted(b)
        frames.append(RootFrame(b, tuple(complex(x) for x in shifted.coeffs), tuple(complex(x) for x in zeros)))
    return frames


def _voronoi_halfplanes(frames, k):
    """Bisector half-planes of the Voronoi cell of root ``k``, in coordinates
    centred at that root."""
    b = frames[k].b
    out = []
    for i, f in enumerate(frames):
        if i == k:
            continue
        n = f.b - b
        out.append((n, abs(n) ** 2 / 2))
    return out


def _piece_polygon(pc: _Piece, outer, far: float):
    w = pc.t_hi - pc.t_lo
    tri = np.array([0.0, far * np.exp(1j * pc.t_lo), far * np.exp(1j * pc.t_hi)], dtype=complex)
    hps = []
    if pc.r_lo > 0:
        u = np.exp(1j * (pc.t_lo + w / 2))
        hps.append((-u, -pc.r_lo * np.cos(w / 2)))
    for q in outer:
        wq = q.t_hi - q.t_lo
        u = np.exp(1j * (q.t_lo + wq / 2))
        hps.append((u, q.r_lo * np.cos(wq / 2)))
    return geo.clip_many(tri, hps)


def _probe(frame: RootFrame, pc: _Piece, poly_local, rng, n_probe):
    z = np.concatenate(
        [poly_local, 0.5 * (poly_local + np.roll(poly_local, -1)), geo.sample_in_polygon(poly_local, n_probe, rng)]
    )
    z = z[z != 0]
    g = g_values(frame.zeros, pc.j, z)
    spread = angular_spread(g)
    min_g = float(np.min(np.abs(g)))
    P = frame.poly()
    nu = frame.coeffs[pc.j] if pc.j < len(frame.coeffs) else 0
    if nu == 0:
        K = np.inf
    else:
        ratio = np.abs(P(z)) / (abs(nu) * np.abs(z) ** pc.j)
        K = float(max(ratio.max(), 1.0 / ratio.min()))
    return K, spread, min_g


def _split(pc: _Piece, r_cap: float, frame: RootFrame):
    """Halve along the direction(s) in which ``arg g`` varies most."""
    hi = min(pc.r_hi, r_cap)
    rm = 0.5 * (pc.r_lo + hi) if pc.r_lo == 0 else float(np.sqrt(pc.r_lo * hi))
    tm = 0.5 * (pc.t_lo + pc.t_hi)
    r_in = max(pc.r_lo, 1e-3 * rm)
    pts = np.array(
        [r_in * np.exp(1j * tm), hi * np.exp(1j * tm), rm * np.exp(1j * pc.t_lo), rm * np.exp(1j * pc.t_hi)]
    )
    g = g_values(frame.zeros, pc.j, pts)
    var_r = abs(np.angle(g[1] / g[0]))
    var_t = abs(np.angle(g[3] / g[2]))
    radial = [(pc.r_lo, rm), (rm, pc.r_hi)] if var_r >= 0.5 * var_t else [(pc.r_lo, pc.r_hi)]
    angular = [(pc.t_lo, tm), (tm, pc.t_hi)] if var_t >= 0.5 * var_r else [(pc.t_lo, pc.t_hi)]
    return [
        _Piece(pc.sector, pc.kind, pc.j, r0, r1, t0, t1, pc.depth + 1) for r0, r1 in radial for t0, t1 in angular
    ]


def _build_frame(frames, k, center, radius, eps, params, rng):
    frame = frames[k]
    N = frame.N
    r_max = (abs(frame.b - center) + radius) * 1.01
    if N == 0:
        rings = [("gap", 0, 0.0, np.inf)]
    else:
        A = params.C0 * N
        A1 = (1 + params.delta0) * A
        ann = gap_dyadic_annuli(order_roots(np.array(frame.zeros)), A, A1, r_max)
        rings = [r for r in radial_partition(ann, r_max) if r[2] < r_max]
        lo = rings[-1][2]
        rings[-1] = (rings[-1][0], rings[-1][1], lo, np.inf)
    n_sec = int(ceil(pi / eps))
    width = 2 * pi / n_sec
    max_w = 2 * np.arccos(1 - params.sagitta_tol)
    n_sub = int(ceil(width / max_w))
    pieces = []
    for s in range(n_sec):
        for kind, j, lo, hi in rings:
            for q in range(n_sub):
                t0 = s * width + q * width / n_sub
                t1 = s * width + (q + 1) * width / n_sub
                pieces.append(_Piece(s, kind, j, lo, hi, t0, t1))
    clip_hps = _voronoi_halfplanes(frames, k) + geo.regular_polygon_halfplanes(
        center - frame.b, radius / np.cos(pi / params.disk_sides), params.disk_sides
    )
    far = 4 * r_max
    while True:
        by_lo, by_hi = {}, {}
        for pc in pieces:
            by_lo.setdefault((pc.sector, pc.r_lo), []).append(pc)
            by_hi.setdefault((pc.sector, pc.r_hi), []).append(pc)
        for pc in pieces:
            if pc.poly is not None:
                continue
            outer = [
                q for q in by_lo.get((pc.sector, pc.r_hi), []) if q.t_lo < pc.t_hi and q.t_hi > pc.t_lo
            ]
            poly = _piece_polygon(pc, outer, far)
            poly = geo.cleanup(_clip_convex(poly, clip_hps))
            pc.poly = poly
            if poly.size < 3 or geo.area(poly) <= 1e-14 * radius * radius:
                pc.poly = np.zeros(0, dtype=complex)
                continue
            pc.K, pc.spread, pc.min_abs_g = _probe(frame, pc, poly, rng, params.probes)
        bad = [pc for pc in pieces if pc.poly.size >= 3 and pc.spread > params.spread_target]
        if not bad:
            break
        too_deep = [pc for pc in bad if pc.depth >= params.max_depth]
        if too_deep or len(pieces) + 3 * len(bad) > params.max_pieces:
            raise DecompositionError(
                f"refinement budget exceeded at eps={eps:g}",
                [(k, pc.sector, pc.kind, pc.j, pc.spread) for pc in (too_deep or bad)[:20]],
            )
        bad_ids = {id(pc) for pc in bad}
        nxt = []
        for pc in pieces:
            if id(pc) in bad_ids:
                nxt.extend(_split(pc, r_max, frame))
                # inner neighbours now see a different chord chain
                for q in by_hi.get((pc.sector, pc.r_lo), []):
                    if q.t_lo < pc.t_hi and q.t_hi > pc.t_lo:
                        q.poly = None
            else:
                nxt.append(pc)
        pieces = nxt
    cells = []
    for pc in pieces:
        if pc.poly is None or pc.poly.size < 3:
            continue
        if pc.kind == "gap" and pc.K > params.K_max:
            raise DecompositionError(
                f"comparability K={pc.K:.3g} exceeds {params.K_max}", [(k, pc.sector, pc.kind, pc.j, pc.K)]
            )
        cells.append(
            ConvexCell(
                vertices=pc.poly + frame.b,
                root_index=k,
                sector_index=pc.sector,
                annulus_kind=pc.kind,
                annulus_index=pc.j,
                rotation=pc.sector * width,
                K=pc.K,
                spread=pc.spread,
                min_abs_g=pc.min_abs_g,
            )
        )
    return cells


def build_certificate(phi: CPolynomial, d: int, center=0j, radius: float = 2.0, params: CertificateParams | None = None):
    params = params or CertificateParams()
    center = complex(center)
    if radius <= 0:
        raise ValueError("radius must be positive")
    if phi.degree < d:
        return DecompositionCertificate([], center, float(radius), [], 0.0, params, 0.0, 0, trivial=True)
    frames = _frames(phi, d, center, params.cluster_radius)
    eps = params.eps_start
    last = None
    while eps >= params.eps_min * (1 - 1e-12):
        rng = np.random.default_rng(np.random.SeedSequence([params.seed, 0]))
        try:
            cells = []
            for k in range(len(frames)):
                cells.extend(_build_frame(frames, k, center, radius, eps, params, rng))
        except DecompositionError as exc:
            last = exc
            eps /= 2
            continue
        cert = DecompositionCertificate(cells, center, float(radius), frames, eps, params)
        chk = check_certificate(cert, params.coverage_samples, params.seed)
        cert.coverage_fraction = chk["coverage_fraction"]
        cert.overlap_count = chk["overlap_count"]
        if chk["all_convex"] and chk["overlap_count"] == 0 and chk["coverage_fraction"] >= 1 - params.coverage_tol:
            return cert
        last = DecompositionError(f"sampled checks failed at eps={eps:g}: {chk}")
        eps /= 2
    raise DecompositionError(f"no sector width passed all checks; last failure: {last}", getattr(last, "offending", []))


def _uniform_disk(center, radius, n, rng):
    r = radius * np.sqrt(rng.random(n))
    t = 2 * pi * rng.random(n)
    return center + r * np.exp(1j * t)


def membership_counts(cells, pts, margin: float = BOUNDARY_MARGIN):
    """Per-point counts of cells containing it strictly (distance > margin)
    and loosely (distance >= -margin)."""
    pts = np.asarray(pts, dtype=complex)
    order = np.argsort(pts.real)
    xs = pts.real[order]
    strict = np.zeros(pts.size, dtype=int)
    loose = np.zeros(pts.size, dtype=int)
    for c in cells:
        v = c.vertices
        i0 = np.searchsorted(xs, v.real.min() - margin, "left")
        i1 = np.searchsorted(xs, v.real.max() + margin, "right")
        if i1 <= i0:
            continue
        idx = order[i0:i1]
        y = pts.imag[idx]
        keep = (y >= v.imag.min() - margin) & (y <= v.imag.max() + margin)
        idx = idx[keep]
        if idx.size == 0:
            continue
        dist = geo.signed_edge_distance(v, pts[idx])
        strict[idx[dist > margin]] += 1
        loose[idx[dist >= -margin]] += 1
    return strict, loose


def cell_constants(cert: DecompositionCertificate, cell: ConvexCell, n: int, rng):
    """Fresh sampled ``(K, spread, min |g|)`` on one cell."""
    frame = cert.frames[cell.root_index]
    local = cell.vertices - frame.b
    z = np.concatenate([local, geo.sample_in_polygon(local, n, rng)])
    z = z[z != 0]
    g = g_values(frame.zeros, cell.annulus_index, z)
    nu = frame.coeffs[cell.annulus_index]
    ratio = np.abs(frame.poly()(z)) / (abs(nu) * np.abs(z) ** cell.annulus_index)
    K = float(max(ratio.max(), 1 / ratio.min()))
    return K, angular_spread(g), float(np.abs(g).min())


def check_certificate(cert: DecompositionCertificate, n_samples: int = 100000, seed: int = 0, per_cell: int = 0):
    """Sampled invariants: convexity, disjointness, coverage and, if
    ``per_cell > 0``, fresh per-cell comparability and g-cone spread."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    convex = [geo.is_convex(c.vertices) for c in cert.cells]
    pts = _uniform_disk(cert.center, cert.radius, n_samples, rng)
    strict, loose = membership_counts(cert.cells, pts)
    out = {
        "n_cells": len(cert.cells),
        "all_convex": bool(all(convex)) and len(cert.cells) > 0,
        "overlap_count": int(np.sum(strict > 1)),
        "coverage_fraction": float(np.mean(loose >= 1)),
        "samples": int(n_samples),
    }
    if per_cell > 0:
        K_gap, spread = 1.0, 0.0
        for c in cert.cells:
            K, s, _ = cell_constants(cert, c, per_cell, rng)
            spread = max(spread, s)
            if c.annulus_kind == "gap":
                K_gap = max(K_gap, K)
        out["max_K_gap"] = K_gap
        out["max_spread"] = spread
    return out


def g_lower_bound_check(cert: DecompositionCertificate, n_per_cell: int = 200, seed: int = 0, tol: float = 1e-9, dyadic_only: bool = True):
    """Minimum sampled ``|g_j|`` per cell against ``2^{j-N}``."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    rows = []
    for idx, c in enumerate(cert.cells):
        if dyadic_only and c.annulus_kind != "dyadic":
            continue
        frame = cert.frames[c.root_index]
        local = c.vertices - frame.b
        z = np.concatenate([local, geo.sample_in_polygon(local, n_per_cell, rng)])
        z = z[z != 0]
        m = float(np.abs(g_values(frame.zeros, c.annulus_index, z)).min())
        bound = 2.0 ** (c.annulus_index - frame.N)
        rows.append({"cell": idx, "j": c.annulus_index, "N": frame.N, "min_abs_g": m, "bound": bound, "ok": m >= bound * (1 - tol)})
    return {"cells": rows, "violations": sum(not r["ok"] for r in rows)}
