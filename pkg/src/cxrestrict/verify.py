"""Sampling checks of the pointwise and measure inequalities.

Every sampled check is split into shards of fixed size; shard ``k`` draws from
``numpy.random.default_rng(SeedSequence([seed, k]))`` so reports depend only on
``(seed, params)`` and not on the number of worker threads.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import factorial, pi

import numpy as np

from . import geometry as geo
from .curves import OffspringCurve, SimpleCurve, c_d, curve_derivative, offspring_torsion, weight_exponent
from .determinants import gauss_legendre01, jacobian_newton, vandermonde
from .polycx import CPolynomial

POSITIVITY_FLOOR = 1e-12
SHARD_SIZE = 20000
THREADS_ENV = "CXRESTRICT_THREADS"


def n_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def shard_rng(seed: int, shard: int, *extra) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(shard), *extra]))


@dataclass
class VerificationReport:
    inequality_id: str
    samples: int
    violations: int
    min_ratio: float
    max_ratio: float
    empirical_constant: float
    seed: int
    params: dict
    degenerate: int = 0
    rows: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.samples > 0

    def to_json(self) -> dict:
        return {
            "inequality_id": self.inequality_id,
            "samples": self.samples,
            "violations": self.violations,
            "degenerate": self.degenerate,
            "min_ratio": self.min_ratio,
            "max_ratio": self.max_ratio,
            "empirical_constant": self.empirical_constant,
            "seed": self.seed,
            "params": self.params,
            "passed": self.passed,
            "rows": self.rows,
            "extra": self.extra,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass
class _Tally:
    n: int = 0
    bad: int = 0
    lo: float = np.inf
    hi: float = -np.inf
    degenerate: int = 0

    def add(self, ratios, floor, degenerate=0):
        ratios = np.asarray(ratios, dtype=float)
        self.degenerate += degenerate
        if ratios.size == 0:
            return self
        self.n += ratios.size
        self.bad += int(np.sum(~(ratios > floor)))
        self.lo = min(self.lo, float(ratios.min()))
        self.hi = max(self.hi, float(ratios.max()))
        return self

    def merge(self, other: "_Tally"):
        self.n += other.n
        self.bad += other.bad
        self.lo = min(self.lo, other.lo)
        self.hi = max(self.hi, other.hi)
        self.degenerate += other.degenerate
        return self

    def row(self, **tags) -> dict:
        return dict(tags, samples=self.n, violations=self.bad, min_ratio=self.lo, max_ratio=self.hi)


def _sharded(fn, total: int, seed: int, floor: float, shard_size: int = SHARD_SIZE, key=()):
    """Run ``fn(rng, n) -> (ratios, degenerate)`` over deterministic shards."""
    sizes = [shard_size] * (total // shard_size)
    if total % shard_size:
        sizes.append(total % shard_size)

    def one(k):
        ratios, deg = fn(shard_rng(seed, k, *key), sizes[k])
        return _Tally().add(ratios, floor, deg)

    with ThreadPoolExecutor(max_workers=n_threads()) as ex:
        parts = list(ex.map(one, range(len(sizes))))
    out = _Tally()
    for p in parts:
        out.merge(p)
    return out


def _report(iid, tally: _Tally, seed, params, rows=None, extra=None) -> VerificationReport:
    return VerificationReport(
        inequality_id=iid,
        samples=tally.n,
        violations=tally.bad,
        min_ratio=tally.lo,
        max_ratio=tally.hi,
        empirical_constant=tally.lo,
        seed=seed,
        params=params,
        degenerate=tally.degenerate,
        rows=rows or [tally.row()],
        extra=extra or {},
    )


# -- sector sampling -------------------------------------------------------


def sector_points(rng, shape, eps: float, r_max: float = 1.0):
    """Uniform points in ``{0 < y < eps x, |z| < r_max}``."""
    r = r_max * np.sqrt(rng.random(shape))
    t = np.arctan(eps) * rng.random(shape)
    return r * np.exp(1j * t)


def _in_closed_sector(w, eps) -> bool:
    w = np.asarray(w, dtype=complex)
    return bool(np.all((w.imag >= 0) & (w.imag <= eps * w.real + 1e-15)))


def _sector_offspring(o: OffspringCurve, eps):
    if not _in_closed_sector(o.shift_array(), eps):
        raise ValueError("shifts must lie in the closed sector so z + b_j + h_k stays inside it")


def _z_h_from_points(pts):
    z = pts[..., 0]
    h = pts[..., 1:] - z[..., None]
    return z, h


def _avg_abs_phid(o: OffspringCurve, pts):
    """``m^{-1} sum_j |phi^{(d)}(p + b_j)|`` elementwise."""
    pd = o.phi.derivative(o.d)
    return sum(np.abs(pd(pts + b)) for b in o.shifts) / o.m


def verify_jacobian_monomial(
    d: int,
    N: int,
    m: int = 1,
    samples: int = 100000,
    eps: float = 0.05,
    seed: int = 0,
    scale: complex = 1.0,
    shifts=None,
    floor: float = POSITIVITY_FLOOR,
    shard_size: int = SHARD_SIZE,
) -> VerificationReport:
    """``|J| / (v(h) max_k m^{-1} sum_j |phi^{(d)}(z + b_j + h_k)|)`` for
    ``phi = scale * z^N`` with all points in one narrow sector."""
    if N < d:
        raise ValueError("need N >= d")
    if shifts is None:
        shifts = [0.0] + [0.5 * k / m for k in range(1, m)]
    if len(shifts) != m:
        raise ValueError("len(shifts) must equal m")
    o = OffspringCurve(SimpleCurve(d, CPolynomial.monomial(N, scale)), tuple(shifts))
    _sector_offspring(o, eps)

    def fn(rng, n):
        pts = sector_points(rng, (n, d), eps)
        z, h = _z_h_from_points(pts)
        v = np.abs(vandermonde(pts))
        ok = v > 0
        J = np.abs(jacobian_newton(o, z[ok], h[ok]))
        den = v[ok] * _avg_abs_phid(o, pts[ok]).max(axis=-1)
        return J / den, int(np.sum(~ok))

    tally = _sharded(fn, samples, seed, floor, shard_size)
    params = dict(d=d, N=N, m=m, eps=eps, samples=samples, scale=[complex(scale).real, complex(scale).imag],
                  shifts=[[complex(b).real, complex(b).imag] for b in shifts], floor=floor)
    return _report("jacobian_monomial", tally, seed, params, [tally.row(sector=0)])


def _sample_cell(rng, poly, n, k):
    return geo.sample_in_polygon(poly, n * k, rng).reshape(n, k)


def verify_jacobian_simple_d3(
    certificate,
    phi: CPolynomial,
    samples_per_cell: int = 10000,
    seed: int = 0,
    floor: float = POSITIVITY_FLOOR,
    shard_size: int = 100000,
) -> VerificationReport:
    """Per cell: ``min |J(u_1,u_2,u_3)| / (V(u) max_i |phi'''(u_i)|)`` with the
    three points drawn uniformly from the cell."""
    if phi.degree < 3:
        raise ValueError("deg phi must be at least 3")
    o = OffspringCurve.trivial(SimpleCurve(3, phi))
    p3 = phi.derivative(3)
    total = _Tally()
    rows = []
    skipped = []
    for idx, cell in enumerate(certificate.cells):
        poly = cell.vertices
        if geo.area(poly) <= 0:
            skipped.append(idx)
            continue

        def fn(rng, n, poly=poly):
            u = _sample_cell(rng, poly, n, 3)
            v = np.abs(vandermonde(u))
            ok = v > 0
            z, h = _z_h_from_points(u[ok])
            J = np.abs(jacobian_newton(o, z, h))
            return J / (v[ok] * np.abs(p3(u[ok])).max(axis=-1)), int(np.sum(~ok))

        t = _sharded(fn, samples_per_cell, seed, floor, shard_size, key=(idx,))
        rows.append(t.row(cell=idx, **cell.tags))
        total.merge(t)
    params = dict(samples_per_cell=samples_per_cell, n_cells=len(certificate.cells), floor=floor,
                  phi=[[c.real, c.imag] for c in phi.coeffs])
    return _report("jacobian_simple_d3", total, seed, params, rows, {"skipped_cells": skipped})


def verify_torsion_bound(
    o: OffspringCurve,
    samples: int = 100000,
    eps: float = 0.05,
    seed: int = 0,
    cell=None,
    floor: float = POSITIVITY_FLOOR,
    shard_size: int = SHARD_SIZE,
) -> VerificationReport:
    """``|tau(z,h)| / sum_i m^{-1} sum_j |phi^{(d)}(z + b_j + h_i)|`` with the
    points ``z + h_i`` in one sector, or in one convex cell when given."""
    d = o.d
    if o.phi.degree < d:
        raise ValueError("deg phi must be at least d; both sides vanish identically")
    if cell is None:
        _sector_offspring(o, eps)
    elif o.m != 1:
        raise ValueError("cell sampling supports m = 1 only")

    def fn(rng, n):
        pts = sector_points(rng, (n, d), eps) if cell is None else _sample_cell(rng, cell, n, d)
        z, h = _z_h_from_points(pts)
        tau = np.abs(offspring_torsion(o, z, h))
        den = _avg_abs_phid(o, pts).sum(axis=-1)
        ok = den > 0
        return tau[ok] / den[ok], int(np.sum(~ok))

    tally = _sharded(fn, samples, seed, floor, shard_size)
    params = dict(d=d, m=o.m, eps=eps, samples=samples, floor=floor, region="cell" if cell is not None else "sector",
                  phi=[[c.real, c.imag] for c in o.phi.coeffs],
                  shifts=[[b.real, b.imag] for b in o.shifts])
    return _report("torsion_bound", tally, seed, params)


# -- sublevel sets ---------------------------------------------------------


@dataclass
class FitReport:
    slope: float
    intercept: float
    target: float
    residual: float
    grid: list
    values: list
    hits: list
    dropped: list
    samples: int
    seed: int
    params: dict

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _weighted_fit(x, y, w):
    x = np.asarray(x)
    y = np.asarray(y)
    w = np.asarray(w, dtype=float)
    A = np.stack([x, np.ones_like(x)], axis=1) * np.sqrt(w)[:, None]
    coef, *_ = np.linalg.lstsq(A, y * np.sqrt(w), rcond=None)
    pred = coef[0] * x + coef[1]
    resid = float(np.sqrt(np.sum(w * (y - pred) ** 2) / np.sum(w)))
    return float(coef[0]), float(coef[1]), resid


def default_u_grid(d: int, n: int = 16):
    if d == 2:
        return np.geomspace(0.1, 1.9, n)
    return np.geomspace(1e-4, 1e-1, n)


def verify_sublevel(d: int, u_grid=None, samples: int = 10_000_000, seed: int = 0, min_hits: int = 100,
                    chunk: int = 1_000_000) -> FitReport:
    """Monte Carlo measure of ``{h in B(0,2)^{d-1} : v(h) <= u}``; slope of
    log-measure against log-u, weighted by hit counts."""
    if d < 2:
        raise ValueError("d must be at least 2")
    u = np.sort(np.asarray(default_u_grid(d) if u_grid is None else u_grid, dtype=float))
    if u.size == 0 or np.any(u <= 0):
        raise ValueError("u grid must be nonempty and positive")
    counts = np.zeros(u.size, dtype=np.int64)
    k = 0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        rng = shard_rng(seed, k)
        r = 2 * np.sqrt(rng.random((n, d - 1)))
        t = 2 * pi * rng.random((n, d - 1))
        h = r * np.exp(1j * t)
        pts = np.concatenate([np.zeros((n, 1), dtype=complex), h], axis=1)
        v = np.sort(np.abs(vandermonde(pts)))
        counts += np.searchsorted(v, u, side="right")
        done += n
        k += 1
    box = (4 * pi) ** (d - 1)
    meas = box * counts / samples
    keep = counts >= min_hits
    if np.sum(keep) < 2:
        raise ValueError("fewer than two grid points with enough hits")
    slope, icpt, res = _weighted_fit(np.log(u[keep]), np.log(meas[keep]), counts[keep])
    return FitReport(
        slope=slope,
        intercept=icpt,
        target=4.0 / d,
        residual=res,
        grid=u.tolist(),
        values=meas.tolist(),
        hits=counts.tolist(),
        dropped=u[~keep].tolist(),
        samples=samples,
        seed=seed,
        params=dict(d=d, min_hits=min_hits, box_volume=box),
    )


# -- weight growth ---------------------------------------------------------


def weight_closed_form(d: int, N: int, R):
    """``(2 pi / (beta + 2)) (c_d N!/(N-d)!)^{4/(d^2+d)} R^{beta + 2}``."""
    e = float(weight_exponent(d))
    beta = e * (N - d)
    const = (c_d(d) * factorial(N) / factorial(N - d)) ** e
    return 2 * pi / (beta + 2) * const * np.asarray(R, dtype=float) ** (beta + 2)


def weight_integral(c: SimpleCurve, R: float, n_r: int = 48, n_t: int = 64, grade: int = 3) -> float:
    """``int_{|z| <= R} w dmu`` in polar coordinates, with ``r = R t^grade``
    to absorb the vanishing of ``w`` at the origin."""
    t, wt = gauss_legendre01(n_r)
    r = R * t**grade
    jac = R * grade * t ** (grade - 1)
    th = 2 * pi * np.arange(n_t) / n_t
    z = r[:, None] * np.exp(1j * th)[None, :]
    pd = c.phi.derivative(c.d)
    w = np.abs(c_d(c.d) * pd(z)) ** float(weight_exponent(c.d))
    return float(np.sum(w.mean(axis=1) * 2 * pi * r * jac * wt))


def weight_growth_exponent(d: int, N: int, R_grid=None) -> FitReport:
    if N < d:
        raise ValueError("need N >= d")
    R = np.asarray(np.geomspace(0.5, 8.0, 9) if R_grid is None else R_grid, dtype=float)
    c = SimpleCurve(d, CPolynomial.monomial(N))
    vals = np.array([weight_integral(c, r) for r in R])
    slope, icpt, res = _weighted_fit(np.log(R), np.log(vals), np.ones_like(R))
    target = float(weight_exponent(d)) * (N - d) + 2
    closed = weight_closed_form(d, N, R)
    return FitReport(
        slope=slope,
        intercept=icpt,
        target=target,
        residual=res,
        grid=R.tolist(),
        values=vals.tolist(),
        hits=[],
        dropped=[],
        samples=0,
        seed=0,
        params=dict(d=d, N=N, closed_form=closed.tolist(),
                    max_rel_err_closed_form=float(np.max(np.abs(vals - closed) / closed))),
    )


# -- weight optimality -----------------------------------------------------


@dataclass
class Parallelepiped:
    """``anchor + generator_matrix @ [-1/2, 1/2]^{2d}``.

    Columns ``2k, 2k+1`` are the real embeddings of ``s_j v_j`` and
    ``i s_j v_j`` with ``v_j = gamma^{(j)}(a)/j!`` and box side ``s_j = 2 eps^j``.
    """

    anchor: np.ndarray
    generator_matrix: np.ndarray
    volume: float
    eps: float
    a: complex
    complex_generators: np.ndarray


def parallelepiped_closed_form(c: SimpleCurve, a, eps) -> float:
    d = c.d
    fact = np.prod([float(factorial(j)) for j in range(2, d + 1)])
    tau = c_d(d) * c.phi.derivative(d)(a)
    return 2.0 ** (2 * d) * fact**-2 * eps ** (d * d + d) * abs(tau) ** 2


def build_parallelepiped(c: SimpleCurve, a, eps: float) -> Parallelepiped:
    if eps <= 0:
        raise ValueError("eps must be positive")
    d = c.d
    a = complex(a)
    V = np.stack([curve_derivative(c, a, j) / factorial(j) for j in range(1, d + 1)], axis=1)
    G = np.empty((2 * d, 2 * d))
    for j in range(d):
        s = 2 * eps ** (j + 1)
        for k, col in enumerate((s * V[:, j], 1j * s * V[:, j])):
            G[0::2, 2 * j + k] = col.real
            G[1::2, 2 * j + k] = col.imag
    anchor = np.empty(2 * d)
    g = curve_derivative(c, a, 0)
    anchor[0::2] = g.real
    anchor[1::2] = g.imag
    vol = abs(float(np.linalg.det(G)))
    return Parallelepiped(anchor, G, vol, eps, a, V)


def _increments(c: SimpleCurve, a, z):
    """``gamma(a + z) - gamma(a)`` from Taylor-shifted components (no cancellation)."""
    comps = [CPolynomial.monomial(i) for i in range(1, c.d)] + [c.phi]
    out = []
    for q in comps:
        s = np.array(q.shifted(a).coeffs, dtype=complex)
        s[0] = 0
        out.append(CPolynomial(s)(z))
    return np.stack(out, axis=-1)


def containment_coords(c: SimpleCurve, P: Parallelepiped, z):
    """Complex coordinates ``z_j`` with ``gamma(a + z) = gamma(a) + sum_j z_j v_j``."""
    rhs = _increments(c, P.a, np.asarray(z, dtype=complex))
    return np.linalg.solve(P.complex_generators, rhs.T).T


def _inside_dilated(P: Parallelepiped, coords):
    half = 2 * P.eps ** np.arange(1, coords.shape[-1] + 1)
    return np.all((np.abs(coords.real) <= half) & (np.abs(coords.imag) <= half), axis=-1)


def lebesgue_ratio(c: SimpleCurve, P: Parallelepiped, n: int = 200) -> float:
    """``int chi_{P_1}(gamma(z)) w dmu / |P_1|^{2/(d^2+d)}``, with ``P_1`` the
    box dilated by 2. The first coordinate equals ``z - a``, so the integral
    lives on the square ``|Re|, |Im| <= 2 eps`` around ``a``; midpoint rule."""
    d = c.d
    s = 2 * P.eps
    x = (np.arange(n) + 0.5) / n * 2 * s - s
    z = x[:, None] + 1j * x[None, :]
    inside = _inside_dilated(P, containment_coords(c, P, z.ravel()))
    w = np.abs(c_d(d) * c.phi.derivative(d)(P.a + z.ravel())) ** float(weight_exponent(d))
    integral = float(np.sum(w * inside)) * (2 * s / n) ** 2
    vol1 = P.volume * 2.0 ** (2 * d)
    return integral / vol1 ** (2.0 / (d * d + d))


def verify_containment(
    c: SimpleCurve,
    a,
    eps: float = 0.1,
    samples: int = 10000,
    seed: int = 0,
    eps_floor: float = 1e-8,
    sweep=None,
) -> VerificationReport:
    """Halve ``eps`` until every sampled ``gamma(a + z)``, ``|z| <= eps``, lies in
    the dilated box; report the fraction at the accepted ``eps`` and the
    Lebesgue ratio over ``sweep``."""
    a = complex(a)
    tau = c_d(c.d) * c.phi.derivative(c.d)(a)
    if tau == 0:
        raise ValueError("torsion vanishes at a; the parallelepiped is degenerate")
    best = (0.0, None)
    e = float(eps)
    while e >= eps_floor:
        P = build_parallelepiped(c, a, e)
        rng = shard_rng(seed, 0)
        r = e * np.sqrt(rng.random(samples))
        z = r * np.exp(2j * pi * rng.random(samples))
        frac = float(np.mean(_inside_dilated(P, containment_coords(c, P, z))))
        if frac > best[0]:
            best = (frac, e)
        if frac == 1.0:
            break
        e /= 2
    else:
        raise ValueError(f"no eps >= {eps_floor} gives full containment; best fraction {best[0]} at eps={best[1]}")
    sweep = np.geomspace(1e-4, 1e-2, 5) if sweep is None else np.asarray(sweep, dtype=float)
    ratios = [lebesgue_ratio(c, build_parallelepiped(c, a, s)) for s in sweep]
    tally = _Tally(n=samples, bad=int(round((1 - frac) * samples)), lo=frac, hi=frac)
    params = dict(d=c.d, a=[a.real, a.imag], eps_start=eps, samples=samples,
                  phi=[[q.real, q.imag] for q in c.phi.coeffs])
    extra = dict(eps_found=e, containment_fraction=frac, sweep=sweep.tolist(), lebesgue_ratio=ratios,
                 lebesgue_ratio_spread=float(max(ratios) / min(ratios)))
    return _report("containment", tally, seed, params, [tally.row(eps=e)], extra)
