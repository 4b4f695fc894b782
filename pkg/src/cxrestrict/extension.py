"""Extension operator ``T f(x) = int e^{i x . gamma(z)} f(z) w(z) dmu(z)`` and
its localized form ``T_lambda``.

Integrals run over the support disk of ``f`` in polar coordinates
``z = c + rho t^2 e^{i theta}`` with panelled Gauss-Legendre rules. Each level
doubles the panel count in both directions; a value is accepted once two
successive levels agree to ``tol`` relative to ``max(|T f|, int |f| w)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from math import ceil, log2, pi

import numpy as np

from .curves import OffspringCurve, SimpleCurve, c_d, curve_derivative, offspring_derivative, weight_exponent
from .determinants import gauss_legendre01
from .polycx import CPolynomial

NODES = 8
GRADE = 2
MIN_LEVEL = 2
MAX_LEVEL = 7
GAUSS_TRUNCATION = 6.0
CHUNK = 1 << 14


@dataclass(frozen=True)
class FunctionSpec:
    kind: str
    R: float = 1.0
    center: complex = 0j
    width: float = 1.0
    value: complex = 1.0

    def __post_init__(self):
        if self.kind not in ("indicator_ball", "gaussian_bump", "constant"):
            raise ValueError(f"unknown function kind {self.kind!r}")
        if not self.R > 0:
            raise ValueError("R must be positive")
        if not self.width > 0:
            raise ValueError("width must be positive")

    @classmethod
    def indicator_ball(cls, R: float, center=0j):
        return cls("indicator_ball", R=R, center=complex(center))

    @classmethod
    def gaussian_bump(cls, center, width: float):
        return cls("gaussian_bump", center=complex(center), width=width)

    @classmethod
    def constant(cls, value=1.0, R: float = 1.0):
        return cls("constant", R=R, value=complex(value))

    @property
    def support(self) -> tuple[complex, float]:
        if self.kind == "gaussian_bump":
            return complex(self.center), GAUSS_TRUNCATION * self.width
        return complex(self.center), float(self.R)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        c, rho = self.support
        inside = np.abs(z - c) <= rho
        if self.kind == "gaussian_bump":
            vals = np.exp(-np.abs(z - c) ** 2 / (2 * self.width**2))
        elif self.kind == "indicator_ball":
            vals = np.ones(z.shape)
        else:
            vals = np.full(z.shape, self.value, dtype=complex)
        return np.where(inside, vals, 0)

    def is_zero(self) -> bool:
        return self.kind == "constant" and self.value == 0


@dataclass
class QuadResult:
    value: complex
    converged: bool
    level: int
    l1_norm: float
    change: float


@dataclass
class ExtensionScanResult:
    grid: list
    values: list
    fitted_exponent: float
    residual: float
    probe_points: list
    converged: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)


def cutoff(x):
    """``psi(x) = prod_i max(0, 1 - x_i^2)^2``."""
    x = np.asarray(x, dtype=float)
    return float(np.prod(np.maximum(0.0, 1.0 - x**2) ** 2))


def _complex_dual(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size % 2:
        raise ValueError("x must be a real vector of even length 2d")
    return x[0::2] + 1j * x[1::2]


def _polar_rule(center, rho, level):
    n_r = 2**level
    n_t = 4 * 2**level
    t, wt = gauss_legendre01(NODES)
    # graded radius r = rho s^GRADE with s in panels of [0, 1]
    s = ((np.arange(n_r)[:, None] + t[None, :]) / n_r).ravel()
    ws = np.tile(wt, n_r) / n_r
    r = rho * s**GRADE
    wr = ws * rho * GRADE * s ** (GRADE - 1) * r
    th = ((np.arange(n_t)[:, None] + t[None, :]) / n_t).ravel() * 2 * pi
    wth = np.tile(wt, n_t) / n_t * 2 * pi
    z = center + r[:, None] * np.exp(1j * th)[None, :]
    return z, wr[:, None] * wth[None, :]


def _adaptive(integrand, support, tol, level0, max_level):
    """``integrand(z) -> (oscillatory values, |non-oscillatory| values)``."""
    center, rho = support
    prev = None
    change = np.inf
    lvl = max(level0, MIN_LEVEL)
    if lvl > max_level:
        z, w = _polar_rule(center, rho, max_level)
        val, mag = integrand(z)
        return QuadResult(complex(np.sum(val * w)), False, max_level, float(np.sum(mag * w)), np.inf)
    while lvl <= max_level:
        z, w = _polar_rule(center, rho, lvl)
        val, mag = integrand(z)
        cur = complex(np.sum(val * w))
        l1 = float(np.sum(mag * w))
        if prev is not None:
            change = abs(cur - prev)
            if change <= tol * max(abs(cur), l1, 1e-300):
                return QuadResult(cur, True, lvl, l1, change)
        prev = cur
        lvl += 1
    return QuadResult(cur, False, max_level, l1, change)


def _polar_support(support, zeros):
    """Centre the polar rule on the single weight zero inside the support, if
    any, so the cusp of ``w`` sits at the graded origin."""
    c, rho = support
    inside = [z for z in zeros if abs(z - c) < rho]
    if len(inside) != 1:
        return support
    z0 = complex(inside[0])
    return z0, abs(z0 - c) + rho


def _weight_zeros(p: CPolynomial):
    from .polycx import distinct_roots

    if p.degree < 1:
        return []
    return list(distinct_roots(p)[0])


def _oscillation_level(freq: float, rho: float) -> int:
    """Smallest level with node spacing below ``2 pi / (10 freq)``."""
    if freq <= 0:
        return MIN_LEVEL
    # radial and angular spacings are about rho / (2^L NODES) and 2 pi rho / (4 2^L NODES)
    need = 10 * freq * rho / (2 * pi * NODES)
    return max(MIN_LEVEL, int(ceil(log2(max(need, 1.0)))))


def _phase_gradient_bound(deriv, support, xc) -> float:
    """``1.1 max |sum_k conj(x_k) gamma_k'(z)|`` over a coarse rule on the
    support; this is the modulus of the gradient of the phase."""
    z, _ = _polar_rule(support[0], support[1], 1)
    dg = deriv(z.ravel())
    xc = np.atleast_2d(xc)
    return 1.1 * float(np.max(np.abs(dg @ np.conj(xc).T)))


def simple_weight(c: SimpleCurve, z):
    return np.abs(c_d(c.d) * c.phi.derivative(c.d)(z)) ** float(weight_exponent(c.d))


def extension_values(c: SimpleCurve, f: FunctionSpec, X, tol: float = 1e-8, max_level: int = MAX_LEVEL):
    """``T f`` at every row of ``X`` on shared nodes; returns values, the
    convergence flag and the level reached."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != 2 * c.d:
        raise ValueError(f"x must have length {2 * c.d}")
    if f.is_zero():
        return np.zeros(X.shape[0], dtype=complex), True, 0
    xc = X[:, 0::2] + 1j * X[:, 1::2]
    support = _polar_support(f.support, _weight_zeros(c.phi.derivative(c.d)))
    freq = _phase_gradient_bound(lambda z: curve_derivative(c, z, 1), support, xc)
    center, rho = support
    lvl = min(max(_oscillation_level(freq, rho), MIN_LEVEL), max_level)
    prev = None
    while True:
        z, w = _polar_rule(center, rho, lvl)
        z = z.ravel()
        fw = f(z) * simple_weight(c, z) * w.ravel()
        cur = np.zeros(X.shape[0], dtype=complex)
        for k in range(0, z.size, CHUNK):
            g = curve_derivative(c, z[k : k + CHUNK], 0)
            cur += np.exp(1j * (g @ np.conj(xc).T).real).T @ fw[k : k + CHUNK]
        l1 = float(np.sum(np.abs(fw)))
        if prev is not None:
            if np.all(np.abs(cur - prev) <= tol * np.maximum(np.abs(cur), l1)):
                return cur, True, lvl
        if lvl >= max_level:
            return cur, False, lvl
        prev = cur
        lvl += 1


def extension_value(c: SimpleCurve, f: FunctionSpec, x, tol: float = 1e-8, max_level: int = MAX_LEVEL) -> QuadResult:
    xc = _complex_dual(x)
    if xc.size != c.d:
        raise ValueError(f"x must have length {2 * c.d}")
    if f.is_zero():
        return QuadResult(0j, True, 0, 0.0, 0.0)
    support = _polar_support(f.support, _weight_zeros(c.phi.derivative(c.d)))
    freq = _phase_gradient_bound(lambda z: curve_derivative(c, z, 1), support, xc)

    def integrand(z):
        g = curve_derivative(c, z, 0)
        phase = np.sum(np.conj(xc) * g, axis=-1).real
        fw = f(z) * simple_weight(c, z)
        return np.exp(1j * phase) * fw, np.abs(fw)

    return _adaptive(integrand, support, tol, _oscillation_level(freq, support[1]), max_level)


def offspring_weight_values(o: OffspringCurve, z):
    pd = o.phi.derivative(o.d)
    avg = sum(pd(z + b) for b in o.shifts) / o.m
    return np.abs(c_d(o.d) * avg) ** float(weight_exponent(o.d))


def t_lambda_value(o: OffspringCurve, f: FunctionSpec, x, lam: float, psi=cutoff, tol: float = 1e-8,
                   max_level: int = MAX_LEVEL) -> QuadResult:
    """``psi(x) int_{B(1)} e^{i lam x . Gamma(z)} f(z) w(z) dmu(z)``."""
    center, rho = f.support
    if abs(center) + rho > 1 + 1e-12:
        raise ValueError("f must be supported in the unit disk")
    xc = _complex_dual(x)
    if xc.size != o.d:
        raise ValueError(f"x must have length {2 * o.d}")
    p = psi(np.asarray(x, dtype=float))
    if p == 0 or f.is_zero():
        return QuadResult(0j, True, 0, 0.0, 0.0)
    pd = o.phi.derivative(o.d)
    avg = CPolynomial([0.0])
    for b in o.shifts:
        avg = avg + pd.shifted(b)
    support = _polar_support(f.support, _weight_zeros(avg))
    rho = support[1]
    freq = abs(lam) * _phase_gradient_bound(lambda z: offspring_derivative(o, z, 1), support, xc)

    def integrand(z):
        g = offspring_derivative(o, z, 0)
        phase = lam * np.sum(np.conj(xc) * g, axis=-1).real
        fw = f(z) * offspring_weight_values(o, z)
        return np.exp(1j * phase) * fw, np.abs(fw)

    q = _adaptive(integrand, support, tol, _oscillation_level(freq, rho), max_level)
    return QuadResult(p * q.value, q.converged, q.level, p * q.l1_norm, p * q.change)


def _fit(x, y):
    A = np.stack([np.log(x), np.ones(len(x))], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.log(y), rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - np.log(y)) ** 2)))
    return float(coef[0]), resid


def box_probes(d: int, N: int, R: float, a: float):
    """Centre and corners of ``a E_R``, ``E_R`` with half-sides ``R^{-1}, ..., R^{-(d-1)}, R^{-N}``."""
    half = np.array([R ** -k for k in range(1, d)] + [R ** -float(N)])
    half = np.repeat(half, 2) * a
    pts = [np.zeros(2 * d)]
    for signs in product((-1.0, 1.0), repeat=2 * d):
        pts.append(np.array(signs) * half)
    return pts


def homogeneity_scan(d: int, N: int, R_grid=None, a_floor: float = 2.0**-12, tol: float = 1e-3) -> ExtensionScanResult:
    """``T chi_{B_R}(0)`` against ``R`` plus the largest ``a = 2^{-k}`` with
    ``|T chi_{B_R}| >= T chi_{B_R}(0) / 2`` on the centre and corners of
    ``a E_R``."""
    if N < d:
        raise ValueError("need N >= d")
    R = np.asarray(np.geomspace(0.5, 4.0, 4) if R_grid is None else R_grid, dtype=float)
    if np.any(np.diff(R) <= 0):
        raise ValueError("R grid must be strictly increasing")
    c = SimpleCurve(d, CPolynomial.monomial(N))
    values, a_found, conv, probes_all = [], [], [], []
    for r in R:
        f = FunctionSpec.indicator_ball(r)
        t0 = extension_value(c, f, np.zeros(2 * d))
        values.append(t0.value.real)
        conv.append(t0.converged)
        a = 1.0
        while a >= a_floor:
            probes = box_probes(d, N, r, a)
            vals, _, _ = extension_values(c, f, np.array(probes), tol=1e-6)
            if np.all(np.abs(vals) >= 0.5 * t0.value.real):
                break
            a /= 2
        else:
            raise ValueError(f"no a >= {a_floor} satisfies the half-value criterion at R={r}")
        a_found.append(a)
        probes_all.append([p.tolist() for p in probes])
    slope, resid = _fit(R, np.array(values))
    target = float(weight_exponent(d)) * (N - d) + 2
    return ExtensionScanResult(
        grid=R.tolist(),
        values=values,
        fitted_exponent=slope,
        residual=resid,
        probe_points=probes_all,
        converged=conv,
        extra=dict(target=target, a=a_found, passed=abs(slope - target) <= tol),
    )


def lambda_scan(o: OffspringCurve, f: FunctionSpec, x, lambdas, tol: float = 1e-8) -> ExtensionScanResult:
    """``|T_lambda f(x)|`` over a lambda grid with a log-log decay fit
    (exploratory; there is no target exponent at a fixed point)."""
    lam = np.asarray(lambdas, dtype=float)
    if np.any(np.diff(lam) <= 0):
        raise ValueError("lambda grid must be strictly increasing")
    res = [t_lambda_value(o, f, x, l, tol=tol) for l in lam]
    vals = np.array([abs(r.value) for r in res])
    pos = vals > 0
    slope, resid = _fit(lam[pos], vals[pos]) if np.sum(pos) >= 2 else (float("nan"), float("nan"))
    return ExtensionScanResult(
        grid=lam.tolist(),
        values=vals.tolist(),
        fitted_exponent=slope,
        residual=resid,
        probe_points=[list(map(float, x))],
        converged=[r.converged for r in res],
    )
