"""Vandermonde determinants and holomorphic Jacobians of the d-fold sum map
``(z, h_2, ..., h_d) -> sum_k Gamma_b(z + h_k)``."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
from numpy.polynomial.legendre import leggauss

from .curves import OffspringCurve, component_polynomials, offspring_derivative
from .polycx import CPolynomial, eval_PN

REL_FLOOR = 1e-300


def rel_err(a, b):
    """``|a - b| / max(|a|, |b|, 1e-300)``, elementwise."""
    a = np.asarray(a)
    b = np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), REL_FLOOR)


def vandermonde(points):
    """``prod_{i<j} (z_j - z_i)`` over the last axis."""
    pts = np.asarray(points, dtype=complex)
    d = pts.shape[-1]
    if d < 2:
        raise ValueError("vandermonde needs at least two points")
    out = np.ones(pts.shape[:-1], dtype=complex)
    for i in range(d):
        for j in range(i + 1, d):
            out = out * (pts[..., j] - pts[..., i])
    return complex(out) if out.ndim == 0 else out


def lu_det(mat):
    """Determinant by LU with partial pivoting, batched over leading axes.

    A pivot that is exactly zero makes the determinant exactly zero.
    """
    a = np.array(mat, dtype=complex)
    if a.shape[-1] != a.shape[-2]:
        raise ValueError("matrix must be square")
    n = a.shape[-1]
    batch = a.shape[:-2]
    a = a.reshape((-1, n, n))
    det = np.ones(a.shape[0], dtype=complex)
    rows = np.arange(a.shape[0])
    for k in range(n):
        piv = k + np.argmax(np.abs(a[:, k:, k]), axis=1)
        swap = piv != k
        if np.any(swap):
            tmp = a[rows[swap], k, :].copy()
            a[rows[swap], k, :] = a[rows[swap], piv[swap], :]
            a[rows[swap], piv[swap], :] = tmp
            det[swap] = -det[swap]
        pivot = a[:, k, k]
        det = det * pivot
        live = pivot != 0
        if k + 1 < n and np.any(live):
            factors = np.zeros((a.shape[0], n - k - 1), dtype=complex)
            factors[live] = a[live, k + 1 :, k] / pivot[live, None]
            a[:, k + 1 :, k:] -= factors[:, :, None] * a[:, k, None, k:]
    det = det.reshape(batch)
    return complex(det) if det.ndim == 0 else det


def _full_h(h):
    h = np.asarray(h, dtype=complex)
    return np.concatenate([np.zeros(h.shape[:-1] + (1,), dtype=complex), h], axis=-1)


def jacobian_matrix(o: OffspringCurve, z, h) -> np.ndarray:
    """Matrix whose k-th column is ``Gamma_b'(z + h_k)`` (``h_1 = 0``)."""
    z = np.asarray(z, dtype=complex)
    pts = z[..., None] + _full_h(h)
    cols = offspring_derivative(o, pts, 1)  # (..., d_points, d_components)
    return np.swapaxes(cols, -1, -2)


def jacobian_direct(o: OffspringCurve, z, h):
    h = np.asarray(h, dtype=complex)
    if h.shape[-1] != o.d - 1:
        raise ValueError(f"expected {o.d - 1} entries h_2..h_d")
    if o.phi.degree < o.d:
        # last row lies in the span of the power rows: J vanishes identically
        shape = np.broadcast(np.asarray(z), h[..., 0]).shape
        out = np.zeros(shape, dtype=complex)
        return complex(out) if out.ndim == 0 else out
    return lu_det(jacobian_matrix(o, z, h))


def divided_differences(coeffs, points):
    """``q[x_1], q[x_1, x_2], ..., q[x_1, ..., x_d]`` for the polynomial with
    ascending ``coeffs``, using ``x^n[x_1..x_{t+1}] = P_{n-t}(x_1..x_{t+1})``.
    Points are on the last axis; the result has the same shape."""
    a = np.asarray(coeffs, dtype=complex)
    pts = np.asarray(points, dtype=complex)
    n = a.size - 1
    H = np.zeros((n + 1,) + pts.shape[:-1], dtype=complex)
    H[0] = 1.0
    out = np.zeros(pts.shape, dtype=complex)
    for t in range(pts.shape[-1]):
        x = pts[..., t]
        for k in range(1, n + 1):
            H[k] = H[k] + x * H[k - 1]
        if t <= n:
            out[..., t] = np.tensordot(a[t:], H[: n + 1 - t], axes=(0, 0))
    return out


def jacobian_newton(o: OffspringCurve, z, h):
    """Same determinant as ``jacobian_direct`` computed in the Newton basis:
    ``V(x) * det(D)`` with ``D[k, t] = Gamma_k'[x_1, ..., x_{t+1}]``.

    Moving to divided differences removes the near-parallel columns that
    clustered points produce, so the LU step runs on a well-conditioned matrix
    and the Vandermonde factor is an exact product of differences.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape[-1] != o.d - 1:
        raise ValueError(f"expected {o.d - 1} entries h_2..h_d")
    z = np.asarray(z, dtype=complex)
    pts = z[..., None] + _full_h(h)
    if o.phi.degree < o.d:
        out = np.zeros(pts.shape[:-1], dtype=complex)
        return complex(out) if out.ndim == 0 else out
    rows = [divided_differences(p.derivative(1).coeffs, pts) for p in component_polynomials(o)]
    D = np.stack(rows, axis=-2)
    out = vandermonde(pts) * lu_det(D)
    return complex(out) if np.ndim(out) == 0 else out


def monomial_degree(phi: CPolynomial) -> tuple[int, complex]:
    """``(N, a)`` if ``phi = a z^N``; raises otherwise."""
    nz = np.flatnonzero(phi.coeffs)
    if nz.size != 1:
        raise ValueError("phi must be a single monomial a*z^N")
    n = int(nz[0])
    return n, complex(phi.coeffs[n])


def jacobian_closed_form(o: OffspringCurve, z, h):
    """Closed form of the Jacobian for ``phi = a z^N``:

    ``a (d-1)! N / m * prod_{k<l}(h_l - h_k) * sum_j P_{N-d}(z + b_j + h_d, ..., z + b_j + h_1)``
    """
    n, a = monomial_degree(o.phi)
    d = o.d
    if n < d:
        raise ValueError("closed form requires N >= d")
    z = np.asarray(z, dtype=complex)
    hh = _full_h(h)
    vdm = vandermonde(hh)
    acc = 0
    for b in o.shifts:
        acc = acc + eval_PN(n - d, z[..., None] + b + hh)
    return a * factorial(d - 1) * n / o.m * vdm * acc


def real_jacobian(o: OffspringCurve, z, h):
    """Real Jacobian of the sum map; equals ``|J_C|^2``."""
    return np.abs(jacobian_direct(o, z, h)) ** 2


@dataclass(frozen=True)
class JacobianSample:
    z: complex
    h: tuple
    value: complex
    vandermonde: float
    ratio: float | None


def gauss_legendre01(n: int):
    x, w = leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def jacobian_integral_d3(phi: CPolynomial, u, v, w, n: int | None = None):
    """Holomorphic Jacobian of ``(u, v, w) -> gamma(u) + gamma(v) + gamma(w)``
    for ``gamma = (z, z^2, phi)``, from the triple line integral

        2 * int_u^v int_v^w int_{s1}^{s2} phi'''(z) dz ds2 ds1.

    The factor 2 is the derivative of the ``z^2`` component. The integrand is
    polynomial, so tensor Gauss-Legendre with ``ceil(deg phi'''/2) + 1`` nodes
    per level is exact.
    """
    p3 = phi.derivative(3)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    w = np.asarray(w, dtype=complex)
    if p3.is_zero():
        out = np.zeros(np.broadcast(u, v, w).shape, dtype=complex)
        return complex(out) if out.ndim == 0 else out
    if n is None:
        n = -(-p3.degree // 2) + 1
    t, wt = gauss_legendre01(n)
    t1 = t[:, None, None]
    t2 = t[None, :, None]
    t3 = t[None, None, :]
    weights = wt[:, None, None] * wt[None, :, None] * wt[None, None, :]
    uu = u[..., None, None, None]
    vv = v[..., None, None, None]
    ww = w[..., None, None, None]
    s1 = uu + (vv - uu) * t1
    s2 = vv + (ww - vv) * t2
    zz = s1 + (s2 - s1) * t3
    integrand = (s2 - s1) * p3(zz)
    inner = np.sum(integrand * weights, axis=(-3, -2, -1))
    out = 2.0 * (v - u) * (w - v) * inner
    return complex(out) if np.ndim(out) == 0 else out
