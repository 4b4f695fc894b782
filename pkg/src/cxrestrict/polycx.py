"""Complex polynomials, simultaneous root finding and complete homogeneous
symmetric polynomials.

Coefficients are stored in ascending powers: ``coeffs[k]`` multiplies ``z**k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

N_MAX = 64
CLUSTER_RADIUS = 1e-6


class RootFindingError(RuntimeError):
    """Raised when the simultaneous iteration fails to converge.

    The best iterate and its scaled residual are attached so callers can
    decide whether the approximation is still usable.
    """

    def __init__(self, message, roots, residual):
        super().__init__(message)
        self.roots = roots
        self.residual = residual


def _as_complex_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    return np.atleast_1d(arr)


@dataclass(frozen=True, eq=False)
class CPolynomial:
    """Polynomial with complex coefficients, optionally carrying its roots.

    ``roots`` and ``leading`` are filled in when the polynomial was built from
    its factored form ``leading * prod(z - r)``.
    """

    coeffs: np.ndarray
    roots: np.ndarray | None = field(default=None)
    leading: complex | None = field(default=None)

    def __post_init__(self):
        c = _as_complex_array(self.coeffs).copy()
        if c.size == 0:
            c = np.zeros(1, dtype=complex)
        if not np.all(np.isfinite(c)):
            raise ValueError("non-finite coefficient")
        # trim trailing zeros but keep at least the constant term
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else c[:1] * 0
        if c.size - 1 > N_MAX:
            raise ValueError(f"degree {c.size - 1} exceeds N_MAX={N_MAX}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.roots is not None:
            r = _as_complex_array(self.roots).copy()
            r.setflags(write=False)
            object.__setattr__(self, "roots", r)

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_roots(cls, roots, leading=1.0) -> "CPolynomial":
        roots = _as_complex_array(roots) if len(roots) else np.zeros(0, complex)
        leading = complex(leading)
        if leading == 0:
            raise ValueError("leading coefficient must be nonzero")
        c = np.array([leading], dtype=complex)
        for r in roots:
            # multiply by (z - r), ascending storage
            nxt = np.zeros(c.size + 1, dtype=complex)
            nxt[1:] += c
            nxt[:-1] -= r * c
            c = nxt
        return cls(c, roots=roots, leading=leading)

    @classmethod
    def monomial(cls, n: int, scale=1.0) -> "CPolynomial":
        c = np.zeros(n + 1, dtype=complex)
        c[n] = scale
        return cls(c)

    # -- basic properties -------------------------------------------------
    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def lead(self) -> complex:
        return complex(self.coeffs[-1])

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0

    def __call__(self, z):
        return horner(self.coeffs, z)

    def __eq__(self, other):
        if not isinstance(other, CPolynomial):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __repr__(self):
        return f"CPolynomial(degree={self.degree}, coeffs={self.coeffs.tolist()})"

    def scaled(self, lam) -> "CPolynomial":
        lam = complex(lam)
        roots = self.roots if lam != 0 else None
        leading = None if self.leading is None else self.leading * lam
        return CPolynomial(self.coeffs * lam, roots=roots, leading=leading)

    def __add__(self, other: "CPolynomial") -> "CPolynomial":
        n = max(self.coeffs.size, other.coeffs.size)
        c = np.zeros(n, dtype=complex)
        c[: self.coeffs.size] += self.coeffs
        c[: other.coeffs.size] += other.coeffs
        return CPolynomial(c)

    def derivative(self, k: int = 1) -> "CPolynomial":
        return derivative(self, k)

    def shifted(self, b) -> "CPolynomial":
        """Return ``q(z) = p(z + b)`` (Taylor shift)."""
        b = complex(b)
        n = self.degree
        out = np.zeros(n + 1, dtype=complex)
        powers = b ** np.arange(n + 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for k in range(i + 1):
                out[k] += a * comb(i, k) * powers[i - k]
        roots = None if self.roots is None else self.roots - b
        return CPolynomial(out, roots=roots, leading=self.leading)

    def expanded_matches_roots(self, rtol=1e-9) -> bool:
        if self.roots is None:
            return True
        ref = CPolynomial.from_roots(self.roots, self.leading).coeffs
        scale = max(np.max(np.abs(ref)), 1e-300)
        if ref.size != self.coeffs.size:
            return False
        return bool(np.max(np.abs(ref - self.coeffs)) <= rtol * scale)


def horner(coeffs, z):
    """Evaluate ascending-coefficient polynomial at ``z`` (scalar or array)."""
    z_arr = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z_arr)):
        raise ValueError("non-finite argument")
    acc = np.zeros_like(z_arr)
    for a in coeffs[::-1]:
        acc = acc * z_arr + a
    if acc.ndim == 0:
        return complex(acc)
    return acc


def derivative(p: CPolynomial, k: int) -> CPolynomial:
    if k < 1:
        raise ValueError("derivative order must be >= 1")
    n = p.degree
    if k > n:
        return CPolynomial([0.0])
    idx = np.arange(k, n + 1)
    # falling factorial i (i-1) ... (i-k+1)
    fall = np.ones(idx.size)
    for t in range(k):
        fall *= idx - t
    return CPolynomial(p.coeffs[k:] * fall)


def _scaled_residual(coeffs, roots):
    lead = abs(coeffs[-1])
    n = coeffs.size - 1
    return np.abs(horner(coeffs, roots)) / (lead * (1.0 + np.abs(roots)) ** n)


def find_roots(p: CPolynomial, tol: float = 1e-9, max_iter: int = 500) -> np.ndarray:
    """All ``deg p`` roots of ``p`` with multiplicity.

    Uses Aberth-Ehrlich simultaneous iteration (a cubically convergent member
    of the Durand-Kerner family) on the monic normalization, started on a
    circle of radius ``1 + max|a_k / a_n|``, followed by a few Newton polishing
    steps per root. Near-coincident iterates are then consolidated so that
    multiple roots come back as exact repeats.
    """
    n = p.degree
    if n < 1:
        raise ValueError("find_roots requires degree >= 1")
    monic = p.coeffs / p.coeffs[-1]
    # exact zero roots: factor out powers of z first
    nzero = int(np.flatnonzero(monic)[0])
    if nzero == n:
        return np.zeros(n, dtype=complex)
    work = monic[nzero:]
    m = work.size - 1
    dwork = work[1:] * np.arange(1, m + 1)

    radius = 1.0 + np.max(np.abs(work[:-1]))
    # offset angle avoids symmetric stalls on real-coefficient inputs
    z = radius * np.exp(1j * (2 * np.pi * np.arange(m) / m + 0.4))
    eye = np.eye(m, dtype=bool)
    converged = False
    for _ in range(max_iter):
        pz = horner(work, z)
        dpz = horner(dwork, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = pz / dpz
            diff = z[:, None] - z[None, :]
            diff[eye] = 1.0
            s = np.sum(np.where(eye, 0.0, 1.0 / diff), axis=1)
            step = ratio / (1.0 - ratio * s)
        bad = ~np.isfinite(step)
        if np.any(bad):
            # fall back to a Weierstrass step where Aberth breaks down
            wstep = pz / np.prod(np.where(eye, 1.0, diff), axis=1)
            step = np.where(bad, wstep, step)
            step = np.where(np.isfinite(step), step, 1e-8 * radius)
        z = z - step
        if np.all(np.abs(step) <= 4 * np.finfo(float).eps * (1.0 + np.abs(z))):
            converged = True
            break
    z = _polish(work, dwork, z)
    roots = np.concatenate([np.zeros(nzero, dtype=complex), consolidate_multiple(work, z)])
    resid = _scaled_residual(p.coeffs, roots)
    if not converged and np.max(resid) > tol:
        raise RootFindingError(
            f"root iteration did not converge in {max_iter} steps "
            f"(max scaled residual {np.max(resid):.3e})",
            roots,
            float(np.max(resid)),
        )
    if np.max(resid) > tol:
        raise RootFindingError(
            f"scaled residual {np.max(resid):.3e} exceeds {tol:g}", roots, float(np.max(resid))
        )
    return roots


def _polish(coeffs, dcoeffs, z, steps=3):
    for _ in range(steps):
        pz = horner(coeffs, z)
        dpz = horner(dcoeffs, z)
        ok = np.abs(dpz) > 0
        cand = np.where(ok, z - pz / np.where(ok, dpz, 1.0), z)
        # keep the Newton step only if it lowers the residual
        better = np.abs(horner(coeffs, cand)) < np.abs(pz)
        z = np.where(better, cand, z)
    return z


def _taylor_coeff_at(coeffs, c, k):
    """|p^{(k)}(c)| / k! and a matching magnitude scale."""
    n = coeffs.size - 1
    if k > n:
        return 0.0, 1.0
    idx = np.arange(k, n + 1)
    binoms = np.array([comb(int(i), k) for i in idx], dtype=float)
    terms = coeffs[k:] * binoms * c ** (idx - k)
    return abs(np.sum(terms)), float(np.sum(np.abs(terms)))


def consolidate_multiple(coeffs, roots, loose=1e-3, tol=1e-10):
    """Replace clusters of iterates that approximate one multiple root.

    Iterates of a root of multiplicity ``m`` scatter at distance about
    ``eps**(1/m)``. A cluster (single linkage within ``loose * (1 + |r|)``) is
    refined by Newton on ``p^{(m-1)}``, where the root is simple, and collapsed
    to that point when the lower Taylor coefficients there vanish relative to
    their magnitude scale.
    """
    roots = np.array(roots, dtype=complex)
    m = roots.size
    labels = np.arange(m)
    for i in range(m):
        for j in range(i + 1, m):
            if abs(roots[i] - roots[j]) <= loose * (1 + abs(roots[i])):
                li, lj = labels[i], labels[j]
                labels[labels == lj] = li
    out = roots.copy()
    for lab in np.unique(labels):
        members = np.flatnonzero(labels == lab)
        mult = members.size
        if mult < 2:
            continue
        base = CPolynomial(coeffs)
        dk = derivative(base, mult - 1)
        dk1 = derivative(base, mult)
        c = complex(roots[members].mean())
        for _ in range(8):
            den = dk1(c)
            if den == 0:
                break
            step = dk(c) / den
            c -= step
            if abs(step) <= 2 * np.finfo(float).eps * (1 + abs(c)):
                break
        ok = all(
            val <= tol * max(scale, 1e-300)
            for val, scale in (_taylor_coeff_at(coeffs, c, k) for k in range(mult - 1))
        )
        if ok:
            out[members] = c
    return out


def cluster_roots(roots, radius: float = CLUSTER_RADIUS):
    """Group roots closer than ``radius * (1 + |root|)``.

    Returns ``(centers, multiplicities)`` in first-seen order.
    """
    roots = _as_complex_array(roots)
    centers: list[complex] = []
    members: list[list[complex]] = []
    for r in roots:
        for i, c in enumerate(centers):
            if abs(r - c) <= radius * (1 + abs(c)):
                members[i].append(r)
                centers[i] = complex(np.mean(members[i]))
                break
        else:
            centers.append(complex(r))
            members.append([complex(r)])
    return np.array(centers, dtype=complex), np.array([len(m) for m in members], dtype=int)


def distinct_roots(p: CPolynomial, radius: float = CLUSTER_RADIUS):
    """Distinct roots of ``p`` and their multiplicities."""
    if p.degree < 1:
        return np.zeros(0, dtype=complex), np.zeros(0, dtype=int)
    return cluster_roots(find_roots(p), radius)


def eval_PN(N: int, points) -> complex | np.ndarray:
    """Complete homogeneous symmetric polynomial of degree ``N``.

    ``points`` has the variables on its last axis; leading axes are a batch.
    Variables are absorbed one at a time with ``h_k <- h_k + z * h_{k-1}``,
    which is the expansion in powers of the newly added variable, so the cost
    is ``O(N * d)`` per evaluation.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    pts = np.asarray(points, dtype=complex)
    if pts.ndim == 0 or pts.shape[-1] == 0:
        raise ValueError("points must be nonempty")
    batch = pts.shape[:-1]
    h = np.zeros((N + 1,) + batch, dtype=complex)
    h[0] = 1.0
    for i in range(pts.shape[-1]):
        zi = pts[..., i]
        for k in range(1, N + 1):
            h[k] = h[k] + zi * h[k - 1]
    out = h[N]
    if out.ndim == 0:
        return complex(out)
    return out


@dataclass(frozen=True)
class RootOrdering:
    roots: np.ndarray
    moduli: np.ndarray
    permutation: np.ndarray


def order_roots(roots) -> RootOrdering:
    """Sort by modulus ascending; equal moduli are ordered by argument in
    ``(-pi, pi]``, ascending."""
    r = _as_complex_array(roots)
    if r.size == 0:
        raise ValueError("order_roots needs at least one root")
    mod = np.abs(r)
    perm = np.lexsort((np.angle(r), mod))
    return RootOrdering(roots=r[perm], moduli=mod[perm], permutation=perm)
