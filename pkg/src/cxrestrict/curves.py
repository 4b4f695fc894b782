"""Simple-type complex curves ``z -> (z, z^2, ..., z^{d-1}, phi(z))`` and
their averaged shifts (offspring curves)."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial, prod

import numpy as np

from .polycx import CPolynomial

SHIFT_BOUND = 1.0


def c_d(d: int) -> int:
    """``2! 3! ... (d-1)!``; the torsion of a simple curve is ``c_d * phi^{(d)}``."""
    return prod(factorial(k) for k in range(2, d))


def weight_exponent(d: int) -> Fraction:
    return Fraction(4, d * d + d)


@dataclass(frozen=True)
class WeightValue:
    torsion: complex | np.ndarray
    weight: float | np.ndarray
    exponent_used: Fraction


@dataclass(frozen=True)
class SimpleCurve:
    d: int
    phi: CPolynomial

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("ambient dimension d must be >= 2")

    def scaled(self, lam) -> "SimpleCurve":
        return SimpleCurve(self.d, self.phi.scaled(lam))


def _power_derivative(i: int, k: int, z):
    """k-th derivative of z**i."""
    if k > i:
        return np.zeros_like(z)
    return (factorial(i) // factorial(i - k)) * z ** (i - k)


def curve_derivative(c: SimpleCurve, z, k: int = 0) -> np.ndarray:
    """k-th derivative of gamma at ``z``; components on the last axis."""
    z = np.asarray(z, dtype=complex)
    phi_k = c.phi if k == 0 else c.phi.derivative(k)
    cols = [_power_derivative(i, k, z) for i in range(1, c.d)]
    cols.append(np.asarray(phi_k(z), dtype=complex) * np.ones_like(z))
    return np.stack(cols, axis=-1)


def gamma_eval(c: SimpleCurve, z) -> np.ndarray:
    return curve_derivative(c, z, 0)


def real_embed_vector(v) -> np.ndarray:
    """Interleave real and imaginary parts along the last axis."""
    v = np.asarray(v, dtype=complex)
    out = np.empty(v.shape[:-1] + (2 * v.shape[-1],), dtype=float)
    out[..., 0::2] = v.real
    out[..., 1::2] = v.imag
    return out


def real_embed(c: SimpleCurve, z) -> np.ndarray:
    return real_embed_vector(gamma_eval(c, z))


def torsion(c: SimpleCurve, z) -> WeightValue:
    """Torsion ``c_d phi^{(d)}(z)`` and weight ``|torsion|^{4/(d^2+d)}``.

    Exactly zero when ``deg phi < d``; no epsilon floor is applied.
    """
    z = np.asarray(z, dtype=complex)
    expo = weight_exponent(c.d)
    phid = c.phi.derivative(c.d)
    tau = c_d(c.d) * np.asarray(phid(z), dtype=complex) * np.ones_like(z)
    w = np.abs(tau) ** float(expo)
    if tau.ndim == 0:
        return WeightValue(complex(tau), float(w), expo)
    return WeightValue(tau, w, expo)


def weight(c: SimpleCurve, z):
    return torsion(c, z).weight


@dataclass(frozen=True)
class OffspringCurve:
    """``Gamma_b(z) = m^{-1} sum_j gamma(z + b_j)`` with ``b_1 = 0``."""

    base: SimpleCurve
    shifts: tuple
    shift_bound: float = SHIFT_BOUND

    def __post_init__(self):
        b = tuple(complex(s) for s in self.shifts)
        if len(b) < 1:
            raise ValueError("offspring curve needs at least one shift")
        if b[0] != 0:
            raise ValueError("first shift must be exactly 0")
        if any(abs(s) > self.shift_bound for s in b):
            raise ValueError(f"shifts must satisfy |b_j| <= {self.shift_bound}")
        object.__setattr__(self, "shifts", b)

    @property
    def d(self) -> int:
        return self.base.d

    @property
    def m(self) -> int:
        return len(self.shifts)

    @property
    def phi(self) -> CPolynomial:
        return self.base.phi

    @classmethod
    def trivial(cls, base: SimpleCurve) -> "OffspringCurve":
        return cls(base, (0.0,))

    def scaled(self, lam) -> "OffspringCurve":
        return OffspringCurve(self.base.scaled(lam), self.shifts, self.shift_bound)

    def shift_array(self) -> np.ndarray:
        return np.array(self.shifts, dtype=complex)


def offspring_derivative(o: OffspringCurve, z, k: int = 0) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    acc = None
    for b in o.shifts:
        term = curve_derivative(o.base, z + b, k)
        acc = term if acc is None else acc + term
    return acc / o.m


def offspring_eval(o: OffspringCurve, z) -> np.ndarray:
    return offspring_derivative(o, z, 0)


def averaged_phi_derivative(o: OffspringCurve, z, k: int):
    """``m^{-1} sum_j phi^{(k)}(z + b_j)``."""
    z = np.asarray(z, dtype=complex)
    pk = o.phi if k == 0 else o.phi.derivative(k)
    acc = sum(np.asarray(pk(z + b), dtype=complex) for b in o.shifts)
    return acc / o.m


def offspring_weight(o: OffspringCurve, z):
    """Affine-arclength weight of ``Gamma_b``: first ``d-1`` components are
    monic of degree ``k`` so the torsion is ``c_d`` times the averaged
    ``phi^{(d)}``."""
    tau = c_d(o.d) * averaged_phi_derivative(o, z, o.d)
    return np.abs(tau) ** float(weight_exponent(o.d))


def offspring_torsion(o: OffspringCurve, z, h) -> complex | np.ndarray:
    """Torsion of ``z -> sum_i Gamma_b(z + h_i)`` with ``h_1 = 0``.

    ``h`` holds ``h_2, ..., h_d`` (last axis). Each of the first ``d-1``
    components of the summed curve is ``d z^k`` plus lower order terms, so the
    torsion is ``d^{d-1} c_d m^{-1} sum_{i,j} phi^{(d)}(z + b_j + h_i)``.
    """
    z = np.asarray(z, dtype=complex)
    h = np.asarray(h, dtype=complex)
    d = o.d
    if h.shape[-1] != d - 1:
        raise ValueError(f"expected {d - 1} shifts h_2..h_d, got {h.shape[-1]}")
    full_h = np.concatenate([np.zeros(h.shape[:-1] + (1,), dtype=complex), h], axis=-1)
    pts = z[..., None] + full_h
    total = averaged_phi_derivative(o, pts, d).sum(axis=-1)
    out = d ** (d - 1) * c_d(d) * total
    if np.ndim(out) == 0:
        return complex(out)
    return out


def component_polynomials(o: OffspringCurve) -> list[CPolynomial]:
    """Coefficient form of each component of ``Gamma_b``."""
    comps = []
    for i in range(1, o.d):
        base = CPolynomial.monomial(i)
        acc = CPolynomial([0.0])
        for b in o.shifts:
            acc = acc + base.shifted(b)
        comps.append(acc.scaled(1.0 / o.m))
    acc = CPolynomial([0.0])
    for b in o.shifts:
        acc = acc + o.phi.shifted(b)
    comps.append(acc.scaled(1.0 / o.m))
    return comps


def compose_shifts(o: OffspringCurve, h) -> OffspringCurve:
    """Offspring ``Gamma_c`` with ``c = {b_j + h_i}`` so that
    ``sum_i Gamma_b(z + h_i) = d * Gamma_c(z)`` when ``len(h) == d``.

    ``h`` here includes ``h_1 = 0`` as its first entry.
    """
    h = [complex(x) for x in h]
    if h[0] != 0:
        raise ValueError("h_1 must be 0")
    shifts = [b + hi for hi in h for b in o.shifts]
    bound = max(o.shift_bound, max(abs(s) for s in shifts))
    return OffspringCurve(o.base, tuple(shifts), bound)
