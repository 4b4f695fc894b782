"""Brute-force reference computations.

Each function here takes a deliberately different route from the production
code it is used to check (enumeration instead of recursion, cofactor
expansion instead of LU, finite differences instead of closed forms).
"""

from __future__ import annotations

from itertools import combinations_with_replacement, permutations

import numpy as np

from .curves import OffspringCurve, offspring_eval, real_embed_vector


def PN_enumerate(N: int, points) -> complex:
    """Sum of all degree-``N`` monomials in ``points`` by explicit enumeration."""
    pts = [complex(p) for p in points]
    total = 0j
    for combo in combinations_with_replacement(range(len(pts)), N):
        term = 1 + 0j
        for idx in combo:
            term *= pts[idx]
        total += term
    return total


def vandermonde_permutation(points) -> complex:
    """Leibniz-formula determinant of ``[z_j^i]`` (rows = powers)."""
    pts = [complex(p) for p in points]
    n = len(pts)
    mat = [[p**i for p in pts] for i in range(n)]
    return leibniz_det(mat)


def leibniz_det(mat) -> complex:
    n = len(mat)
    total = 0j
    for perm in permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        term = 1 + 0j
        for i in range(n):
            term *= mat[i][perm[i]]
        total += -term if inv % 2 else term
    return total


def cofactor_det(mat) -> complex:
    """Laplace expansion along the first row; intended for n <= 4."""
    m = [[complex(x) for x in row] for row in mat]
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = 0j
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        total += (-1) ** j * m[0][j] * cofactor_det(minor)
    return total


def sum_map_real(o: OffspringCurve, params: np.ndarray) -> np.ndarray:
    """Real form of ``(z, h_2..h_d) -> sum_k Gamma_b(z + h_k)``.

    ``params`` is ``(Re z, Im z, Re h_2, Im h_2, ...)``.
    """
    c = params[0::2] + 1j * params[1::2]
    z = c[0]
    pts = np.concatenate([[z], z + c[1:]])
    total = sum(offspring_eval(o, p) for p in pts)
    return real_embed_vector(total)


def real_jacobian_fd(o: OffspringCurve, z, h, step: float | None = None) -> float:
    """Central-difference real ``2d x 2d`` Jacobian determinant of the sum map."""
    c = np.concatenate([[complex(z)], np.asarray(h, dtype=complex)])
    params = real_embed_vector(c)
    if step is None:
        step = 1e-5 * max(1.0, float(np.max(np.abs(params))))
    n = params.size
    jac = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = step
        jac[:, k] = (sum_map_real(o, params + e) - sum_map_real(o, params - e)) / (2 * step)
    return float(np.linalg.det(jac))


def jacobian_cofactor(o: OffspringCurve, z, h) -> complex:
    """Jacobian determinant by cofactor expansion of the derivative matrix."""
    from .curves import offspring_derivative

    pts = [complex(z)] + [complex(z) + complex(x) for x in h]
    cols = [offspring_derivative(o, p, 1) for p in pts]
    mat = [[cols[k][i] for k in range(len(pts))] for i in range(o.d)]
    return cofactor_det(mat)


def torsion_determinant(o: OffspringCurve, z, h) -> complex:
    """Torsion of ``z -> sum_i Gamma_b(z + h_i)`` as an explicit determinant of
    its first ``d`` derivatives."""
    from .curves import offspring_derivative

    pts = [complex(z)] + [complex(z) + complex(x) for x in h]
    cols = []
    for k in range(1, o.d + 1):
        cols.append(sum(offspring_derivative(o, p, k) for p in pts))
    mat = [[cols[k][i] for k in range(o.d)] for i in range(o.d)]
    return cofactor_det(mat)
