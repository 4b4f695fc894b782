import json

import numpy as np
import pytest

from cxrestrict import decomposition as dec
from cxrestrict.geometry import area, is_convex
from cxrestrict.polycx import CPolynomial, order_roots

# phi''' = z (z - 1)
PHI_TWO = CPolynomial([0, 0, 0, 0, -1 / 24, 1 / 60])


@pytest.fixture(scope="module")
def two_root_cert():
    return dec.build_certificate(PHI_TWO, 3, radius=1.0)


def test_gap_dyadic_example():
    ann = dec.gap_dyadic_annuli(order_roots([0, 1]), A=4, A1=8, radius=8)
    by = {(a.kind, a.index): a for a in ann}
    assert (by["gap", 1].r_lo, by["gap", 1].r_hi) == (0.0, 0.25)
    assert (by["gap", 2].r_lo, by["gap", 2].r_hi) == (4.0, 8.0)
    assert (by["dyadic", 2].r_lo, by["dyadic", 2].r_hi) == (0.125, 8.0)
    assert ("dyadic", 1) not in by  # root at the origin
    part = dec.radial_partition(ann, 8)
    assert part[0][:2] == ("gap", 1) and part[0][3] == 0.125
    assert part[-1][:2] == ("dyadic", 2) and part[-1][3] == np.inf


def test_gap_single_and_double_root():
    ann = dec.gap_dyadic_annuli(order_roots([0]), 4, 8)
    assert [(a.kind, a.index, a.r_lo, a.r_hi) for a in ann] == [("gap", 1, 0.0, np.inf)]
    ann = dec.gap_dyadic_annuli(order_roots([0, 0]), 4, 8)
    by = {(a.kind, a.index): a for a in ann}
    assert by["gap", 1].empty and not by["gap", 2].empty
    assert dec.radial_partition(ann, 2) == [("gap", 2, 0.0, np.inf)]


def test_gap_requires_ordering_of_constants():
    with pytest.raises(ValueError):
        dec.gap_dyadic_annuli(order_roots([1]), 1.0, 2)
    with pytest.raises(ValueError):
        dec.gap_dyadic_annuli(order_roots([1]), 4, 2)


def test_coefficient_comparability_examples():
    nu, pred = dec.coefficient_comparability(CPolynomial.from_roots([0, 4]), 1)
    assert nu == -4 and pred == 4
    nu, pred = dec.coefficient_comparability(CPolynomial.monomial(5), 5)
    assert nu == 1 and pred == 1
    nu, pred = dec.coefficient_comparability(CPolynomial.from_roots([1, 100]), 1)
    assert nu == -101 and pred == 100
    with pytest.raises(ValueError):
        dec.coefficient_comparability(CPolynomial.from_roots([1, 100]), 3)


def test_g_values_identity():
    # P(z) = nu_j z^j (-1)^{N-j} prod_{l>j} z_l ... rearranged: P(z) = z^j prod_{l>j}(-z_l) g_j(z) * lead
    zeros = (0.0, 0.5 + 0.1j, 3.0, -4j)
    p = CPolynomial.from_roots(zeros)
    z = np.array([1.2 + 0.3j, -1.5, 2j])
    for j in range(1, 5):
        pred = z**j * np.prod([-r for r in zeros[j:]]) * dec.g_values(zeros, j, z)
        np.testing.assert_allclose(p(z), pred, rtol=1e-12)
    np.testing.assert_array_equal(dec.g_values((0.0,), 1, z), 1)


def test_angular_spread():
    assert dec.angular_spread(np.ones(5)) == 0
    assert abs(dec.angular_spread(np.exp(1j * np.array([-0.1, 0.1]))) - 0.1) < 1e-12


def test_monomial_certificate_structure():
    cert = dec.build_certificate(CPolynomial.monomial(6), 3)
    assert len(cert.frames) == 1 and cert.frames[0].zeros == (0, 0, 0)
    assert {c.annulus_kind for c in cert.cells} == {"gap"}
    assert len({c.sector_index for c in cert.cells}) == int(np.ceil(np.pi / cert.eps))
    chk = dec.check_certificate(cert, 20000, per_cell=50)
    assert chk["all_convex"] and chk["overlap_count"] == 0 and chk["coverage_fraction"] == 1.0
    assert chk["max_spread"] == 0


def test_constant_third_derivative_has_K_one():
    cert = dec.build_certificate(CPolynomial([1, 0, 2j, 1]), 3, radius=1.5)
    assert cert.frames[0].N == 0
    chk = dec.check_certificate(cert, 10000, per_cell=20)
    assert chk["max_K_gap"] == 1.0 and chk["coverage_fraction"] == 1.0


def test_trivial_certificate():
    cert = dec.build_certificate(CPolynomial([0, 1, 1]), 3)
    assert cert.trivial and cert.cells == []


def test_two_root_certificate_invariants(two_root_cert):
    cert = two_root_cert
    assert {c.root_index for c in cert.cells} == {0, 1}
    assert all(is_convex(c.vertices) for c in cert.cells)
    chk = dec.check_certificate(cert, 50000, seed=3, per_cell=40)
    assert chk["overlap_count"] == 0
    assert chk["coverage_fraction"] >= 1 - dec.COVERAGE_TOL
    assert chk["max_K_gap"] <= dec.K_MAX
    assert chk["max_spread"] <= np.arctan(1 / dec.B0)
    assert abs(sum(area(c.vertices) for c in cert.cells) - np.pi) < 1e-2 * np.pi


def test_two_root_g_lower_bound(two_root_cert):
    rep = dec.g_lower_bound_check(two_root_cert, n_per_cell=50)
    assert rep["cells"] and rep["violations"] == 0


def test_g_lower_bound_linear():
    # P = z: g == 1
    cert = dec.build_certificate(CPolynomial([0, 0, 0, 0, 1 / 24]), 3, radius=1.0)
    rep = dec.g_lower_bound_check(cert, 30, dyadic_only=False)
    assert all(r["min_abs_g"] == 1.0 for r in rep["cells"])


def test_certificate_json_roundtrip(two_root_cert):
    text = two_root_cert.dumps()
    back = dec.DecompositionCertificate.from_json(json.loads(text))
    assert back.dumps() == text


def test_certificate_deterministic():
    a = dec.build_certificate(PHI_TWO, 3, radius=0.5).dumps()
    b = dec.build_certificate(PHI_TWO, 3, radius=0.5).dumps()
    assert a == b


def test_membership_counts_margin():
    sq = dec.ConvexCell(np.array([0, 1, 1 + 1j, 1j]), 0, 0, "gap", 1, 0.0)
    strict, loose = dec.membership_counts([sq], [0.5 + 0.5j, 1.0 + 0.5j, 2.0])
    assert list(strict) == [1, 0, 0] and list(loose) == [1, 1, 0]
