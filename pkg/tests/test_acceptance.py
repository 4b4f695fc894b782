"""Acceptance criteria 1-10. Each test prints one ``CRITERION k: PASS|FAIL``
line with the measured quantities and its wall time, then asserts."""

import time
from math import factorial

import numpy as np
import pytest

from cxrestrict import decomposition as dec
from cxrestrict import verify as ver
from cxrestrict.curves import OffspringCurve, SimpleCurve
from cxrestrict.determinants import jacobian_closed_form, jacobian_direct, jacobian_integral_d3, real_jacobian, rel_err
from cxrestrict.oracles import PN_enumerate, real_jacobian_fd
from cxrestrict.polycx import CPolynomial, eval_PN


@pytest.fixture
def report(capsys):
    def emit(k, ok, detail, elapsed):
        with capsys.disabled():
            print(f"\nCRITERION {k}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s) {detail}")

    return emit


def cplx(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def phi_from_third(roots, lead=1.0):
    """phi with phi''' = lead * prod (z - r) and phi(0) = phi'(0) = phi''(0) = 0."""
    p = CPolynomial.from_roots(roots, lead).coeffs
    c = np.zeros(p.size + 3, dtype=complex)
    for k, a in enumerate(p):
        c[k + 3] = a / ((k + 1) * (k + 2) * (k + 3))
    return CPolynomial(c)


def shifts_in_disk(rng, m, bound=0.9):
    return (0,) + tuple(bound * rng.random(m - 1) * np.exp(2j * np.pi * rng.random(m - 1)))


def test_criterion_1_symmetric_identities(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    n = 1000
    errs = {}
    # (i) P_0 = 1 for any tuple
    d = rng.integers(1, 7, n)
    errs["i"] = max(abs(eval_PN(0, cplx(rng, k)) - 1) for k in d)
    # (ii) P_N(z3,z1) - P_N(z2,z1) = (z3 - z2) P_{N-1}(z3,z2,z1)
    N = rng.integers(1, 11, n)
    e = 0.0
    for k in range(n):
        z1, z2, z3 = cplx(rng, 3)
        lhs = eval_PN(N[k], [z3, z1]) - eval_PN(N[k], [z2, z1])
        rhs = (z3 - z2) * eval_PN(N[k] - 1, [z3, z2, z1])
        e = max(e, rel_err(lhs, rhs))
    errs["ii"] = e
    # (iii) P_N(z_d..z_1) = sum_k P_{N-k}(z_d..z_2) z_1^k, compared with enumeration too
    e = 0.0
    for k in range(n):
        dd, NN = rng.integers(2, 7), rng.integers(0, 11)
        z = cplx(rng, dd)
        lhs = eval_PN(NN, z)
        rhs = sum(eval_PN(NN - j, z[1:]) * z[0] ** j for j in range(NN + 1))
        e = max(e, rel_err(lhs, rhs))
        if k < 100:
            e = max(e, rel_err(lhs, PN_enumerate(NN, z)))
    errs["iii"] = e
    # (iv) P_N(z_{d+1}, z_{d-1}..z_1) - P_N(z_d..z_1) = (z_{d+1} - z_d) P_{N-1}(z_{d+1}..z_1)
    e = 0.0
    for k in range(n):
        dd, NN = rng.integers(1, 7), rng.integers(1, 11)
        z = cplx(rng, dd + 1)  # z[0] = z_1, ..., z[dd] = z_{d+1}
        lhs = eval_PN(NN, np.concatenate([z[: dd - 1], z[dd:]])) - eval_PN(NN, z[:dd])
        rhs = (z[dd] - z[dd - 1]) * eval_PN(NN - 1, z)
        e = max(e, rel_err(lhs, rhs))
    errs["iv"] = e
    elapsed = time.perf_counter() - t0
    ok = max(errs.values()) <= 1e-10 and elapsed < 5
    report(1, ok, " ".join(f"({k}) max_rel={v:.1e}" for k, v in errs.items()), elapsed)
    assert ok


def test_criterion_2_closed_form_vs_direct(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(202)
    worst, combos = 0.0, 0
    for d in range(2, 6):
        for N in range(d, 11):
            for m in range(1, 5):
                o = OffspringCurve(SimpleCurve(d, CPolynomial.monomial(N)), shifts_in_disk(rng, m))
                z = cplx(rng, 1000)
                h = cplx(rng, 1000, d - 1)
                worst = max(worst, float(rel_err(jacobian_closed_form(o, z, h), jacobian_direct(o, z, h)).max()))
                combos += 1
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and elapsed < 60
    report(2, ok, f"combos={combos} instances={combos * 1000} max_rel={worst:.1e}", elapsed)
    assert ok


def test_criterion_3_integral_vs_direct(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    worst = 0.0
    for _ in range(1000):
        deg = rng.integers(0, 13)
        phi = CPolynomial(cplx(rng, deg + 1))
        u, v, w = cplx(rng, 3)
        o = OffspringCurve.trivial(SimpleCurve(3, phi))
        a = jacobian_integral_d3(phi, u, v, w)
        b = jacobian_direct(o, u, [v - u, w - u])
        if deg < 3:
            worst = max(worst, abs(a) + abs(b))  # both vanish identically
        else:
            worst = max(worst, float(rel_err(a, b)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-9 and elapsed < 30
    report(3, ok, f"instances=1000 max_rel={worst:.1e}", elapsed)
    assert ok


def test_criterion_4_real_jacobian(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(404)
    worst = 0.0
    for _ in range(100):
        phi = CPolynomial(cplx(rng, rng.integers(4, 9)))
        o = OffspringCurve(SimpleCurve(3, phi), shifts_in_disk(rng, rng.integers(1, 4)))
        z = complex(*rng.normal(size=2))
        h = cplx(rng, 2)
        worst = max(worst, float(rel_err(real_jacobian_fd(o, z, h), real_jacobian(o, z, h))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-4 and elapsed < 30
    report(4, ok, f"instances=100 max_rel={worst:.1e}", elapsed)
    assert ok


def test_criterion_5_sublevel_exponent(report):
    t0 = time.perf_counter()
    f2 = ver.verify_sublevel(2, samples=10_000_000, seed=5)
    f3 = ver.verify_sublevel(3, samples=10_000_000, seed=5)
    elapsed = time.perf_counter() - t0
    ok = abs(f2.slope - 2) <= 0.01 and f3.slope >= 4 / 3 - 0.05 and elapsed < 300
    report(5, ok, f"d=2 slope={f2.slope:.4f} d=3 slope={f3.slope:.4f} (target 4/3, dropped {len(f3.dropped)})", elapsed)
    assert ok


def test_criterion_6_weight_growth(report):
    t0 = time.perf_counter()
    errs = {}
    for d, N in [(3, 4), (3, 6), (4, 5)]:
        fit = ver.weight_growth_exponent(d, N)
        errs[(d, N)] = abs(fit.slope - (4 * (N - d) / (d * d + d) + 2))
    elapsed = time.perf_counter() - t0
    ok = max(errs.values()) <= 1e-3 and elapsed < 60
    report(6, ok, " ".join(f"{k}:|err|={v:.1e}" for k, v in errs.items()), elapsed)
    assert ok


def test_criterion_7_parallelepiped(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(707)
    worst, min_frac, eps_found = 0.0, 1.0, []
    for k in range(100):
        d = int(rng.integers(2, 5))
        phi = CPolynomial(cplx(rng, d + int(rng.integers(1, 5))))
        c = SimpleCurve(d, phi)
        a = complex(*rng.normal(size=2))
        eps = float(10 ** rng.uniform(-3, -0.5))
        P = ver.build_parallelepiped(c, a, eps)
        cf = ver.parallelepiped_closed_form(c, a, eps)
        tau = c.phi.derivative(d)(a) * np.prod([factorial(j) for j in range(2, d)])
        closed = 2 ** (2 * d) * np.prod([factorial(j) for j in range(2, d + 1)]) ** -2.0 * eps ** (d * d + d) * abs(tau) ** 2
        worst = max(worst, float(rel_err(P.volume, closed)), float(rel_err(cf, closed)))
        if k % 10 == 0:
            rep = ver.verify_containment(c, a, 8.0, 10000, seed=k, sweep=[1e-3])
            min_frac = min(min_frac, rep.extra["containment_fraction"])
            eps_found.append(rep.extra["eps_found"])
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and min_frac == 1.0 and elapsed < 60
    report(7, ok, f"volume max_rel={worst:.1e} containment={min_frac:.4f} over {len(eps_found)} curves "
           f"(eps found {min(eps_found):.2g}..{max(eps_found):.2g})", elapsed)
    assert ok


CERT_CASES = {
    "roots{0,1}": [0, 1],
    "roots{0.3,-0.5i,1-0.2i,-0.9}": [0.3, -0.5j, 1 - 0.2j, -0.9],
    "roots{0,0,0.8}": [0, 0, 0.8],
}


@pytest.mark.parametrize("name", list(CERT_CASES))
def test_criterion_8_certificate(report, name):
    t0 = time.perf_counter()
    phi = phi_from_third(CERT_CASES[name])
    cert = dec.build_certificate(phi, 3, radius=2.0)
    chk = dec.check_certificate(cert, 100_000, seed=8, per_cell=30)
    elapsed = time.perf_counter() - t0
    half_angle = float(np.arctan(1 / 8))
    ok = (
        chk["all_convex"]
        and chk["overlap_count"] == 0
        and chk["coverage_fraction"] >= 0.999
        and chk["max_K_gap"] <= 16
        and chk["max_spread"] <= half_angle
        and elapsed < 120
    )
    report(8, ok, f"{name} cells={chk['n_cells']} convex={chk['all_convex']} overlaps={chk['overlap_count']} "
           f"coverage={chk['coverage_fraction']:.5f} K_gap<={chk['max_K_gap']:.3f} "
           f"g_half_angle<={chk['max_spread']:.4f} (bound {half_angle:.4f})", elapsed)
    assert ok


def test_criterion_9_lower_bound_positivity(report):
    t0 = time.perf_counter()
    S = 100_000
    lines, ok = [], True

    def run(name, fn):
        a = fn()
        b = fn()
        same = a.dumps() == b.dumps()
        per = min(r["samples"] for r in a.rows)
        good = a.violations == 0 and a.degenerate == 0 and per >= S and same
        lines.append(f"{name}: rows={len(a.rows)} min_samples/row={per} violations={a.violations} "
                     f"min_ratio={a.min_ratio:.3g} reproducible={same}")
        return good, a

    g1, _ = run("jacobian_monomial(3,6,2)", lambda: ver.verify_jacobian_monomial(3, 6, 2, S, eps=0.05, seed=9))
    g2, _ = run("jacobian_monomial(4,7,3)", lambda: ver.verify_jacobian_monomial(4, 7, 3, S, eps=0.05, seed=9))
    o = OffspringCurve(SimpleCurve(3, CPolynomial.monomial(5)), (0, 0.4))
    g3, _ = run("torsion(z^5,m=2)", lambda: ver.verify_torsion_bound(o, S, eps=0.05, seed=9))
    phi1 = phi_from_third([0])
    c1 = dec.build_certificate(phi1, 3, radius=2.0)
    g4, _ = run("jacobian_d3(phi'''=z)", lambda: ver.verify_jacobian_simple_d3(c1, phi1, S, seed=9))
    # two-root fixture: full run once; reproducibility re-checked on a prefix of cells
    phi2 = phi_from_third([0, 1])
    c2 = dec.build_certificate(phi2, 3, radius=0.25)
    full = ver.verify_jacobian_simple_d3(c2, phi2, S, seed=9)
    sub = dec.DecompositionCertificate(c2.cells[:40], c2.center, c2.radius, c2.frames, c2.eps, c2.params)
    again = ver.verify_jacobian_simple_d3(sub, phi2, S, seed=9)
    same = again.rows == full.rows[:40]
    per = min(r["samples"] for r in full.rows)
    g5 = full.violations == 0 and full.degenerate == 0 and per >= S and same and not full.extra["skipped_cells"]
    lines.append(f"jacobian_d3(phi'''=z(z-1), r=0.25): rows={len(full.rows)} min_samples/row={per} "
                 f"violations={full.violations} min_ratio={full.min_ratio:.3g} reproducible(prefix)={same}")
    elapsed = time.perf_counter() - t0
    ok = g1 and g2 and g3 and g4 and g5 and elapsed < 600
    report(9, ok, "; ".join(lines), elapsed)
    assert ok


def test_criterion_10_scaling_invariance(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1010)
    o = OffspringCurve(SimpleCurve(3, CPolynomial.monomial(5)), (0, 0.4))
    phi = phi_from_third([0, 1])
    cert = dec.build_certificate(phi, 3, radius=0.25)

    def reports(lam):
        return [
            ver.verify_jacobian_monomial(3, 6, 2, 20000, seed=10, scale=lam),
            ver.verify_jacobian_monomial(4, 7, 3, 20000, seed=10, scale=lam),
            ver.verify_torsion_bound(o.scaled(lam), 20000, seed=10),
            ver.verify_jacobian_simple_d3(dec.build_certificate(phi.scaled(lam), 3, radius=0.25), phi.scaled(lam), 200, seed=10),
        ]

    base = reports(1.0)
    worst, lams = 0.0, []
    for _ in range(12):
        lam = 10 ** rng.uniform(-3, 3) * np.exp(2j * np.pi * rng.random())
        lams.append(abs(lam))
        for r0, r1 in zip(base, reports(lam)):
            assert len(r0.rows) == len(r1.rows) and r0.samples == r1.samples
            for a, b in zip(r0.rows, r1.rows):
                worst = max(worst, float(rel_err(a["min_ratio"], b["min_ratio"])),
                            float(rel_err(a["max_ratio"], b["max_ratio"])))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-12
    report(10, ok, f"lambdas={len(lams)} |lambda| in [{min(lams):.1e}, {max(lams):.1e}] "
           f"cells={len(cert.cells)} max_rel_change={worst:.1e}", elapsed)
    assert ok
