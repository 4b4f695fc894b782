"""Command-line driver.

Every subcommand reads an optional JSON config (``--config``) whose keys are
the flag names with underscores; flags given on the command line win. Results
go to ``<out>/<command>.csv`` and ``<out>/<command>.json``.

Exit codes: 0 all checks passed, 1 violations found, 2 configuration or IO error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import decomposition as dec
from . import extension as ext
from . import verify as ver
from .curves import OffspringCurve, SimpleCurve
from .polycx import CPolynomial
from .schema import ConfigError, curve_to_json, load_json, parse_complex, parse_curve

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2
SCHEMA_VERSION = 1


def _samples(v):
    f = float(v)
    if not f.is_integer() or f < 1:
        raise ValueError("must be a positive integer")
    return int(f)


def _grid(v):
    if isinstance(v, str):
        v = [x for x in v.split(",") if x.strip()]
    out = [float(x) for x in v]
    if not out:
        raise ValueError("grid must be nonempty")
    return out


def _cx(v):
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    return parse_complex(v, "value")


def _vec(v):
    return [float(x) for x in (v.split(",") if isinstance(v, str) else v)]


def _curve(v):
    return v  # resolved later: path string or inline object


COMMON = {
    "seed": (int, 0, "64-bit seed; shard k uses SeedSequence([seed, k])"),
    "out": (str, "out", "output directory"),
}

COMMANDS = {
    "decompose": {
        "curve": (_curve, None, "curve JSON (path or inline object in config)"),
        "center": (_cx, 0j, "disk center"),
        "radius": (float, 2.0, "disk radius"),
        "samples": (_samples, 100000, "coverage and overlap samples"),
        "per_cell": (_samples, 200, "fresh samples per cell for K and g spread"),
    },
    "verify-jacobian-monomial": {
        "d": (int, 3, "dimension"),
        "N": (int, 6, "monomial degree"),
        "m": (int, 2, "number of shifts"),
        "eps": (float, 0.05, "sector slope"),
        "samples": (_samples, 100000, "samples"),
        "scale": (_cx, 1.0, "complex factor in front of z^N"),
    },
    "verify-jacobian-d3": {
        "curve": (_curve, None, "curve JSON with d = 3"),
        "center": (_cx, 0j, "disk center"),
        "radius": (float, 2.0, "disk radius"),
        "samples": (_samples, 10000, "triples per cell"),
    },
    "verify-torsion": {
        "curve": (_curve, None, "curve JSON, optional shifts"),
        "eps": (float, 0.05, "sector slope"),
        "samples": (_samples, 100000, "samples"),
    },
    "verify-sublevel": {
        "d": (int, 3, "dimension"),
        "samples": (_samples, 10_000_000, "Monte Carlo samples"),
        "u_grid": (_grid, None, "comma-separated u values (default depends on d)"),
        "min_hits": (int, 100, "drop u values with fewer hits"),
    },
    "verify-weight-growth": {
        "d": (int, 3, "dimension"),
        "N": (int, 4, "monomial degree"),
        "r_grid": (_grid, None, "comma-separated radii"),
        "tol": (float, 1e-3, "slope tolerance"),
    },
    "verify-weight-optimality": {
        "curve": (_curve, None, "curve JSON"),
        "a": (_cx, 1.0, "base point"),
        "eps": (float, 0.1, "starting box scale"),
        "samples": (_samples, 10000, "containment samples"),
    },
    "extension-scan": {
        "mode": (str, "homogeneity", "homogeneity or lambda"),
        "d": (int, 3, "dimension (homogeneity)"),
        "N": (int, 4, "monomial degree (homogeneity)"),
        "r_grid": (_grid, None, "radii (homogeneity)"),
        "tol": (float, 1e-3, "exponent tolerance (homogeneity)"),
        "curve": (_curve, None, "curve JSON (lambda)"),
        "lambdas": (_grid, [10, 20, 40, 80, 160, 320, 640], "lambda grid (lambda)"),
        "x": (_vec, None, "probe point, 2d comma-separated reals (lambda)"),
        "bump_center": (_cx, 0j, "gaussian bump center (lambda)"),
        "bump_width": (float, 0.1, "gaussian bump width (lambda)"),
    },
    "selftest": {},
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cxrestrict", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, spec in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="JSON config file")
        for key, (_, default, help_) in {**COMMON, **spec}.items():
            flag = "--" + key.replace("_", "-")
            sp.add_argument(flag, dest=key, default=None, help=f"{help_} (default: {default})")
    return p


def resolve_config(args) -> dict:
    spec = {**COMMON, **COMMANDS[args.command]}
    cfg = {k: v[1] for k, v in spec.items()}
    if args.config:
        data = load_json(args.config, "config")
        if not isinstance(data, dict):
            raise ConfigError("config", "top level must be an object")
        for k, v in data.items():
            if k not in spec:
                raise ConfigError(k, f"unknown key for {args.command}")
            if k == "curve" and isinstance(v, str):
                # relative to the config file
                v = str(Path(args.config).parent / v)
            cfg[k] = _convert(spec, k, v)
    for k in spec:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = _convert(spec, k, v)
    return cfg


def _convert(spec, key, value):
    conv = spec[key][0]
    try:
        return conv(value)
    except (TypeError, ValueError, ConfigError) as exc:
        raise ConfigError(key, f"invalid value {value!r}: {exc}") from None


def _load_curve(cfg, key="curve"):
    v = cfg.get(key)
    if v is None:
        raise ConfigError(key, "required")
    obj = load_json(v, key) if isinstance(v, str) else v
    return parse_curve(obj, key)


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else _jsonable(x) for x in r])
    return buf.getvalue()


def _write(cfg, command, header, rows, result, passed) -> None:
    out = Path(cfg["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{command}.csv").write_text(_csv_text(header, rows))
        summary = {
            "schema_version": SCHEMA_VERSION,
            "command": command,
            "config": _jsonable(cfg),
            "seed": cfg["seed"],
            "passed": bool(passed),
            "result": _jsonable(result),
        }
        (out / f"{command}.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
    except OSError as exc:
        raise ConfigError("out", f"cannot write outputs: {exc.strerror}") from None


def _report_rows(rep: ver.VerificationReport, tag_keys):
    header = ["inequality_id", *tag_keys, "seed", "samples", "violations", "min_ratio", "max_ratio"]
    rows = [
        [rep.inequality_id, *[r.get(k, "") for k in tag_keys], rep.seed, r["samples"], r["violations"],
         float(r["min_ratio"]), float(r["max_ratio"])]
        for r in rep.rows
    ]
    return header, rows


def _line(name, passed, detail):
    print(f"{name}: {'PASS' if passed else 'FAIL'} {detail}".rstrip())


# -- commands --------------------------------------------------------------


def cmd_decompose(cfg):
    c = _load_curve(cfg)
    if isinstance(c, OffspringCurve):
        raise ConfigError("curve.shifts", "decompose takes a simple curve")
    cert = dec.build_certificate(c.phi, c.d, cfg["center"], cfg["radius"], dec.CertificateParams(seed=cfg["seed"]))
    chk = dec.check_certificate(cert, cfg["samples"], cfg["seed"], per_cell=cfg["per_cell"]) if cert.cells else {}
    passed = cert.trivial or (
        chk["all_convex"] and chk["overlap_count"] == 0 and chk["coverage_fraction"] >= 1 - dec.COVERAGE_TOL
        and chk["max_K_gap"] <= dec.K_MAX and chk["max_spread"] <= float(np.arctan(1 / dec.B0))
    )
    header = ["cell", "root_index", "sector_index", "annulus_kind", "annulus_index", "n_vertices", "area", "K",
              "spread", "min_abs_g"]
    from .geometry import area

    rows = [[i, x.root_index, x.sector_index, x.annulus_kind, x.annulus_index, len(x.vertices),
             float(area(x.vertices)), float(x.K), float(x.spread), float(x.min_abs_g)] for i, x in enumerate(cert.cells)]
    _write(cfg, "decompose", header, rows, {"checks": chk, "eps": cert.eps, "trivial": cert.trivial}, passed)
    Path(cfg["out"], "certificate.json").write_text(cert.dumps() + "\n")
    _line("decompose", passed, f"cells={len(cert.cells)} eps={cert.eps:g} {chk}")
    return passed


def cmd_verify_jacobian_monomial(cfg):
    rep = ver.verify_jacobian_monomial(cfg["d"], cfg["N"], cfg["m"], cfg["samples"], cfg["eps"], cfg["seed"], cfg["scale"])
    h, rows = _report_rows(rep, ["sector"])
    _write(cfg, "verify-jacobian-monomial", h, rows, rep.to_json(), rep.passed)
    _line(rep.inequality_id, rep.passed, f"samples={rep.samples} min_ratio={rep.min_ratio:.6g}")
    return rep.passed


def cmd_verify_jacobian_d3(cfg):
    c = _load_curve(cfg)
    if c.d != 3 or isinstance(c, OffspringCurve):
        raise ConfigError("curve.d", "verify-jacobian-d3 needs a simple curve with d = 3")
    if c.phi.degree < 3:
        raise ConfigError("curve.phi", "degree must be at least 3")
    cert = dec.build_certificate(c.phi, 3, cfg["center"], cfg["radius"], dec.CertificateParams(seed=cfg["seed"]))
    rep = ver.verify_jacobian_simple_d3(cert, c.phi, cfg["samples"], cfg["seed"])
    h, rows = _report_rows(rep, ["cell", "root_index", "sector_index", "annulus_kind", "annulus_index"])
    _write(cfg, "verify-jacobian-d3", h, rows, rep.to_json(), rep.passed)
    _line(rep.inequality_id, rep.passed, f"cells={len(cert.cells)} samples={rep.samples} min_ratio={rep.min_ratio:.6g}")
    return rep.passed


def cmd_verify_torsion(cfg):
    c = _load_curve(cfg)
    o = c if isinstance(c, OffspringCurve) else OffspringCurve.trivial(c)
    if o.phi.degree < o.d:
        raise ConfigError("curve.phi", "degree must be at least d")
    try:
        rep = ver.verify_torsion_bound(o, cfg["samples"], cfg["eps"], cfg["seed"])
    except ValueError as exc:
        raise ConfigError("curve.shifts", str(exc)) from None
    h, rows = _report_rows(rep, [])
    _write(cfg, "verify-torsion", h, rows, rep.to_json(), rep.passed)
    _line(rep.inequality_id, rep.passed, f"samples={rep.samples} min_ratio={rep.min_ratio:.6g}")
    return rep.passed


def cmd_verify_sublevel(cfg):
    fit = ver.verify_sublevel(cfg["d"], cfg["u_grid"], cfg["samples"], cfg["seed"], cfg["min_hits"])
    passed = fit.slope >= fit.target - 0.05
    rows = [[u, m, n, u in fit.dropped] for u, m, n in zip(fit.grid, fit.values, fit.hits)]
    _write(cfg, "verify-sublevel", ["u", "measure", "hits", "dropped"], rows, fit.to_json(), passed)
    _line("sublevel", passed, f"slope={fit.slope:.4f} target={fit.target:.4f}")
    return passed


def cmd_verify_weight_growth(cfg):
    fit = ver.weight_growth_exponent(cfg["d"], cfg["N"], cfg["r_grid"])
    passed = abs(fit.slope - fit.target) <= cfg["tol"]
    rows = [[r, v, cf] for r, v, cf in zip(fit.grid, fit.values, fit.params["closed_form"])]
    _write(cfg, "verify-weight-growth", ["R", "integral", "closed_form"], rows, fit.to_json(), passed)
    _line("weight_growth", passed, f"slope={fit.slope:.6f} target={fit.target:.6f}")
    return passed


def cmd_verify_weight_optimality(cfg):
    c = _load_curve(cfg)
    if isinstance(c, OffspringCurve):
        raise ConfigError("curve.shifts", "takes a simple curve")
    try:
        rep = ver.verify_containment(c, cfg["a"], cfg["eps"], cfg["samples"], cfg["seed"])
    except ValueError as exc:
        raise ConfigError("a", str(exc)) from None
    P = ver.build_parallelepiped(c, cfg["a"], rep.extra["eps_found"])
    closed = ver.parallelepiped_closed_form(c, cfg["a"], rep.extra["eps_found"])
    rel = abs(P.volume - closed) / max(abs(closed), 1e-300)
    rep.extra.update(volume=P.volume, closed_form=closed, volume_rel_err=rel)
    passed = rep.passed and rep.extra["containment_fraction"] == 1.0 and rel <= 1e-10
    rows = [[s, r] for s, r in zip(rep.extra["sweep"], rep.extra["lebesgue_ratio"])]
    _write(cfg, "verify-weight-optimality", ["eps", "lebesgue_ratio"], rows, rep.to_json(), passed)
    _line("weight_optimality", passed, f"eps={rep.extra['eps_found']:g} containment={rep.extra['containment_fraction']} vol_rel_err={rel:.2e}")
    return passed


def cmd_extension_scan(cfg):
    if cfg["mode"] == "homogeneity":
        res = ext.homogeneity_scan(cfg["d"], cfg["N"], cfg["r_grid"], tol=cfg["tol"])
        passed = res.extra["passed"]
        rows = [[g, 0, v, cv] for g, v, cv in zip(res.grid, res.values, res.converged)]
    elif cfg["mode"] == "lambda":
        c = _load_curve(cfg)
        o = c if isinstance(c, OffspringCurve) else OffspringCurve.trivial(c)
        x = cfg["x"] if cfg["x"] is not None else [0.3] * (2 * o.d)
        if len(x) != 2 * o.d:
            raise ConfigError("x", f"needs {2 * o.d} entries")
        f = ext.FunctionSpec.gaussian_bump(cfg["bump_center"], cfg["bump_width"])
        try:
            res = ext.lambda_scan(o, f, x, cfg["lambdas"])
        except ValueError as exc:
            raise ConfigError("bump_width", str(exc)) from None
        passed = True  # exploratory output, no target
        rows = [[g, 0, v, cv] for g, v, cv in zip(res.grid, res.values, res.converged)]
    else:
        raise ConfigError("mode", "must be 'homogeneity' or 'lambda'")
    _write(cfg, "extension-scan", ["grid", "probe_id", "abs_value", "converged"], rows, res.__dict__, passed)
    _line("extension_scan", passed, f"mode={cfg['mode']} exponent={res.fitted_exponent:.6f}")
    return passed


def cmd_selftest(cfg):
    """Small fixed fixtures for every check; all are expected to pass."""
    results = []
    seed = cfg["seed"]
    r = ver.verify_jacobian_monomial(3, 3, 1, 2000, seed=seed)
    results.append(("jacobian_monomial_ratio_one", r.passed and abs(r.min_ratio - 1) < 1e-9))
    o = OffspringCurve(SimpleCurve(3, CPolynomial.monomial(5)), (0.0, 0.3))
    results.append(("torsion_bound", ver.verify_torsion_bound(o, 2000, seed=seed).passed))
    phi = CPolynomial([0, 0, 0, 0, 1 / 24])
    cert = dec.build_certificate(phi, 3, params=dec.CertificateParams(coverage_samples=5000, seed=seed))
    chk = dec.check_certificate(cert, 5000, seed, per_cell=20)
    results.append(("certificate", chk["all_convex"] and chk["overlap_count"] == 0 and chk["coverage_fraction"] >= 0.999))
    results.append(("jacobian_d3", ver.verify_jacobian_simple_d3(cert, phi, 200, seed).passed))
    f = ver.weight_growth_exponent(3, 4)
    results.append(("weight_growth", abs(f.slope - f.target) <= 1e-3))
    s = ver.verify_sublevel(2, samples=200000, seed=seed)
    results.append(("sublevel_d2", abs(s.slope - 2) <= 0.05))
    c = SimpleCurve(2, CPolynomial.monomial(2))
    results.append(("containment", ver.verify_containment(c, 1.0, 1e-3, 1000, seed).passed))
    h = ext.homogeneity_scan(3, 4)
    results.append(("homogeneity", h.extra["passed"]))
    for name, ok in results:
        _line(name, ok, "")
    passed = all(ok for _, ok in results)
    _write(cfg, "selftest", ["check", "passed"], [[n, ok] for n, ok in results], dict(results), passed)
    return passed


HANDLERS = {
    "decompose": cmd_decompose,
    "verify-jacobian-monomial": cmd_verify_jacobian_monomial,
    "verify-jacobian-d3": cmd_verify_jacobian_d3,
    "verify-torsion": cmd_verify_torsion,
    "verify-sublevel": cmd_verify_sublevel,
    "verify-weight-growth": cmd_verify_weight_growth,
    "verify-weight-optimality": cmd_verify_weight_optimality,
    "extension-scan": cmd_extension_scan,
    "selftest": cmd_selftest,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        passed = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK if passed else EXIT_VIOLATION


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
