"""Batch front door: one subcommand per module, JSON in, files out.

Configs are flat JSON with strict key checking; command-line flags
override file values.  Every output file is listed in the target
directory's manifest together with the full parameter block and its
sha256, so each artifact is reproducible from the manifest alone.  All
computations are deterministic; repeated runs with identical configs
produce byte-identical JSON/CSV/SVG outputs.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__
from .extensions import derivative_check, extension_eigenvalues, reflection_theta
from .fem import RobinProfile, assemble, assemble_neumann, solve_window, write_coo
from .geometry import build_half_disk_mesh, mesh_from_json, mesh_to_json
from .plots import emit_plot
from .sweep import (
    EpsGrid,
    MeshParams,
    check_log_periodicity,
    fit_offset,
    run_sweep,
    sweep_coverage,
)
from .transverse import transverse_spectrum

SUBCOMMANDS = ("transverse", "extension", "reflection", "fem", "sweep", "verify", "mesh")


def canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def config_hash(params: dict) -> str:
    return hashlib.sha256(canonical_json(params).encode()).hexdigest()


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


class Manifest:
    """Per-directory record of every artifact and the config that made it."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.path = out_dir / "manifest.json"
        if self.path.exists():
            self.entries = {e["path"]: e for e in json.loads(self.path.read_text())["artifacts"]}
        else:
            self.entries = {}

    def record(self, file_path: Path, command: str, params: dict) -> None:
        rel = str(file_path.relative_to(self.out_dir)) if file_path.is_relative_to(self.out_dir) \
            else str(file_path)
        self.entries[rel] = {
            "path": rel,
            "command": command,
            "params": params,
            "config_sha256": config_hash(params),
        }

    def save(self) -> None:
        doc = {"artifacts": [self.entries[k] for k in sorted(self.entries)]}
        _write(self.path, canonical_json(doc))


def _usage_error(message: str) -> SystemExit:
    print(f"usage error: {message}", file=sys.stderr)
    return SystemExit(2)


def _load_config(path: str | None, defaults: dict, explicit: dict) -> dict:
    """defaults < config file < explicit CLI flags, with unknown keys rejected."""
    params = dict(defaults)
    if path:
        doc = json.loads(Path(path).read_text())
        if not isinstance(doc, dict):
            raise _usage_error(f"config {path} must be a flat JSON object")
        unknown = set(doc) - set(defaults)
        if unknown:
            raise _usage_error(f"unknown config keys in {path}: {sorted(unknown)}")
        params.update(doc)
    params.update({k: v for k, v in explicit.items() if v is not None})
    return params


def _parse_window(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in text.split(":"))
    except ValueError:
        raise _usage_error(f"window must be 'lo:hi', got {text!r}")
    if not lo < hi:
        raise _usage_error("window must satisfy lo < hi")
    return lo, hi


def _emit(doc: dict, out: str | None, command: str, params: dict) -> None:
    text = canonical_json(doc)
    if out:
        out_path = Path(out)
        _write(out_path, text)
        manifest = Manifest(out_path.parent)
        manifest.record(out_path, command, params)
        manifest.save()
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_mesh(args) -> int:
    defaults = {"R": 1.0, "hmax": 0.25, "rmin": 0.05, "ratio": 1.5, "n_angular_min": 8}
    params = _load_config(args.config, defaults, {
        "R": args.R, "hmax": args.hmax, "rmin": args.rmin, "ratio": args.ratio,
        "n_angular_min": args.n_angular_min})
    mesh = build_half_disk_mesh(params["R"], params["hmax"], params["rmin"],
                                params["ratio"], params["n_angular_min"])
    out_path = Path(args.out)
    _write(out_path, mesh_to_json(mesh))
    manifest = Manifest(out_path.parent)
    manifest.record(out_path, "mesh", params)
    manifest.save()
    print(f"mesh: {mesh.n_nodes} nodes, {mesh.triangles.shape[0]} triangles -> {out_path}")
    return 0


def _cmd_transverse(args) -> int:
    defaults = {"a0": 1.0, "variant": "sign", "kmax": 4}
    params = _load_config(args.config, defaults, {
        "a0": args.a0, "variant": args.variant, "kmax": args.kmax})
    spec = transverse_spectrum(params["a0"], params["variant"], params["kmax"])
    doc = {
        "a0": params["a0"],
        "variant": params["variant"],
        "eigenvalues": [float(v) for v in spec.eigenvalues],
        "negative_count": spec.negative_count,
    }
    _emit(doc, args.out, "transverse", params)
    return 0


def _cmd_extension(args) -> int:
    defaults = {"theta": 0.0, "R": 1.0, "b0": 1.0, "window": "-10:10",
                "kmax_angular": 3, "k_index": 0, "derivative_check": False}
    params = _load_config(args.config, defaults, {
        "theta": args.theta, "R": args.R, "b0": args.b0, "window": args.window,
        "kmax_angular": args.kmax_angular, "k_index": args.k_index,
        "derivative_check": args.derivative_check or None})
    window = _parse_window(params["window"])
    spec = extension_eigenvalues(params["theta"], window, params["R"], params["b0"],
                                 params["kmax_angular"])
    doc = {
        "theta": spec.theta,
        "R": spec.R,
        "b0": spec.b0,
        "window": list(window),
        "eigenvalues": [{"value": r.value, "family": r.family, "residual": r.residual}
                        for r in spec.records],
    }
    if params["derivative_check"]:
        mode0 = [r.value for r in spec.records if r.family == "mode0"]
        k = int(params["k_index"])
        if not 0 <= k < len(mode0):
            raise _usage_error(f"k_index {k} out of range: "
                               f"{len(mode0)} mode-0 eigenvalues in window")
        chk = derivative_check(spec.theta, mode0[k], params["R"], params["b0"])
        doc["derivative_check"] = {"theta": chk.theta, "k": k, "fd": chk.fd,
                                   "minus_C0_sq": chk.minus_c0_sq, "rel_err": chk.rel_err}
    _emit(doc, args.out, "extension", params)
    return 0


def _cmd_reflection(args) -> int:
    defaults = {"lam": 0.0, "R": 1.0, "b0": 1.0}
    params = _load_config(args.config, defaults, {
        "lam": args.lam, "R": args.R, "b0": args.b0})
    data = reflection_theta(params["lam"], params["R"], params["b0"])
    doc = {
        "lambda": data.lam,
        "theta_lambda": data.theta_lambda,
        "c_in": [data.c_in.real, data.c_in.imag],
        "c_out": [data.c_out.real, data.c_out.imag],
        "q_magnitude": data.q_magnitude,
        "degenerate": data.degenerate,
    }
    _emit(doc, args.out, "reflection", params)
    return 0


def _cmd_fem(args) -> int:
    defaults = {"R": 1.0, "hmax": 0.1, "rmin": None, "ratio": 1.3, "n_angular_min": 8,
                "mesh_file": None, "a0": 1.0, "eps": 1e-2, "c2": 0.0, "variant": "sign",
                "window": "-10:10", "tol": 1e-8, "dense_cap": 4000, "neumann": False,
                "export_coo": None}
    params = _load_config(args.config, defaults, {
        "R": args.R, "hmax": args.hmax, "rmin": args.rmin, "ratio": args.ratio,
        "n_angular_min": args.n_angular_min, "mesh_file": args.mesh_file,
        "a0": args.a0, "eps": args.eps, "c2": args.c2, "variant": args.variant,
        "window": args.window, "tol": args.tol, "dense_cap": args.dense_cap,
        "neumann": args.neumann or None, "export_coo": args.export_coo})
    window = _parse_window(params["window"])
    if params["mesh_file"]:
        mesh = mesh_from_json(Path(params["mesh_file"]).read_text())
    else:
        rmin = params["rmin"] if params["rmin"] is not None else params["eps"] / 10.0
        mesh = build_half_disk_mesh(params["R"], params["hmax"], rmin, params["ratio"],
                                    params["n_angular_min"])
    if params["neumann"]:
        pair = assemble_neumann(mesh)
    else:
        profile = RobinProfile(a0=params["a0"], eps=params["eps"], c2=params["c2"],
                               variant=params["variant"])
        pair = assemble(mesh, profile)
    result = solve_window(pair, window, tol=params["tol"], dense_cap=params["dense_cap"],
                          parameter=("eps", 0.0 if params["neumann"] else params["eps"]))
    if params["export_coo"]:
        write_coo(pair.A, params["export_coo"] + ".A.coo")
        write_coo(pair.M, params["export_coo"] + ".M.coo")
    doc = result.to_dict()
    doc["n_dofs"] = int(pair.A.shape[0])
    if not params["neumann"]:
        s_samples = np.unique(np.concatenate([mesh.gamma1_intervals.ravel(),
                                              [profile.eps * 1e-3, -profile.eps * 1e-3]]))
        doc["inf_abs_a_eps"] = profile.inf_abs_a_eps(s_samples[s_samples != 0.0])
    _emit(doc, args.out, "fem", params)
    return 0


def _sweep_rows(fit) -> list[dict]:
    rows = [{
        "eps": r.eps, "ln_eps": math.log(r.eps), "theta_eps": r.theta_eps,
        "lambda": r.lam_fem, "family": r.family, "mismatch": r.mismatch,
    } for r in fit.rows]
    rows.sort(key=lambda r: (-r["eps"], r["lambda"]))
    return rows


def write_sweep_csv(rows: list[dict], path: Path) -> None:
    cols = ["eps", "ln_eps", "theta_eps", "lambda", "family", "mismatch"]
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for r in rows:
            writer.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols])


def _cmd_sweep(args) -> int:
    defaults = {"a0": 1.0, "c2": 0.0, "eps_max": 1e-2, "periods": 2,
                "samples_per_period": 8, "window": "-10:10", "R": 1.0, "hmax": 0.05,
                "ratio": 1.03, "n_angular_min": 88, "dense_cap": 2500, "tol": 1e-8,
                "threads": None, "coverage_interval": "0:5"}
    params = _load_config(args.config, defaults, {
        "a0": args.a0, "c2": args.c2, "eps_max": args.eps_max, "periods": args.periods,
        "samples_per_period": args.samples_per_period, "window": args.window,
        "R": args.R, "hmax": args.hmax, "ratio": args.ratio,
        "n_angular_min": args.n_angular_min, "dense_cap": args.dense_cap,
        "tol": args.tol, "threads": args.threads,
        "coverage_interval": args.coverage_interval})
    window = _parse_window(params["window"])
    out_dir = Path(args.out_dir)
    manifest = Manifest(out_dir)

    profile = RobinProfile(a0=params["a0"], eps=params["eps_max"], c2=params["c2"])
    grid = EpsGrid(eps_max=params["eps_max"], periods=params["periods"],
                   samples_per_period=params["samples_per_period"])
    mesh_params = MeshParams(R=params["R"], h_max=params["hmax"], ratio=params["ratio"],
                             n_angular_min=params["n_angular_min"])
    table = run_sweep(profile, window, grid, mesh_params, dense_cap=params["dense_cap"],
                      tol=params["tol"], threads=params["threads"])

    for j, entry in enumerate(table.entries):
        doc = {"eps": entry.eps, "r_min": entry.r_min}
        if entry.usable:
            doc.update(entry.result.to_dict())
        else:
            doc["error"] = entry.error
        p = out_dir / f"eps_{j:03d}.json"
        _write(p, canonical_json(doc))
        manifest.record(p, "sweep", params)

    fit = fit_offset(table)
    rows = _sweep_rows(fit)
    csv_path = out_dir / "sweep.csv"
    write_sweep_csv(rows, csv_path)
    manifest.record(csv_path, "sweep", params)

    fit_doc = {"theta_star": fit.theta_star, "objective": fit.objective,
               "mean_mismatch": fit.mean_mismatch(),
               "rows": [asdict(r) for r in fit.rows]}
    _write(out_dir / "offset_fit.json", canonical_json(fit_doc))
    manifest.record(out_dir / "offset_fit.json", "sweep", params)

    if params["periods"] >= 2:
        full = check_log_periodicity(table, tol=0.05)
        half = check_log_periodicity(table, tol=0.05,
                                     lag=params["samples_per_period"] // 2)
        lp_doc = {"full_period": asdict(full), "half_period_control": asdict(half)}
        lp_summary = f"log-periodicity mean rel = {full.mean_rel:.4g}"
    else:
        lp_doc = {"skipped": "sweep spans fewer than 2 periods"}
        lp_summary = "log-periodicity skipped (span < 2 periods)"
    _write(out_dir / "log_periodicity.json", canonical_json(lp_doc))
    manifest.record(out_dir / "log_periodicity.json", "sweep", params)

    cov_iv = _parse_window(params["coverage_interval"])
    cov = sweep_coverage(table, cov_iv)
    _write(out_dir / "coverage.json", canonical_json(asdict(cov)))
    manifest.record(out_dir / "coverage.json", "sweep", params)

    b0 = table.b0
    emit_plot(rows, "spectrum-vs-lneps", out_dir / "spectrum_vs_lneps.svg", b0=b0)
    manifest.record(out_dir / "spectrum_vs_lneps.svg", "sweep", params)
    emit_plot(rows, "spectrum-vs-lntheta", out_dir / "spectrum_vs_theta.svg", b0=b0)
    manifest.record(out_dir / "spectrum_vs_theta.svg", "sweep", params)
    cov_rows = [{"lambda": lam} for r in table.entries if r.usable
                for lam in r.result.eigenvalues]
    emit_plot(cov_rows, "coverage", out_dir / "coverage.svg", b0=b0, interval=cov_iv)
    manifest.record(out_dir / "coverage.svg", "sweep", params)
    manifest.save()

    n_fail = sum(1 for e in table.entries if not e.usable)
    print(f"sweep: {len(table.entries)} eps values ({n_fail} failed), "
          f"theta* = {fit.theta_star:.6f}, mean mismatch = {fit.mean_mismatch():.4g}, "
          f"{lp_summary} -> {out_dir}")
    return 0


def _cmd_verify(args) -> int:
    from .acceptance import run_criteria

    only = None
    if args.only:
        only = [int(t) for t in args.only.split(",")]
    results = run_criteria(only=only, quick=args.quick)
    out_dir = Path(args.out_dir) if args.out_dir else None
    doc = []
    n_fail = 0
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        if not res.passed:
            n_fail += 1
        print(f"{status}  criterion {res.index:2d}  {res.name}  [{res.elapsed:.1f}s]  {res.details}")
        doc.append({"index": res.index, "name": res.name, "passed": res.passed,
                    "details": res.details})
    if out_dir:
        _write(out_dir / "verify_report.json", canonical_json({"criteria": doc}))
        manifest = Manifest(out_dir)
        manifest.record(out_dir / "verify_report.json", "verify",
                        {"only": args.only, "quick": args.quick})
        manifest.save()
    return 1 if n_fail else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robin-wander",
                                 description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mesh", help="build a graded half-disk mesh and write it as JSON")
    p.add_argument("--config")
    p.add_argument("--R", type=float)
    p.add_argument("--hmax", type=float)
    p.add_argument("--rmin", type=float)
    p.add_argument("--ratio", type=float)
    p.add_argument("--n-angular-min", dest="n_angular_min", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_mesh)

    p = sub.add_parser("transverse", help="angular spectrum for either coefficient variant")
    p.add_argument("--config")
    p.add_argument("--a0", type=float)
    p.add_argument("--variant", choices=("sign", "abs"))
    p.add_argument("--kmax", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_transverse)

    p = sub.add_parser("extension", help="eigenvalues of one self-adjoint extension")
    p.add_argument("--config")
    p.add_argument("--theta", type=float)
    p.add_argument("--R", type=float)
    p.add_argument("--b0", type=float)
    p.add_argument("--window")
    p.add_argument("--kmax-angular", dest="kmax_angular", type=int)
    p.add_argument("--derivative-check", dest="derivative_check", action="store_true")
    p.add_argument("--k-index", dest="k_index", type=int)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_extension)

    p = sub.add_parser("reflection", help="reflection phase of the mode-0 scattering solution")
    p.add_argument("--config")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--R", type=float)
    p.add_argument("--b0", type=float)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_reflection)

    p = sub.add_parser("fem", help="assemble and solve the regularized eigenproblem")
    p.add_argument("--config")
    p.add_argument("--mesh-file", dest="mesh_file")
    p.add_argument("--R", type=float)
    p.add_argument("--hmax", type=float)
    p.add_argument("--rmin", type=float)
    p.add_argument("--ratio", type=float)
    p.add_argument("--n-angular-min", dest="n_angular_min", type=int)
    p.add_argument("--a0", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--variant", choices=("sign", "abs"))
    p.add_argument("--window")
    p.add_argument("--tol", type=float)
    p.add_argument("--dense-cap", dest="dense_cap", type=int)
    p.add_argument("--neumann", action="store_true")
    p.add_argument("--export-coo", dest="export_coo")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_fem)

    p = sub.add_parser("sweep", help="epsilon sweep with offset fit and reports")
    p.add_argument("--config")
    p.add_argument("--a0", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--eps-max", dest="eps_max", type=float)
    p.add_argument("--periods", type=int)
    p.add_argument("--samples-per-period", dest="samples_per_period", type=int)
    p.add_argument("--window")
    p.add_argument("--R", type=float)
    p.add_argument("--hmax", type=float)
    p.add_argument("--ratio", type=float)
    p.add_argument("--n-angular-min", dest="n_angular_min", type=int)
    p.add_argument("--dense-cap", dest="dense_cap", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--coverage-interval", dest="coverage_interval")
    p.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("verify", help="run the acceptance criteria and report pass/fail")
    p.add_argument("--only", help="comma-separated criterion indices, e.g. 1,2,3")
    p.add_argument("--quick", action="store_true",
                   help="reduced mesh resolutions (smoke testing, not the official gate)")
    p.add_argument("--out-dir", dest="out_dir")
    p.set_defaults(func=_cmd_verify)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except SystemExit:
        raise
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
