"""Config-driven experiment runner.

`parweight run config.toml` executes one named operation and writes a JSON
report (plus optional CSV field dumps); `parweight suite NAME` runs a
bundled check suite on the reference grid.  Exit codes: 0 success, 2
configuration/validation error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:                      # Python < 3.11
    import tomli as tomllib

import numpy as np

from . import __version__, analysis, factorize, maximal, pbmo, weights
from .dyadic import build_adjacent
from .errors import ParweightError
from .pargeo import SpaceTimeGrid, cylinder_family, rectangle_family
from .space import euclidean_grid, load_space_file

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(Exception):
    pass


def load_config(path: str) -> dict:
    p = Path(path)
    try:
        if p.suffix == ".json":
            return json.loads(p.read_text())
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    except (OSError, ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc


def _require(cond: bool, field: str, msg: str):
    if not cond:
        raise ConfigError(f"config field '{field}': {msg}")


def build_context(cfg: dict):
    gspec = cfg.get("grid", {})
    if "space" in cfg and "file" in cfg["space"]:
        space = load_space_file(cfg["space"]["file"])
    else:
        space = euclidean_grid(int(gspec.get("dim", 1)),
                               float(gspec.get("extent", 1.0)),
                               int(gspec.get("n_cells", 16)))
    p = float(gspec.get("p", 2.0))
    _require(p > 1, "grid.p", "must be > 1")
    nt = int(gspec.get("nt", 64))
    dt = float(gspec.get("dt", 1.0 / nt))
    grid = SpaceTimeGrid(space, float(gspec.get("t0", 0.0)), dt, nt, p)
    adj = build_adjacent(space)
    return grid, adj


def build_family(cfg: dict, grid, adj, gamma: float):
    fspec = cfg.get("family", {})
    mode = fspec.get("mode", "rectangle")
    _require(mode in ("rectangle", "cylinder"), "family.mode",
             "must be 'rectangle' or 'cylinder'")
    stride = int(fspec.get("time_stride", 1))
    if mode == "rectangle":
        return rectangle_family(grid, adj, gamma,
                                k_values=fspec.get("k_values", [1, 2]),
                                time_stride=stride)
    return cylinder_family(grid, gamma, edges=fspec.get("edges"),
                           time_stride=stride)


def build_weight(cfg: dict, grid):
    wspec = cfg.get("weight", {"preset": "constant"})
    name = wspec.get("preset", "constant")
    args = wspec.get("args", [])
    try:
        return weights.make_preset(grid, [name, *args] if args else name)
    except KeyError as exc:
        raise ConfigError(f"config field 'weight.preset': {exc}") from exc


def _op_params(cfg: dict):
    op = cfg.get("op", {})
    name = op.get("name")
    _require(name is not None, "op.name", "missing")
    q = float(op.get("q", 2.0))
    gamma = float(op.get("gamma", 0.25))
    _require(q > 1, "op.q", "must be > 1")
    _require(0.0 <= gamma < 1.0, "op.gamma", "must lie in [0, 1)")
    return name, q, gamma, op


def _dump_csv(outdir: Path, name: str, values: np.ndarray):
    weights.to_csv(values, outdir / f"{name}.csv")


def execute(cfg: dict, seed: int, outdir: Path) -> dict:
    outdir.mkdir(parents=True, exist_ok=True)
    grid, adj = build_context(cfg)
    name, q, gamma, op = _op_params(cfg)
    w = build_weight(cfg, grid)
    fam = build_family(cfg, grid, adj, gamma)
    dump = bool(cfg.get("output", {}).get("dump_fields", False))
    results: dict = {}
    worst = None
    if name == "muckenhoupt_constant":
        rep = weights.muckenhoupt_constant(grid, w, q, gamma,
                                           op.get("orientation", "plus"), fam)
        results["value"] = rep.constant
        worst = repr(rep.worst_box)
    elif name == "a1_constant":
        rep = weights.a1_constant(grid, w, gamma, op.get("orientation", "plus"), fam)
        results["value"] = rep.constant
    elif name == "reverse_holder_search":
        r = analysis.reverse_holder_search(grid, w, q, fam,
                                           side=op.get("side", "weight"),
                                           C_budget=float(op.get("C_budget", 8.0)))
        results.update(kappa=r.kappa, C=r.C, within_budget=r.within_budget)
        worst = repr(r.worst_box)
    elif name == "self_improvement":
        results.update(analysis.self_improvement(
            grid, w, q, gamma, fam, op.get("epsilon_ladder", [0.1, 0.25, 0.5]),
            float(op.get("budget_factor", 10.0))))
        results["trend"] = {str(k): v for k, v in results["trend"].items()}
    elif name == "ainfty_check":
        results.update(analysis.ainfty_check(grid, w, fam))
    elif name == "lag_transfer":
        lt = analysis.lag_transfer(grid, w, q, op.get("gamma_list", [0.25, 0.5]), fam)
        results["constants"] = {str(k): v for k, v in lt["constants"].items()}
        results["ratios"] = {f"{a}/{b}": v for (a, b), v in lt["ratios"].items()}
    elif name in ("weak_type_ratio", "strong_type_ratio"):
        testset = maximal.make_testset(grid, fam, seed=seed)
        opname = op.get("maximal_op", "rect+")
        fn = (maximal.weak_type_ratio if name == "weak_type_ratio"
              else maximal.strong_type_ratio)
        results["value"] = fn(grid, w, q, gamma, opname, fam, testset)
    elif name == "maximal_field":
        mf = maximal.maximal_field(grid, w.values, op.get("maximal_op", "rect+"),
                                   gamma, fam)
        results.update(max=float(mf.values.max()),
                       covered_cells=int(mf.covered.sum()))
        if dump:
            _dump_csv(outdir, "maximal_field", mf.values)
    elif name == "rdf_factorize":
        res = factorize.rdf_factorize(grid, w, q, gamma, adj,
                                      k_values=cfg.get("family", {}).get("k_values", [1, 2]),
                                      seed=seed)
        results.update(residual=res.residual, n_terms=res.n_terms,
                       T_norm_est=res.T_norm_est, route=res.route,
                       a1_plus_const_u=res.a1_plus_const_u,
                       a1_minus_const_v=res.a1_minus_const_v,
                       certificates=res.certificates)
        if dump:
            for nm, f in (("u", res.u), ("v", res.v), ("phi", res.phi)):
                _dump_csv(outdir, nm, f)
    elif name == "coifman_rochberg":
        cyl = cylinder_family(grid, 0.0, require_parts=("lower",))
        nu = w.values * grid.cell_measure()
        cr = factorize.coifman_rochberg(grid, nu, float(op.get("epsilon", 0.5)),
                                        gamma, cyl, fam)
        results.update(epsilon=cr.epsilon,
                       a1_constant=cr.a1_report.constant if cr.a1_report else None)
        if dump:
            _dump_csv(outdir, "cr_weight", cr.weight.values)
    elif name == "a1_decompose":
        fam_lo = rectangle_family(grid, adj, gamma,
                                  k_values=cfg.get("family", {}).get("k_values", [1, 2]),
                                  require_parts=("lower",))
        dec = factorize.a1_decompose(grid, w, float(op.get("kappa", 1.0)),
                                     gamma, fam_lo)
        results.update(epsilon=dec["epsilon"],
                       sup_abs_log_phi=dec["sup_abs_log_phi"])
        if dump:
            _dump_csv(outdir, "phi", dec["phi"])
    elif name == "pbmo_norm":
        u = -np.log(w.values)
        r = pbmo.pbmo_norm(grid, u, fam, op.get("orientation", "plus"))
        results["value"] = r["norm"]
        worst = repr(r["worst"].box)
    elif name == "jn_profile":
        u = -np.log(w.values)
        env = pbmo.jn_envelope(grid, u, fam, orientation=op.get("orientation", "plus"))
        results.update(env)
    else:
        raise ConfigError(f"config field 'op.name': unknown operation {name!r}")
    return {"op": name, "params": {"q": q, "gamma": gamma, "seed": seed},
            "results": results, "worst_box": worst, "version": __version__}


# ---------------------------------------------------------------------------
# Suites

def _reference_context():
    space = euclidean_grid(1, 1.0, 16)
    grid = SpaceTimeGrid(space, 0.0, 1.0 / 64, 64, 2.0)
    adj = build_adjacent(space)
    return grid, adj


def _suite_records(name: str, seed: int):
    grid, adj = _reference_context()
    gamma = 0.25
    fam = rectangle_family(grid, adj, gamma, k_values=[1, 2], time_stride=2)
    records = []

    def check(label, passed, **extra):
        records.append({"name": label, "passed": bool(passed), **extra})

    if name in ("trivial", "all"):
        one = weights.constant(grid)
        aq = weights.muckenhoupt_constant(grid, one, 2.0, gamma, "plus", fam).constant
        check("aq_constant_weight", abs(aq - 1.0) <= 1e-12, value=aq)
        a1 = weights.a1_constant(grid, one, gamma, "plus", fam).constant
        check("a1_constant_weight", abs(a1 - 1.0) <= 1e-12, value=a1)
        C = analysis.rhi_constant(grid, one, 2.0, fam, "weight", 0.25)[0]
        check("rhi_constant_weight", abs(C - 1.0) <= 1e-12, value=C)
        nrm = pbmo.pbmo_norm(grid, np.zeros((grid.space.n, grid.nt)), fam)["norm"]
        check("pbmo_constant_field", nrm == 0.0, value=nrm)
    if name in ("duality", "all"):
        w = weights.exp_time(grid, 1.0)
        for q in (1.5, 2.0, 3.0):
            plus = weights.muckenhoupt_constant(grid, w, q, gamma, "plus", fam).constant
            qp = q / (q - 1.0)
            minus = weights.muckenhoupt_constant(grid, w.dual(q), qp, gamma,
                                                 "minus", fam).constant ** (q - 1.0)
            err = abs(plus - minus) / plus
            check(f"duality_q{q}", err <= 1e-12, relative_error=err)
    if name in ("lag", "all"):
        w = weights.exp_time(grid, 1.0)
        lti = analysis.lag_transfer_inequality(grid, w, 2.0, 0.25, 0.5, fam)
        check("lag_transfer_per_box", len(lti["violations"]) == 0,
              n_boxes=lti["n_boxes"])
    if name in ("rhi", "all"):
        w = weights.exp_time(grid, 1.0)
        r = analysis.reverse_holder_search(grid, w, 2.0, fam)
        check("rhi_exp_weight", r.within_budget, kappa=r.kappa, C=r.C)
    if name in ("factorization", "all"):
        w = weights.exp_time(grid, 1.0)
        res = factorize.rdf_factorize(grid, w, 2.0, gamma, adj,
                                      k_values=[1, 2], seed=seed)
        check("factorization_exp_weight",
              res.residual <= 1e-9 and res.certificates["holds"],
              residual=res.residual, n_terms=res.n_terms)
    if name in ("pbmo", "all"):
        t = np.tile(grid.cell_times(), (grid.space.n, 1))
        n_dec = pbmo.pbmo_norm(grid, -t, fam, "plus")["norm"]
        check("pbmo_decreasing_zero", n_dec == 0.0, value=n_dec)
        n_inc_p = pbmo.pbmo_norm(grid, t, fam, "plus")["norm"]
        n_dec_m = pbmo.pbmo_norm(grid, -t, fam, "minus")["norm"]
        check("pbmo_orientation_duality", n_inc_p == n_dec_m,
              plus_of_t=n_inc_p, minus_of_minus_t=n_dec_m)
    if not records:
        raise ConfigError(f"unknown suite {name!r}")
    return records


def run_suite(name: str, seed: int, outdir: Path) -> int:
    t0 = time.perf_counter()
    records = _suite_records(name, seed)
    elapsed = time.perf_counter() - t0
    report = {"suite": name, "records": records, "seed": seed,
              "passed": all(r["passed"] for r in records),
              "version": __version__}
    _write_report(outdir, f"suite_{name}", report, elapsed)
    for r in records:
        print(f"[{'PASS' if r['passed'] else 'FAIL'}] {r['name']}")
    return EXIT_OK if report["passed"] else EXIT_NUMERIC


def _write_report(outdir: Path, stem: str, report: dict, elapsed: float):
    outdir.mkdir(parents=True, exist_ok=True)
    report = dict(report)
    report["timing"] = {"elapsed_s": elapsed}
    path = outdir / f"{stem}.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=2,
                               default=str) + "\n")
    return path


def main(argv=None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--threads", type=int, default=None)
    common.add_argument("--out", type=str, default="parweight_out")
    ap = argparse.ArgumentParser(prog="parweight")
    sub = ap.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", parents=[common])
    runp.add_argument("config")
    suitep = sub.add_parser("suite", parents=[common])
    suitep.add_argument("name")
    args = ap.parse_args(argv)

    threads = os.environ.get("PARWEIGHT_THREADS", args.threads)
    if threads is not None:
        # recorded for the report; numerics are vectorized, not thread-pooled
        os.environ["OMP_NUM_THREADS"] = str(threads)
    outdir = Path(args.out)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            t0 = time.perf_counter()
            report = execute(cfg, args.seed, outdir)
            elapsed = time.perf_counter() - t0
            path = _write_report(outdir, "report", report, elapsed)
            print(f"report written to {path}")
            return EXIT_OK
        return run_suite(args.name, args.seed, outdir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParweightError as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
