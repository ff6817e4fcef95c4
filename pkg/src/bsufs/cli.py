"""Command-line interface: ``bsufs {synth,select,eval,sweep}``.

Exit codes: 0 success, 2 usage / invalid parameters, 3 data errors,
4 numerical failure. Feature indices in every output are 0-based.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data import LabelVector, read_csv, read_labels, write_csv, write_labels
from .errors import BadFeatureCount, BsufsError, DataError
from .evaluation import repeated_eval
from .pam import SolverConfig, default_m, pam_solve
from .stiefel import TrConfig
from .sweep import FEATURE_COUNTS, LAMBDA_GRID, PQ_GRID, best_cells, clamp_feature_counts, grid_cells, run_sweep
from .synthetic import KINDS, NoiseSpec, SyntheticSpec, corrupt, generate

log = logging.getLogger("bsufs")

EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 2, 3, 4


class UsageError(BsufsError):
    pass


def _load(args, need_labels=False):
    x, _ = read_csv(args.data)
    labels = None
    if getattr(args, "labels", None):
        labels = read_labels(args.labels, n=x.n)
    elif need_labels:
        raise UsageError("--labels is required for this command")
    return x, labels


def _solver_kw(args) -> dict:
    kw = {}
    for name in ("beta1", "beta2", "tau1", "tau2", "tau3", "rel_tol", "max_outer"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = val
    return kw


def _write_json(obj, out):
    text = json.dumps(obj, indent=2)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = SyntheticSpec(args.kind, args.n, args.seed, args.noise_dims, args.scale)
    x, y = generate(spec)
    if args.noise:
        x = corrupt(x, NoiseSpec.parse(args.noise, seed=args.seed))
    prefix = Path(args.out)
    header = [f"f{i}" for i in range(x.d)]
    write_csv(prefix.with_name(prefix.name + ".csv"), x, header)
    write_labels(prefix.with_name(prefix.name + ".labels"), y)
    print(f"wrote {prefix}.csv ({x.n} rows x {x.d} cols) and {prefix}.labels")
    return 0


def cmd_select(args) -> int:
    x, labels = _load(args)
    if args.replay:
        manifest = json.loads(Path(args.replay).read_text(encoding="utf-8"))
        cfg = SolverConfig.from_dict(manifest["config"])
        n_features = int(manifest["n_features"])
    else:
        clusters = labels.class_count if labels is not None else None
        m = args.m if args.m is not None else default_m(x.d, x.n, clusters)
        tr = TrConfig.default(m) if args.tr_max_iter is None else TrConfig.default(m, max_outer=args.tr_max_iter)
        cfg = SolverConfig(args.lambda1, args.lambda2, args.p, args.q, m, seed=args.seed, tr=tr,
                           **_solver_kw(args))
        n_features = args.features if args.features is not None else min(10, x.d)
    if not (1 <= n_features <= x.d):
        raise BadFeatureCount(f"--features must lie in [1, {x.d}], got {n_features}")

    t0 = time.perf_counter()
    state, sel = pam_solve(x, cfg, n_features)
    wall = time.perf_counter() - t0

    out = Path(args.out) if args.out else None
    trace_path = Path(args.trace) if args.trace else (out.with_suffix(".trace.csv") if out else None)
    if trace_path is not None:
        state.trace.to_csv(trace_path)

    manifest = {
        "version": __version__,
        "config": cfg.to_dict(),
        "n_features": n_features,
        "dataset": x.fingerprint(),
        "selected": [int(i) for i in sel.selected],
        "ranked_indices": [int(i) for i in sel.ranked_indices],
        "scores": [float(v) for v in sel.scores],
        "outer_iterations": state.k,
        "converged": state.converged,
        "objective": state.trace.records[-1].objective.total,
        "trace": str(trace_path) if trace_path else None,
        "wall_time_s": wall,
        "evaluation": None,
    }
    if labels is not None and args.reps:
        k = args.k or labels.class_count
        rep = repeated_eval(x.entries[sel.selected].T, labels, k, args.reps, args.seed)
        manifest["evaluation"] = rep.to_dict()
    _write_json(manifest, out)
    if out:
        print(f"selected features: {manifest['selected']}")
    return 0


def cmd_eval(args) -> int:
    x, labels = _load(args, need_labels=True)
    manifest = json.loads(Path(args.select).read_text(encoding="utf-8"))
    if "ranked_indices" in manifest and args.features:
        idx = manifest["ranked_indices"][: args.features]
    else:
        idx = manifest["selected"]
    idx = [int(i) for i in idx]
    bad = [i for i in idx if not 0 <= i < x.d]
    if bad or not idx:
        raise DataError(f"selection references features {bad or idx} outside [0, {x.d})")
    fp = manifest.get("dataset")
    if fp and (fp.get("d") != x.d or fp.get("n") != x.n):
        raise DataError(f"selection was computed on a {fp.get('d')}x{fp.get('n')} dataset, "
                        f"data here is {x.d}x{x.n}")
    k = args.k or labels.class_count
    rep = repeated_eval(x.entries[idx].T, labels, k, args.reps, args.seed)
    out = rep.to_dict()
    out["features"] = idx
    _write_json(out, args.out)
    return 0


def cmd_sweep(args) -> int:
    lambdas = args.lambdas or LAMBDA_GRID
    ps = args.ps if args.ps is not None else PQ_GRID
    qs = args.qs if args.qs is not None else PQ_GRID
    cells = grid_cells(lambdas, ps, qs)
    if args.dry_run:
        counts = args.features or FEATURE_COUNTS
        for i, c in enumerate(cells):
            print(f"{i}\tp={c.p:g}\tq={c.q:g}\tlambda1={c.lambda1:g}\tlambda2={c.lambda2:g}")
        print(f"# {len(cells)} cells x feature counts {list(counts)}")
        return 0
    x, labels = _load(args)
    counts = clamp_feature_counts(args.features or FEATURE_COUNTS, x.d)
    clusters = labels.class_count if labels is not None else None
    m = args.m if args.m is not None else default_m(x.d, x.n, clusters)
    results = run_sweep(x, cells, m, counts, labels, args.k, args.reps, args.seed,
                        args.workers, _solver_kw(args))
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for res in results:
        d = res.to_dict()
        d["dataset"] = x.fingerprint()
        (outdir / f"cell_{res.index:04d}.json").write_text(json.dumps(d, indent=2) + "\n", encoding="utf-8")
    with (outdir / "summary.csv").open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["n_features", "cell", "p", "q", "lambda1", "lambda2", "acc_mean", "acc_std",
                    "nmi_mean", "nmi_std", "selected"])
        for s, res in best_cells(results).items():
            rep = res.evals[s]
            w.writerow([s, res.index, res.cell.p, res.cell.q, res.cell.lambda1, res.cell.lambda2,
                        rep.acc_mean, rep.acc_std, rep.nmi_mean, rep.nmi_std,
                        " ".join(str(int(i)) for i in res.selected(s))])
    print(f"wrote {len(results)} cell manifests and summary.csv to {outdir}")
    return 0


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def _add_solver_flags(p):
    p.add_argument("--m", type=int, help="frame width (default: clusters if < d, else min(10, d-1))")
    p.add_argument("--beta1", type=float)
    p.add_argument("--beta2", type=float)
    p.add_argument("--tau1", type=float)
    p.add_argument("--tau2", type=float)
    p.add_argument("--tau3", type=float)
    p.add_argument("--rel-tol", dest="rel_tol", type=float)
    p.add_argument("--max-outer", dest="max_outer", type=int)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bsufs", description="Bi-sparse unsupervised feature selection")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic benchmark dataset")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-dims", dest="noise_dims", type=int, default=7)
    p.add_argument("--scale", type=float, help="informative feature scale")
    p.add_argument("--noise", help="gaussian:SIGMA or saltpepper:FRACTION")
    p.add_argument("--out", required=True, help="output prefix (writes PREFIX.csv, PREFIX.labels)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("select", help="run the solver and rank features")
    p.add_argument("--data", required=True)
    p.add_argument("--labels")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--lambda1", type=float, default=1e-2)
    p.add_argument("--lambda2", type=float, default=1e-2)
    p.add_argument("--features", type=int, help="number of features to select (default min(10, d))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--k", type=int, help="clusters for the optional evaluation")
    p.add_argument("--reps", type=int, default=50, help="k-means repetitions when labels are given (0: skip)")
    p.add_argument("--tr-max-iter", dest="tr_max_iter", type=int)
    p.add_argument("--replay", help="reuse config and feature count from an earlier manifest")
    p.add_argument("--trace", help="CSV path for the per-iteration trace")
    p.add_argument("--out", help="JSON manifest path (default: stdout)")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("eval", help="k-means evaluation of a saved selection")
    p.add_argument("--data", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--select", required=True, help="manifest written by 'select'")
    p.add_argument("--features", type=int, help="use the top-N ranked features instead")
    p.add_argument("--k", type=int)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="grid search over p, q, lambda1, lambda2")
    p.add_argument("--data")
    p.add_argument("--labels")
    p.add_argument("--lambdas", type=float, nargs="+")
    p.add_argument("--ps", type=float, nargs="+")
    p.add_argument("--qs", type=float, nargs="+")
    p.add_argument("--features", type=int, nargs="+", help="feature counts (default 10..100 step 10)")
    p.add_argument("--k", type=int)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, help="worker processes (default $BSUFS_WORKERS or 1)")
    p.add_argument("--dry-run", dest="dry_run", action="store_true")
    p.add_argument("--out", default="sweep_out")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "sweep" and not args.dry_run and not args.data:
        ap.error("sweep requires --data unless --dry-run is given")
    try:
        return args.func(args)
    except (DataError, BadFeatureCount, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"bsufs: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BsufsError as exc:
        print(f"bsufs: invalid arguments: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"bsufs: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
