"""Command-line orchestration of the diagnostic workflow and module ops.

Every subcommand is a pure function of its input files, flags, and seed:
primary output is JSON on stdout with stable key order, human-readable notes
go to stderr, and reports embed content digests of their inputs. Exit codes:
0 ok, 1 analysis rejected an input/fit, 2 input or validation error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__
from .association import (
    pairwise_correlation,
    redundancy_flags,
    save_corr_csv,
)
from .composite import (
    ceiling_oracle,
    composite_ceiling,
    dirichlet_fragility,
    information_density,
    leave_one_out,
    load_suite,
    suite_ed,
)
from .matrix_io import (
    BinarizationPolicy,
    MatrixValidationError,
    binarize,
    impute_missing,
    load_matrix,
    save_matrix,
)
from .nulls import build_ed_report
from .selection import SELECTION_METHODS, baseline_select, compression_curve, ed_greedy
from .spectral import CENTERING_SCHEMES
from .synthetic import LOADING_ORIENTATIONS, IrtSpec, gen_irt_matrix
from .temporal import mann_kendall, saturation_fit, temporal_information_density

THREADS_ENV_VAR = "SPECTRADIAG_THREADS"

__all__ = ["main"]


def _digest(path: str) -> dict:
    with open(path, "rb") as fh:
        return {"path": path, "sha256": hashlib.sha256(fh.read()).hexdigest()}


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    sys.stdout.write(text + "\n")
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _note(msg: str) -> None:
    sys.stderr.write(msg + "\n")


def _envelope(command: str, seed: int | None, inputs: dict, result: dict) -> dict:
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "inputs": inputs,
        "result": result,
    }


def _resolve_threads(value: int | None) -> int:
    # caps worker counts; all operations are worker-count independent by
    # construction (per-replicate substreams), so this never changes results
    if value is None:
        value = int(os.environ.get(THREADS_ENV_VAR, "1"))
    if value < 1:
        raise MatrixValidationError("--threads must be a positive integer")
    return value


def _load_preprocessed(args) -> tuple:
    m = load_matrix(args.matrix, format=args.format)
    steps = []
    if m.kind == "continuous" and not args.no_binarize:
        m = binarize(m, BinarizationPolicy(threshold=args.binarize_threshold))
        steps.append(f"binarized at {args.binarize_threshold}")
    if not m.is_complete:
        m = impute_missing(m)
        steps.append("imputed missing cells with model means")
    return m, steps


def _read_series_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    xs, ys = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if len(row) < 2:
                continue
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                continue  # header row
            xs.append(x)
            ys.append(y)
    if len(xs) < 2:
        raise MatrixValidationError(f"{path}: expected two numeric columns")
    return np.asarray(xs), np.asarray(ys)


def cmd_ed(args) -> int:
    m, steps = _load_preprocessed(args)
    report = build_ed_report(
        m,
        seed=args.seed,
        bootstrap_iterations=args.bootstrap_iters,
        scheme=args.centering,
    )
    result = report.to_dict()
    result["kind"] = m.kind
    result["centering"] = args.centering
    result["preprocessing"] = steps
    _emit(
        _envelope("ed", args.seed, {"matrix": _digest(args.matrix)}, result),
        args.out,
    )
    _note(
        f"ED {report.ed:.3f} (null {report.ed_null:.1f}, ratio {report.ratio:.3f}) "
        f"on {m.n_tasks}x{m.n_models} {m.kind} matrix"
    )
    return 0


def cmd_corr(args) -> int:
    s = load_suite(args.suite)
    c = pairwise_correlation(s.benchmark_table(), ids=s.benchmark_ids, method=args.method)
    flags = redundancy_flags(c, hi=args.redundant, vet=args.vet, comp=args.complementary)
    result = {
        "ids": list(c.ids),
        "method": c.method,
        "values": [[None if not np.isfinite(v) else v for v in row] for row in c.values],
        "degenerate_ids": list(c.degenerate_ids),
        "redundant_pairs": [list(p) for p in flags.redundant],
        "complementary_pairs": [list(p) for p in flags.complementary],
    }
    if args.csv:
        save_corr_csv(c, args.csv)
    _emit(_envelope("corr", args.seed, {"suite": _digest(args.suite)}, result), args.out)
    _note(f"{len(c.ids)}x{len(c.ids)} {c.method} correlation matrix")
    return 0


def cmd_ceiling(args) -> int:
    if not -1.0 < args.rho <= 1.0:
        raise MatrixValidationError("--rho must lie in (-1, 1]")
    value = composite_ceiling(args.rho)
    probe = ceiling_oracle(args.rho, grid=args.grid)
    result = {
        "rho": args.rho,
        "ceiling": value,
        "oracle_value": probe.value,
        "oracle_t_star": probe.t_star,
        "note": (
            "exact for the Pearson correlation of standardized scores; "
            "approximate when rho is a rank correlation"
        ),
    }
    _emit(_envelope("ceiling", args.seed, {}, result), args.out)
    _note(f"ceiling({args.rho}) = {value:.4f}")
    return 0


def cmd_select(args) -> int:
    m, steps = _load_preprocessed(args)
    if args.method == "ed_greedy":
        res = ed_greedy(m, args.k)
    else:
        res = baseline_select(m, args.k, args.method, seed=args.seed)
    result = res.to_dict()
    result["preprocessing"] = steps
    _emit(_envelope("select", args.seed, {"matrix": _digest(args.matrix)}, result), args.out)
    _note(
        f"{args.method} selected {len(res.selected)} tasks; final ED "
        f"{res.ed_trajectory[-1]:.3f}, tau vs full {res.tau_vs_full:.3f}"
    )
    return 0


def cmd_compress(args) -> int:
    m, steps = _load_preprocessed(args)
    curve = compression_curve(
        m, tau_target=args.tau_target, trials=args.trials, seed=args.seed
    )
    result = {
        "tau_target": curve.tau_target,
        "fraction_needed": curve.fraction_needed,
        "reached": curve.reached,
        "curve": [[f, t] for f, t in curve.curve],
        "preprocessing": steps,
    }
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["fraction", "mean_tau"])
            writer.writerows(curve.curve)
    _emit(_envelope("compress", args.seed, {"matrix": _digest(args.matrix)}, result), args.out)
    _note(
        f"fraction needed for tau >= {curve.tau_target}: "
        f"{curve.fraction_needed if curve.reached else 'unreached'}"
    )
    return 0


def cmd_saturate(args) -> int:
    n, ed = _read_series_csv(args.points)
    fit = saturation_fit(np.column_stack([n, ed]))
    result = {
        "ed_inf": fit.ed_inf,
        "n_half": fit.n_half,
        "rss": fit.rss,
        "boundary": fit.boundary,
        "points": int(n.size),
    }
    _emit(_envelope("saturate", args.seed, {"points": _digest(args.points)}, result), args.out)
    _note(f"ED_inf {fit.ed_inf:.2f}, half-saturation at n {fit.n_half:.1f}")
    return 0


def cmd_trend(args) -> int:
    x, ed = _read_series_csv(args.series)
    if ed.size < 4:
        raise MatrixValidationError("trend test needs at least four series points")
    mk = mann_kendall(ed)
    from .temporal import EdSeries

    tid = temporal_information_density(EdSeries(x=tuple(x), ed=tuple(ed)))
    result = {"tau": mk.tau, "p": mk.p, "s": mk.s, "tid_slope": tid, "points": int(x.size)}
    _emit(_envelope("trend", args.seed, {"series": _digest(args.series)}, result), args.out)
    _note(f"Mann-Kendall tau {mk.tau:.3f} (p {mk.p:.4f}), TID slope {tid:.5f}")
    return 0


def cmd_synth(args) -> int:
    try:
        spec = IrtSpec(
            k=args.k,
            tasks=args.tasks,
            models=args.models,
            discrimination_scale=args.scale,
            difficulty_spread=args.difficulty_spread,
            loading_orientation=args.orientation,
            seed=args.seed,
        )
    except ValueError as exc:
        raise MatrixValidationError(str(exc)) from exc
    m = gen_irt_matrix(spec)
    save_matrix(m, args.out_matrix)
    result = {
        "k": spec.k,
        "tasks": spec.tasks,
        "models": spec.models,
        "discrimination_scale": spec.discrimination_scale,
        "difficulty_spread": spec.difficulty_spread,
        "loading_orientation": spec.loading_orientation,
        "written": args.out_matrix,
        "output_digest": _digest(args.out_matrix)["sha256"],
    }
    _emit(_envelope("synth", args.seed, {}, result), args.out)
    _note(f"wrote {spec.tasks}x{spec.models} k={spec.k} matrix to {args.out_matrix}")
    return 0


def cmd_suite(args) -> int:
    s = load_suite(args.suite)
    ed = suite_ed(s)
    loo = leave_one_out(s)
    result = {
        "benchmarks": list(s.benchmark_ids),
        "models": s.n_models,
        "ed": ed,
        "information_density": information_density(ed, s.n_benchmarks),
        "leave_one_out": {
            b: {"delta_ed": rec.delta_ed, "tau_vs_full": rec.tau_vs_full}
            for b, rec in loo.items()
        },
    }
    if args.samples > 0:
        frag = dirichlet_fragility(s, alpha=args.alpha, samples=args.samples, seed=args.seed)
        result["fragility"] = {
            "alpha": frag.alpha,
            "samples": frag.samples,
            "champion_change_rate": frag.champion_change_rate,
            "distinct_champions": frag.distinct_champions,
            "equal_weight_champion": frag.equal_weight_champion,
        }
    _emit(_envelope("suite", args.seed, {"suite": _digest(args.suite)}, result), args.out)
    _note(f"suite ED {ed:.3f} over {s.n_benchmarks} benchmarks ({s.n_models} models)")
    return 0


def _workflow_step1(s, thresholds):
    c = pairwise_correlation(s.benchmark_table(), ids=s.benchmark_ids, method="spearman")
    flags = redundancy_flags(
        c,
        hi=thresholds["redundant"],
        vet=thresholds["vet"],
        comp=thresholds["complementary"],
    )
    return {
        "status": "ok",
        "redundant_pairs": [list(p) for p in flags.redundant],
        "vet_fail_pairs": [list(p) for p in flags.vet_fail],
        "complementary_pairs": [list(p) for p in flags.complementary],
    }


def _workflow_step2(s, thresholds):
    ed = suite_ed(s)
    idv = information_density(ed, s.n_benchmarks)
    verdict = (
        "effectively one-dimensional; adding benchmarks is the priority"
        if ed < thresholds["ed_floor"]
        else "multi-dimensional"
    )
    return {"status": "ok", "ed": ed, "information_density": idv, "verdict": verdict}


def _workflow_step3(series_path, thresholds):
    x, ed = _read_series_csv(series_path)
    mk = mann_kendall(ed)
    declining = mk.tau < 0.0 and mk.p < thresholds["trend_alpha"]
    verdict = (
        "sustained decline: population may be homogenizing"
        if declining
        else "no significant decline"
    )
    return {
        "status": "ok",
        "tau": mk.tau,
        "p": mk.p,
        "declining": declining,
        "verdict": verdict,
    }


def _workflow_step4(s, candidates, thresholds):
    from scipy.stats import rankdata

    shared = [m for m in candidates.model_ids if m in set(s.model_ids)]
    if len(shared) < 3:
        raise MatrixValidationError(
            "candidates share fewer than three models with the suite"
        )
    suite_rows = s.subset_models(shared).benchmark_table()
    cand_rows = candidates.subset_models(shared).benchmark_table()
    per_candidate = {}
    for name, row in zip(candidates.benchmark_ids, cand_rows):
        rhos = {}
        for bench, srow in zip(s.benchmark_ids, suite_rows):
            if np.all(row == row[0]) or np.all(srow == srow[0]):
                continue
            rhos[bench] = float(
                np.corrcoef(rankdata(row), rankdata(srow))[0, 1]
            )
        max_bench = max(rhos, key=rhos.get) if rhos else None
        max_rho = rhos[max_bench] if rhos else None
        per_candidate[name] = {
            "max_rho": max_rho,
            "against": max_bench,
            "passes_vet": bool(max_rho is not None and max_rho < thresholds["vet"]),
            "outright_redundant": bool(
                max_rho is not None and max_rho > thresholds["redundant"]
            ),
        }
    return {"status": "ok", "shared_models": len(shared), "candidates": per_candidate}


def cmd_workflow(args) -> int:
    thresholds = {
        "redundant": args.redundant,
        "vet": args.vet,
        "complementary": args.complementary,
        "ed_floor": args.ed_floor,
        "trend_alpha": args.trend_alpha,
    }
    inputs = {}
    s = None
    if args.suite:
        inputs["suite"] = _digest(args.suite)
        s = load_suite(args.suite)
    if s is not None:
        step1 = _workflow_step1(s, thresholds)
        step2 = _workflow_step2(s, thresholds)
    else:
        step1 = step2 = {"status": "skipped", "reason": "no suite provided"}
    if args.ed_series:
        inputs["ed_series"] = _digest(args.ed_series)
        step3 = _workflow_step3(args.ed_series, thresholds)
    else:
        step3 = {"status": "skipped", "reason": "no ED series provided"}
    if args.candidates and s is not None:
        inputs["candidates"] = _digest(args.candidates)
        step4 = _workflow_step4(
            s, load_suite(args.candidates, min_benchmarks=1), thresholds
        )
    else:
        step4 = {"status": "skipped", "reason": "no candidates provided"}
    result = {
        "thresholds": thresholds,
        "step1_redundancy": step1,
        "step2_suite_ed": step2,
        "step3_trend": step3,
        "step4_vet": step4,
    }
    _emit(_envelope("workflow", args.seed, inputs, result), args.out)
    for name, step in (
        ("1 redundancy", step1),
        ("2 suite ED", step2),
        ("3 trend", step3),
        ("4 vetting", step4),
    ):
        if step["status"] == "skipped":
            _note(f"step {name}: skipped ({step['reason']})")
        elif "verdict" in step:
            _note(f"step {name}: {step['verdict']}")
        elif "redundant_pairs" in step:
            _note(f"step {name}: {len(step['redundant_pairs'])} redundant pair(s)")
        else:
            _note(f"step {name}: ok")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectradiag",
        description="Spectral redundancy diagnostics for benchmark score matrices",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="also write the JSON report to this file")
        p.add_argument(
            "--threads",
            type=int,
            default=None,
            help=f"worker cap (or env {THREADS_ENV_VAR}); never affects results",
        )

    def matrix_args(p):
        p.add_argument("--matrix", required=True, help="score matrix file")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--binarize-threshold", type=float, default=0.5)
        p.add_argument(
            "--no-binarize",
            action="store_true",
            help="analyze continuous scores directly",
        )

    p = sub.add_parser("ed", help="effective dimensionality report")
    matrix_args(p)
    p.add_argument("--centering", choices=CENTERING_SCHEMES, default="task")
    p.add_argument("--bootstrap-iters", type=int, default=1000)
    common(p)
    p.set_defaults(func=cmd_ed)

    p = sub.add_parser("corr", help="pairwise benchmark correlations")
    p.add_argument("--suite", required=True)
    p.add_argument(
        "--method", choices=("pearson", "spearman", "kendall"), default="spearman"
    )
    p.add_argument("--redundant", type=float, default=0.9)
    p.add_argument("--vet", type=float, default=0.7)
    p.add_argument("--complementary", type=float, default=-0.3)
    p.add_argument("--csv", help="write the square correlation CSV here")
    common(p)
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("ceiling", help="two-benchmark composite correlation ceiling")
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--grid", type=int, default=10_001)
    common(p)
    p.set_defaults(func=cmd_ceiling)

    p = sub.add_parser("workflow", help="four-step maintainer diagnostic")
    p.add_argument("--suite")
    p.add_argument("--ed-series", help="CSV of x,ed points for the trend step")
    p.add_argument("--candidates", help="suite-layout CSV of candidate benchmarks")
    p.add_argument("--redundant", type=float, default=0.9)
    p.add_argument("--vet", type=float, default=0.7)
    p.add_argument("--complementary", type=float, default=-0.3)
    p.add_argument("--ed-floor", type=float, default=2.0)
    p.add_argument("--trend-alpha", type=float, default=0.05)
    common(p)
    p.set_defaults(func=cmd_workflow)

    p = sub.add_parser("select", help="task selection")
    matrix_args(p)
    p.add_argument("--method", choices=SELECTION_METHODS, default="ed_greedy")
    p.add_argument("--k", type=int, required=True)
    common(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("compress", help="random-subset compression curve")
    matrix_args(p)
    p.add_argument("--tau-target", type=float, default=0.95)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--csv", help="write fraction,mean_tau plot data here")
    common(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("saturate", help="fit the hyperbolic saturation model")
    p.add_argument("--points", required=True, help="CSV of n,ed points")
    common(p)
    p.set_defaults(func=cmd_saturate)

    p = sub.add_parser("trend", help="Mann-Kendall trend on an ED series")
    p.add_argument("--series", required=True, help="CSV of x,ed points")
    common(p)
    p.set_defaults(func=cmd_trend)

    p = sub.add_parser("synth", help="generate a synthetic 2PL matrix")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--tasks", type=int, default=500)
    p.add_argument("--models", type=int, default=100)
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--difficulty-spread", type=float, default=1.0)
    p.add_argument("--orientation", choices=LOADING_ORIENTATIONS, default="sphere")
    p.add_argument("--out-matrix", required=True, help="CSV path for the matrix")
    common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("suite", help="suite-level ED, density, leave-one-out")
    p.add_argument("--suite", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument(
        "--samples", type=int, default=0, help="Dirichlet fragility samples (0 = skip)"
    )
    common(p)
    p.set_defaults(func=cmd_suite)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _resolve_threads(args.threads)
        return args.func(args)
    except (MatrixValidationError, OSError, json.JSONDecodeError) as exc:
        _note(f"input error: {exc}")
        return 2
    except ValueError as exc:
        _note(f"analysis rejected: {exc}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
