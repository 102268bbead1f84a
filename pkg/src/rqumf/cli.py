"""Command-line driver: generate / fit / bench / tune / eval subcommands.

Every command is a pure function of its flags, input files, and seed; with
``--no-timestamp`` repeated invocations produce byte-identical outputs.
Config precedence: flags > --config JSON file > built-in defaults.
Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ._parallel import parallel_map
from .experiments import (
    DEFAULT_BASELINE_LAMBDA,
    DEFAULT_PARAMS,
    SCENARIOS,
    ExperimentConfig,
    RunRecord,
    run_cell,
    run_fit,
    summarize_cell,
)
from .geometry import ModelKind, PointSet, SyntheticConfig, generate_pentagon, sample_hypotheses
from .metrics import misclassification
from .pipeline import BaselineConfig, DecomposeConfig
from .preference import ConsensusConfig, ParseError, build_preference, load_preference
from .qubo import QuboParams
from .solvers import SaConfig
from .solvers._common import mix_seed
from .tuning import TuneConfig, TuneSpace, tune

USAGE_ERROR = 2
RUNTIME_ERROR = 1


def _float_fmt(value) -> str:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return repr(float(value))


def _write_csv(path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, float):
                cells.append(_float_fmt(v))
            elif v is None:
                cells.append("")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> argparse.Namespace:
    """Apply --config JSON under explicit flags."""
    if not getattr(args, "config", None):
        return args
    with open(args.config) as fh:
        overrides = json.load(fh)
    defaults = {a.dest: a.default for a in parser._actions}
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if dest not in defaults:
            raise ValueError(f"unknown config key {key!r}")
        if getattr(args, dest) == defaults[dest]:  # flag not given explicitly
            setattr(args, dest, value)
    return args


def _experiment_config(args) -> ExperimentConfig:
    sa = SaConfig(num_samples=args.sa_samples, sweeps_per_sample=args.sa_sweeps, seed=0)
    return ExperimentConfig(
        scenario=args.scenario,
        methods=tuple(args.method.split(",")),
        solver=args.solver,
        repeats=args.repeats,
        seed=args.seed,
        total_points=args.points_count,
        outlier_fraction=args.outlier_fraction,
        noise_sigma=args.noise_sigma,
        n_structures=args.structures,
        epsilon=args.epsilon,
        num_models=args.num_models if args.num_models is not None else 40,
        models_per_point=args.models_per_point,
        inject_gt=not args.no_inject_gt,
        params=QuboParams(args.lambda1, args.lambda2),
        sa=sa,
        decompose=DecomposeConfig(subproblem_size=args.subproblem_size),
        baseline=BaselineConfig(lam=args.baseline_lambda, top_k=args.top_k),
        model_grid=tuple(int(v) for v in args.models.split(",")) if args.models else (20, 50, 100, 500, 1000),
        outlier_grid=tuple(float(v) for v in args.outliers.split(",")) if args.outliers else (0.0, 1 / 6, 1 / 3, 0.5),
        dedup=not args.no_dedup,
    )


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file with flag defaults")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit wall-clock fields so outputs are byte-reproducible")


def _add_problem_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--points-count", type=int, default=30, help="synthetic data size")
    p.add_argument("--outlier-fraction", type=float, default=1.0 / 6.0)
    p.add_argument("--noise-sigma", type=float, default=0.01)
    p.add_argument("--structures", type=int, default=5)
    p.add_argument("--epsilon", type=float, default=None,
                   help="inlier threshold (default 3 * noise sigma)")
    p.add_argument("--num-models", type=int, default=None,
                   help="hypothesis pool size (default: models-per-point * points for "
                        "file inputs, 40 for synthetic sweeps)")
    p.add_argument("--models-per-point", type=float, default=6.0)
    p.add_argument("--no-inject-gt", action="store_true")


def _add_fit_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", default="RQuMF")
    p.add_argument("--solver", default="SA", choices=["SA", "Exhaustive"])
    p.add_argument("--lambda1", type=float, default=DEFAULT_PARAMS.lambda1)
    p.add_argument("--lambda2", type=float, default=DEFAULT_PARAMS.lambda2)
    p.add_argument("--baseline-lambda", type=float, default=DEFAULT_BASELINE_LAMBDA)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--subproblem-size", type=int, default=40)
    p.add_argument("--sa-samples", type=int, default=100)
    p.add_argument("--sa-sweeps", type=int, default=1000)
    p.add_argument("--no-dedup", action="store_true",
                   help="keep duplicate preference columns when solving")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rqumf",
                                     description="Outlier-robust multi-model fitting via coverage QUBOs")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic polygon point set")
    _add_common(g)
    _add_problem_flags(g)
    g.add_argument("--out", required=True, help="points CSV path")
    g.add_argument("--models-out", help="ground-truth models JSON path")

    f = sub.add_parser("fit", help="fit models to points or a preference matrix")
    _add_common(f)
    _add_problem_flags(f)
    _add_fit_flags(f)
    f.add_argument("--points", help="input points CSV")
    f.add_argument("--preference", help="input preference CSV")
    f.add_argument("--model-kind", default="line", choices=["line", "plane"])
    f.add_argument("--out", required=True, help="fit result JSON path")
    f.set_defaults(scenario="PentagonSweepModels", repeats=1, models=None, outliers=None)

    b = sub.add_parser("bench", help="run an experiment grid")
    _add_common(b)
    _add_problem_flags(b)
    _add_fit_flags(b)
    b.add_argument("--scenario", default="PentagonSweepModels", choices=list(SCENARIOS))
    b.add_argument("--models", help="comma list of pool sizes for the model sweep")
    b.add_argument("--outliers", help="comma list of outlier fractions for the outlier sweep")
    b.add_argument("--repeats", type=int, default=20)
    b.add_argument("--points", help="points CSV (PlaneFit3D)")
    b.add_argument("--preference", help="preference CSV (IngestedPreference)")
    b.add_argument("--out-dir", required=True)

    t = sub.add_parser("tune", help="search coverage weights on a synthetic battery")
    _add_common(t)
    _add_problem_flags(t)
    _add_fit_flags(t)
    t.add_argument("--trials", type=int, default=100)
    t.add_argument("--startup", type=int, default=20)
    t.add_argument("--battery-size", type=int, default=4, help="instances per objective evaluation")
    t.add_argument("--repeats", type=int, default=3, help="runs per battery instance")
    t.add_argument("--lambda1-range", default="0.01,10")
    t.add_argument("--lambda2-range", default="0.01,10")
    t.add_argument("--out", required=True, help="trial history CSV path")
    t.set_defaults(scenario="PentagonSweepModels", models=None, outliers=None)

    e = sub.add_parser("eval", help="score a fit result against ground truth")
    _add_common(e)
    e.add_argument("--gt", required=True, help="points CSV with label column")
    e.add_argument("--result", required=True, help="fit result JSON")
    e.add_argument("--out", help="report JSON path (default: print)")
    e.add_argument("--free-outlier-label", action="store_true",
                   help="let label 0 participate in the matching")

    for p in (g, f, b, t, e):
        p.set_defaults(_parser=p)
    return parser


def cmd_generate(args) -> int:
    cfg = SyntheticConfig(
        total_points=args.points_count,
        outlier_fraction=args.outlier_fraction,
        noise_sigma=args.noise_sigma,
        n_structures=args.structures,
        seed=args.seed,
    )
    points, models = generate_pentagon(cfg)
    points.save_csv(args.out)
    if args.models_out:
        doc = [{"kind": m.kind.value, "params": m.params.tolist()} for m in models]
        Path(args.models_out).write_text(json.dumps(doc, sort_keys=True) + "\n")
    print(f"wrote {len(points)} points to {args.out}")
    return 0


def _fit_inputs(args):
    """Resolve (matrix, points, models) from --points or --preference."""
    if bool(args.points) == bool(args.preference):
        raise ValueError("provide exactly one of --points or --preference")
    if args.preference:
        return load_preference(args.preference), None, None
    points = PointSet.load_csv(args.points)
    kind = ModelKind.LINE2D if args.model_kind == "line" else ModelKind.PLANE3D
    m = args.num_models if args.num_models is not None else int(round(args.models_per_point * len(points)))
    epsilon = args.epsilon if args.epsilon is not None else 3.0 * args.noise_sigma
    models = sample_hypotheses(points, kind, m, seed=mix_seed(args.seed, "hyp"))
    matrix = build_preference(points, models, ConsensusConfig(epsilon=epsilon))
    return matrix, points, models


def cmd_fit(args) -> int:
    matrix, points, models = _fit_inputs(args)
    cfg = _experiment_config(args)
    result = run_fit(matrix, args.method, cfg, mix_seed(args.seed, "solver", args.method),
                     points=points, models=models, true_k=args.top_k or args.structures)
    doc = result.to_json(include_timing=not args.no_timestamp)
    if matrix.column_ids != tuple(range(matrix.m)):
        doc["selected_ids"] = [matrix.column_ids[j] for j in result.selected]
    Path(args.out).write_text(json.dumps(doc, sort_keys=True) + "\n")
    print(f"{args.method}: {len(result.selected)} models, energy {result.energy:.6g}, "
          f"penalty {result.penalty:.6g}")
    return 0


RUNS_HEADER = ["scenario", "setting", "method", "run", "seed", "e_mis", "selected", "energy", "penalty"]


def _records_rows(records: list[RunRecord], with_time: bool) -> list[list]:
    rows = []
    for r in records:
        row = [r.scenario, r.setting, r.method, r.run, r.seed, r.e_mis, r.selected_count,
               r.energy, r.penalty]
        if with_time:
            row.append(r.wall_time)
        rows.append(row)
    return rows


def cmd_bench(args) -> int:
    cfg = _experiment_config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    all_records: list[RunRecord] = []
    summaries: list[dict] = []

    if cfg.scenario == "PentagonSweepModels":
        cells = [(float(m), {"num_models": m}) for m in cfg.model_grid]
    elif cfg.scenario == "PentagonSweepOutliers":
        cells = [(frac, {"outlier_fraction": frac}) for frac in cfg.outlier_grid]
    elif cfg.scenario == "IngestedPreference":
        if not args.preference:
            raise ValueError("IngestedPreference needs --preference")
        cells = [(0.0, {"preference_path": args.preference})]
    else:  # PlaneFit3D
        if not args.points:
            raise ValueError("PlaneFit3D needs --points")
        cells = [(float(cfg.num_models), {"points_path": args.points})]

    def run_one(cell_spec):
        setting, kw, method = cell_spec
        if "preference_path" in kw:
            return _run_ingested_cell(cfg, args.preference, method)
        if "points_path" in kw:
            return _run_plane_cell(cfg, args.points, method, args)
        return run_cell(cfg, setting=setting, method=method, **kw)

    specs = [(setting, kw, method) for setting, kw in cells for method in cfg.methods]
    for records in parallel_map(run_one, specs):  # RQUMF_THREADS caps workers
        all_records.extend(records)
        summaries.append(summarize_cell(records))

    with_time = not args.no_timestamp
    header = RUNS_HEADER + (["wall_time"] if with_time else [])
    _write_csv(out_dir / "runs.csv", header, _records_rows(all_records, with_time))
    _write_csv(
        out_dir / "summary.csv",
        ["scenario", "setting", "method", "repeats", "mean_emis", "median_emis", "std_emis", "mean_selected"],
        [[s["scenario"], s["setting"], s["method"], s["repeats"], s["mean_emis"],
          s["median_emis"], s["std_emis"], s["mean_selected"]] for s in summaries],
    )
    for s in summaries:
        mean = "" if s["mean_emis"] is None or math.isnan(s["mean_emis"]) else f"{s['mean_emis']:.2f}"
        print(f"{s['scenario']} setting={s['setting']:g} {s['method']}: "
              f"mean_emis={mean} mean_selected={s['mean_selected']:.2f}")
    return 0


def _run_ingested_cell(cfg: ExperimentConfig, path: str, method: str) -> list[RunRecord]:
    matrix = load_preference(path)
    records = []
    for run in range(cfg.repeats):
        seed = mix_seed(cfg.seed, "ingested", run)
        result = run_fit(matrix, method, cfg, seed, true_k=cfg.n_structures)
        records.append(RunRecord(scenario=cfg.scenario, setting=0.0, method=method, run=run,
                                 seed=seed, e_mis=math.nan, selected_count=len(result.selected),
                                 energy=result.energy, penalty=result.penalty,
                                 wall_time=result.diagnostics.get("wall_time", 0.0)))
    return records


def _run_plane_cell(cfg: ExperimentConfig, path: str, method: str, args) -> list[RunRecord]:
    points = PointSet.load_csv(path)
    epsilon = args.epsilon if args.epsilon is not None else 0.5
    m = args.num_models if args.num_models is not None else int(round(cfg.models_per_point * len(points)))
    records = []
    for run in range(cfg.repeats):
        seed = mix_seed(cfg.seed, "plane", run)
        models = sample_hypotheses(points, ModelKind.PLANE3D, m, seed=mix_seed(seed, "hyp"))
        matrix = build_preference(points, models, ConsensusConfig(epsilon=epsilon))
        result = run_fit(matrix, method, cfg, mix_seed(seed, "solver", method),
                         points=points, models=models, true_k=cfg.n_structures)
        e_mis = math.nan
        if points.gt_labels is not None:
            e_mis = misclassification(points.gt_labels, result.labels).e_mis
        records.append(RunRecord(scenario=cfg.scenario, setting=float(m), method=method, run=run,
                                 seed=seed, e_mis=e_mis, selected_count=len(result.selected),
                                 energy=result.energy, penalty=result.penalty,
                                 wall_time=result.diagnostics.get("wall_time", 0.0)))
    return records


def cmd_tune(args) -> int:
    lo1, hi1 = (float(v) for v in args.lambda1_range.split(","))
    lo2, hi2 = (float(v) for v in args.lambda2_range.split(","))
    space = TuneSpace(lambda1_range=(lo1, hi1), lambda2_range=(lo2, hi2))
    tune_cfg = TuneConfig(n_trials=args.trials, n_startup=min(args.startup, args.trials), seed=args.seed)
    base = _experiment_config(args)

    def objective(lambda1: float, lambda2: float) -> float:
        cfg = replace(base, params=QuboParams(lambda1, lambda2))
        values = []
        for i in range(args.battery_size):
            frac = (1 / 6, 1 / 3)[i % 2]
            records = run_cell(cfg, setting=float(i), method="RQuMF",
                               num_models=cfg.num_models, outlier_fraction=frac)
            values.extend(r.e_mis for r in records)
        return float(np.mean(values))

    (best1, best2), history = tune(space, tune_cfg, objective)
    _write_csv(args.out, ["trial", "lambda1", "lambda2", "objective", "seed"],
               [[t.trial, t.lambda1, t.lambda2, t.objective, args.seed] for t in history])
    print(f"best lambda1={best1:.6g} lambda2={best2:.6g} "
          f"objective={min(t.objective for t in history):.6g}")
    return 0


def cmd_eval(args) -> int:
    points = PointSet.load_csv(args.gt)
    if points.gt_labels is None:
        raise ValueError(f"{args.gt}: no label column")
    with open(args.result) as fh:
        doc = json.load(fh)
    est = np.asarray(doc["labels"], dtype=int)
    report = misclassification(points.gt_labels, est, pin_outlier=not args.free_outlier_label)
    payload = json.dumps(report.to_json(), sort_keys=True)
    if args.out:
        Path(args.out).write_text(payload + "\n")
    print(payload)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "bench": cmd_bench,
    "tune": cmd_tune,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args, args._parser)
        return COMMANDS[args.command](args)
    except (ValueError, ParseError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except Exception as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    sys.exit(main())
