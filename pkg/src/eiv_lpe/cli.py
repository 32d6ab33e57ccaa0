"""Command line front end: generate datasets, estimate, bench, report.

Exit codes: 0 on success, 2 on configuration errors, 3 when every cell of a
bench run fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .bench import BenchConfig, BenchReport, rows_from_csv, run_bench, write_report
from .estimators import EstimatorError, estimate, tls_estimate
from .io import (
    ConfigError,
    estimator_from_dict,
    load_bench_config,
    noise_to_dict,
    read_records_csv,
    scenario_to_dict,
    write_records_csv,
)
from .line_model import admittance_to_params, build_regression
from .noise import apply_noise
from .scenario import Scenario, generate_true_records, stock_lines, LoadRampProfile
from .io import noise_from_dict

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILED = 3


def _jobs_default() -> int:
    env = os.environ.get("EIV_LPE_JOBS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _scenarios_from_args(args) -> list[Scenario]:
    if args.config:
        cfg = load_bench_config(args.config)
        return cfg["scenarios"]
    noise = noise_from_dict({"type": "gaussian", "mu": 0.0, "sigma": 0.005})
    return [
        Scenario(label, line, LoadRampProfile(), noise, seed=args.seed)
        for label, line in stock_lines().items()
    ]


def cmd_generate(args) -> int:
    """Write clean and noisy PMU CSVs plus a manifest for each scenario."""
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scenarios = _scenarios_from_args(args)
    manifest = {"schema": 1, "scenarios": []}
    for sc in scenarios:
        seed = args.seed if args.seed is not None else sc.seed
        clean = generate_true_records(sc)
        clean_path = out / f"{sc.label}_clean.csv"
        write_records_csv(clean, clean_path)
        entry = scenario_to_dict(sc)
        entry["seed"] = seed
        entry["files"] = {"clean": clean_path.name}
        if sc.noise is not None:
            noisy = apply_noise(clean, sc.noise, seed)
            noisy_path = out / f"{sc.label}_noisy.csv"
            write_records_csv(noisy, noisy_path)
            entry["files"]["noisy"] = noisy_path.name
        manifest["scenarios"].append(entry)
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
    print(f"wrote {len(scenarios)} scenario(s) to {out}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    """Run one estimator on a PMU CSV and write result + trace CSVs.

    Iterative methods start from the TLS solution; with unknown true
    parameters there is no better generic warm start.
    """
    records = read_records_csv(args.data)
    with open(args.config) as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict) or "method" not in raw:
        raise ConfigError("estimator config must be an object with a 'method' key")
    config = estimator_from_dict(raw)
    constrained = config.method in ("cmtc", "egle")
    problem = build_regression(records, with_constraint=constrained)
    if config.method != "tls" and config.w0 is None:
        config = replace(config, w0=tls_estimate(problem).w)
    result = estimate(problem, config)
    params = admittance_to_params(result.w)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.data).stem
    with open(out / f"{stem}_{config.method}_result.csv", "w") as fh:
        fh.write("method,r_hat,x_hat,b_hat,w1,w2,w3,w4,iterations,converged,elapsed\n")
        w = result.w
        fh.write(
            f"{config.method},{params.r:.12g},{params.x:.12g},{params.b:.12g},"
            f"{w[0]:.12g},{w[1]:.12g},{w[2]:.12g},{w[3]:.12g},"
            f"{result.iterations},{int(result.converged)},{result.elapsed:.6g}\n"
        )
    with open(out / f"{stem}_{config.method}_trace.csv", "w") as fh:
        fh.write("iteration,w1,w2,w3,w4,objective\n")
        for i, (w, obj) in enumerate(result.trace):
            fh.write(f"{i},{w[0]:.12g},{w[1]:.12g},{w[2]:.12g},{w[3]:.12g},{obj:.12g}\n")
    print(
        f"{config.method}: r={params.r:.6g} x={params.x:.6g} b={params.b:.6g} "
        f"({result.iterations} iterations, {'converged' if result.converged else 'cap hit'})"
    )
    return EXIT_OK


def cmd_bench(args) -> int:
    """Run the configured scenario x estimator x seed grid."""
    cfg = load_bench_config(args.config)
    out = args.out or cfg["output_dir"] or "bench_out"
    seeds = [args.seed] if args.seed is not None else cfg["seeds"]
    bench = BenchConfig(
        scenarios=cfg["scenarios"],
        estimators=cfg["estimators"],
        seeds=seeds,
        output_dir=Path(out),
        jobs=args.jobs,
        plots=not args.no_plots,
    )
    report = run_bench(bench)
    total = len(report.rows)
    print(f"{total - report.failures}/{total} cells succeeded; report in {out}")
    if report.failures == total:
        return EXIT_FAILED
    return EXIT_OK


def cmd_report(args) -> int:
    """Rebuild summary and tables from an existing runs.csv."""
    cfg = load_bench_config(args.config)
    out = Path(args.out or cfg["output_dir"] or "bench_out")
    runs = out / "runs.csv"
    if not runs.exists():
        raise ConfigError(f"no runs.csv under {out}; run bench first")
    rows = rows_from_csv(runs)
    report = BenchReport(rows, failures=sum(1 for r in rows if r.error))
    bench = BenchConfig(
        scenarios=cfg["scenarios"],
        estimators=cfg["estimators"],
        seeds=sorted({r.seed for r in rows}),
        output_dir=out,
        plots=False,
    )
    write_report(report, bench)
    print(f"report rebuilt in {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eiv-lpe",
        description="EIV line parameter estimation benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write clean/noisy PMU CSV datasets")
    gen.add_argument("--config", help="bench config JSON (defaults to stock scenarios)")
    gen.add_argument("--out", default="datasets", help="output directory")
    gen.add_argument("--seed", type=int, default=None, help="noise seed override")
    gen.set_defaults(func=cmd_generate)

    est = sub.add_parser("estimate", help="run one estimator on a PMU CSV")
    est.add_argument("data", help="PMU CSV path")
    est.add_argument("--config", required=True, help="estimator config JSON")
    est.add_argument("--out", default="estimates", help="output directory")
    est.set_defaults(func=cmd_estimate)

    ben = sub.add_parser("bench", help="run the full benchmark grid")
    ben.add_argument("--config", required=True, help="bench config JSON")
    ben.add_argument("--out", default=None, help="output directory override")
    ben.add_argument("--seed", type=int, default=None, help="single-seed override")
    ben.add_argument("--jobs", type=int, default=_jobs_default(),
                     help="worker processes (or EIV_LPE_JOBS)")
    ben.add_argument("--no-plots", action="store_true", help="skip SVG plots")
    ben.set_defaults(func=cmd_bench)

    rep = sub.add_parser("report", help="rebuild tables from a previous bench run")
    rep.add_argument("--config", required=True, help="bench config JSON")
    rep.add_argument("--out", default=None, help="bench output directory")
    rep.set_defaults(func=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EstimatorError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
