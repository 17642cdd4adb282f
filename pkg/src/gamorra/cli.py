"""Command line entry point.

Subcommands cover the full workflow: ``simulate`` renders a synthetic
trace with ground-truth timings, ``bench`` characterizes a device into a
stage-performance file, ``fit`` trains offline weights, ``run`` replays
one estimator over a trace, and ``compare`` scores every model side by
side and renders the report figures.

Exit codes: 0 on success, 2 for usage or malformed-input errors, 3 when
a fit is requested with fewer samples than model dimensions.  Set
GAMORRA_LOG to one of error/warn/info/debug to control diagnostics on
stderr; progress output stays on stdout.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .bench import DEFAULT_CAP_MS, BenchmarkError, run_suite
from .configio import ConfigError
from .experiment import MODEL_NAMES, compare_models, fit_offline
from .figures import render_error_summary, render_frametimes, render_perf_model
from .ilasm import IlError, MissingOpcodeCost
from .metrics import ModelResult, emit_report
from .mlr import InsufficientData, load_weights, save_weights
from .perf import PerfModelError, load_perf_model, save_perf_model
from .scenario import (
    load_scenario,
    generate_sequence,
    read_actuals,
    read_frequency,
    write_actuals,
    write_frequency,
)
from .simulator import load_profile
from .trace import TraceFormatError, load_trace, save_trace
from .trainer import load_train_config, run_hybrid, save_train_report, write_run_log, TrainConfig

log = logging.getLogger(__name__)

_LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING,
               "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    name = os.environ.get("GAMORRA_LOG", "warn").strip().lower()
    if name not in _LOG_LEVELS:
        raise ConfigError(f"GAMORRA_LOG must be one of {sorted(_LOG_LEVELS)}, got {name!r}")
    logging.basicConfig(level=_LOG_LEVELS[name], stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _say(msg: str) -> None:
    print(msg)


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    profile = load_profile(args.profile)
    seq, actuals, freqs = generate_sequence(profile, scenario)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_trace(seq, out / "trace.jsonl", out / "shaders")
    write_actuals(out / "actuals.csv", actuals, seq.frames)
    if profile.frequency_schedule.get("kind", "constant") != "constant":
        write_frequency(out / "frequency.csv", freqs, seq.frames)
        _say(f"wrote {out / 'frequency.csv'}")
    _say(f"wrote {out / 'trace.jsonl'} ({len(seq.frames)} frames)")
    _say(f"wrote {out / 'actuals.csv'}")
    _say(f"wrote {out / 'shaders'}/ ({len(seq.shader_store)} shaders)")
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    profile = load_profile(args.profile)
    model = run_suite(profile, cap_ms=args.cap_ms, seed=args.seed,
                      include_cs=not args.no_cs)
    save_perf_model(model, args.out)
    _say(f"wrote {args.out}")
    if args.figures:
        fig = render_perf_model(model, Path(args.out).with_suffix(".png"))
        _say(f"wrote {fig}")
    return 0


def _load_train_config(args: argparse.Namespace) -> TrainConfig:
    config = load_train_config(args.config) if args.config else TrainConfig()
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, seed=args.seed)
    return config


def cmd_fit(args: argparse.Namespace) -> int:
    seq = load_trace(args.trace, args.shaders)
    actuals = read_actuals(args.actuals)
    model = load_perf_model(args.perf)
    config = _load_train_config(args)
    weights, report = fit_offline(seq, actuals, model, config)
    save_weights(weights, args.out)
    _say(f"wrote {args.out}")
    _say(f"train mae {report['train_mae_ms']:.4f} ms, test mae {report['test_mae_ms']:.4f} ms "
         f"({report['train_frames']} train / {report['test_frames']} test frames)")
    if args.report:
        save_train_report(report, args.report)
        _say(f"wrote {args.report}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    seq = load_trace(args.trace, args.shaders)
    actuals = read_actuals(args.actuals)
    model = load_perf_model(args.perf)
    weights = load_weights(args.weights)
    config = _load_train_config(args)
    runlog = run_hybrid(seq, actuals, model, weights, config,
                        measure_overhead=args.measure_overhead,
                        adapt=args.mode == "hybrid")
    write_run_log(runlog, args.out)
    _say(f"wrote {args.out} ({len(runlog.rows)} frames, mode {args.mode})")
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    seed = args.seed if args.seed is not None else 0
    freqs = None
    if args.scenario:
        if not args.profile:
            raise ConfigError("--scenario requires --profile")
        scenario = load_scenario(args.scenario)
        if args.seed is not None:
            scenario = dataclasses.replace(scenario, seed=args.seed)
        seed = scenario.seed
        profile = load_profile(args.profile)
        seq, actual_arr, freq_arr = generate_sequence(profile, scenario)
        actuals = {f.frame_index: float(t) for f, t in zip(seq.frames, actual_arr)}
        freqs = {f.frame_index: float(m) for f, m in zip(seq.frames, freq_arr)}
        scenario_name = args.scenario_name or scenario.name
        perf_model = load_perf_model(args.perf) if args.perf else run_suite(profile, seed=seed)
    else:
        if not (args.trace and args.actuals and args.perf):
            raise ConfigError("compare needs --trace, --actuals and --perf (or --scenario/--profile)")
        seq = load_trace(args.trace, args.shaders)
        actuals = read_actuals(args.actuals)
        perf_model = load_perf_model(args.perf)
        if args.frequency:
            freqs = read_frequency(args.frequency)
        scenario_name = args.scenario_name or Path(args.trace).stem

    config = _load_train_config(args)
    results, train_report = compare_models(
        seq, actuals, perf_model, config, models=models, freqs=freqs,
        scenario=scenario_name, seed=seed, measure_overhead=args.measure_overhead)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for result in results:
        write_run_log(result.log, out / f"log_{result.log.model}.csv")
    paths = emit_report(results, out)
    for path in paths:
        _say(f"wrote {path}")
    if train_report:
        save_train_report(train_report, out / "train_report.json")
    if not args.no_figures:
        _say(f"wrote {render_frametimes(results, out / 'frametimes.png')}")
        _say(f"wrote {render_error_summary(results, out / 'errors.png')}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gamorra",
        description="Trace-driven frame time estimation for raster pipelines.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic trace with ground-truth times")
    sim.add_argument("--scenario", required=True, help="scenario config (json/toml)")
    sim.add_argument("--profile", required=True, help="device profile json")
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim.add_argument("--out", required=True, help="output directory")
    sim.set_defaults(func=cmd_simulate)

    ben = sub.add_parser("bench", help="characterize a device into a stage-performance file")
    ben.add_argument("--profile", required=True, help="device profile json")
    ben.add_argument("--out", required=True, help="output perf model json")
    ben.add_argument("--cap-ms", type=float, default=DEFAULT_CAP_MS, help="sweep time cap in ms")
    ben.add_argument("--seed", type=int, default=0, help="measurement noise seed")
    ben.add_argument("--no-cs", action="store_true", help="skip the compute stage")
    ben.add_argument("--figures", action="store_true", help="also render the stage curves")
    ben.set_defaults(func=cmd_bench)

    fit = sub.add_parser("fit", help="train offline weights from a trace")
    fit.add_argument("--trace", required=True)
    fit.add_argument("--actuals", required=True)
    fit.add_argument("--perf", required=True, help="perf model json from bench")
    fit.add_argument("--shaders", default=None, help="shader dir (default: trace sibling)")
    fit.add_argument("--config", default=None, help="training config (json/toml)")
    fit.add_argument("--seed", type=int, default=None, help="override the config seed")
    fit.add_argument("--report", default=None, help="optional training report json")
    fit.add_argument("--out", required=True, help="output weights json")
    fit.set_defaults(func=cmd_fit)

    run = sub.add_parser("run", help="replay one estimator over a trace")
    run.add_argument("--trace", required=True)
    run.add_argument("--actuals", required=True)
    run.add_argument("--perf", required=True)
    run.add_argument("--weights", required=True)
    run.add_argument("--shaders", default=None)
    run.add_argument("--config", default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--mode", choices=("hybrid", "offline"), default="hybrid")
    run.add_argument("--measure-overhead", action="store_true")
    run.add_argument("--out", required=True, help="output per-frame log csv")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="score all models over one sequence")
    cmp_.add_argument("--trace", default=None)
    cmp_.add_argument("--actuals", default=None)
    cmp_.add_argument("--shaders", default=None)
    cmp_.add_argument("--frequency", default=None, help="per-frame clock csv (for frq)")
    cmp_.add_argument("--scenario", default=None, help="generate the sequence instead of loading")
    cmp_.add_argument("--profile", default=None, help="device profile (with --scenario)")
    cmp_.add_argument("--perf", default=None, help="perf model json")
    cmp_.add_argument("--config", default=None)
    cmp_.add_argument("--seed", type=int, default=None)
    cmp_.add_argument("--models", default=",".join(MODEL_NAMES))
    cmp_.add_argument("--scenario-name", default=None, help="label for the report")
    cmp_.add_argument("--measure-overhead", action="store_true")
    cmp_.add_argument("--no-figures", action="store_true")
    cmp_.add_argument("--out", required=True, help="output directory")
    cmp_.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        _setup_logging()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except InsufficientData as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, TraceFormatError, PerfModelError, BenchmarkError,
            IlError, MissingOpcodeCost, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
