"""Acceptance suite: one test per release criterion.

Every test prints a single verdict line (run pytest with -s to see them
all; without -s they still appear for failing criteria).  Criterion 8 is
a soft envelope: it always reports the measured number and downgrades a
miss to a warning.
"""

import json
import time
import warnings
from itertools import product

import numpy as np
import pytest

from gamorra.baselines import fcm_calibrate, run_fcm
from gamorra.bench import BenchHarness
from gamorra.cli import main
from gamorra.experiment import MODEL_NAMES, compare_models, fit_offline
from gamorra.ilasm import complexity, parse_program
from gamorra.metrics import mfr
from gamorra.mlr import ModelWeights, ObservationSet, fit_svd, predict_batch, predict_frame
from gamorra.perf import PerfModel, build_perf_function, eval_perf, load_perf_model, save_perf_model
from gamorra.scenario import ScenarioConfig, generate_sequence, save_scenario
from gamorra.simulator import (
    ALU_OPCODES,
    PS_ONLY_OPCODES,
    DriftEvent,
    game_profile,
    reference_profile,
    save_profile,
)
from gamorra.stages import CS_STAGE, PERF_STAGES
from gamorra.trainer import (
    OFFLINE,
    ONLINE,
    TrainConfig,
    decide_from_rmse,
    frame_dataset,
    make_state,
    run_hybrid,
)

from helpers import random_observations


def _verdict(num: int, name: str, ok: bool, detail: str) -> bool:
    print(f"\ncriterion {num} [{name}]: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


# -- 1: solver equals the normal-equations oracle ---------------------------

def test_criterion_1_solver_oracle_equivalence():
    rng = np.random.default_rng(2024)
    started = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        W, Y, _ = random_observations(rng, 1000, 10, noise=0.3)
        fitted = fit_svd(ObservationSet(W, Y)).beta
        oracle = np.linalg.solve(W.T @ W, W.T @ Y)
        rel = np.abs(fitted - oracle) / np.abs(oracle)
        worst = max(worst, float(rel.max()))
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-8 and elapsed < 10.0
    assert _verdict(1, "solver oracle", ok,
                    f"100 systems (1000x10), worst rel dev {worst:.3e}, {elapsed:.2f}s")


# -- 2: exact recovery on a noise-free linear device -------------------------

def test_criterion_2_exact_recovery(ref_profile, ref_perf):
    scenario = ScenarioConfig(name="recovery", seed=7, frame_count=1440,
                              batches_per_frame=1, tess=True, gs=True, cs=True)
    seq, actual_arr, _ = generate_sequence(ref_profile, scenario)
    actuals = {f.frame_index: float(a) for f, a in zip(seq.frames, actual_arr)}
    weights, _ = fit_offline(seq, actuals, ref_perf, TrainConfig(), frame_limit=720)

    held_out = frame_dataset(seq, actuals, ref_perf, frames=seq.frames[720:])
    errs = [abs(predict_frame(weights, m) - a)
            for m, a in zip(held_out.matrices, held_out.actuals)]
    mean_err = float(np.mean(errs))

    unit = np.zeros(weights.dim)
    unit[0] = 1.0
    unit_pred = predict_batch(weights, unit)
    beta0_dev = abs(weights.beta[0] - 6.966)

    ok = mean_err < 1e-6 and unit_pred == weights.beta[0] and beta0_dev < 1e-6
    assert _verdict(2, "exact recovery", ok,
                    f"held-out mean |err| {mean_err:.3e} ms, "
                    f"beta0 {weights.beta[0]:.6f} (dev {beta0_dev:.3e}), "
                    f"unit-intercept predict exact: {unit_pred == weights.beta[0]}")


# -- 3: model ordering over noisy drifting scenarios --------------------------

# (seed, noise sigma, tess, gs, cs): five stage-mask mixes spanning the
# 5-15% noise band, each with two mid-run drift events.
CASES = (
    (50, 0.05, False, False, False),
    (46, 0.08, True, False, True),
    (57, 0.10, False, True, True),
    (58, 0.12, True, True, True),
    (49, 0.15, True, True, False),
)


def test_criterion_3_ordering_reproduction():
    started = time.perf_counter()
    ordering_wins, mfr_wins, lines = 0, 0, []
    for seed, sigma, tess, gs, cs in CASES:
        profile = game_profile(f"g{seed}", noise_stddev=sigma, omega=4)
        scenario = ScenarioConfig(
            name=f"s{seed}", seed=seed, frame_count=3000, batches_per_frame=24,
            tess=tess, gs=gs, cs=cs, walk_step=0.2, scene_length=45, scene_jump=0.55,
            drift_events=[DriftEvent(frame=1250, stages=["ps", "om", "ras"], multiplier=1.18),
                          DriftEvent(frame=2050, stages=["vs", "ia"], multiplier=1.15)],
        )
        perf = BenchHarness(profile, seed=seed).run_suite()
        seq, actual_arr, freq_arr = generate_sequence(profile, scenario)
        actuals = {f.frame_index: float(a) for f, a in zip(seq.frames, actual_arr)}
        freqs = {f.frame_index: float(m) for f, m in zip(seq.frames, freq_arr)}
        results, _ = compare_models(seq, actuals, perf, TrainConfig(), freqs=freqs,
                                    scenario=scenario.name, seed=seed)
        by = {r.log.model: r for r in results}
        mae = {name: by[name].metrics_row()["mean_abs_ms"] for name in MODEL_NAMES}
        ordered = mae["gm-h"] <= mae["gm-of"] <= min(mae["ar"], mae["fcm"], mae["frq"])
        gmh, fcm = by["gm-h"].log, by["fcm"].log
        mfr_gmh = mfr(gmh.estimates, gmh.actuals, margin=0.1)
        mfr_fcm = mfr(fcm.estimates, fcm.actuals, margin=0.1)
        ordering_wins += ordered
        mfr_wins += mfr_gmh < mfr_fcm
        lines.append(f"seed {seed}: mae gm-h {mae['gm-h']:.2f} gm-of {mae['gm-of']:.2f} "
                     f"best-baseline {min(mae['ar'], mae['fcm'], mae['frq']):.2f} "
                     f"({'ok' if ordered else 'X'}), mfr {mfr_gmh:.1f} vs {mfr_fcm:.1f}")
    elapsed = time.perf_counter() - started
    ok = ordering_wins >= 4 and mfr_wins >= 4 and elapsed < 120.0
    summary = f"ordering {ordering_wins}/5, mfr {mfr_wins}/5, {elapsed:.1f}s"
    print("\n" + "\n".join(lines))
    assert _verdict(3, "ordering reproduction", ok, summary)


# -- 4: mode machine equals its pseudocode ------------------------------------

TH = 0.5
BELOW = (0.2, 0.2)
ABOVE_WORSE = (1.2, 0.7)
ABOVE_BETTER = (0.8, 0.9)
SYMBOLS = (BELOW, ABOVE_WORSE, ABOVE_BETTER)


def _interp_step(mode, n_v, rmse_on, rmse_off, patience):
    """Direct transcription of the published two-mode decision listing."""
    if mode == ONLINE:
        if rmse_on > TH:
            if rmse_on > rmse_off:
                n_v += 1
            if n_v > patience:
                mode = OFFLINE
                n_v = 0
    else:
        if rmse_off > TH:
            mode = ONLINE
    return mode, n_v


def _machine(patience: int, mode=OFFLINE, n_v=0):
    dim = 3
    weights = ModelWeights(beta=np.ones(dim), scaler_mean=np.zeros(dim),
                           scaler_std=np.ones(dim))
    state = make_state(weights, TrainConfig(patience=patience, rmse_threshold=TH))
    state.mode, state.n_v = mode, n_v
    return state


def test_criterion_4_mode_machine_conformance():
    # (a) Bisimulation over the full reachable state space.  The machine
    # is memoryless given (mode, n_v), so stepwise agreement on every
    # reachable state extends by induction to scripts of any length,
    # which covers all of length <= 20.
    patience = 10
    reachable = [(OFFLINE, 0)] + [(ONLINE, v) for v in range(patience + 1)]
    for mode, n_v in reachable:
        for rmse_on, rmse_off in SYMBOLS:
            state = _machine(patience, mode, n_v)
            decide_from_rmse(state, rmse_on, rmse_off)
            want = _interp_step(mode, n_v, rmse_on, rmse_off, patience)
            assert (state.mode, state.n_v) == want
            assert want in reachable

    # (b) Exhaustive scripts up to length 7 at a small patience.
    for length in range(1, 8):
        for script in product(SYMBOLS, repeat=length):
            state = _machine(2)
            mode, n_v = OFFLINE, 0
            for rmse_on, rmse_off in script:
                decide_from_rmse(state, rmse_on, rmse_off)
                mode, n_v = _interp_step(mode, n_v, rmse_on, rmse_off, 2)
                assert (state.mode, state.n_v) == (mode, n_v)

    # (c) Random length-20 scripts at the published settings.
    rng = np.random.default_rng(99)
    for _ in range(200):
        state = _machine(10)
        mode, n_v = OFFLINE, 0
        for sym in rng.integers(0, 3, size=20):
            rmse_on, rmse_off = SYMBOLS[sym]
            decide_from_rmse(state, rmse_on, rmse_off)
            mode, n_v = _interp_step(mode, n_v, rmse_on, rmse_off, 10)
            assert (state.mode, state.n_v) == (mode, n_v)

    # (d) Directed patience-10 fallback: exactly eleven worse-than-offline
    # violations leave online mode and restore the offline weights.
    state = _machine(10, mode=ONLINE)
    state.online_weights.beta[:] = 9.0
    for i in range(10):
        decide_from_rmse(state, *ABOVE_WORSE)
        assert state.mode == ONLINE and state.n_v == i + 1
    decide_from_rmse(state, *ABOVE_WORSE)
    assert state.mode == OFFLINE and state.n_v == 0
    assert np.array_equal(state.online_weights.beta, state.offline_weights.beta)

    assert _verdict(4, "mode machine", True,
                    "reachable-state bisimulation, exhaustive scripts to length 7, "
                    "200 random length-20 scripts, patience-10 fallback")


# -- 5: sweep cap rule and load anchors ---------------------------------------

def test_criterion_5_sweep_cap_rule(ref_profile):
    harness = BenchHarness(ref_profile)
    checked = 0
    for stage in PERF_STAGES + (CS_STAGE,):
        samples = harness.sweep_stage(stage)
        over = [t > harness.cap_ms for _, t in samples]
        assert sum(over) == 1 and over[-1], f"{stage}: cap rule violated"
        checked += 1
    tess_final = harness.sweep_stage("tess")[-1][0]
    ras = harness.sweep_stage("ras")
    ras_last_sub_cap = ras[-2][0]
    ok = 6.5e6 / 2 <= tess_final <= 6.5e6 * 2 and ras_last_sub_cap < 3e7
    assert _verdict(5, "sweep cap rule", ok,
                    f"{checked} stages end with one over-cap sample; tess final load "
                    f"{tess_final:.3e}, ras last sub-cap {ras_last_sub_cap:.3e}")


# -- 6: stage-function properties over random sample sets ---------------------

def test_criterion_6_perf_function_properties(ref_perf, tmp_path):
    rng = np.random.default_rng(6)
    stages = PERF_STAGES + (CS_STAGE,)
    for trial in range(40):
        functions = {}
        for stage in stages:
            n = int(rng.integers(3, 12))
            loads = np.sort(rng.uniform(1.0, 1e7, size=n))
            times = 1.0 + np.cumsum(rng.uniform(0.0, 30.0, size=n))
            if rng.random() < 0.3:
                times = 1.0 + rng.uniform(0.0, 90.0, size=n)  # non-monotone sweep
            fn = build_perf_function(stage, list(zip(loads, times)), baseline_ms=1.0,
                                     scale=float(rng.integers(1, 9)))
            assert eval_perf(fn, 0.0) == 0.0
            for load, value in fn.breakpoints:
                assert eval_perf(fn, load) == value
            xs = np.sort(rng.uniform(0.0, 2e7, size=64))
            ys = eval_perf(fn, xs)
            assert np.all(np.diff(ys) >= -1e-9)
            functions[stage] = fn
        model = PerfModel(omega=int(rng.integers(1, 9)), beta0_baseline_ms=1.0,
                          functions=functions, opcode_costs=ref_perf.opcode_costs,
                          metadata={"trial": trial})
        path = tmp_path / f"m{trial}.json"
        save_perf_model(model, path)
        again = load_perf_model(path)
        for stage in stages:
            assert again.functions[stage].breakpoints == model.functions[stage].breakpoints
            xs = rng.uniform(0.0, 2e7, size=16)
            assert np.array_equal(eval_perf(again.functions[stage], xs),
                                  eval_perf(model.functions[stage], xs))
    assert _verdict(6, "stage-function properties", True,
                    "40 random models x 11 stages: zero at origin, node identity, "
                    "monotone, byte-stable round trip")


# -- 7: shader-assembly accounting --------------------------------------------

def test_criterion_7_il_corpus():
    rng = np.random.default_rng(7)
    vocab = list(ALU_OPCODES + PS_ONLY_OPCODES)
    table = {op: float(rng.uniform(0.1, 5.0)) for op in vocab}

    def random_source(max_lines: int) -> list[str]:
        ops = rng.choice(vocab, size=int(rng.integers(1, max_lines)))
        return [f"{op} r{i % 8}, r{(i + 3) % 8}, c{i % 16}" for i, op in enumerate(ops)]

    for _ in range(200):
        lines = random_source(120)
        prog = parse_program("\n".join(lines) + "\n")
        brute = sum(table[line.split()[0]] for line in lines)
        assert complexity(prog, table) == pytest.approx(brute, rel=1e-12)

    for _ in range(50):
        a, b = random_source(60), random_source(60)
        merged = parse_program("\n".join(a + b) + "\n").opcode_counts
        counts_a = parse_program("\n".join(a) + "\n").opcode_counts
        counts_b = parse_program("\n".join(b) + "\n").opcode_counts
        expect = dict(counts_a)
        for op, k in counts_b.items():
            expect[op] = expect.get(op, 0) + k
        assert merged == expect

    # Static counting: a loop body contributes once per textual occurrence.
    body = "mad r0, r0, c0, c1\n"
    costs = {"mov": 1.0, "loop": 0.5, "endloop": 0.5, "mad": 4.0}
    once = parse_program("mov r0, c7\nloop aL, i0\n" + body + "endloop\n")
    assert complexity(once, costs) == 6.0
    unrolled = parse_program("mov r0, c7\nloop aL, i0\n" + body * 5 + "endloop\n")
    assert complexity(unrolled, costs) == 6.0 + 4.0 * 4

    assert _verdict(7, "il corpus", True,
                    "200 random programs match the dot-product oracle; histograms "
                    "add under concatenation; loop bodies count statically")


# -- 8: per-frame prediction cost envelope ------------------------------------

def test_criterion_8_prediction_overhead(ref_profile, ref_perf):
    scenario = ScenarioConfig(name="dense", seed=3, frame_count=30,
                              batches_per_frame=1000, scene_length=500,
                              tess=True, gs=True, cs=True)
    seq, actual_arr, _ = generate_sequence(ref_profile, scenario)
    actuals = {f.frame_index: float(a) for f, a in zip(seq.frames, actual_arr)}
    weights, _ = fit_offline(seq, actuals, ref_perf, TrainConfig(), frame_limit=20)
    runlog = run_hybrid(seq, actuals, ref_perf, weights, TrainConfig(),
                        adapt=False, measure_overhead=True)
    # Skip the cold frames: shader programs parse once per trace.
    mean_ms = float(np.mean(runlog.predict_ms[5:]))
    ok = mean_ms < 2.2
    _verdict(8, "prediction overhead", ok,
             f"mean predict {mean_ms:.3f} ms/frame over {len(runlog.predict_ms) - 5} "
             f"warmed 1000-batch frames (soft envelope 2.2 ms)")
    if not ok:
        warnings.warn(f"predict path averaged {mean_ms:.3f} ms/frame, over the "
                      f"2.2 ms soft envelope", stacklevel=1)


# -- 9: byte-identical reruns of every subcommand ------------------------------

def _run_twice(tmp_path, label, argv_for):
    out_a, out_b = tmp_path / f"{label}_a", tmp_path / f"{label}_b"
    assert main(argv_for(out_a)) == 0
    assert main(argv_for(out_b)) == 0
    return out_a, out_b


def _same_bytes(a, b):
    assert a.read_bytes() == b.read_bytes(), f"{a.name} differs between reruns"


def test_criterion_9_determinism(tmp_path):
    save_profile(reference_profile(), tmp_path / "profile.json")
    save_scenario(ScenarioConfig(name="det", seed=12, frame_count=40,
                                 batches_per_frame=3, scene_length=10, cs=True),
                  tmp_path / "scenario.json")
    profile, scenario = str(tmp_path / "profile.json"), str(tmp_path / "scenario.json")
    compared = 0

    sim_a, sim_b = _run_twice(tmp_path, "sim", lambda out: [
        "simulate", "--scenario", scenario, "--profile", profile, "--out", str(out)])
    for name in ("trace.jsonl", "actuals.csv"):
        _same_bytes(sim_a / name, sim_b / name)
        compared += 1

    def bench_args(out):
        out.mkdir()
        return ["bench", "--profile", profile, "--out", str(out / "perf.json")]

    ben_a, ben_b = _run_twice(tmp_path, "ben", bench_args)
    _same_bytes(ben_a / "perf.json", ben_b / "perf.json")
    compared += 1
    perf = str(ben_a / "perf.json")
    trace, actuals = str(sim_a / "trace.jsonl"), str(sim_a / "actuals.csv")

    def fit_args(out):
        out.mkdir()
        return ["fit", "--trace", trace, "--actuals", actuals, "--perf", perf,
                "--report", str(out / "report.json"), "--out", str(out / "weights.json")]

    fit_a, fit_b = _run_twice(tmp_path, "fit", fit_args)
    for name in ("weights.json", "report.json"):
        _same_bytes(fit_a / name, fit_b / name)
        compared += 1
    weights = str(fit_a / "weights.json")

    def run_args(out):
        out.mkdir()
        return ["run", "--trace", trace, "--actuals", actuals, "--perf", perf,
                "--weights", weights, "--out", str(out / "log.csv")]

    run_a, run_b = _run_twice(tmp_path, "run", run_args)
    _same_bytes(run_a / "log.csv", run_b / "log.csv")
    compared += 1

    cmp_a, cmp_b = _run_twice(tmp_path, "cmp", lambda out: [
        "compare", "--trace", trace, "--actuals", actuals, "--perf", perf,
        "--no-figures", "--out", str(out)])
    for name in (["report.csv", "summary.txt", "train_report.json"]
                 + [f"log_{m}.csv" for m in MODEL_NAMES]):
        _same_bytes(cmp_a / name, cmp_b / name)
        compared += 1

    assert _verdict(9, "determinism", True,
                    f"{compared} artifacts byte-identical across reruns of "
                    f"simulate/bench/fit/run/compare")
