"""Experiment wiring: split policy, model dispatch, evaluation span."""

import pytest

from gamorra.configio import ConfigError
from gamorra.experiment import MODEL_NAMES, compare_models, fit_offline, training_split
from gamorra.scenario import ScenarioConfig, generate_sequence
from gamorra.trace import FrameSequence
from gamorra.trainer import TrainConfig


@pytest.fixture(scope="module")
def run(ref_profile):
    cfg = ScenarioConfig(name="exp", seed=21, frame_count=80, batches_per_frame=3,
                         scene_length=20)
    seq, actuals, freqs = generate_sequence(ref_profile, cfg)
    return seq, {f.frame_index: float(a) for f, a in zip(seq.frames, actuals)}, \
        {f.frame_index: float(m) for f, m in zip(seq.frames, freqs)}


def test_training_split_policy(run):
    seq, _, _ = run
    assert training_split(seq, TrainConfig(offline_frame_count=30)) == 30
    # Cap at half the sequence so evaluation frames always remain.
    assert training_split(seq, TrainConfig(offline_frame_count=720)) == 40
    short = FrameSequence(frames=seq.frames[:11])
    with pytest.raises(ConfigError, match="too short"):
        training_split(short, TrainConfig())


def test_fit_offline_respects_frame_limit(run, ref_perf):
    seq, actuals, _ = run
    config = TrainConfig()
    w_all, rep_all = fit_offline(seq, actuals, ref_perf, config, frame_limit=len(seq.frames))
    w_half, rep_half = fit_offline(seq, actuals, ref_perf, config, frame_limit=40)
    assert rep_half["train_frames"] + rep_half["test_frames"] == 40
    assert rep_all["train_frames"] + rep_all["test_frames"] == 80
    assert rep_half["test_mae_ms"] < 1e-6 and rep_all["test_mae_ms"] < 1e-6


def test_compare_runs_every_model_on_the_eval_span(run, ref_perf):
    seq, actuals, freqs = run
    config = TrainConfig(offline_frame_count=40)
    results, train_report = compare_models(
        seq, actuals, ref_perf, config, freqs=freqs, scenario="exp", seed=21)
    assert [r.log.model for r in results] == list(MODEL_NAMES)
    for r in results:
        assert r.scenario == "exp" and r.seed == 21
        assert [row.frame for row in r.log.rows] == list(range(40, 80))
        assert r.overhead_ms == 0.0 and r.rss_mb == 0.0
        row = r.metrics_row()
        assert row["mean_abs_ms"] >= 0.0
    assert train_report["train_frames"] + train_report["test_frames"] == 40
    # Noise-free linear device: the trace-driven models recover it.
    by_name = {r.log.model: r for r in results}
    for name in ("gm-h", "gm-of"):
        assert by_name[name].metrics_row()["mean_abs_ms"] < 1e-6
    assert by_name["ar"].metrics_row()["mean_abs_ms"] > 1e-3


def test_compare_subset_and_order(run, ref_perf):
    seq, actuals, _ = run
    config = TrainConfig(offline_frame_count=40)
    results, train_report = compare_models(seq, actuals, ref_perf, config,
                                           models=("ar", "frq"))
    assert [r.log.model for r in results] == ["ar", "frq"]
    # No regression models requested: no offline training happens.
    assert train_report == {}


def test_compare_rejects_unknown_model(run, ref_perf):
    seq, actuals, _ = run
    with pytest.raises(ConfigError, match="unknown model"):
        compare_models(seq, actuals, ref_perf, TrainConfig(), models=("gm-h", "lstm"))


def test_measure_overhead_populates_cost_columns(run, ref_perf):
    seq, actuals, _ = run
    config = TrainConfig(offline_frame_count=40)
    results, _ = compare_models(seq, actuals, ref_perf, config,
                                models=("gm-h", "ar"), measure_overhead=True)
    gmh, ar = results
    assert gmh.overhead_ms > 0.0 and gmh.overhead_pct > 0.0 and gmh.rss_mb > 0.0
    assert len(gmh.log.predict_ms) == len(gmh.log.rows)
    # Baselines carry no per-frame analyzer cost measurements.
    assert ar.overhead_ms == 0.0 and ar.rss_mb == 0.0
