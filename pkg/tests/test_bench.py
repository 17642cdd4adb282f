"""Benchmark harness against the closed-form device it measures."""

import pytest

from gamorra.bench import (
    DEFAULT_CAP_MS,
    BenchHarness,
    BenchmarkError,
    bench_opcode,
    measure_baseline,
    sweep_stage,
)
from gamorra.perf import eval_perf
from gamorra.simulator import game_profile, reference_profile
from gamorra.stages import CS_STAGE, PERF_STAGES


def test_baseline_is_the_overhead_when_noise_free(ref_profile):
    assert measure_baseline(ref_profile) == ref_profile.overhead_ms


def test_baseline_is_a_median_under_noise():
    profile = game_profile(noise_stddev=0.1)
    a = measure_baseline(profile, seed=3)
    b = measure_baseline(profile, seed=3)
    assert a == b
    assert a != measure_baseline(profile, seed=4)
    assert abs(a - profile.overhead_ms) < profile.overhead_ms * 0.2


def test_opcode_costs_exact_on_a_noise_free_device(ref_profile):
    for stage in ("vs", "ps", "cs"):
        for op in ("add", "rsq"):
            got = bench_opcode(ref_profile, stage, op)
            assert got == pytest.approx(ref_profile.opcode_costs[stage][op], rel=1e-9)


def test_opcode_bench_survives_measurement_noise():
    # The harness can only see marginal times, which the device divides
    # by omega, so the recovered cost is the hidden one over omega.
    profile = game_profile(noise_stddev=0.1)
    true = profile.opcode_costs["vs"]["add"] / profile.omega
    got = bench_opcode(profile, "vs", "add", seed=11)
    assert got == pytest.approx(true, rel=0.25)


def test_sweep_ends_with_exactly_one_sample_over_the_cap(ref_profile):
    samples = sweep_stage(ref_profile, "tess")
    times = [t for _, t in samples]
    assert sum(t > DEFAULT_CAP_MS for t in times) == 1
    assert times[-1] > DEFAULT_CAP_MS
    loads = [x for x, _ in samples]
    assert loads == sorted(loads)


def test_sweep_rejects_an_unreachable_start():
    with pytest.raises(BenchmarkError, match="already exceeds cap"):
        sweep_stage(reference_profile(), "tess", cap_ms=1e-9)


def test_harness_rejects_nonpositive_cap(ref_profile):
    with pytest.raises(BenchmarkError):
        BenchHarness(ref_profile, cap_ms=0.0)
    with pytest.raises(BenchmarkError):
        BenchHarness(ref_profile).sweep_stage("warp")


def test_stored_functions_multiply_marginals_by_omega():
    """With measured time curve(load)/omega, the stored function must give
    back curve(load) so estimate-time division by omega round-trips."""
    profile = game_profile("quiet", noise_stddev=0.0, omega=4, knees=False)
    harness = BenchHarness(profile)
    model = harness.run_suite()
    assert model.omega == 4
    fn = model.functions["ia"]
    slope = profile.curves["ia"]["slope"]
    for load, _ in fn.breakpoints[1:]:
        assert eval_perf(fn, load) == pytest.approx(slope * load, rel=1e-9)


def test_suite_covers_every_stage_and_replays_identically(ref_profile):
    a = BenchHarness(ref_profile, seed=0).run_suite()
    b = BenchHarness(ref_profile, seed=0).run_suite()
    assert set(a.functions) == set(PERF_STAGES) | {CS_STAGE}
    assert a.to_json_obj() == b.to_json_obj()
    assert a.beta0_baseline_ms == ref_profile.overhead_ms
    assert set(a.opcode_costs) == {"vs", "hs", "ds", "gs", "ps", "cs"}
    assert "sample" in a.opcode_costs["ps"] and "sample" not in a.opcode_costs["vs"]


def test_suite_can_skip_compute(ref_profile):
    model = BenchHarness(ref_profile).run_suite(include_cs=False)
    assert not model.has_cs
    assert "cs" not in model.opcode_costs


def test_early_z_probe_matches_the_hidden_cull_rate(ref_profile):
    harness = BenchHarness(ref_profile)
    got = harness.early_z_discount()
    # Closed form of the probe fixture: ps and om scale by the kept
    # fraction, rasterization does not.
    sid_cost = 2048 * ref_profile.opcode_costs["ps"]["add"]
    frag = 65536
    ps = sid_cost * frag
    om = ref_profile.curves["om"]["slope"] * 32 * 32 * frag
    ras = ref_profile.curves["ras"]["slope"] * frag
    keep = 1.0 - ref_profile.early_z_cull
    expected = (ras + keep * (ps + om)) / (ras + ps + om)
    assert got == pytest.approx(expected, rel=1e-9)


def test_perf_model_reproduces_the_reference_device(ref_profile, ref_perf):
    """End to end: benchmark-derived functions evaluated at trace-style
    loads equal the device's marginal stage times (omega = 1 here)."""
    vs_load = ref_profile.opcode_costs["vs"]["add"] * 1.3e8
    assert 90.0 <= eval_perf(ref_perf.functions["vs"], vs_load) <= 110.0
    tess = ref_perf.functions["tess"]
    assert eval_perf(tess, 1e6) == pytest.approx(
        ref_profile.curves["tess"]["slope"] * 1e6, rel=1e-6)
