"""Timing arithmetic and the end-to-end experiment harness."""

import pytest

from narrowcast.bundle import Codec
from narrowcast.carousel import MultiplexConfig, PRESETS
from narrowcast.channel import ChannelModel
from narrowcast.errors import ZeroBitrateError
from narrowcast.metrics import (
    ELAPSED_BUDGET_RATIO,
    estimate_acquisition_seconds,
    experiment_document,
    render_json,
    render_text,
    run_experiment,
)
from narrowcast.receiver import AcquisitionOutcome

CLEAN = ChannelModel()
PROTO = PRESETS["drm30-prototype"]


def formula_oracle(payload_bytes: int, bitrate: int) -> float:
    return payload_bytes * 8 / bitrate


def test_estimate_reference_values():
    est = estimate_acquisition_seconds(8724, 5000)
    assert est.payload_bits == 69792
    assert est.seconds == pytest.approx(13.9584, rel=1e-9)
    assert est.seconds * est.data_bitrate == pytest.approx(est.payload_bits, rel=1e-9)


def test_estimate_zero_payload():
    assert estimate_acquisition_seconds(0, 5000).seconds == 0.0


def test_estimate_uncompressed_counterfactual():
    est = estimate_acquisition_seconds(14141, 5000)
    assert est.seconds == pytest.approx(formula_oracle(14141, 5000), rel=1e-12)
    assert est.seconds == pytest.approx(22.6256, rel=1e-9)


def test_estimate_rejects_zero_bitrate():
    with pytest.raises(ZeroBitrateError):
        estimate_acquisition_seconds(100, 0)
    with pytest.raises(ZeroBitrateError):
        estimate_acquisition_seconds(100, -5)


def test_estimate_rejects_negative_payload():
    with pytest.raises(ValueError):
        estimate_acquisition_seconds(-1, 5000)


# --- experiments ----------------------------------------------------------------

def run_reference(reference_bundle, config=PROTO, model=CLEAN, **kwargs):
    kwargs.setdefault("codec", Codec.NONE)
    kwargs.setdefault("force_body_size", 8724)
    return run_experiment(reference_bundle, config, model, **kwargs)


def test_clean_experiment_lands_in_the_budget_band(reference_bundle):
    result = run_reference(reference_bundle)
    est = result.estimate.seconds
    assert est == pytest.approx(13.9584, rel=1e-9)
    assert result.report.outcome is AcquisitionOutcome.COMPLETE
    assert result.report.elapsed > est  # framing overhead is strictly positive
    assert result.report.elapsed <= ELAPSED_BUDGET_RATIO * est


def test_estimate_lower_bounds_measurement_without_forcing(reference_bundle):
    result = run_experiment(reference_bundle, PROTO, CLEAN, codec=Codec.DEFLATE)
    assert result.report.elapsed > result.estimate.seconds
    assert result.delivered is not None
    assert tuple(result.delivered.files) == reference_bundle.files


def test_loss_delays_completion(reference_bundle):
    clean = run_reference(reference_bundle)
    lossy = run_reference(
        reference_bundle, model=ChannelModel(frame_loss_prob=0.5, seed=7)
    )
    assert lossy.report.outcome is AcquisitionOutcome.COMPLETE
    assert lossy.report.elapsed > clean.report.elapsed


def test_doubling_bitrate_halves_elapsed(reference_bundle):
    for rate in (2500, 5000, 10000):
        slow = run_reference(reference_bundle, config=MultiplexConfig(rate, 16000, 0.4))
        fast = run_reference(
            reference_bundle, config=MultiplexConfig(rate * 2, 16000, 0.4)
        )
        assert abs(fast.report.elapsed - slow.report.elapsed / 2) <= 0.4 + 1e-9


def test_launch_latency_added_to_elapsed(reference_bundle):
    base = run_reference(reference_bundle)
    delayed = run_reference(reference_bundle, launch_latency_s=3.5)
    assert delayed.report.elapsed == pytest.approx(base.report.elapsed + 3.5)
    assert delayed.report.completion_time == base.report.completion_time
    assert delayed.report.cycles_spanned == base.report.cycles_spanned


def test_join_offset_sets_join_time(reference_bundle):
    result = run_reference(reference_bundle, join_offset=10)
    assert result.report.join_time == pytest.approx(10 * 0.4)
    assert result.report.outcome is AcquisitionOutcome.COMPLETE


def test_total_loss_times_out(reference_bundle):
    result = run_reference(
        reference_bundle,
        model=ChannelModel(frame_loss_prob=1.0, seed=1),
        timeout_cycles=3,
    )
    assert result.report.outcome is AcquisitionOutcome.TIMED_OUT
    assert result.report.frames_seen == 0
    assert result.delivered is None


def test_forced_body_cannot_unpack_but_timing_stands(reference_bundle):
    result = run_reference(reference_bundle)
    assert result.delivered is None
    assert result.delivery_error is not None
    assert result.report.outcome is AcquisitionOutcome.COMPLETE


def test_reports_are_reproducible(reference_bundle):
    model = ChannelModel(frame_loss_prob=0.3, bit_error_rate=1e-5, seed=1234)
    first = run_experiment(reference_bundle, PROTO, model, codec=Codec.DEFLATE)
    second = run_experiment(reference_bundle, PROTO, model, codec=Codec.DEFLATE)
    assert first.report == second.report
    doc1 = experiment_document(first, PROTO, model, 0, 0.0)
    doc2 = experiment_document(second, PROTO, model, 0, 0.0)
    assert render_json(doc1) == render_json(doc2)
    assert render_text(doc1) == render_text(doc2)


def test_document_schema_keys(reference_bundle):
    result = run_reference(reference_bundle)
    doc = experiment_document(result, PROTO, CLEAN, 0, 0.0)
    for key in (
        "schema", "outcome", "elapsed_s", "estimate_seconds", "cycle_duration_s",
        "frames_seen", "groups_ok", "groups_corrupt", "data_bitrate", "loss",
        "seed", "delivered",
    ):
        assert key in doc
    assert doc["schema"] == "narrowcast/report-v1"
    text = render_text(doc)
    assert "outcome Complete" in text.splitlines()


def test_experiment_rejects_bad_force_size(reference_bundle):
    with pytest.raises(ValueError):
        run_reference(reference_bundle, force_body_size=0)
