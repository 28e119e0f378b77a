"""Stream generators, drift specs, trace simulation, and file formats."""

import numpy as np
import pytest

from driftlab.naive_bayes import GaussianNaiveBayes, prequential_run
from driftlab.streams import (
    DRIFT_KINDS,
    GENERATOR_NAMES,
    DriftKind,
    DriftSpec,
    Sample,
    StreamConfig,
    generate_drifting_stream,
    generate_stream,
    read_stream_csv,
    read_trace,
    simulate_error_trace,
    write_stream_csv,
    write_trace,
)


class TestDriftSpec:
    def test_accepts_string_kind(self):
        spec = DriftSpec(kind="sudden", position=100, magnitude=0.5)
        assert spec.kind is DriftKind.SUDDEN

    def test_sudden_rejects_width(self):
        with pytest.raises(ValueError, match="width 0"):
            DriftSpec(kind=DriftKind.SUDDEN, position=10, width=5, magnitude=0.5)

    def test_gradual_requires_width(self):
        with pytest.raises(ValueError, match="positive width"):
            DriftSpec(kind=DriftKind.GRADUAL, position=10, magnitude=0.5)

    def test_incremental_requires_width(self):
        with pytest.raises(ValueError, match="positive width"):
            DriftSpec(kind=DriftKind.INCREMENTAL, position=10, width=0, magnitude=0.5)

    def test_normal_rejects_magnitude(self):
        with pytest.raises(ValueError, match="magnitude 0"):
            DriftSpec(kind=DriftKind.NORMAL, magnitude=0.3)

    def test_magnitude_bounds(self):
        with pytest.raises(ValueError, match="magnitude"):
            DriftSpec(kind=DriftKind.SUDDEN, position=10, magnitude=1.5)
        with pytest.raises(ValueError, match="magnitude"):
            DriftSpec(kind=DriftKind.SUDDEN, position=10, magnitude=-0.1)

    def test_negative_position(self):
        with pytest.raises(ValueError, match="non-negative"):
            DriftSpec(kind=DriftKind.SUDDEN, position=-1, magnitude=0.5)

    def test_check_fits(self):
        spec = DriftSpec(kind=DriftKind.GRADUAL, position=90, width=20, magnitude=0.5)
        with pytest.raises(ValueError, match="does not fit"):
            spec.check_fits(100)
        spec.check_fits(200)  # fits with room to spare

    def test_dict_round_trip(self):
        spec = DriftSpec(kind=DriftKind.INCREMENTAL, position=40, width=10,
                         magnitude=0.25)
        assert DriftSpec.from_dict(spec.to_dict()) == spec

    def test_str_kind_is_plain_value(self):
        assert str(DriftKind.GRADUAL) == "gradual"
        assert set(DRIFT_KINDS) == {"sudden", "gradual", "incremental", "normal"}


class TestGenerators:
    @pytest.mark.parametrize("generator", GENERATOR_NAMES)
    def test_length_labels_and_shape(self, generator):
        drift = DriftSpec(kind=DriftKind.SUDDEN, position=100, magnitude=0.6)
        samples = generate_drifting_stream(generator, 200, [drift], seed=3)
        assert len(samples) == 200
        dims = {s.features.shape for s in samples}
        assert len(dims) == 1  # constant dimensionality
        assert {s.label for s in samples} <= {0, 1}

    @pytest.mark.parametrize("generator", GENERATOR_NAMES)
    def test_same_seed_same_stream(self, generator):
        drift = DriftSpec(kind=DriftKind.GRADUAL, position=80, width=40,
                          magnitude=0.5)
        a = generate_drifting_stream(generator, 200, [drift], seed=9)
        b = generate_drifting_stream(generator, 200, [drift], seed=9)
        for sa, sb in zip(a, b):
            assert sa.label == sb.label
            np.testing.assert_array_equal(sa.features, sb.features)

    def test_different_seeds_differ(self):
        a = generate_drifting_stream("sea", 200, [], seed=1)
        b = generate_drifting_stream("sea", 200, [], seed=2)
        assert any(
            not np.array_equal(sa.features, sb.features) for sa, sb in zip(a, b)
        )

    def test_sudden_drift_raises_learner_error(self):
        # A strong sudden drift must change the label function, which shows
        # up as an error spike for a learner adapted to the old concept.
        drift = DriftSpec(kind=DriftKind.SUDDEN, position=1500, magnitude=0.9)
        stream = generate_drifting_stream("sea", 3000, [drift], seed=5)
        errors, _ = prequential_run(stream)
        pre = errors[1300:1500].mean()
        post = errors[1500:1700].mean()
        assert post > pre + 0.05

    def test_gradual_transition_ramps(self):
        # A learner frozen on the old concept should see its error climb
        # through the transition as samples mix toward the new concept.
        drift = DriftSpec(kind=DriftKind.GRADUAL, position=2000, width=2000,
                          magnitude=0.9)
        stream = generate_drifting_stream("sea", 6000, [drift], seed=13)
        learner = GaussianNaiveBayes()
        for s in stream[:2000]:
            learner.partial_fit(s.features, s.label)
        err = np.array([learner.predict(s.features) != s.label for s in stream])
        early = err[2000:2600].mean()
        late = err[3400:4000].mean()
        assert early < late
        assert late > err[1400:2000].mean() + 0.1

    def test_noise_costs_accuracy(self):
        _, clean = prequential_run(
            generate_drifting_stream("sea", 4000, [], seed=21)
        )
        _, noisy = prequential_run(
            generate_drifting_stream("sea", 4000, [], seed=21, noise=0.2)
        )
        assert noisy < clean - 0.08

    def test_unknown_generator(self):
        with pytest.raises(ValueError, match="unknown generator"):
            generate_drifting_stream("nope", 100, [], seed=0)

    def test_overlapping_drifts_rejected(self):
        drifts = [
            DriftSpec(kind=DriftKind.GRADUAL, position=100, width=100,
                      magnitude=0.5),
            DriftSpec(kind=DriftKind.SUDDEN, position=150, magnitude=0.5),
        ]
        with pytest.raises(ValueError, match="overlap"):
            generate_drifting_stream("sea", 1000, drifts, seed=0)

    def test_normal_entry_rejected_in_drift_list(self):
        with pytest.raises(ValueError, match="no place"):
            generate_drifting_stream("sea", 100, [DriftSpec(kind="normal")])

    def test_stream_config_validation(self):
        drift = DriftSpec(kind=DriftKind.NORMAL)
        with pytest.raises(ValueError, match="unknown generator"):
            StreamConfig(generator="bogus", length=10, drift=drift)
        with pytest.raises(ValueError, match="length"):
            StreamConfig(generator="sea", length=0, drift=drift)
        with pytest.raises(ValueError, match="noise"):
            StreamConfig(generator="sea", length=10, drift=drift, noise=1.0)

    def test_generate_stream_normal_has_no_drift(self):
        cfg = StreamConfig(
            generator="sea", length=300, drift=DriftSpec(kind="normal"), seed=4
        )
        direct = generate_drifting_stream("sea", 300, [], seed=4)
        for a, b in zip(generate_stream(cfg), direct):
            assert a.label == b.label
            np.testing.assert_array_equal(a.features, b.features)


class TestSimulateErrorTrace:
    def test_values_are_binary(self, rng):
        trace = simulate_error_trace(DriftKind.NORMAL, 500, 0.2, seed=2)
        assert trace.shape == (500,)
        assert set(np.unique(trace)) <= {0, 1}

    def test_normal_mean_near_rate(self):
        trace = simulate_error_trace(DriftKind.NORMAL, 20000, 0.2, seed=3)
        assert abs(trace.mean() - 0.2) < 0.01

    def test_sudden_step(self):
        trace = simulate_error_trace(
            DriftKind.SUDDEN, 20000, 0.1, drift_error=0.6, position=10000, seed=5
        )
        assert abs(trace[:10000].mean() - 0.1) < 0.02
        assert abs(trace[10000:].mean() - 0.6) < 0.02

    def test_incremental_ramp_is_monotone_in_expectation(self):
        trace = simulate_error_trace(
            DriftKind.INCREMENTAL, 30000, 0.1, drift_error=0.7,
            position=10000, width=10000, seed=7,
        )
        thirds = [trace[10000:13000].mean(), trace[13000:17000].mean(),
                  trace[17000:20000].mean()]
        assert thirds[0] < thirds[1] < thirds[2]
        assert abs(trace[20000:].mean() - 0.7) < 0.02

    def test_gradual_blocks_settle_at_drift_rate(self):
        trace = simulate_error_trace(
            DriftKind.GRADUAL, 20000, 0.1, drift_error=0.5,
            position=5000, width=5000, seed=11,
        )
        assert abs(trace[:5000].mean() - 0.1) < 0.02
        assert abs(trace[10000:].mean() - 0.5) < 0.02

    def test_falling_error_rate_allowed(self):
        trace = simulate_error_trace(
            DriftKind.SUDDEN, 10000, 0.6, drift_error=0.1, position=5000, seed=13
        )
        assert trace[:5000].mean() > trace[5000:].mean()

    def test_drift_needs_rate(self):
        with pytest.raises(ValueError, match="drift_error"):
            simulate_error_trace(DriftKind.SUDDEN, 100, 0.2, position=50)

    def test_rates_must_be_probabilities(self):
        with pytest.raises(ValueError, match="probability"):
            simulate_error_trace(DriftKind.NORMAL, 100, 1.5)
        with pytest.raises(ValueError, match="probability"):
            simulate_error_trace(
                DriftKind.SUDDEN, 100, 0.2, drift_error=-0.1, position=50
            )

    def test_position_inside_trace(self):
        with pytest.raises(ValueError, match="inside"):
            simulate_error_trace(
                DriftKind.SUDDEN, 100, 0.2, drift_error=0.5, position=100
            )

    def test_same_seed_same_trace(self):
        kw = dict(drift_error=0.5, position=100, width=50, seed=17)
        a = simulate_error_trace(DriftKind.GRADUAL, 400, 0.2, **kw)
        b = simulate_error_trace(DriftKind.GRADUAL, 400, 0.2, **kw)
        np.testing.assert_array_equal(a, b)


class TestFileFormats:
    def test_stream_csv_round_trip(self, tmp_path):
        samples = generate_drifting_stream("hyperplane", 50, [], seed=1)
        meta = {"generator": "hyperplane", "seed": 1}
        path = tmp_path / "stream.csv"
        write_stream_csv(samples, path, meta=meta)
        loaded, got_meta = read_stream_csv(path)
        assert got_meta == meta
        assert len(loaded) == 50
        for a, b in zip(samples, loaded):
            assert a.label == b.label
            np.testing.assert_array_equal(a.features, b.features)

    def test_stream_csv_without_meta(self, tmp_path):
        samples = [Sample(features=np.array([0.5, 1.0]), label=1)]
        path = tmp_path / "s.csv"
        write_stream_csv(samples, path)
        loaded, meta = read_stream_csv(path)
        assert meta is None
        assert loaded[0].label == 1

    def test_empty_stream_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="empty"):
            write_stream_csv([], tmp_path / "s.csv")

    def test_stream_csv_bad_field_count(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("f0,f1,label\n0.1,0.2,1\n0.3,0\n")
        with pytest.raises(ValueError, match="expected 3 fields"):
            read_stream_csv(path)

    def test_stream_csv_missing_label_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("f0,f1\n0.1,0.2\n")
        with pytest.raises(ValueError, match="label"):
            read_stream_csv(path)

    def test_trace_round_trip(self, tmp_path):
        trace = simulate_error_trace(DriftKind.NORMAL, 200, 0.3, seed=9)
        meta = {"kind": "normal", "base_error": 0.3}
        path = tmp_path / "trace.txt"
        write_trace(trace, path, meta=meta)
        loaded, got_meta = read_trace(path)
        assert got_meta == meta
        np.testing.assert_array_equal(loaded, trace)

    def test_trace_rejects_non_binary(self, tmp_path):
        path = tmp_path / "trace.txt"
        path.write_text("0\n1\n2\n")
        with pytest.raises(ValueError, match="only 0 or 1"):
            read_trace(path)

    def test_trace_rejects_matrix(self, tmp_path):
        with pytest.raises(ValueError, match="one-dimensional"):
            write_trace(np.zeros((3, 3)), tmp_path / "t.txt")
