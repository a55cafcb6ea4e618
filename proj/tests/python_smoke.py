"""Smoke tests for the python package: every exposed surface gets one exercise."""

import sys
import tempfile
from pathlib import Path

import jamaica


def test_version_and_ulids():
    assert jamaica.__version__ == "0.1.0"
    ids = [jamaica.new_ulid() for _ in range(200)]
    assert all(len(i) == 26 for i in ids)
    assert len(set(ids)) == 200
    assert ids == sorted(ids)


def test_timestamps():
    t = jamaica.Timestamp.parse("2016-01-01T00:00:00.000Z")
    assert t.unix_ms() == 1451606400000
    assert t.to_rfc3339() == "2016-01-01T00:00:00.000Z"
    assert jamaica.Timestamp.parse("2016-01-01T02:00:00+02:00") == t
    assert jamaica.Timestamp(1451606400000) == t
    assert t < jamaica.Timestamp(1451606400001)
    try:
        jamaica.Timestamp.parse("yesterday")
    except jamaica.Error as e:
        assert "bad_timestamp" in str(e)
    else:
        raise AssertionError("junk timestamp parsed")


def test_range_model():
    band = jamaica.RangeModel.explicit_range(0.0, 50.0)
    assert not band.learned()
    assert not band.anomalous(25.0)
    assert band.anomalous(-3.0) and band.anomalous(75.0)
    assert band.score(75.0) == 0.5
    fitted = jamaica.RangeModel.fit([float(v) for v in range(101)], 0.05, 0.95)
    assert fitted.learned()
    assert fitted.low() == 5.0 and fitted.high() == 95.0
    back = jamaica.RangeModel.restore(fitted.snapshot())
    assert back.low() == fitted.low() and back.high() == fitted.high()


def test_lof_model():
    model = jamaica.LofModel(0, 3)
    for i in range(40):
        model.add([float(i % 10), float(i // 10)])
    model.train()
    assert model.trained() and model.size() == 40 and model.dim() == 2
    dense = model.score([5.0, 1.0])
    isolated = model.score([60.0, 60.0])
    assert isolated > dense
    back = jamaica.LofModel.restore(model.snapshot())
    assert back.score([60.0, 60.0]) == isolated
    try:
        jamaica.LofModel(2, 5)
    except jamaica.Error as e:
        assert "invalid_config" in str(e)
    else:
        raise AssertionError("capacity below k was accepted")


def test_classifier_model():
    trace = jamaica.ClassifierModel(["b", "a"])
    assert trace.classes() == ["a", "b"]
    assert trace.predict([1.0]) == ("a", 0.0)
    trace.train_batch([jamaica.LabeledExample([1.0], "b")], 1)
    assert trace.predict([1.0]) == ("b", 4.0)
    restored = jamaica.ClassifierModel.restore(trace.snapshot())
    assert restored.predict([1.0]) == ("b", 4.0)


def test_synth():
    spec = jamaica.SynthSpec()
    spec.n_train = 200
    spec.n_stream = 1000
    data = jamaica.generate_synth_data(spec)
    assert len(data.train) == 200 and len(data.stream) == 1000
    assert data.negative_rows == 50 and data.high_rows == 30
    assert all(5.0 <= o.value < 45.0 for o in data.train)
    assert sum(1 for o in data.stream if o.value < 0.0) == 50
    assert sum(1 for o in data.stream if o.value > 50.0) == 30
    again = jamaica.generate_synth_data(spec)
    assert [o.value for o in again.stream] == [o.value for o in data.stream]

    with tempfile.TemporaryDirectory() as out:
        result = jamaica.write_synth(spec, out)
        assert result.train_rows == 200 and result.stream_rows == 1000
        header = Path(result.stream_path).read_text().splitlines()[0]
        assert header == "entity_id,entity_type,attribute,value,timestamp,lat,lon"


def test_reports():
    values = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]
    s = jamaica.build_summary(values, jamaica.Band(3.0, 8.0))
    assert s.count == 8 and s.min == 2.0 and s.max == 9.0
    assert s.mean == 5.0 and s.stddev == 2.0
    assert s.below_band == 1 and s.above_band == 1
    h = jamaica.build_histogram(values, 4)
    assert sum(h.counts) == 8 and len(h.bin_edges) == 5 and h.total == 8
    assert jamaica.histogram_to_csv(h).startswith("bin_low,bin_high,count\n")
    try:
        jamaica.build_histogram([], 4)
    except jamaica.Error as e:
        assert "empty_source" in str(e)
    else:
        raise AssertionError("empty histogram input was accepted")


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    failures = 0
    for test in tests:
        try:
            test()
            print(f"ok   {test.__name__}")
        except Exception as e:  # noqa: BLE001 - report and keep going
            failures += 1
            print(f"FAIL {test.__name__}: {e}")
    print(f"{len(tests) - failures}/{len(tests)} python smoke tests passed")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
