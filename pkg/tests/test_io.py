"""CSV round trips for every interchange format."""
import numpy as np
import pytest

from runwaygrip import io as rio
from runwaygrip import pipeline as pl
from runwaygrip import synthgen as sg
from runwaygrip.errors import InputError
from runwaygrip.features import build_feature_vector, schema_v1
from runwaygrip.gbt import FeatureMatrix


@pytest.fixture(scope="module")
def dataset():
    return sg.generate(sg.GeneratorConfig(
        seed=3, n_days=2, landings_per_day=10, rate_tolerance=100.0,
        gap_prob=0.01))


def test_weather_round_trip(dataset, tmp_path):
    path = tmp_path / "weather.csv"
    rio.write_weather_csv(dataset.weather, path)
    back = rio.read_weather_csv(path)
    assert set(back) == set(dataset.weather)
    for rw, s in dataset.weather.items():
        b = back[rw]
        assert b.start_minute == s.start_minute
        assert b.n_minutes == s.n_minutes
        np.testing.assert_array_equal(b.pt, s.pt)
        np.testing.assert_array_equal(b.ta, s.ta)
        np.testing.assert_array_equal(b.pi, s.pi)
        np.testing.assert_array_equal(b.observed, s.observed)


def test_weather_byte_identical_given_seed(tmp_path):
    cfg = sg.GeneratorConfig(seed=5, n_days=1, landings_per_day=5,
                             rate_tolerance=100.0)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    rio.write_weather_csv(sg.generate(cfg).weather, a)
    rio.write_weather_csv(sg.generate(cfg).weather, b)
    assert a.read_bytes() == b.read_bytes()


def test_snowtam_round_trip(dataset, tmp_path):
    path = tmp_path / "snowtam.csv"
    rio.write_snowtam_csv(dataset.snowtams, path)
    back = rio.read_snowtam_csv(path)
    for rw, reports in dataset.snowtams.items():
        assert len(back[rw]) == len(reports)
        for ra, rb in zip(reports, back[rw]):
            assert ra.issued_at == rb.issued_at
            assert ra.layers == rb.layers
            assert ra.depth_mm == rb.depth_mm
            assert ra.coverage_pct == rb.coverage_pct
            assert ra.sanded == rb.sanded
            assert ra.inspector_braking_action == rb.inspector_braking_action


def test_landings_round_trip(dataset, tmp_path):
    path = tmp_path / "landings.csv"
    rio.write_landings_csv(dataset.landings, path)
    back = rio.read_landings_csv(path)
    assert len(back) == len(dataset.landings)
    orig = {l.landing_id: l for l in dataset.landings}
    for rec in back:
        ref = orig[rec.landing_id]
        assert rec.mass == ref.mass
        assert rec.touchdown_time == ref.touchdown_time
        for sa, sb in zip(rec.samples, ref.samples):
            assert sa.ground_speed == sb.ground_speed
            assert sa.longitudinal_accel == sb.longitudinal_accel
            assert sa.brake_pressure_requested == sb.brake_pressure_requested


def test_feature_vector_csv_round_trip(dataset, tmp_path):
    feats = pl.featurize_dataset(dataset)
    path = tmp_path / "features.csv"
    rio.write_features_csv(feats.matrix, path,
                           meta={"landing_id": feats.landing_ids})
    meta, back = rio.read_features_csv(path, n_meta=1)
    assert list(back.column_names) == list(schema_v1())
    assert [m["landing_id"] for m in meta] == feats.landing_ids
    np.testing.assert_array_equal(
        np.nan_to_num(back.values, nan=-1.0),
        np.nan_to_num(feats.matrix.values, nan=-1.0),
    )


def test_single_vector_csv_round_trip(dataset, tmp_path):
    rw = "RW1"
    series = dataset.weather[rw]
    minute = series.end_minute - 10
    fv = build_feature_vector(series, None, minute, rw, include_snowtam=False)
    matrix = FeatureMatrix(fv.values.reshape(1, -1), list(fv.schema))
    path = tmp_path / "one.csv"
    rio.write_features_csv(matrix, path)
    _, back = rio.read_features_csv(path)
    np.testing.assert_array_equal(
        np.nan_to_num(back.values[0], nan=-1.0),
        np.nan_to_num(fv.values, nan=-1.0),
    )


def test_timestamp_parsing():
    ts = rio.parse_timestamp("2021-01-10T12:00:00Z")
    assert rio.format_timestamp(ts) == "2021-01-10T12:00:00Z"
    with pytest.raises(InputError):
        rio.parse_timestamp("not-a-time")


def test_bad_headers_rejected(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("nope\n1\n")
    with pytest.raises(InputError):
        rio.read_weather_csv(p)
    with pytest.raises(InputError):
        rio.read_snowtam_csv(p)
    with pytest.raises(InputError):
        rio.read_landings_csv(p)
