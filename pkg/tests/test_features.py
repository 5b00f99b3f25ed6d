"""Feature extraction: window ops, one-hots, schema census, batch parity."""
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from runwaygrip import features as ft
from runwaygrip.errors import InputError, StaleDataError

T0 = datetime(2021, 1, 10, 12, 0, tzinfo=timezone.utc)
M0 = ft.to_epoch_minute(T0)


def make_series(n_minutes=60 * 26, runway="RW1", ta=None, tr=None, hu=None,
                pt=None, pi=None, start_minute=M0 - 60 * 25):
    """Dense series ending after M0; fillers are simple constants."""
    s = ft.WeatherSeries(runway, start_minute, n_minutes)
    s.observed[:] = True
    t = np.arange(n_minutes)
    s.ta[:] = ta(t) if callable(ta) else (ta if ta is not None else -2.0)
    s.tr[:] = tr(t) if callable(tr) else (tr if tr is not None else -1.0)
    s.hu[:] = hu(t) if callable(hu) else (hu if hu is not None else 90.0)
    s.vi[:] = 5000.0
    s.ap[:] = 1013.0
    s.dp[:] = -4.0
    s.pi[:] = pi(t) if callable(pi) else (pi if pi is not None else 0.0)
    s.along_wind[:] = 1.0
    s.across_wind[:] = 0.5
    if pt is not None:
        s.pt[:] = pt
    else:
        s.pt[:] = 0
    return s


# ---------------------------------------------------------------- lag / delta

def test_lag_constant_series():
    s = make_series(ta=-3.5)
    for k in ft.LAG_HORIZONS:
        assert ft.lag(s, "ta", M0, k) == -3.5


def test_lag_gap_is_missing():
    s = make_series()
    gap_minute = M0 - 60 * 3
    s.ta[gap_minute - s.start_minute] = np.nan
    assert np.isnan(ft.lag(s, "ta", M0, 3))
    assert not np.isnan(ft.lag(s, "ta", M0, 1))


def test_lag_linear_ramp():
    s = make_series(ta=lambda t: t / 60.0)
    now = ft.lag(s, "ta", M0, 1) + 1.0
    assert s.value_at("ta", M0) == pytest.approx(now)
    assert ft.lag(s, "ta", M0, 3) == pytest.approx(s.value_at("ta", M0) - 3.0)


def test_lag_invalid_horizon():
    with pytest.raises(InputError):
        ft.lag(make_series(), "ta", M0, 2)


def test_delta_constant_zero():
    s = make_series(hu=85.0)
    for k in ft.LAG_HORIZONS:
        assert ft.delta(s, "hu", M0, k) == 0.0


def test_delta_runway_temperature_example():
    s = make_series()
    s.tr[M0 - s.start_minute] = 2.0
    s.tr[M0 - 180 - s.start_minute] = -1.0
    assert ft.delta(s, "tr", M0, 3) == pytest.approx(3.0)


def test_delta_missing_endpoint():
    s = make_series()
    s.ap[M0 - 60 - s.start_minute] = np.nan
    assert np.isnan(ft.delta(s, "ap", M0, 1))
    s2 = make_series()
    s2.ap[M0 - s2.start_minute] = np.nan
    assert np.isnan(ft.delta(s2, "ap", M0, 1))


# ---------------------------------------------------------------- accumulation

def test_accumulate_no_matching_type():
    s = make_series(pt=ft.PRECIP_TYPES.index("rain"), pi=2.0)
    assert ft.accumulate_precip(s, "wet_snow", M0, 3) == 0.0


def test_accumulate_closed_window_inclusive():
    # dry snow at pi=2 everywhere; [i-60, i] holds 61 samples -> 122
    s = make_series(pt=ft.PRECIP_TYPES.index("dry_snow"), pi=2.0)
    assert ft.accumulate_precip(s, "dry_snow", M0, 1) == pytest.approx(122.0)


def test_accumulate_monotone_in_horizon():
    rng = np.random.default_rng(0)
    s = make_series(pt=ft.PRECIP_TYPES.index("sleet"),
                    pi=lambda t: rng.random(len(t)) * 3)
    vals = [ft.accumulate_precip(s, "sleet", M0, k) for k in ft.LAG_HORIZONS]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_accumulate_pure_function_of_window():
    s = make_series(pt=ft.PRECIP_TYPES.index("rain"), pi=1.0)
    before = ft.accumulate_precip(s, "rain", M0, 1)
    s.pi[:60] = 99.0  # far outside [M0-60, M0]
    assert ft.accumulate_precip(s, "rain", M0, 1) == before


def test_accumulate_missing_minutes_contribute_zero():
    s = make_series(pt=ft.PRECIP_TYPES.index("rain"), pi=1.0)
    s.pi[M0 - 30 - s.start_minute] = np.nan
    assert ft.accumulate_precip(s, "rain", M0, 1) == pytest.approx(60.0)


def test_accumulate_rejects_non_accum_type():
    with pytest.raises(InputError):
        ft.accumulate_precip(make_series(), "hail", M0, 1)


# ---------------------------------------------------------------- one-hots

def test_one_hot_contamination_examples():
    v = ft.one_hot_contamination([4, 7, 9])
    names = [f"contam_{c}" for c in ft.CONTAMINATION_COMBOS] + ["contam_unknown"]
    assert v.sum() == 1.0
    assert v[names.index("contam_479")] == 1.0
    v0 = ft.one_hot_contamination([0])
    assert v0[names.index("contam_0")] == 1.0
    unk = ft.one_hot_contamination([3, 3])
    assert unk[-1] == 1.0 and unk[:-1].sum() == 0.0


def test_one_hot_contamination_order_insensitive():
    assert np.array_equal(ft.one_hot_contamination([9, 4, 7]),
                          ft.one_hot_contamination([4, 7, 9]))


def test_one_hot_precip():
    v = ft.one_hot_precip("dry_snow")
    assert v.sum() == 1.0 and v[ft.PRECIP_TYPES.index("dry_snow")] == 1.0
    with pytest.raises(InputError):
        ft.one_hot_precip("snow")


def test_contamination_combo_census():
    assert len(ft.CONTAMINATION_COMBOS) == 30
    assert len(set(ft.CONTAMINATION_COMBOS)) == 30
    for example in ("4", "47", "479", "0"):
        assert example in ft.CONTAMINATION_COMBOS


# ---------------------------------------------------------------- report type

def test_snowtam_validation():
    good = ft.SnowtamReport(T0, "RW1", (4, 7), depth_mm=8, coverage_pct=80)
    assert good.combo_key() == "47"
    with pytest.raises(InputError):
        ft.SnowtamReport(T0, "RW1", ())
    with pytest.raises(InputError):
        ft.SnowtamReport(T0, "RW1", (4, 7, 9, 9))
    with pytest.raises(InputError):
        ft.SnowtamReport(T0, "RW1", (12,))
    with pytest.raises(InputError):
        ft.SnowtamReport(T0, "RW1", (4,), coverage_pct=140)
    with pytest.raises(InputError):
        ft.SnowtamReport(T0, "RW1", (4,), inspector_braking_action=6)


# ---------------------------------------------------------------- schema

def test_schema_census_is_151():
    schema = ft.schema_v1()
    assert len(schema) == 151
    assert len(set(schema)) == 151
    # group sizes documented in the census
    assert sum(c.startswith("pt_") for c in schema) == 9
    assert sum(c.startswith("contam_") for c in schema) == 31
    assert sum("_lag" in c for c in schema) == 55
    assert sum("_delta" in c for c in schema) == 15
    assert sum(c.startswith("accum_") for c in schema) == 25
    assert sum(c.startswith("snowtam_") for c in schema) == 4


def test_schema_checksum_stable():
    assert ft.schema_checksum() == ft.schema_checksum(ft.schema_v1())
    assert len(ft.schema_checksum()) == 64
    assert ft.schema_v1(include_report_age=True)[-1] == "snowtam_age_min"
    assert len(ft.schema_v1(include_report_age=True)) == 152


# ---------------------------------------------------------------- assembly

def snowtam_example(minutes_before=90):
    return ft.SnowtamReport(
        T0 - timedelta(minutes=minutes_before), "RW1", (4, 7),
        depth_mm=8.0, coverage_pct=75.0, sanded=True, chemicals=False,
    )


def test_build_feature_vector_full_schema():
    s = make_series(pt=ft.PRECIP_TYPES.index("dry_snow"), pi=1.0)
    fv = ft.build_feature_vector(s, snowtam_example(), M0, "RW1")
    assert fv.schema == ft.schema_v1()
    assert len(fv.values) == 151
    d = fv.as_dict()
    assert d["contam_47"] == 1.0
    assert d["snowtam_depth_mm"] == 8.0
    assert d["snowtam_sanded"] == 1.0
    assert d["runway_east"] == 0.0
    assert d["pt_dry_snow"] == 1.0
    assert d["ta_abs"] == 2.0


def test_build_feature_vector_without_snowtam_keeps_schema():
    s = make_series()
    fv = ft.build_feature_vector(s, None, M0, "RW1", include_snowtam=False)
    assert len(fv.values) == 151
    d = fv.as_dict()
    for col in ft.snowtam_column_names():
        assert np.isnan(d[col])
    fv2 = ft.build_feature_vector(s, snowtam_example(), M0, "RW1",
                                  include_snowtam=False)
    assert np.isnan(fv2.as_dict()["snowtam_depth_mm"])


def test_build_feature_vector_no_missing_current_values():
    s = make_series()
    fv = ft.build_feature_vector(s, snowtam_example(), M0, "RW1")
    d = fv.as_dict()
    current = list(ft.LAG_VARIABLES) + ["along_wind", "across_wind",
                                        "ta_abs", "tr_abs"]
    for col in current:
        assert not np.isnan(d[col])
    pts = [d[f"pt_{p}"] for p in ft.PRECIP_TYPES]
    assert sum(pts) == 1.0


def test_build_feature_vector_stale_error():
    s = make_series()
    with pytest.raises(StaleDataError):
        ft.build_feature_vector(s, None, s.end_minute + 6, "RW1")
    # boundary: exactly 5 minutes away is fine
    ft.build_feature_vector(s, None, s.end_minute + 5, "RW1")


def test_build_feature_vector_report_age_column():
    s = make_series()
    fv = ft.build_feature_vector(s, snowtam_example(90), M0, "RW1",
                                 include_report_age=True)
    assert fv.schema_version == "1+age"
    assert fv.as_dict()["snowtam_age_min"] == 90.0


def test_latest_report_selection():
    reports = [snowtam_example(300), snowtam_example(90), snowtam_example(30)]
    chosen = ft.latest_report(reports, M0 - 60)
    assert chosen is reports[1]
    assert ft.latest_report(reports, M0 - 301) is None


def test_batch_matches_scalar_builder_bitwise_on_dyadic_intensity():
    rng = np.random.default_rng(7)
    # eighth-integer intensities make every partial sum exact, so the two
    # summation strategies must agree bitwise
    s = make_series(ta=lambda t: np.sin(t / 180) * 5,
                    hu=lambda t: 70 + 25 * np.abs(np.sin(t / 300)),
                    pi=lambda t: rng.integers(0, 24, size=len(t)) / 8.0,
                    pt=ft.PRECIP_TYPES.index("wet_snow"))
    gaps = rng.integers(0, s.n_minutes - 10, size=40)
    s.ta[gaps] = np.nan
    s.pt[gaps] = -1
    reports = [snowtam_example(400), snowtam_example(120)]
    minutes = [int(M0 - k) for k in (0, 7, 31, 240, 600)]
    fm = ft.build_feature_matrix({"RW1": s}, {"RW1": reports}, minutes,
                                 ["RW1"] * len(minutes))
    for p, minute in enumerate(minutes):
        fv = ft.build_feature_vector(
            s, ft.latest_report(reports, minute), minute, "RW1"
        )
        np.testing.assert_array_equal(
            np.nan_to_num(fm.values[p], nan=-12345.0),
            np.nan_to_num(fv.values, nan=-12345.0),
            err_msg=f"row {p} minute {minute}",
        )


def test_batch_matches_scalar_builder_continuous():
    rng = np.random.default_rng(8)
    s = make_series(pi=lambda t: rng.random(len(t)) * 2,
                    pt=ft.PRECIP_TYPES.index("rain"))
    minutes = [int(M0 - k) for k in (0, 11, 200)]
    fm = ft.build_feature_matrix({"RW1": s}, {"RW1": []}, minutes,
                                 ["RW1"] * len(minutes))
    for p, minute in enumerate(minutes):
        fv = ft.build_feature_vector(s, None, minute, "RW1")
        np.testing.assert_allclose(
            np.nan_to_num(fm.values[p], nan=-12345.0),
            np.nan_to_num(fv.values, nan=-12345.0),
            rtol=1e-9, err_msg=f"row {p}",
        )


def test_weather_sample_validation():
    with pytest.raises(InputError):
        ft.WeatherSample(T0, "RW1", pt="blizzard")
    with pytest.raises(InputError):
        ft.WeatherSample(T0, "RW1", hu=140.0)
    with pytest.raises(InputError):
        ft.WeatherSample(T0, "RW1", vi=-1.0)


def test_series_from_samples_and_gaps():
    samples = [
        ft.WeatherSample(T0, "RW1", pt="rain", pi=1.0, ta=2.0),
        ft.WeatherSample(T0 + timedelta(minutes=2), "RW1", pt="rain", pi=2.0),
    ]
    s = ft.WeatherSeries.from_samples("RW1", samples)
    assert s.n_minutes == 3
    assert s.observed[0] and not s.observed[1] and s.observed[2]
    assert np.isnan(s.value_at("pi", M0 + 1))
    assert s.value_at("pi", M0 + 2) == 2.0
    with pytest.raises(InputError):
        ft.WeatherSeries.from_samples("RW1", samples + [samples[0]])
