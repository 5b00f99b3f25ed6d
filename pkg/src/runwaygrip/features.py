"""Explanatory-variable extraction from weather series and runway reports.

The canonical v1 schema has exactly 151 named columns in a fixed order:
current weather values, absolute temperatures, precipitation one-hots,
lagged values and deltas at the 1/3/6/12/24-hour horizons, per-type and
current-type precipitation accumulations, the runway indicator, and the
report-derived block (contamination one-hots, unknown flag, depth,
coverage, sanding, chemicals). Accumulation windows are closed on both
ends: [i - 60k, i] in minutes.
"""
from __future__ import annotations

import hashlib
from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from .errors import InputError, StaleDataError
from .gbt import FeatureMatrix

__all__ = [
    "PRECIP_TYPES",
    "LAG_HORIZONS",
    "CONTAMINATION_COMBOS",
    "WeatherSample",
    "WeatherSeries",
    "SnowtamReport",
    "FeatureVector",
    "schema_v1",
    "schema_checksum",
    "snowtam_column_names",
    "lag",
    "delta",
    "accumulate_precip",
    "one_hot_precip",
    "one_hot_contamination",
    "build_feature_vector",
    "build_feature_matrix",
]

PRECIP_TYPES = (
    "none", "rain", "sleet", "wet_snow", "dry_snow",
    "drifting_snow", "freezing_rain", "hail", "snow_grains",
)
_PRECIP_INDEX = {name: i for i, name in enumerate(PRECIP_TYPES)}

LAG_HORIZONS = (1, 3, 6, 12, 24)
LAG_VARIABLES = ("pi", "ta", "tr", "hu", "vi", "ap", "dp")
DELTA_VARIABLES = ("tr", "hu", "ap")
ACCUM_TYPES = ("rain", "sleet", "wet_snow", "dry_snow")
NUMERIC_VARIABLES = ("pi", "ta", "tr", "hu", "vi", "ap", "dp",
                     "along_wind", "across_wind")

# Surface codes: 0 bare/dry, 1 damp, 2 wet, 3 rime, 4 dry snow, 5 wet snow,
# 6 slush, 7 ice, 8 compacted snow, 9 frozen ruts.
LOOSE_CODES = frozenset({4, 5, 6})
SOLID_CODES = frozenset({7, 8, 9})
CONTAMINATION_CODE_NAMES = {
    0: "Bare and Dry", 1: "Damp", 2: "Wet", 3: "Rime", 4: "Dry Snow",
    5: "Wet Snow", 6: "Slush", 7: "Ice", 8: "Compacted or rolled snow",
    9: "Frozen ruts or ridges",
}

# The 30 recognized layer combinations (digits sorted ascending). Singles,
# damp/wet over ice, loose over one solid, solid pairs on a frozen base,
# and dry/wet snow over solid pairs. Anything else raises the unknown flag.
CONTAMINATION_COMBOS = (
    "0", "1", "2", "3", "4", "5", "6", "7", "8", "9",
    "17", "27",
    "47", "48", "49", "57", "58", "59", "67", "68", "69",
    "78", "79", "89",
    "478", "479", "489", "578", "579", "589",
)
_COMBO_INDEX = {c: i for i, c in enumerate(CONTAMINATION_COMBOS)}

STALE_LIMIT_MINUTES = 5
SCHEMA_VERSION = "1"


def _utc(ts: datetime) -> datetime:
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def to_epoch_minute(ts: datetime) -> int:
    return int(_utc(ts).timestamp() // 60)


def from_epoch_minute(minute: int) -> datetime:
    return datetime.fromtimestamp(minute * 60, tz=timezone.utc)


@dataclass
class WeatherSample:
    """One per-minute observation for a runway."""

    timestamp: datetime
    runway_id: str
    pt: str | None = None
    pi: float | None = None
    ta: float | None = None
    tr: float | None = None
    hu: float | None = None
    vi: float | None = None
    ap: float | None = None
    dp: float | None = None
    along_wind: float | None = None
    across_wind: float | None = None

    def __post_init__(self):
        if self.pt is not None and self.pt not in _PRECIP_INDEX:
            raise InputError(f"unknown precipitation type {self.pt!r}")
        if self.hu is not None and not 0 <= self.hu <= 100:
            raise InputError(f"relative humidity {self.hu} outside [0, 100]")
        if self.vi is not None and self.vi < 0:
            raise InputError("visibility must be non-negative")
        if self.pi is not None and self.pi < 0:
            raise InputError("precipitation intensity must be non-negative")


class WeatherSeries:
    """Dense minute grid of one runway's weather; gaps stay missing."""

    def __init__(self, runway_id: str, start_minute: int, n_minutes: int):
        if n_minutes < 1:
            raise InputError("weather series needs at least one minute")
        self.runway_id = runway_id
        self.start_minute = int(start_minute)
        self.pt = np.full(n_minutes, -1, dtype=np.int8)
        self.observed = np.zeros(n_minutes, dtype=bool)
        for var in NUMERIC_VARIABLES:
            setattr(self, var, np.full(n_minutes, np.nan))

    @property
    def n_minutes(self) -> int:
        return len(self.pt)

    @property
    def end_minute(self) -> int:
        return self.start_minute + self.n_minutes - 1

    @classmethod
    def from_samples(cls, runway_id: str, samples: list[WeatherSample]) -> "WeatherSeries":
        if not samples:
            raise InputError("cannot build a weather series from zero samples")
        minutes = [to_epoch_minute(s.timestamp) for s in samples]
        if len(set(minutes)) != len(minutes):
            raise InputError(f"duplicate minutes for runway {runway_id}")
        start, end = min(minutes), max(minutes)
        series = cls(runway_id, start, end - start + 1)
        for s, minute in zip(samples, minutes):
            idx = minute - start
            series.observed[idx] = True
            if s.pt is not None:
                series.pt[idx] = _PRECIP_INDEX[s.pt]
            for var in NUMERIC_VARIABLES:
                val = getattr(s, var)
                if val is not None:
                    getattr(series, var)[idx] = float(val)
        return series

    def _index(self, minute: int) -> int | None:
        idx = minute - self.start_minute
        if 0 <= idx < self.n_minutes:
            return idx
        return None

    def value_at(self, variable: str, minute: int) -> float:
        if variable not in NUMERIC_VARIABLES:
            raise InputError(f"unknown weather variable {variable!r}")
        idx = self._index(minute)
        if idx is None:
            return float("nan")
        return float(getattr(self, variable)[idx])

    def pt_at(self, minute: int) -> int:
        idx = self._index(minute)
        if idx is None:
            return -1
        return int(self.pt[idx])

    def observed_near(self, minute: int, tolerance: int) -> bool:
        lo = max(minute - tolerance - self.start_minute, 0)
        hi = min(minute + tolerance - self.start_minute + 1, self.n_minutes)
        if lo >= hi:
            return False
        return bool(self.observed[lo:hi].any())


@dataclass
class SnowtamReport:
    """Runway condition report with layered contamination codes."""

    issued_at: datetime
    runway_id: str
    layers: tuple[int, ...]
    depth_mm: float = 0.0
    coverage_pct: float = 100.0
    sanded: bool = False
    chemicals: bool = False
    inspector_braking_action: int | None = None

    def __post_init__(self):
        layers = tuple(int(c) for c in self.layers)
        if not 1 <= len(layers) <= 3:
            raise InputError("a report carries between 1 and 3 layers")
        if any(c < 0 or c > 9 for c in layers):
            raise InputError(f"contamination codes must be 0..9, got {layers}")
        object.__setattr__(self, "layers", layers)
        if self.depth_mm < 0:
            raise InputError("depth_mm must be non-negative")
        if not 0 <= self.coverage_pct <= 100:
            raise InputError("coverage_pct must be in [0, 100]")
        if self.inspector_braking_action is not None and not (
            1 <= self.inspector_braking_action <= 5
        ):
            raise InputError("inspector braking action must be 1..5")

    def combo_key(self) -> str:
        return "".join(str(c) for c in sorted(self.layers))


@dataclass
class FeatureVector:
    values: np.ndarray
    schema: tuple[str, ...]
    schema_version: str = SCHEMA_VERSION

    def as_dict(self) -> dict:
        return dict(zip(self.schema, self.values.tolist()))


def schema_v1(include_report_age: bool = False) -> tuple[str, ...]:
    cols: list[str] = []
    cols += list(LAG_VARIABLES)                       # current numeric weather
    cols += ["along_wind", "across_wind"]
    cols += ["ta_abs", "tr_abs"]
    cols += [f"pt_{p}" for p in PRECIP_TYPES]
    for var in LAG_VARIABLES:
        cols += [f"{var}_lag{k}h" for k in LAG_HORIZONS]
    for var in ("ta_abs", "tr_abs"):
        cols += [f"{var}_lag{k}h" for k in LAG_HORIZONS]
    for var in ("along_wind", "across_wind"):
        cols += [f"{var}_lag{k}h" for k in LAG_HORIZONS]
    for var in DELTA_VARIABLES:
        cols += [f"{var}_delta{k}h" for k in LAG_HORIZONS]
    for ptype in ACCUM_TYPES:
        cols += [f"accum_{ptype}_{k}h" for k in LAG_HORIZONS]
    cols += [f"accum_current_{k}h" for k in LAG_HORIZONS]
    cols += ["runway_east"]
    cols += [f"contam_{c}" for c in CONTAMINATION_COMBOS]
    cols += ["contam_unknown"]
    cols += ["snowtam_depth_mm", "snowtam_coverage_pct",
             "snowtam_sanded", "snowtam_chemicals"]
    if include_report_age:
        cols += ["snowtam_age_min"]
    return tuple(cols)


def schema_checksum(schema: tuple[str, ...] | None = None) -> str:
    names = schema if schema is not None else schema_v1()
    return hashlib.sha256("\n".join(names).encode()).hexdigest()


def snowtam_column_names() -> tuple[str, ...]:
    """Columns derived from runway reports; blanked in met-only mode."""
    return tuple(
        [f"contam_{c}" for c in CONTAMINATION_COMBOS]
        + ["contam_unknown", "snowtam_depth_mm", "snowtam_coverage_pct",
           "snowtam_sanded", "snowtam_chemicals"]
    )


# ---------------------------------------------------------------- window ops

def _check_horizon(k: int):
    if k not in LAG_HORIZONS:
        raise InputError(f"lag horizon must be one of {LAG_HORIZONS}, got {k}")


def lag(series: WeatherSeries, variable: str, i: int, k: int) -> float:
    """Value k hours before minute i; NaN when absent."""
    _check_horizon(k)
    return series.value_at(variable, i - 60 * k)


def delta(series: WeatherSeries, variable: str, i: int, k: int) -> float:
    """Current value minus the value k hours earlier; NaN if either is missing."""
    _check_horizon(k)
    return series.value_at(variable, i) - series.value_at(variable, i - 60 * k)


def _accumulate(series: WeatherSeries, pt_code: int, i: int, k: int) -> float:
    lo = i - 60 * k - series.start_minute
    hi = i - series.start_minute
    lo_c = max(lo, 0)
    hi_c = min(hi, series.n_minutes - 1)
    if lo_c > hi_c:
        return 0.0
    window_pt = series.pt[lo_c:hi_c + 1]
    window_pi = series.pi[lo_c:hi_c + 1]
    mask = (window_pt == pt_code) & ~np.isnan(window_pi)
    return float(window_pi[mask].sum())


def accumulate_precip(series: WeatherSeries, ptype: str, i: int, k: int) -> float:
    """Sum of intensity over the closed window [i-60k, i] where pt matches.

    Missing minutes contribute zero. Units: (mm/h) summed per minute sample.
    """
    _check_horizon(k)
    if ptype not in ACCUM_TYPES:
        raise InputError(f"accumulation type must be one of {ACCUM_TYPES}")
    return _accumulate(series, _PRECIP_INDEX[ptype], i, k)


def one_hot_precip(pt: str | int) -> np.ndarray:
    """Nine binaries with exactly one set."""
    if isinstance(pt, str):
        if pt not in _PRECIP_INDEX:
            raise InputError(f"unknown precipitation type {pt!r}")
        code = _PRECIP_INDEX[pt]
    else:
        code = int(pt)
        if not 0 <= code < len(PRECIP_TYPES):
            raise InputError(f"precipitation code {code} out of range")
    out = np.zeros(len(PRECIP_TYPES))
    out[code] = 1.0
    return out


def one_hot_contamination(layers) -> np.ndarray:
    """30 combination binaries plus a trailing unknown-combination flag."""
    layers = tuple(int(c) for c in layers)
    if any(c < 0 or c > 9 for c in layers):
        raise InputError(f"contamination codes must be 0..9, got {layers}")
    key = "".join(str(c) for c in sorted(layers))
    out = np.zeros(len(CONTAMINATION_COMBOS) + 1)
    idx = _COMBO_INDEX.get(key)
    if idx is None:
        out[-1] = 1.0
    else:
        out[idx] = 1.0
    return out


# ---------------------------------------------------------------- assembly

def latest_report(reports: list[SnowtamReport], minute: int) -> SnowtamReport | None:
    """Most recent report issued at or before the given minute."""
    issued = [to_epoch_minute(r.issued_at) for r in reports]
    pos = bisect_right(issued, minute)
    if pos == 0:
        return None
    return reports[pos - 1]


def build_feature_vector(
    weather: WeatherSeries,
    snowtam: SnowtamReport | None,
    i: int,
    runway_id: str,
    include_snowtam: bool = True,
    runways: tuple[str, str] = ("RW1", "RW2"),
    include_report_age: bool = False,
) -> FeatureVector:
    """Assemble the schema-ordered vector for minute i on one runway."""
    if runway_id not in runways:
        raise InputError(f"unknown runway {runway_id!r}")
    if not weather.observed_near(i, STALE_LIMIT_MINUTES):
        raise StaleDataError(
            f"no weather observation within {STALE_LIMIT_MINUTES} minutes of "
            f"{from_epoch_minute(i).isoformat()} for runway {runway_id}"
        )
    values: list[float] = []
    for var in LAG_VARIABLES:
        values.append(weather.value_at(var, i))
    values.append(weather.value_at("along_wind", i))
    values.append(weather.value_at("across_wind", i))
    values.append(abs(weather.value_at("ta", i)))
    values.append(abs(weather.value_at("tr", i)))
    pt_code = weather.pt_at(i)
    if pt_code < 0:
        values += [np.nan] * len(PRECIP_TYPES)
    else:
        values += one_hot_precip(pt_code).tolist()
    for var in LAG_VARIABLES:
        for k in LAG_HORIZONS:
            values.append(lag(weather, var, i, k))
    for var in ("ta", "tr"):
        for k in LAG_HORIZONS:
            values.append(abs(lag(weather, var, i, k)))
    for var in ("along_wind", "across_wind"):
        for k in LAG_HORIZONS:
            values.append(lag(weather, var, i, k))
    for var in DELTA_VARIABLES:
        for k in LAG_HORIZONS:
            values.append(delta(weather, var, i, k))
    for ptype in ACCUM_TYPES:
        for k in LAG_HORIZONS:
            values.append(accumulate_precip(weather, ptype, i, k))
    for k in LAG_HORIZONS:
        if pt_code < 0:
            values.append(np.nan)
        elif pt_code == 0:
            values.append(0.0)
        else:
            values.append(_accumulate(weather, pt_code, i, k))
    values.append(float(runways.index(runway_id)))
    if include_snowtam and snowtam is not None:
        values += one_hot_contamination(snowtam.layers).tolist()
        values += [float(snowtam.depth_mm), float(snowtam.coverage_pct),
                   1.0 if snowtam.sanded else 0.0,
                   1.0 if snowtam.chemicals else 0.0]
        if include_report_age:
            values.append(float(i - to_epoch_minute(snowtam.issued_at)))
    else:
        values += [np.nan] * (len(CONTAMINATION_COMBOS) + 1 + 4)
        if include_report_age:
            values.append(np.nan)
    schema = schema_v1(include_report_age)
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (len(schema),):
        raise InputError(
            f"assembled {arr.shape[0]} values for a {len(schema)}-column schema"
        )
    version = SCHEMA_VERSION + "+age" if include_report_age else SCHEMA_VERSION
    return FeatureVector(values=arr, schema=schema, schema_version=version)


def build_feature_matrix(
    weather_by_runway: dict[str, WeatherSeries],
    snowtams_by_runway: dict[str, list[SnowtamReport]],
    minutes: list[int],
    runway_ids: list[str],
    include_snowtam: bool = True,
    runways: tuple[str, str] = ("RW1", "RW2"),
) -> FeatureMatrix:
    """Vectorized batch assembly; row p describes minutes[p] on runway_ids[p].

    Equivalent to calling build_feature_vector per row (asserted in tests)
    but computed with per-runway precomputed accumulations.
    """
    schema = schema_v1()
    n = len(minutes)
    if len(runway_ids) != n:
        raise InputError("minutes and runway_ids must have equal length")
    out = np.full((n, len(schema)), np.nan)
    rows_idx = np.arange(n)
    minutes_arr = np.asarray(minutes, dtype=np.int64)

    for rw in sorted(set(runway_ids)):
        sel = np.array([r == rw for r in runway_ids])
        if not sel.any():
            continue
        series = weather_by_runway.get(rw)
        if series is None:
            raise InputError(f"no weather series for runway {rw!r}")
        reports = sorted(
            snowtams_by_runway.get(rw, []), key=lambda r: to_epoch_minute(r.issued_at)
        )
        sub_minutes = minutes_arr[sel]
        sub_rows = rows_idx[sel]
        for minute, row in zip(sub_minutes, sub_rows):
            if not series.observed_near(int(minute), STALE_LIMIT_MINUTES):
                raise StaleDataError(
                    f"no weather observation within {STALE_LIMIT_MINUTES} minutes"
                    f" of minute {int(minute)} for runway {rw}"
                )
        block = _runway_block(series, reports, sub_minutes, rw, include_snowtam,
                              runways, schema)
        out[sub_rows] = block
    return FeatureMatrix(out, list(schema))


def _runway_block(series, reports, minutes, runway_id, include_snowtam,
                  runways, schema):
    n = len(minutes)
    cols: dict[str, np.ndarray] = {}
    idx = minutes - series.start_minute

    def at(var_arr, offset_minutes=0):
        pos = idx - offset_minutes
        ok = (pos >= 0) & (pos < series.n_minutes)
        vals = np.full(n, np.nan)
        vals[ok] = var_arr[pos[ok]]
        return vals

    for var in NUMERIC_VARIABLES:
        cols[var] = at(getattr(series, var))
    cols["ta_abs"] = np.abs(cols["ta"])
    cols["tr_abs"] = np.abs(cols["tr"])
    pt_now = np.full(n, -1, dtype=np.int64)
    ok = (idx >= 0) & (idx < series.n_minutes)
    pt_now[ok] = series.pt[idx[ok]]
    for ci, pname in enumerate(PRECIP_TYPES):
        col = np.where(pt_now < 0, np.nan, (pt_now == ci).astype(float))
        cols[f"pt_{pname}"] = col
    for var in LAG_VARIABLES:
        for k in LAG_HORIZONS:
            cols[f"{var}_lag{k}h"] = at(getattr(series, var), 60 * k)
    for var in ("ta", "tr"):
        for k in LAG_HORIZONS:
            cols[f"{var}_abs_lag{k}h"] = np.abs(at(getattr(series, var), 60 * k))
    for var in ("along_wind", "across_wind"):
        for k in LAG_HORIZONS:
            cols[f"{var}_lag{k}h"] = at(getattr(series, var), 60 * k)
    for var in DELTA_VARIABLES:
        for k in LAG_HORIZONS:
            cols[f"{var}_delta{k}h"] = cols[var] - at(getattr(series, var), 60 * k)

    # closed-window accumulations via prefix sums over the minute grid
    pi_filled = np.nan_to_num(series.pi, nan=0.0)
    cum_by_type = {}
    for ci in range(len(PRECIP_TYPES)):
        contrib = np.where(series.pt == ci, pi_filled, 0.0)
        cum = np.concatenate([[0.0], np.cumsum(contrib)])
        cum_by_type[ci] = cum

    def window_sum(ci, k):
        cum = cum_by_type[ci]
        hi_c = np.clip(idx + 1, 0, series.n_minutes)
        lo_c = np.clip(idx - 60 * k, 0, series.n_minutes)
        return cum[hi_c] - cum[np.minimum(lo_c, hi_c)]

    for pname in ACCUM_TYPES:
        ci = _PRECIP_INDEX[pname]
        for k in LAG_HORIZONS:
            cols[f"accum_{pname}_{k}h"] = window_sum(ci, k)
    for k in LAG_HORIZONS:
        col = np.full(n, np.nan)
        for ci in range(len(PRECIP_TYPES)):
            mask = pt_now == ci
            if not mask.any():
                continue
            col[mask] = 0.0 if ci == 0 else window_sum(ci, k)[mask]
        cols[f"accum_current_{k}h"] = col

    cols["runway_east"] = np.full(n, float(runways.index(runway_id)))

    contam = np.full((n, len(CONTAMINATION_COMBOS) + 1), np.nan)
    scalars = np.full((n, 4), np.nan)
    if include_snowtam and reports:
        issued = [to_epoch_minute(r.issued_at) for r in reports]
        for p in range(n):
            pos = bisect_right(issued, int(minutes[p]))
            if pos == 0:
                continue
            rep = reports[pos - 1]
            contam[p] = one_hot_contamination(rep.layers)
            scalars[p] = [rep.depth_mm, rep.coverage_pct,
                          1.0 if rep.sanded else 0.0,
                          1.0 if rep.chemicals else 0.0]
    for ci, cname in enumerate(CONTAMINATION_COMBOS):
        cols[f"contam_{cname}"] = contam[:, ci]
    cols["contam_unknown"] = contam[:, -1]
    cols["snowtam_depth_mm"] = scalars[:, 0]
    cols["snowtam_coverage_pct"] = scalars[:, 1]
    cols["snowtam_sanded"] = scalars[:, 2]
    cols["snowtam_chemicals"] = scalars[:, 3]

    return np.column_stack([cols[name] for name in schema])
