"""CSV readers and writers for the on-disk interchange formats.

Timestamps are ISO-8601 UTC; an empty cell is a missing value. Floats are
written with repr, so a read of a write restores the exact binary64
values.
"""
from __future__ import annotations

import csv
from datetime import datetime, timezone

import numpy as np

from .errors import InputError
from .features import (
    NUMERIC_VARIABLES,
    PRECIP_TYPES,
    SnowtamReport,
    WeatherSample,
    WeatherSeries,
    from_epoch_minute,
)
from .friction import SAMPLES_PER_LANDING, LandingRecord, TelemetrySample
from .gbt import FeatureMatrix

WEATHER_HEADER = ["timestamp", "runway", "pt", "pi", "ta", "tr", "hu", "vi",
                  "ap", "dp", "along_wind", "across_wind"]
SNOWTAM_HEADER = ["issued_at", "runway", "layers", "depth_mm", "coverage_pct",
                  "sanded", "chemicals", "inspector_ba"]
LANDING_HEADER = ["landing_id", "second", "speed", "accel", "brake_req",
                  "brake_est", "rev_thrust", "flap", "mass", "rho", "runway",
                  "touchdown_time"]
GROUND_TRUTH_HEADER = ["landing_id", "runway", "touchdown_time", "mu_available",
                       "mu_realized", "mu_demand", "friction_limited",
                       "accum_dry_snow_24h", "depth_mm", "cold_humid"]


def format_timestamp(ts: datetime) -> str:
    ts = ts.astimezone(timezone.utc) if ts.tzinfo else ts.replace(tzinfo=timezone.utc)
    return ts.strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(text: str) -> datetime:
    try:
        return datetime.fromisoformat(text.replace("Z", "+00:00")).astimezone(
            timezone.utc)
    except ValueError as exc:
        raise InputError(f"bad timestamp {text!r}: {exc}") from exc


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and np.isnan(value):
        return ""
    return repr(float(value))


def _parse_float(cell: str) -> float | None:
    if cell == "":
        return None
    try:
        return float(cell)
    except ValueError as exc:
        raise InputError(f"bad numeric cell {cell!r}") from exc


# ---------------------------------------------------------------- weather

def write_weather_csv(weather: dict[str, WeatherSeries], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(WEATHER_HEADER)
        for runway in sorted(weather):
            s = weather[runway]
            for idx in range(s.n_minutes):
                if not s.observed[idx]:
                    continue
                minute = s.start_minute + idx
                pt = "" if s.pt[idx] < 0 else PRECIP_TYPES[s.pt[idx]]
                row = [format_timestamp(from_epoch_minute(minute)), runway, pt]
                row += [_fmt(float(getattr(s, v)[idx])) for v in NUMERIC_VARIABLES]
                w.writerow(row)


def read_weather_csv(path) -> dict[str, WeatherSeries]:
    samples: dict[str, list[WeatherSample]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != WEATHER_HEADER:
            raise InputError(f"unexpected weather header {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(WEATHER_HEADER):
                raise InputError(f"weather row {line_no} has {len(row)} cells")
            ts = parse_timestamp(row[0])
            kwargs = {v: _parse_float(c) for v, c in zip(NUMERIC_VARIABLES, row[3:])}
            sample = WeatherSample(ts, row[1], pt=row[2] or None, **kwargs)
            samples.setdefault(row[1], []).append(sample)
    return {rw: WeatherSeries.from_samples(rw, rows)
            for rw, rows in samples.items()}


# ---------------------------------------------------------------- snowtam

def write_snowtam_csv(snowtams: dict[str, list[SnowtamReport]], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(SNOWTAM_HEADER)
        for runway in sorted(snowtams):
            for r in snowtams[runway]:
                w.writerow([
                    format_timestamp(r.issued_at), runway,
                    "".join(str(c) for c in r.layers),
                    _fmt(r.depth_mm), _fmt(r.coverage_pct),
                    int(r.sanded), int(r.chemicals),
                    "" if r.inspector_braking_action is None
                    else r.inspector_braking_action,
                ])


def read_snowtam_csv(path) -> dict[str, list[SnowtamReport]]:
    out: dict[str, list[SnowtamReport]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SNOWTAM_HEADER:
            raise InputError(f"unexpected snowtam header {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(SNOWTAM_HEADER):
                raise InputError(f"snowtam row {line_no} has {len(row)} cells")
            if not row[2].isdigit():
                raise InputError(f"snowtam row {line_no}: bad layers {row[2]!r}")
            report = SnowtamReport(
                issued_at=parse_timestamp(row[0]),
                runway_id=row[1],
                layers=tuple(int(c) for c in row[2]),
                depth_mm=_parse_float(row[3]) or 0.0,
                coverage_pct=_parse_float(row[4]) if row[4] != "" else 100.0,
                sanded=row[5] == "1",
                chemicals=row[6] == "1",
                inspector_braking_action=int(row[7]) if row[7] != "" else None,
            )
            out.setdefault(row[1], []).append(report)
    for rows in out.values():
        rows.sort(key=lambda r: r.issued_at)
    return out


# ---------------------------------------------------------------- landings

def write_landings_csv(landings: list[LandingRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(LANDING_HEADER)
        for rec in landings:
            td = format_timestamp(rec.touchdown_time)
            for t, s in enumerate(rec.samples):
                w.writerow([
                    rec.landing_id, t, _fmt(s.ground_speed),
                    _fmt(s.longitudinal_accel),
                    _fmt(s.brake_pressure_requested),
                    _fmt(s.brake_pressure_estimated),
                    _fmt(s.reverse_thrust_setting), _fmt(s.flap_position),
                    _fmt(rec.mass), _fmt(rec.air_density), rec.runway_id, td,
                ])


def read_landings_csv(path) -> list[LandingRecord]:
    rows_by_id: dict[str, list] = {}
    meta: dict[str, tuple] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != LANDING_HEADER:
            raise InputError(f"unexpected landings header {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(LANDING_HEADER):
                raise InputError(f"landing row {line_no} has {len(row)} cells")
            lid = row[0]
            sample = TelemetrySample(
                ground_speed=_parse_float(row[2]) or 0.0,
                longitudinal_accel=_parse_float(row[3]) or 0.0,
                brake_pressure_requested=_parse_float(row[4]) or 0.0,
                brake_pressure_estimated=_parse_float(row[5]) or 0.0,
                reverse_thrust_setting=_parse_float(row[6]) or 0.0,
                flap_position=_parse_float(row[7]) or 0.0,
            )
            rows_by_id.setdefault(lid, []).append((int(row[1]), sample))
            meta[lid] = (float(row[8]), float(row[9]), row[10],
                         parse_timestamp(row[11]))
    landings = []
    for lid, pairs in rows_by_id.items():
        pairs.sort(key=lambda p: p[0])
        if [p[0] for p in pairs] != list(range(SAMPLES_PER_LANDING)):
            raise InputError(f"landing {lid}: expected seconds 0..59")
        mass, rho, runway, td = meta[lid]
        landings.append(LandingRecord(
            landing_id=lid, runway_id=runway, touchdown_time=td,
            samples=[p[1] for p in pairs], mass=mass, air_density=rho,
        ))
    landings.sort(key=lambda r: (r.touchdown_time, r.landing_id))
    return landings


# ---------------------------------------------------------------- features

def write_features_csv(matrix: FeatureMatrix, path, meta: dict | None = None) -> None:
    """Schema-ordered columns; optional leading meta columns (id, label...)."""
    meta = meta or {}
    n = matrix.n_rows
    for k, vals in meta.items():
        if len(vals) != n:
            raise InputError(f"meta column {k!r} length mismatch")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(meta.keys()) + list(matrix.column_names))
        for i in range(n):
            row = [meta[k][i] for k in meta]
            row += [_fmt(v) for v in matrix.values[i]]
            w.writerow(row)


def read_features_csv(path, n_meta: int = 0):
    """Returns (meta_rows, FeatureMatrix); the first n_meta columns are meta."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) <= n_meta:
            raise InputError("features file has no data columns")
        names = header[n_meta:]
        meta_names = header[:n_meta]
        meta_rows = []
        data = []
        for row in reader:
            if len(row) != len(header):
                raise InputError("features row width mismatch")
            meta_rows.append(dict(zip(meta_names, row[:n_meta])))
            data.append([np.nan if c == "" else float(c) for c in row[n_meta:]])
    if not data:
        raise InputError("features file is empty")
    return meta_rows, FeatureMatrix(np.asarray(data, dtype=np.float64), names)
