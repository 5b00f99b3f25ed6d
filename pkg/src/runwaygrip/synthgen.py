"""Seeded synthetic generator for weather, runway reports, and landings.

A planted law maps true surface conditions to the available friction
coefficient: mu = clamp(base - alpha * accum_dry_snow_24h - beta * depth
- gamma * [tr < 0] * (hu / 100) + noise). Telemetry is inverse-generated
from the longitudinal equation of motion, so the friction estimator
recovers the planted coefficient exactly when telemetry noise is zero.
Pilot demand decides whether a landing challenges the available friction
(friction limited); realized friction is the smaller of demand and
availability.

Everything derives from one seed through named SeedSequence children, so
equal seeds give byte-identical outputs. Per-day generation could split
on the day index with the same scheme, but generation here is a single
sequential stream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone

import numpy as np
from numba import njit

from .errors import ConfigError
from .features import PRECIP_TYPES, SnowtamReport, WeatherSeries, from_epoch_minute
from .friction import G, AeroParams, LandingRecord, TelemetrySample

__all__ = [
    "PlantedLaw",
    "GeneratorConfig",
    "GroundTruth",
    "SyntheticDataset",
    "generate",
    "label_oracle",
]

_PT = {name: i for i, name in enumerate(PRECIP_TYPES)}


@dataclass(frozen=True)
class PlantedLaw:
    """Coefficients of the planted friction law."""

    base: float = 0.44
    alpha: float = 0.000175   # per (mm/h)-minute of dry snow accumulated over 24 h
    beta: float = 0.012      # per mm of surface depth
    gamma: float = 0.13      # cold-and-humid interaction weight
    noise_sd: float = 0.012
    mu_min: float = 0.02
    mu_max: float = 0.60


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int = 0
    n_days: int = 30
    landings_per_day: int = 50
    positive_rate_target: float = 0.0257
    rate_tolerance: float = 1.0
    weather_noise: float = 1.0
    telemetry_noise: float = 0.0
    pt_flip_prob: float = 0.0
    gap_prob: float = 0.0
    law: PlantedLaw = PlantedLaw()
    runways: tuple[str, str] = ("RW1", "RW2")
    start: datetime = datetime(2020, 11, 1, tzinfo=timezone.utc)

    def __post_init__(self):
        if self.n_days < 1:
            raise ConfigError("n_days must be at least 1")
        if self.landings_per_day < 1:
            raise ConfigError("landings_per_day must be at least 1")
        if not 0 < self.positive_rate_target < 1:
            raise ConfigError("positive_rate_target must be in (0, 1)")


@dataclass
class GroundTruth:
    """Per-landing planted quantities, never fed to training."""

    landing_id: str
    runway_id: str
    touchdown_minute: int
    mu_available: float
    mu_realized: float
    mu_demand: float
    friction_limited: bool
    accum_dry_snow_24h: float
    depth_mm: float
    cold_humid: float


@dataclass
class SyntheticDataset:
    config: GeneratorConfig
    weather: dict[str, WeatherSeries]
    snowtams: dict[str, list[SnowtamReport]]
    landings: list[LandingRecord]
    ground_truth: list[GroundTruth]
    achieved_positive_rate: float
    aero: AeroParams = field(default_factory=AeroParams)


@njit(cache=True)
def _ar1_core(eps, phi, init):
    out = np.empty_like(eps)
    acc = init
    for i in range(eps.shape[0]):
        acc = phi * acc + eps[i]
        out[i] = acc
    return out


def _ar1(rng, n, phi, sd):
    """Stationary AR(1) samples with the given marginal deviation."""
    innov_sd = sd * np.sqrt(1.0 - phi * phi)
    eps = rng.normal(0.0, innov_sd, size=n)
    return _ar1_core(eps, phi, rng.normal(0.0, sd))


@njit(cache=True)
def _surface_machine(pt, pi, tr, u_plow, u_sand, u_chem,
                     depth_out, wet_out, code1, code2, code3,
                     sanded_out, chem_out, hu):
    """Per-minute surface state: depth, wetness, ice, compaction, layers."""
    n = pt.shape[0]
    depth = 0.0
    film = 0.0
    ice = False
    compacted = False
    ruts = False
    snow_dry = True
    compact_timer = 0
    ruts_timer = 0
    ice_warm_timer = 0
    sanded_until = -1
    chem_until = -1
    for t in range(n):
        p = pt[t]
        intensity = pi[t]
        temp = tr[t]
        if (p == 3 or p == 4 or p == 5 or p == 8) and temp <= 0.5:
            depth += intensity / 6.0
            snow_dry = p != 3
        if p == 1:
            film += intensity / 60.0
            if temp > 0.5:
                depth -= intensity / 30.0
        if p == 6 and temp <= 0.2:
            ice = True
        if temp > 0.8:
            melt = 0.08 * (temp - 0.8)
            if depth > 0.0:
                depth -= melt
                film += melt / 10.0
        if film > 0.0:
            film -= 0.004
            if temp < -0.5 and film > 0.03:
                ice = True
                film = 0.0
        depth *= 0.9995  # settling and traffic wear
        if depth < 0.0:
            depth = 0.0
        if film < 0.0:
            film = 0.0
        # compaction and rutting under sustained cover
        if depth > 1.5:
            compact_timer += 1
        else:
            compact_timer = 0
        if compact_timer > 600:
            compacted = True
        if compacted and temp < -4.0:
            ruts_timer += 1
        else:
            ruts_timer = 0
        if ruts_timer > 1200:
            ruts = True
        if depth < 0.3 and temp > 0.5:
            compacted = False
        if temp > 1.0:
            ice_warm_timer += 1
        else:
            ice_warm_timer = 0
        if ice_warm_timer > 90:
            ice = False
            ruts = False
        # maintenance
        if depth > 10.0 and u_plow[t] < 1.0 / 45.0:
            depth *= 0.08
            if temp < -1.0 and u_sand[t] < 0.6:
                sanded_until = t + 240
        if (ice or (depth > 2.0 and -6.0 <= temp <= 0.0)) and u_chem[t] < 1.0 / 120.0:
            chem_until = t + 360
            depth *= 0.75
            if temp > -6.0:
                ice = False
        depth_out[t] = depth
        wet_out[t] = film
        sanded_out[t] = 1 if t <= sanded_until else 0
        chem_out[t] = 1 if t <= chem_until else 0
        # layer derivation: at most one loose over at most two solids
        loose = -1
        if depth > 0.4:
            loose = 4 if snow_dry else 5
        elif depth > 0.1 and film > 0.02:
            loose = 6
        s1 = 7 if ice else -1
        s2 = 8 if compacted else (9 if ruts else -1)
        if s1 < 0 and s2 >= 0:
            s1 = s2
            s2 = -1
        if loose >= 0:
            code1[t] = loose
            code2[t] = s1
            code3[t] = s2
        elif s1 >= 0:
            code1[t] = s1
            code2[t] = s2
            code3[t] = -1
        elif film > 0.05:
            code1[t] = 2
            code2[t] = -1
            code3[t] = -1
        elif film > 0.005:
            code1[t] = 1
            code2[t] = -1
            code3[t] = -1
        elif temp < -2.0 and hu[t] > 93.0 and p == 0:
            code1[t] = 3
            code2[t] = -1
            code3[t] = -1
        else:
            code1[t] = 0
            code2[t] = -1
            code3[t] = -1
    return 0


def _rolling_sum_24h(values):
    cum = np.concatenate([[0.0], np.cumsum(values)])
    n = len(values)
    idx = np.arange(n)
    lo = np.maximum(idx - 1440, 0)
    return cum[idx + 1] - cum[lo]


def _true_weather(cfg: GeneratorConfig, rng, n_min: int) -> dict:
    t = np.arange(n_min, dtype=np.float64)
    diurnal = np.sin(2 * np.pi * (t / 1440.0) - 2.2)
    ta = -2.5 + 1.4 * diurnal + _ar1(rng, n_min, 0.9995, 4.0) \
        + _ar1(rng, n_min, 0.97, 0.4)
    depression = np.abs(_ar1(rng, n_min, 0.999, 2.4)) + 0.15
    dp = ta - depression
    hu = np.clip(100.0 * np.exp(-depression / 12.0), 12.0, 100.0)
    tr = 0.85 * ta - 0.6 + 0.5 * diurnal + _ar1(rng, n_min, 0.997, 1.1)
    ap = 1013.0 + _ar1(rng, n_min, 0.9998, 9.0)
    along = _ar1(rng, n_min, 0.995, 3.5)
    across = _ar1(rng, n_min, 0.995, 2.5)
    wet_latent = _ar1(rng, n_min, 0.997, 1.0)
    spell = wet_latent > 1.3
    pi = np.where(spell, 0.2 + 1.1 * np.abs(_ar1(rng, n_min, 0.98, 1.0)), 0.0)
    pt = np.zeros(n_min, dtype=np.int8)
    rain = spell & (ta > 2.0)
    sleet = spell & (ta > 1.0) & (ta <= 2.0)
    wet_snow = spell & (ta > 0.2) & (ta <= 1.0)
    dry_snow = spell & (ta <= 0.2)
    pt[rain] = _PT["rain"]
    pt[sleet] = _PT["sleet"]
    pt[wet_snow] = _PT["wet_snow"]
    pt[dry_snow] = _PT["dry_snow"]
    wind_speed = np.sqrt(along**2 + across**2)
    pt[dry_snow & (wind_speed > 9.0)] = _PT["drifting_snow"]
    pt[rain & (tr < -0.3)] = _PT["freezing_rain"]
    pt[dry_snow & (pi < 0.32)] = _PT["snow_grains"]
    pt[spell & (ta > 4.0) & (wet_latent > 3.4)] = _PT["hail"]
    vi = np.clip(
        350.0 + 8800.0 / (1.0 + np.exp(-(depression - 1.1) * 2.2))
        - spell * (1500.0 + 450.0 * pi),
        30.0, 10000.0,
    )
    return {
        "ta": ta, "tr": tr, "hu": hu, "dp": dp, "ap": ap, "vi": vi,
        "pi": pi, "pt": pt, "along_wind": along, "across_wind": across,
    }


def _measured_series(cfg, rng, true_w, tr_runway, runway_id, start_minute) -> WeatherSeries:
    n_min = len(true_w["ta"])
    s = WeatherSeries(runway_id, start_minute, n_min)
    noise = cfg.weather_noise
    scale = {"ta": 0.15, "tr": 0.15, "hu": 1.0, "dp": 0.2, "ap": 0.3,
             "vi": 120.0, "along_wind": 0.3, "across_wind": 0.3}
    for var in ("ta", "hu", "dp", "ap", "vi", "along_wind", "across_wind"):
        measured = true_w[var] + rng.normal(0.0, scale[var] * noise, size=n_min) \
            if noise > 0 else true_w[var].copy()
        getattr(s, var)[:] = measured
    tr_measured = tr_runway + (rng.normal(0.0, scale["tr"] * noise, size=n_min)
                               if noise > 0 else 0.0)
    s.tr[:] = tr_measured
    pi = true_w["pi"] * (1.0 + (rng.normal(0.0, 0.05 * noise, size=n_min)
                                if noise > 0 else 0.0))
    s.pi[:] = np.maximum(pi, 0.0)
    np.clip(s.hu, 0.0, 100.0, out=s.hu)
    np.clip(s.vi, 0.0, None, out=s.vi)
    pt = true_w["pt"].copy()
    if cfg.pt_flip_prob > 0:
        flips = rng.random(n_min) < cfg.pt_flip_prob
        pt[flips] = rng.integers(0, len(PRECIP_TYPES), size=int(flips.sum()))
    s.pt[:] = pt
    s.observed[:] = True
    if cfg.gap_prob > 0:
        gaps = rng.random(n_min) < cfg.gap_prob
        s.observed[gaps] = False
        s.pt[gaps] = -1
        for var in ("pi", "ta", "tr", "hu", "vi", "ap", "dp",
                    "along_wind", "across_wind"):
            getattr(s, var)[gaps] = np.nan
    return s


def _issue_snowtams(cfg, rng, runway_id, start_minute, depth, code1, code2,
                    code3, sanded, chem, mu_avail) -> list[SnowtamReport]:
    n_min = len(depth)
    key = (code1.astype(np.int32) + 1) * 121 + (code2.astype(np.int32) + 1) * 11 \
        + (code3.astype(np.int32) + 1)
    band = np.floor(depth / 3.0).astype(np.int64)
    change = np.zeros(n_min, dtype=bool)
    change[1:] = (key[1:] != key[:-1]) | (band[1:] != band[:-1])
    daily = (np.arange(start_minute, start_minute + n_min) % 1440) == 330
    candidates = np.where(change | daily)[0]
    reports = []
    last = -10_000
    for t in candidates:
        if t - last < 30:
            continue
        last = int(t)
        layers = [int(code1[t])]
        if code2[t] >= 0:
            layers.append(int(code2[t]))
        if code3[t] >= 0:
            layers.append(int(code3[t]))
        d = float(np.round(depth[t], 1))
        if layers == [0]:
            coverage = 0.0
        else:
            coverage = float(np.clip(
                35.0 + 70.0 * np.tanh(depth[t] / 2.0) + rng.normal(0, 6.0),
                5.0, 100.0))
        ba = min(5, max(1, int(np.digitize(mu_avail[t],
                                           [0.05, 0.075, 0.1, 0.15, 0.2]))))
        ba = min(5, max(1, ba + int(rng.integers(-1, 2))))
        reports.append(SnowtamReport(
            issued_at=from_epoch_minute(start_minute + int(t)),
            runway_id=runway_id,
            layers=tuple(sorted(layers)),
            depth_mm=d,
            coverage_pct=coverage,
            sanded=bool(sanded[t]),
            chemicals=bool(chem[t]),
            inspector_braking_action=ba,
        ))
    return reports


def _make_landing(lid, runway_id, touchdown, mu_real, limited, rng, aero,
                  telemetry_noise) -> LandingRecord:
    mass = float(np.clip(rng.normal(62_000.0, 4_000.0), 48_000.0, 79_000.0))
    rho = float(np.clip(rng.normal(1.29, 0.03), 1.15, 1.40))
    v = float(rng.normal(68.0, 3.0))
    brake_start = int(rng.integers(3, 7))
    k_pressure = 0.02
    samples = []
    for t in range(60):
        rev = 0.85 if t < 8 else (0.3 if t < 12 else 0.0)
        braking = t >= brake_start and v > 12.0
        mu_t = mu_real if braking else 0.0
        d_thrust = -(rev * aero.max_reverse_thrust)
        d_aero = 0.5 * rho * aero.drag_area * v * v
        lift = 0.5 * rho * aero.lift_area * v * v
        d_brakes = mu_t * (mass * G - lift)
        accel = (d_thrust - d_aero - d_brakes) / mass
        est = k_pressure * d_brakes
        if braking:
            req = est * 1.15 if limited else est * 0.85
            req = max(req, 1.0)
        else:
            req = 0.0
        samples.append(TelemetrySample(
            ground_speed=v, longitudinal_accel=accel,
            brake_pressure_requested=req, brake_pressure_estimated=est,
            reverse_thrust_setting=rev,
        ))
        v = max(v + accel, 2.0)
    if telemetry_noise > 0:
        noisy = []
        for s in samples:
            noisy.append(TelemetrySample(
                ground_speed=max(s.ground_speed + rng.normal(0, 0.2 * telemetry_noise), 0.0),
                longitudinal_accel=s.longitudinal_accel + rng.normal(0, 0.02 * telemetry_noise),
                brake_pressure_requested=max(
                    s.brake_pressure_requested + rng.normal(0, 1.0 * telemetry_noise), 0.0),
                brake_pressure_estimated=max(
                    s.brake_pressure_estimated + rng.normal(0, 1.0 * telemetry_noise), 0.0),
                reverse_thrust_setting=s.reverse_thrust_setting,
            ))
        samples = noisy
    return LandingRecord(lid, runway_id, touchdown, samples, mass, rho)


def generate(cfg: GeneratorConfig) -> SyntheticDataset:
    """Build one deterministic dataset per the configuration."""
    root = np.random.SeedSequence([int(cfg.seed) & 0x7FFFFFFF, 0x5EED])
    kids = root.spawn(6)
    rng_weather = np.random.default_rng(kids[0])
    rng_surface = np.random.default_rng(kids[1])
    rng_reports = np.random.default_rng(kids[2])
    rng_schedule = np.random.default_rng(kids[3])
    rng_telemetry = np.random.default_rng(kids[4])
    rng_law = np.random.default_rng(kids[5])

    n_min = (cfg.n_days + 1) * 1440  # one warmup day before landings begin
    start_minute = int(cfg.start.timestamp() // 60)
    true_w = _true_weather(cfg, rng_weather, n_min)
    law = cfg.law
    aero = AeroParams()

    weather: dict[str, WeatherSeries] = {}
    snowtams: dict[str, list[SnowtamReport]] = {}
    mu_avail_by_runway: dict[str, np.ndarray] = {}
    truth_arrays: dict[str, dict] = {}

    for r_idx, runway_id in enumerate(cfg.runways):
        tr_true = true_w["tr"] + (0.15 if r_idx == 0 else -0.15)
        depth = np.empty(n_min)
        wet = np.empty(n_min)
        code1 = np.empty(n_min, dtype=np.int8)
        code2 = np.empty(n_min, dtype=np.int8)
        code3 = np.empty(n_min, dtype=np.int8)
        sanded = np.empty(n_min, dtype=np.int8)
        chem = np.empty(n_min, dtype=np.int8)
        _surface_machine(
            true_w["pt"], true_w["pi"], tr_true,
            rng_surface.random(n_min), rng_surface.random(n_min),
            rng_surface.random(n_min),
            depth, wet, code1, code2, code3, sanded, chem, true_w["hu"],
        )
        acc_dry = _rolling_sum_24h(
            np.where(true_w["pt"] == _PT["dry_snow"], true_w["pi"], 0.0))
        cold_humid = (tr_true < 0.0) * (true_w["hu"] / 100.0)
        noise = _ar1(rng_law, n_min, 0.995, law.noise_sd)
        mu_avail = np.clip(
            law.base - law.alpha * acc_dry - law.beta * depth
            - law.gamma * cold_humid + noise,
            law.mu_min, law.mu_max,
        )
        mu_avail_by_runway[runway_id] = mu_avail
        truth_arrays[runway_id] = {
            "acc_dry": acc_dry, "depth": depth, "cold_humid": cold_humid,
        }
        weather[runway_id] = _measured_series(
            cfg, rng_weather, true_w, tr_true, runway_id, start_minute)
        snowtams[runway_id] = _issue_snowtams(
            cfg, rng_reports, runway_id, start_minute, depth, code1, code2,
            code3, sanded, chem, mu_avail)

    landings: list[LandingRecord] = []
    truths: list[GroundTruth] = []
    counter = 0
    for day in range(1, cfg.n_days + 1):
        offsets = np.sort(rng_schedule.integers(
            300, 1410, size=cfg.landings_per_day))
        sides = rng_schedule.integers(0, 2, size=cfg.landings_per_day)
        for off, side in zip(offsets, sides):
            minute_idx = day * 1440 + int(off)
            runway_id = cfg.runways[int(side)]
            mu_avail = float(mu_avail_by_runway[runway_id][minute_idx])
            mu_demand = float(np.clip(rng_schedule.normal(0.165, 0.05),
                                      0.05, 0.45))
            limited = mu_demand > mu_avail
            mu_real = min(mu_demand, mu_avail)
            lid = f"L{counter:06d}"
            counter += 1
            touchdown = from_epoch_minute(start_minute + minute_idx)
            landings.append(_make_landing(
                lid, runway_id, touchdown, mu_real, limited, rng_telemetry,
                aero, cfg.telemetry_noise))
            arrs = truth_arrays[runway_id]
            truths.append(GroundTruth(
                landing_id=lid, runway_id=runway_id,
                touchdown_minute=start_minute + minute_idx,
                mu_available=mu_avail, mu_realized=mu_real,
                mu_demand=mu_demand, friction_limited=bool(limited),
                accum_dry_snow_24h=float(arrs["acc_dry"][minute_idx]),
                depth_mm=float(arrs["depth"][minute_idx]),
                cold_humid=float(arrs["cold_humid"][minute_idx]),
            ))

    slippery, _ = label_oracle(truths)
    achieved = float(np.mean(slippery))
    n_landings = len(truths)
    if n_landings >= 2000:
        rel = abs(achieved - cfg.positive_rate_target) / cfg.positive_rate_target
        if achieved == 0.0 or rel > cfg.rate_tolerance:
            raise ConfigError(
                f"positive-rate target {cfg.positive_rate_target:.4f} is not "
                f"reachable with this law: achieved {achieved:.4f}"
            )
    return SyntheticDataset(
        config=cfg, weather=weather, snowtams=snowtams, landings=landings,
        ground_truth=truths, achieved_positive_rate=achieved, aero=aero,
    )


def label_oracle(ground_truth: list[GroundTruth]):
    """Classification and regression targets from the planted quantities.

    Returns (slippery, mu_regression) arrays; the regression target is NaN
    for landings that are not friction limited (excluded from that task).
    """
    slippery = np.array(
        [g.friction_limited and g.mu_realized <= 0.15 for g in ground_truth],
        dtype=bool,
    )
    mu = np.array(
        [g.mu_realized if g.friction_limited else np.nan for g in ground_truth])
    return slippery, mu
