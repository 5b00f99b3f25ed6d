"""Rule- and regression-based comparison models.

Three assessors ship here: the additive seven-effect runway grading, the
windowed weather-scenario warning rules, and the linear surface-friction
regression for roads. Effect tables and scenario thresholds that the
source material does not publish are provided as clearly-marked default
configurations and can be replaced without code changes.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml

from .errors import ConfigError, InputError
from .features import LOOSE_CODES, PRECIP_TYPES, SOLID_CODES, WeatherSeries

__all__ = [
    "ContaminationGroup",
    "RunwayModelConfig",
    "ScenarioCondition",
    "ScenarioRule",
    "JugaCoeffs",
    "contamination_group",
    "runway_model",
    "scenario_snow",
    "scenario_model",
    "juga_cf",
    "default_runway_config",
    "default_scenario_rules",
]

SNOW_PT_SET = ("dry_snow", "wet_snow", "sleet", "drifting_snow")


class ContaminationGroup(enum.Enum):
    NOT_CONTAMINATED = "not_contaminated"
    DRY = "dry"
    WET = "wet"
    SOLID = "solid"
    LOOSE_AND_DRY = "loose_and_dry"
    SOLID_BASE = "solid_base"


_SINGLE_CODE_GROUP = {
    0: ContaminationGroup.NOT_CONTAMINATED,
    1: ContaminationGroup.WET,
    2: ContaminationGroup.WET,
    3: ContaminationGroup.SOLID,
    4: ContaminationGroup.DRY,
    5: ContaminationGroup.WET,
    6: ContaminationGroup.WET,
    7: ContaminationGroup.SOLID,
    8: ContaminationGroup.SOLID,
    9: ContaminationGroup.SOLID,
}


def contamination_group(layers) -> ContaminationGroup:
    """Slipperiness group of a layer combination.

    Single codes map directly. In layered combinations, dry snow over a
    solid base is the loose-and-dry group; wet overlays (damp, wet, wet
    snow, slush) over a solid base and stacked solids are the solid-base
    group. The full table lives in the module documentation.
    """
    layers = tuple(int(c) for c in layers)
    if not layers:
        raise InputError("at least one contamination code is required")
    if any(c < 0 or c > 9 for c in layers):
        raise InputError(f"unknown contamination code in {layers}")
    if len(layers) == 1:
        return _SINGLE_CODE_GROUP[layers[0]]
    codes = sorted(layers)
    top, rest = codes[0], codes[1:]
    if all(c in SOLID_CODES for c in codes):
        return ContaminationGroup.SOLID_BASE
    if all(c in SOLID_CODES for c in rest):
        if top == 4:
            return ContaminationGroup.LOOSE_AND_DRY
        return ContaminationGroup.SOLID_BASE
    # mixed non-solid stacks have no defined base; grade by the top layer
    return _SINGLE_CODE_GROUP[top]


# ---------------------------------------------------------------- runway model

@dataclass
class BreakpointTable:
    """Effect lookup: first row whose upper bound is >= the input wins."""

    bounds: list[float]
    effects: list[float]

    def __post_init__(self):
        if len(self.bounds) != len(self.effects) or not self.bounds:
            raise ConfigError("breakpoint table needs matching bounds and effects")
        if any(b > a for a, b in zip(self.bounds[1:], self.bounds[:-1])):
            raise ConfigError("breakpoint bounds must be non-decreasing")
        if not math.isinf(self.bounds[-1]):
            raise ConfigError("last breakpoint bound must be inf (exhaustive table)")

    def lookup(self, value: float) -> float:
        for bound, effect in zip(self.bounds, self.effects):
            if value <= bound:
                return effect
        raise ConfigError(f"no breakpoint covers {value}")


@dataclass
class RunwayModelConfig:
    """Seven-effect grading tables; x1 grades in [1,5], x2..x7 in [-2,2]."""

    group_grade: dict[ContaminationGroup, float]
    coverage: BreakpointTable
    depth_mm: BreakpointTable
    runway_temp: BreakpointTable
    humidity: BreakpointTable
    chemicals_effect: float
    sanded_effect: float
    low_coverage_auto_good: bool = False
    low_coverage_threshold_pct: float = 10.0

    def __post_init__(self):
        for group in ContaminationGroup:
            if group not in self.group_grade:
                raise ConfigError(f"group grade table misses {group.value}")
        for g, v in self.group_grade.items():
            if not 1 <= v <= 5:
                raise ConfigError(f"x1 grade for {g.value} outside [1, 5]")
        for name, table in (("coverage", self.coverage), ("depth", self.depth_mm),
                            ("runway_temp", self.runway_temp),
                            ("humidity", self.humidity)):
            for e in table.effects:
                if not -2 <= e <= 2:
                    raise ConfigError(f"{name} effect {e} outside [-2, 2]")
        for name, e in (("chemicals", self.chemicals_effect),
                        ("sanded", self.sanded_effect)):
            if not -2 <= e <= 2:
                raise ConfigError(f"{name} effect outside [-2, 2]")


def _table_from_doc(doc, name) -> BreakpointTable:
    rows = doc.get(name)
    if not isinstance(rows, list):
        raise ConfigError(f"runway model config misses table {name!r}")
    bounds = [float("inf") if r["max"] in ("inf", ".inf") else float(r["max"])
              for r in rows]
    return BreakpointTable(bounds, [float(r["effect"]) for r in rows])


def runway_config_from_dict(doc: dict) -> RunwayModelConfig:
    grades = doc.get("x1_group_grade")
    if not isinstance(grades, dict):
        raise ConfigError("runway model config misses x1_group_grade")
    try:
        group_grade = {ContaminationGroup(k): float(v) for k, v in grades.items()}
    except ValueError as exc:
        raise ConfigError(f"unknown contamination group: {exc}") from exc
    return RunwayModelConfig(
        group_grade=group_grade,
        coverage=_table_from_doc(doc, "x2_coverage_pct"),
        depth_mm=_table_from_doc(doc, "x3_depth_mm"),
        runway_temp=_table_from_doc(doc, "x4_runway_temp_c"),
        humidity=_table_from_doc(doc, "x5_humidity_pct"),
        chemicals_effect=float(doc.get("x6_chemicals_effect", 0.0)),
        sanded_effect=float(doc.get("x7_sanded_effect", 0.0)),
        low_coverage_auto_good=bool(doc.get("low_coverage_auto_good", False)),
        low_coverage_threshold_pct=float(doc.get("low_coverage_threshold_pct", 10.0)),
    )


def default_runway_config() -> RunwayModelConfig:
    text = resources.files("runwaygrip.data").joinpath("runway_model.yaml").read_text()
    return runway_config_from_dict(yaml.safe_load(text))


def runway_model(snowtam, weather_now: dict, config: RunwayModelConfig) -> int | None:
    """Seven-effect braking-action grade in 1..5, or None when inputs are missing.

    weather_now carries the current runway temperature ('tr') and relative
    humidity ('hu'). The assessment P = x1 + ... + x7 is rounded to the
    nearest integer and clamped to [1, 5].
    """
    if snowtam is None:
        return None
    tr = weather_now.get("tr")
    hu = weather_now.get("hu")
    if tr is None or hu is None or np.isnan(tr) or np.isnan(hu):
        return None
    if (config.low_coverage_auto_good
            and snowtam.coverage_pct < config.low_coverage_threshold_pct):
        return 5
    group = contamination_group(snowtam.layers)
    p = config.group_grade[group]
    p += config.coverage.lookup(snowtam.coverage_pct)
    p += config.depth_mm.lookup(snowtam.depth_mm)
    p += config.runway_temp.lookup(tr)
    p += config.humidity.lookup(hu)
    p += config.chemicals_effect if snowtam.chemicals else 0.0
    p += config.sanded_effect if snowtam.sanded else 0.0
    return int(min(5, max(1, round(p))))


# ---------------------------------------------------------------- scenarios

@dataclass
class ScenarioCondition:
    """One windowed predicate over a weather variable.

    aggregator 'all' demands the predicate at every minute of the window
    and fails when any minute is missing; 'any' demands at least one
    observed minute satisfying it.
    """

    variable: str
    aggregator: str
    lower: float | None = None
    upper: float | None = None
    member_of: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.aggregator not in ("all", "any"):
            raise ConfigError("aggregator must be 'all' or 'any'")
        if self.variable == "pt":
            if not self.member_of:
                raise ConfigError("pt conditions need a member_of set")
            for p in self.member_of:
                if p not in PRECIP_TYPES:
                    raise ConfigError(f"unknown precipitation type {p!r}")
        elif self.lower is None and self.upper is None:
            raise ConfigError(f"condition on {self.variable!r} needs bounds")
        if self.lower is not None and self.upper is not None \
                and self.lower > self.upper:
            raise ConfigError("condition bounds out of order")

    def evaluate(self, series: WeatherSeries, minute: int, window_hours: float) -> bool:
        lo_minute = minute - int(round(60 * window_hours))
        lo = lo_minute - series.start_minute
        hi = minute - series.start_minute
        if lo < 0 or hi >= series.n_minutes or hi < lo:
            return False  # window reaches outside the data: treated as missing
        if self.variable == "pt":
            window = series.pt[lo:hi + 1]
            codes = {PRECIP_TYPES.index(p) for p in self.member_of}
            matches = np.isin(window, list(codes))
            if self.aggregator == "any":
                return bool(matches.any())
            return bool(matches.all() and (window >= 0).all())
        window = getattr(series, self.variable)[lo:hi + 1]
        ok = np.ones(len(window), dtype=bool)
        if self.lower is not None:
            ok &= window >= self.lower
        if self.upper is not None:
            ok &= window <= self.upper
        missing = np.isnan(window)
        if self.aggregator == "any":
            return bool((ok & ~missing).any())
        return bool(not missing.any() and ok.all())


@dataclass
class ScenarioRule:
    name: str
    window_hours: float
    conditions: list[ScenarioCondition]

    def __post_init__(self):
        if self.window_hours <= 0:
            raise ConfigError("scenario window must be positive")
        if not self.conditions:
            raise ConfigError(f"scenario {self.name!r} has no conditions")

    def fires(self, series: WeatherSeries, minute: int) -> bool:
        return all(c.evaluate(series, minute, self.window_hours)
                   for c in self.conditions)


def scenario_snow(series: WeatherSeries, minute: int) -> bool:
    """The published snowfall scenario, hardcoded:

    snow-type precipitation at least once in the last four hours, air
    temperature within [-8, +2] throughout, runway temperature at or below
    zero throughout, and relative humidity within [85, 100] throughout.
    """
    rule = ScenarioRule("SNOW", 4.0, [
        ScenarioCondition("pt", "any", member_of=SNOW_PT_SET),
        ScenarioCondition("ta", "all", lower=-8.0, upper=2.0),
        ScenarioCondition("tr", "all", upper=0.0),
        ScenarioCondition("hu", "all", lower=85.0, upper=100.0),
    ])
    return rule.fires(series, minute)


def scenario_model(series: WeatherSeries, minute: int,
                   rules: list[ScenarioRule]) -> list[str]:
    """Names of all scenarios that fire, in rule order; slippery iff non-empty."""
    return [rule.name for rule in rules if rule.fires(series, minute)]


def _condition_from_doc(doc: dict) -> ScenarioCondition:
    return ScenarioCondition(
        variable=doc["variable"],
        aggregator=doc["aggregator"],
        lower=float(doc["lower"]) if "lower" in doc else None,
        upper=float(doc["upper"]) if "upper" in doc else None,
        member_of=tuple(doc["member_of"]) if "member_of" in doc else None,
    )


def scenario_rules_from_dict(doc: dict) -> list[ScenarioRule]:
    rules = []
    for rd in doc.get("scenarios", []):
        if not rd.get("enabled", True):
            continue
        rules.append(ScenarioRule(
            name=str(rd["name"]),
            window_hours=float(rd["window_hours"]),
            conditions=[_condition_from_doc(c) for c in rd["conditions"]],
        ))
    return rules


def default_scenario_rules() -> list[ScenarioRule]:
    text = resources.files("runwaygrip.data").joinpath("scenario_rules.yaml").read_text()
    return scenario_rules_from_dict(yaml.safe_load(text))


# ---------------------------------------------------------------- Juga model

class SurfaceState(enum.Enum):
    SNOWY_ICY = "snowy_icy"
    WET = "wet"
    DRY = "dry"


_TRANSFORMS = {
    "identity": lambda v: v,
    "sqrt": lambda v: math.sqrt(max(v, 0.0)),
    "log1p": lambda v: math.log1p(max(v, 0.0)),
}

CF_DRY = 0.82


@dataclass(frozen=True)
class JugaCoeffs:
    """Linear road-friction coefficients; the dry constant is fixed at 0.82."""

    a1: float | None = None
    b1: float | None = None
    c1: float | None = None
    d1: float | None = None
    a2: float | None = None
    d2: float | None = None
    transform: str = "identity"

    def __post_init__(self):
        if self.transform not in _TRANSFORMS:
            raise ConfigError(f"unknown transform {self.transform!r}")

    @property
    def cf_dry(self) -> float:
        return CF_DRY


def juga_cf(state: SurfaceState, snow_mm: float, ice_mm: float, water_mm: float,
            runway_temp: float, coeffs: JugaCoeffs) -> float:
    """Predicted friction coefficient for the given surface state, in [0, 1]."""
    for thickness in (snow_mm, ice_mm, water_mm):
        if thickness < 0:
            raise InputError("layer thicknesses must be non-negative")
    f = _TRANSFORMS[coeffs.transform]
    if state is SurfaceState.DRY:
        return coeffs.cf_dry
    if state is SurfaceState.WET:
        if coeffs.a2 is None or coeffs.d2 is None:
            raise ConfigError("wet-state prediction needs a2 and d2")
        cf = coeffs.a2 * f(water_mm) + coeffs.d2
    else:
        needed = (coeffs.a1, coeffs.b1, coeffs.c1, coeffs.d1)
        if any(c is None for c in needed):
            raise ConfigError("snowy/icy prediction needs a1, b1, c1 and d1")
        cf = (coeffs.a1 * f(snow_mm) + coeffs.b1 * f(ice_mm)
              + coeffs.c1 * f(runway_temp) + coeffs.d1)
    return float(min(1.0, max(0.0, cf)))
