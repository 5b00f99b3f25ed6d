"""Braking-coefficient estimation from landing telemetry.

The per-second coefficient comes from the longitudinal equation of motion
    m * a = D_thrust - D_aero - m * g * sin(eps) - D_brakes
with D_thrust = -(reverse_setting * max_reverse_thrust), so deployed
reversers retard. The coefficient is the wheel force over the net normal
load, mu = D_brakes / (m * g * cos(eps) - L), clamped at zero from below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .errors import InputError

G = 9.80665  # standard gravity, m/s^2

BRAKING_ACTION_LABELS = ("NIL", "Poor", "Poor-medium", "Medium", "Medium-good", "Good")
# upper bounds of the 0..4 bands; above the last bound is 5 (Good)
_BA_UPPER_BOUNDS = (0.050, 0.075, 0.100, 0.150, 0.200)

SLIPPERY_MU_LIMIT = 0.15
FRICTION_LIMITED_RUN_SECONDS = 3
SAMPLES_PER_LANDING = 60


@dataclass
class TelemetrySample:
    """One second of rollout telemetry."""

    ground_speed: float          # m/s
    longitudinal_accel: float    # m/s^2, negative while slowing
    brake_pressure_requested: float  # kPa
    brake_pressure_estimated: float  # kPa
    reverse_thrust_setting: float    # 0..1
    flap_position: float = 30.0      # degrees

    def __post_init__(self):
        if self.ground_speed < 0:
            raise InputError("ground speed must be non-negative")
        if not 0 <= self.reverse_thrust_setting <= 1:
            raise InputError("reverse thrust setting must be in [0, 1]")


@dataclass
class LandingRecord:
    landing_id: str
    runway_id: str
    touchdown_time: datetime
    samples: list[TelemetrySample]
    mass: float                  # kg
    air_density: float = 1.225   # kg/m^3

    def __post_init__(self):
        if len(self.samples) != SAMPLES_PER_LANDING:
            raise InputError(
                f"a landing carries exactly {SAMPLES_PER_LANDING} seconds of "
                f"telemetry, got {len(self.samples)}"
            )
        if self.mass <= 0:
            raise InputError("aircraft mass must be positive")
        if self.air_density <= 0:
            raise InputError("air density must be positive")


@dataclass(frozen=True)
class AeroParams:
    """Parametric aerodynamic and thrust stand-in used for synthetic data.

    The defaults are plumbing constants for a narrow-body airliner shape,
    not calibrated to any particular aircraft.
    """

    drag_area: float = 7.5           # C_D * A, m^2
    lift_area: float = 40.0          # C_L * A, m^2
    max_reverse_thrust: float = 50_000.0  # N
    slope: float = 0.0               # runway slope epsilon, radians

    def __post_init__(self):
        if self.drag_area < 0 or self.lift_area < 0 or self.max_reverse_thrust < 0:
            raise InputError("aerodynamic parameters must be non-negative")


@dataclass
class FrictionResult:
    mu_b_series: np.ndarray
    mu_b: float
    friction_limited: bool
    slippery: bool
    braking_seconds: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))


def estimate_mu_b(
    landing: LandingRecord,
    aero: AeroParams = AeroParams(),
    aggregate: str = "mean",
) -> FrictionResult:
    """Per-second braking coefficients and their per-landing summary.

    The summary aggregates over seconds with requested brake pressure
    above zero; `aggregate` picks the mean (default) or the minimum.
    """
    if aggregate not in ("mean", "min"):
        raise InputError("aggregate must be 'mean' or 'min'")
    m = landing.mass
    rho = landing.air_density
    eps = aero.slope
    mu_series = np.zeros(SAMPLES_PER_LANDING)
    braking = np.zeros(SAMPLES_PER_LANDING, dtype=bool)
    for t, s in enumerate(landing.samples):
        v = s.ground_speed
        d_thrust = -(s.reverse_thrust_setting * aero.max_reverse_thrust)
        d_aero = 0.5 * rho * aero.drag_area * v * v
        lift = 0.5 * rho * aero.lift_area * v * v
        d_brakes = d_thrust - d_aero - m * G * math.sin(eps) - m * s.longitudinal_accel
        normal = m * G * math.cos(eps) - lift
        braking[t] = s.brake_pressure_requested > 0
        if braking[t] and normal <= 0:
            raise InputError(
                f"landing {landing.landing_id}: lift exceeds weight at braking "
                f"second {t} (aerodynamic singularity)"
            )
        mu_series[t] = max(d_brakes / normal, 0.0) if normal > 0 else 0.0
    limited = is_friction_limited(landing)
    if braking.any():
        mu_vals = mu_series[braking]
        mu = float(np.mean(mu_vals) if aggregate == "mean" else np.min(mu_vals))
    else:
        mu = 0.0
    return FrictionResult(
        mu_b_series=mu_series,
        mu_b=mu,
        friction_limited=limited,
        slippery=limited and mu <= SLIPPERY_MU_LIMIT,
        braking_seconds=braking,
    )


def is_friction_limited(landing: LandingRecord) -> bool:
    """Requested brake pressure above the achievable estimate for >= 3
    consecutive seconds."""
    run = 0
    for s in landing.samples:
        if s.brake_pressure_requested > s.brake_pressure_estimated:
            run += 1
            if run >= FRICTION_LIMITED_RUN_SECONDS:
                return True
        else:
            run = 0
    return False


def to_braking_action(mu: float) -> int:
    """Friction coefficient to the 0..5 braking-action scale."""
    if mu < 0 or math.isnan(mu):
        raise InputError(f"friction coefficient must be non-negative, got {mu}")
    for action, upper in enumerate(_BA_UPPER_BOUNDS):
        if mu <= upper:
            return action
    return 5


def braking_action_label(action: int) -> str:
    if not 0 <= action <= 5:
        raise InputError("braking action must be 0..5")
    return BRAKING_ACTION_LABELS[action]


def label_slippery(result: FrictionResult) -> bool:
    """Friction limited with mu at or below 0.15."""
    return result.friction_limited and result.mu_b <= SLIPPERY_MU_LIMIT
