"""Friction estimation, the limited-landing rule, and the action scale."""
from datetime import datetime, timezone

import numpy as np
import pytest

from runwaygrip import friction as fr
from runwaygrip.errors import InputError

TD = datetime(2021, 2, 1, 9, 30, tzinfo=timezone.utc)


def make_landing(mu=0.1, mass=60_000.0, rho=1.225, aero=fr.AeroParams(),
                 limited=True, v0=65.0, brake_start=4, brake_end=40):
    """Inverse-generate telemetry from the equation of motion at constant mu."""
    samples = []
    v = v0
    for t in range(60):
        braking = brake_start <= t <= brake_end and v > 1.0
        rev = 0.8 if t < 10 else 0.0
        d_thrust = -(rev * aero.max_reverse_thrust)
        d_aero = 0.5 * rho * aero.drag_area * v * v
        lift = 0.5 * rho * aero.lift_area * v * v
        mu_t = mu if braking else 0.0
        d_brakes = mu_t * (mass * fr.G - lift)
        accel = (d_thrust - d_aero - d_brakes) / mass
        est = 0.02 * d_brakes
        req = est * (1.15 if (limited and braking) else 0.8) if braking else 0.0
        samples.append(fr.TelemetrySample(
            ground_speed=v, longitudinal_accel=accel,
            brake_pressure_requested=req, brake_pressure_estimated=est,
            reverse_thrust_setting=rev,
        ))
        v = max(v + accel, 0.5)
    return fr.LandingRecord("L1", "RW1", TD, samples, mass, rho)


def test_mu_constant_plant_recovered_exactly():
    for mu in (0.05, 0.12, 0.3):
        landing = make_landing(mu=mu)
        res = fr.estimate_mu_b(landing)
        assert res.mu_b == pytest.approx(mu, abs=1e-9)
        braked = res.braking_seconds
        np.testing.assert_allclose(res.mu_b_series[braked], mu, atol=1e-9)


def test_mu_simple_cases():
    # no thrust, no drag and lift, deceleration a = -0.1 g  ->  mu = 0.1
    aero = fr.AeroParams(drag_area=0.0, lift_area=0.0, max_reverse_thrust=0.0)
    samples = [
        fr.TelemetrySample(50.0, -0.1 * fr.G, 100.0, 200.0, 0.0)
        for _ in range(60)
    ]
    landing = fr.LandingRecord("L2", "RW1", TD, samples, 50_000.0)
    res = fr.estimate_mu_b(landing, aero)
    assert res.mu_b == pytest.approx(0.1)
    # zero deceleration, zero thrust and drag -> mu 0
    samples = [fr.TelemetrySample(50.0, 0.0, 100.0, 200.0, 0.0) for _ in range(60)]
    res0 = fr.estimate_mu_b(fr.LandingRecord("L3", "RW1", TD, samples, 50_000.0), aero)
    assert res0.mu_b == 0.0


def test_mu_scale_consistency():
    landing = make_landing(mu=0.14, mass=60_000.0, rho=1.225)
    res = fr.estimate_mu_b(landing)
    # doubling mass and all forces (via density and thrust) leaves mu unchanged
    aero2 = fr.AeroParams(max_reverse_thrust=2 * fr.AeroParams().max_reverse_thrust)
    landing2 = make_landing(mu=0.14, mass=120_000.0, rho=2 * 1.225, aero=aero2)
    res2 = fr.estimate_mu_b(landing2, aero2)
    assert res2.mu_b == pytest.approx(res.mu_b, rel=1e-9)


def test_mu_aggregate_min_option():
    landing = make_landing(mu=0.2)
    # corrupt one braking second toward lower mu
    landing.samples[10] = fr.TelemetrySample(
        landing.samples[10].ground_speed, landing.samples[10].longitudinal_accel + 0.5,
        landing.samples[10].brake_pressure_requested,
        landing.samples[10].brake_pressure_estimated,
        landing.samples[10].reverse_thrust_setting,
    )
    mean_res = fr.estimate_mu_b(landing, aggregate="mean")
    min_res = fr.estimate_mu_b(landing, aggregate="min")
    assert min_res.mu_b < mean_res.mu_b
    with pytest.raises(InputError):
        fr.estimate_mu_b(landing, aggregate="median")


def test_aerodynamic_singularity():
    aero = fr.AeroParams(lift_area=40.0)
    samples = [fr.TelemetrySample(300.0, -1.0, 50.0, 10.0, 0.0) for _ in range(60)]
    landing = fr.LandingRecord("L4", "RW1", TD, samples, 10_000.0, 1.225)
    with pytest.raises(InputError):
        fr.estimate_mu_b(landing, aero)


def test_friction_limited_rule():
    def with_exceed(seconds):
        samples = []
        for t in range(60):
            exceed = t in seconds
            samples.append(fr.TelemetrySample(
                40.0, -1.0, 150.0 if exceed else 50.0, 100.0, 0.0))
        return fr.LandingRecord("L5", "RW1", TD, samples, 50_000.0)

    assert fr.is_friction_limited(with_exceed({10, 11, 12}))
    assert not fr.is_friction_limited(with_exceed({10, 11, 20, 21}))
    assert not fr.is_friction_limited(with_exceed(set()))
    assert fr.is_friction_limited(with_exceed(set(range(5, 30))))


def test_braking_action_boundaries():
    assert fr.to_braking_action(0.0) == 0
    assert fr.to_braking_action(0.050) == 0
    assert fr.to_braking_action(np.nextafter(0.050, 1)) == 1
    assert fr.to_braking_action(0.075) == 1
    assert fr.to_braking_action(0.100) == 2
    assert fr.to_braking_action(0.150) == 3
    assert fr.to_braking_action(0.200) == 4
    assert fr.to_braking_action(np.nextafter(0.200, 1)) == 5
    assert fr.to_braking_action(0.25) == 5
    with pytest.raises(InputError):
        fr.to_braking_action(-0.01)


def test_braking_action_monotone_and_total():
    rng = np.random.default_rng(0)
    mus = np.sort(rng.random(200))
    actions = [fr.to_braking_action(float(mu)) for mu in mus]
    assert all(b >= a for a, b in zip(actions, actions[1:]))
    assert set(actions) <= set(range(6))


def test_braking_action_labels():
    assert fr.braking_action_label(0) == "NIL"
    assert fr.braking_action_label(3) == "Medium"
    assert fr.braking_action_label(5) == "Good"
    with pytest.raises(InputError):
        fr.braking_action_label(6)


def test_label_slippery_rules():
    r = fr.FrictionResult(np.zeros(60), 0.10, True, False)
    assert fr.label_slippery(r)
    r = fr.FrictionResult(np.zeros(60), 0.18, True, False)
    assert not fr.label_slippery(r)
    r = fr.FrictionResult(np.zeros(60), 0.05, False, False)
    assert not fr.label_slippery(r)


def test_slippery_implies_friction_limited():
    for mu in (0.05, 0.1, 0.2, 0.4):
        for limited in (True, False):
            landing = make_landing(mu=mu, limited=limited)
            res = fr.estimate_mu_b(landing)
            if res.slippery:
                assert res.friction_limited
            assert res.friction_limited == limited
            assert res.mu_b >= 0


def test_landing_validation():
    samples = [fr.TelemetrySample(1.0, 0.0, 0.0, 0.0, 0.0)] * 59
    with pytest.raises(InputError):
        fr.LandingRecord("bad", "RW1", TD, samples, 50_000.0)
    with pytest.raises(InputError):
        fr.LandingRecord("bad", "RW1", TD, samples + [samples[0]], -5.0)
    with pytest.raises(InputError):
        fr.TelemetrySample(-1.0, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(InputError):
        fr.TelemetrySample(1.0, 0.0, 0.0, 0.0, 1.4)
