import math

import pytest

import heliotrack as ht


def test_pointing_uncertainty():
    assert ht.pointing_uncertainty(ht.CameraModel.reference()) == pytest.approx(2.0, abs=0.01)
    assert ht.pointing_uncertainty(ht.CameraModel(1600, 1200, 3.76, 2.74, 2.35)) == pytest.approx(1.0, abs=0.01)


def test_reference_camera():
    cam = ht.CameraModel.reference()
    assert (cam.width_px, cam.height_px) == (800, 600)
    assert cam.principal == (400.0, 300.0)
    assert cam.focal_px == pytest.approx(500.0)


def test_rgb_to_hsl():
    h, s, l = ht.rgb_to_hsl(255, 0, 0)
    assert (h, s, l) == pytest.approx((0.0, 1.0, 0.5))
    assert ht.rgb_to_hsl(90, 150, 215)[2] == pytest.approx((215 + 90) / 510)


def test_sun_position_equinox_noon():
    # Scan for the daily maximum at lat 37, lon 0.
    day = ht.utc_timestamp(2026, 3, 20)
    best = max(ht.sun_position(37.0, 0.0, day + 60.0 * i)[1] for i in range(1440))
    assert best == pytest.approx(53.0, abs=0.5)
    with pytest.raises(ht.OutOfEpoch):
        ht.sun_position(37.0, 0.0, ht.utc_timestamp(1900, 1, 1))


def test_load_scenario_and_errors():
    cfg = ht.load_scenario("target_track")
    assert cfg["name"] == "target_track"
    assert cfg["ticks"] == round(cfg["duration_s"] / cfg["tick_s"])
    with pytest.raises(ht.ConfigError):
        ht.load_scenario("/nonexistent/x.yaml")
    with pytest.raises(ValueError):
        ht.load_scenario("/nonexistent/x.yaml")


def test_run_scenario_is_seeded():
    a = ht.run_scenario("calibration.sun_point")
    b = ht.run_scenario("calibration.sun_point")
    assert a["vision_csv"] == b["vision_csv"]
    assert a["ticks"] == ht.load_scenario("calibration.sun_point")["ticks"]
    assert a["vision_csv"].splitlines()[0].startswith("time_s")
    c = ht.run_scenario("calibration.sun_point", seed=12)
    assert c["vision_csv"] != a["vision_csv"]
    assert not math.isnan(a["azimuth"]["max_abs_diff_mrad"])
