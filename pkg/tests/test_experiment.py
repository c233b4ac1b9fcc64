import math
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from simultaneity.errors import ConfigValidationError
from simultaneity.experiment import (
    ChoicePlacement,
    Device,
    DeviceKind,
    ExperimentConfig,
    Mode,
    TimingClass,
    choice_events,
    classify_timing,
    frame_time_table,
    has_two_choice_sites,
    remote_order,
    single_particle_setup,
    two_particle_setup,
    validate,
    with_device_beta,
)
from simultaneity.kinematics import Event, Order, order_flip_boost


def rules(cfg):
    return {v.rule for v in validate(cfg)}


class TestValidate:
    def test_bundled_geometries_are_valid(self, photon_rest, pair_standard):
        assert validate(photon_rest) == []
        assert validate(pair_standard) == []

    def test_detector_speed_at_light_is_rejected(self, photon_rest):
        bad = with_device_beta(photon_rest, "D+", 1.0)
        violations = validate(bad)
        assert [v.field for v in violations] == ["devices[4].beta"]
        assert violations[0].rule == "frame speed violation"

    def test_preferred_frame_speed_checked(self, photon_rest):
        assert "frame speed violation" in rules(replace(photon_rest, preferred_frame_beta=-1.2))

    def test_single_particle_needs_two_detectors(self, photon_rest):
        cfg = replace(photon_rest, devices=photon_rest.devices[:-1])
        assert "device count violation" in rules(cfg)

    def test_two_particle_needs_both_sides(self, pair_standard):
        cfg = replace(pair_standard, devices=tuple(d for d in pair_standard.devices if d.side != "j"))
        assert "device count violation" in rules(cfg)

    def test_duplicate_ids(self, photon_rest):
        devices = photon_rest.devices + (Device("S", DeviceKind.DELAY_LINE, 2.0, 0.0),)
        assert "duplicate device id" in rules(replace(photon_rest, devices=devices))

    def test_value_ranges(self, pair_standard, photon_rest):
        assert "visibility range" in rules(replace(pair_standard, visibility=1.5))
        splitter = replace(photon_rest.device("BS"), reflectivity=-0.1)
        devices = tuple(splitter if d.id == "BS" else d for d in photon_rest.devices)
        assert "reflectivity range" in rules(replace(photon_rest, devices=devices))

    def test_detector_without_port(self, photon_rest):
        detector = replace(photon_rest.device("D+"), port=None)
        devices = tuple(detector if d.id == "D+" else d for d in photon_rest.devices)
        assert "detector port" in rules(replace(photon_rest, devices=devices))

    def test_every_violation_is_reported(self, photon_rest):
        cfg = replace(with_device_beta(photon_rest, "D-", 2.0), visibility=math.nan)
        assert {"frame speed violation", "visibility range"} <= rules(cfg)


class TestClassifyTiming:
    def test_detectors_at_rest_are_standard(self, photon_rest):
        assert classify_timing(photon_rest) is TimingClass.STANDARD_BEFORE_AFTER

    def test_moving_detector_gives_before_before(self, photon_moving):
        assert classify_timing(photon_moving) is TimingClass.BEFORE_BEFORE

    def test_boundary_speed(self, photon_boundary):
        assert classify_timing(photon_boundary) is TimingClass.BOUNDARY

    def test_both_frames_see_remote_first_is_after_after(self):
        # D(-) moving at 0.1 sees the D(+) arrival first; D(+) at rest sees D(-) first.
        cfg = single_particle_setup(beta_minus=0.1)
        assert classify_timing(cfg) is TimingClass.AFTER_AFTER

    def test_two_particle_splitters(self, pair_standard, pair_before_before):
        assert classify_timing(pair_standard) is TimingClass.STANDARD_BEFORE_AFTER
        assert classify_timing(pair_before_before) is TimingClass.BEFORE_BEFORE

    def test_two_particle_detector_placement_follows_splitters(self):
        cfg = two_particle_setup(beta_j=0.1, placement=ChoicePlacement.AT_DETECTOR)
        first, second = choice_events(cfg)
        assert (first.device_id, second.device_id) == ("Di+", "Dj+")
        assert classify_timing(cfg) is TimingClass.BEFORE_BEFORE

    def test_single_choice_site_has_no_timing(self, single_at_splitter):
        assert not has_two_choice_sites(single_at_splitter)
        with pytest.raises(ConfigValidationError) as exc:
            classify_timing(single_at_splitter)
        assert exc.value.violations[0].rule == "single choice site"

    def test_invalid_config_raises(self, photon_rest):
        with pytest.raises(ConfigValidationError):
            classify_timing(with_device_beta(photon_rest, "D+", 1.0))

    def test_timelike_choices_are_never_before_before(self):
        # Every device frame agrees on the order of timelike events.
        for beta in (-0.9, -0.5, 0.0, 0.5, 0.9):
            cfg = single_particle_setup(minus=(0.0, 0.0), plus=(10.0, 1.0), beta_minus=beta, beta_plus=-beta)
            assert classify_timing(cfg) is TimingClass.STANDARD_BEFORE_AFTER


def test_choice_events_order_and_frames(photon_moving):
    minus, plus = choice_events(photon_moving)
    assert (minus.device_id, plus.device_id) == ("D-", "D+")
    assert plus.frame.beta == 0.1
    assert (minus.event.t, minus.event.x) == (9.9, -1.0)


def test_frame_time_table_reports_every_device(photon_moving):
    rows = frame_time_table(photon_moving)
    assert [r["id"] for r in rows] == ["S", "BS", "DL", "D-", "D+"]
    moving = rows[-1]["times"]
    # In the moving detector's frame the D(-) arrival comes later.
    assert moving["D-"] > moving["D+"]
    rest = rows[0]["times"]
    assert rest == {"D-": 9.9, "D+": 10.0}


def test_config_is_frozen(photon_rest):
    with pytest.raises(AttributeError):
        photon_rest.mode = Mode.TWO_PARTICLE


def test_lookup_helpers(pair_standard):
    assert pair_standard.beam_splitter("j").id == "BSj"
    assert pair_standard.detector("-", "i").id == "Di-"
    assert len(pair_standard.by_kind(DeviceKind.DETECTOR)) == 4
    with pytest.raises(KeyError):
        pair_standard.device("nope")


def test_remote_order_convention(photon_rest):
    minus, plus = choice_events(photon_rest)
    assert remote_order(minus, plus) is Order.AFTER
    assert remote_order(plus, minus) is Order.BEFORE


def test_explicit_config_construction():
    cfg = ExperimentConfig(
        mode=Mode.SINGLE_PARTICLE,
        devices=(
            Device("src", DeviceKind.SOURCE, 0.0, 0.0),
            Device("bs", DeviceKind.BEAM_SPLITTER, 1.0, 0.0, reflectivity=0.3),
            Device("a", DeviceKind.DETECTOR, 5.0, -3.0, port="-"),
            Device("b", DeviceKind.DETECTOR, 5.0, 3.0, beta=0.5, port="+"),
        ),
    )
    assert validate(cfg) == []
    # Lab-simultaneous arrivals leave the detector at rest on the boundary.
    assert classify_timing(cfg) is TimingClass.BOUNDARY


coords = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False)
speeds = st.floats(min_value=-0.95, max_value=0.95, allow_nan=False)


@st.composite
def spacelike_pairs(draw):
    """Two events clearly off the light cone and clearly not lab-simultaneous."""
    t, x = draw(coords), draw(coords)
    dx = draw(st.floats(min_value=0.5, max_value=10.0)) * draw(st.sampled_from([-1.0, 1.0]))
    slope = draw(st.floats(min_value=0.05, max_value=0.9)) * draw(st.sampled_from([-1.0, 1.0]))
    return (t, x), (t + slope * abs(dx), x + dx)


class TestTimingProperties:
    @settings(max_examples=300, deadline=None)
    @given(spacelike_pairs())
    def test_flip_boost_reaches_both_exotic_classes(self, pair):
        a, b = pair
        flip = order_flip_boost(Event(*a), Event(*b))
        assert flip is not None
        # the device whose choice comes first in the lab moves for after-after
        if b[0] > a[0]:
            before_before, after_after = (0.0, flip), (flip, 0.0)
        else:
            before_before, after_after = (flip, 0.0), (0.0, flip)
        bb = single_particle_setup(minus=a, plus=b, beta_minus=before_before[0], beta_plus=before_before[1])
        aa = single_particle_setup(minus=a, plus=b, beta_minus=after_after[0], beta_plus=after_after[1])
        assert classify_timing(bb) is TimingClass.BEFORE_BEFORE
        assert classify_timing(aa) is TimingClass.AFTER_AFTER

    @settings(max_examples=300, deadline=None)
    @given(coords, coords, coords, coords, speeds, speeds)
    def test_swapping_sides_keeps_the_class(self, t_a, x_a, t_b, x_b, beta_a, beta_b):
        single = single_particle_setup(minus=(t_a, x_a), plus=(t_b, x_b), beta_minus=beta_a, beta_plus=beta_b)
        mirrored = single_particle_setup(minus=(t_b, x_b), plus=(t_a, x_a), beta_minus=beta_b, beta_plus=beta_a)
        assert classify_timing(single) is classify_timing(mirrored)

        pair = two_particle_setup(impact_i=(t_a, x_a), impact_j=(t_b, x_b), beta_i=beta_a, beta_j=beta_b)
        swapped = two_particle_setup(impact_i=(t_b, x_b), impact_j=(t_a, x_a), beta_i=beta_b, beta_j=beta_a)
        assert classify_timing(pair) is classify_timing(swapped)
