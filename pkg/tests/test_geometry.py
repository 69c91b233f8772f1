import math

import pytest

from beamalign.errors import ConfigError, LimitViolationError
from beamalign.geometry import (
    MirrorControls,
    MisalignmentErrors,
    SystemGeometry,
)


def make_geometry(**overrides):
    base = dict(
        dd0=0.2, dd1=0.3, dd2=0.3, dd3=0.9,
        aperture_radius_1=11.207, aperture_radius_2=8.0,
        camera_half_field=20.0, control_limit=math.radians(5.27),
    )
    base.update(overrides)
    return SystemGeometry(**base)


def test_valid_geometry_accepted():
    g = make_geometry()
    assert g.path_to_a1 == pytest.approx(0.8)
    assert g.path_to_a2 == pytest.approx(1.7)


def test_dd2_zero_is_allowed():
    assert make_geometry(dd2=0.0).dd2 == 0.0


@pytest.mark.parametrize("field", ["dd0", "dd1", "dd3"])
def test_nonpositive_lengths_rejected(field):
    with pytest.raises(ConfigError):
        make_geometry(**{field: 0.0})


def test_negative_dd2_rejected():
    with pytest.raises(ConfigError):
        make_geometry(dd2=-0.1)


def test_control_limit_bounded_by_small_angle_validity():
    with pytest.raises(ConfigError):
        make_geometry(control_limit=math.radians(16.0))
    make_geometry(control_limit=math.radians(15.0))


def test_camera_field_must_exceed_aperture_radii():
    with pytest.raises(ConfigError):
        make_geometry(camera_half_field=11.0)
    with pytest.raises(ConfigError):
        make_geometry(aperture_radius_2=25.0)


def test_control_limit_check_names_the_axis():
    controls = MirrorControls(cm1_yaw=0.0, cm1_pitch=0.2)
    with pytest.raises(LimitViolationError) as err:
        controls.check_limits(math.radians(5.27))
    assert err.value.axis == "cm1_pitch"


def test_misalignment_angles_bounded():
    with pytest.raises(ConfigError):
        MisalignmentErrors(laser_dtheta=0.5)
    MisalignmentErrors(laser_dtheta=0.001, laser_dphi=-0.002)
