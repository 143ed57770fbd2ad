import numpy as np
import pytest

from parallax_dxt.geometry import ScanGeometry

#: Bragg angle of the martensite (321) reflection used throughout the tests.
THETA_321 = np.deg2rad(6.839)


@pytest.fixture
def full_scan_geometry():
    """Full-size scan: 200 translations x 200 angles over 360 deg."""
    return ScanGeometry.uniform(
        bragg_theta=THETA_321,
        det_distance=800.0,
        pixel_pitch=0.15,
        n_translations=200,
        translation_pitch=0.005,
        n_angles=200,
    )


@pytest.fixture
def small_geometry():
    """64-ray, 64-angle geometry for the slower forward/recon tests."""
    return ScanGeometry.uniform(
        bragg_theta=THETA_321,
        det_distance=800.0,
        pixel_pitch=0.15,
        n_translations=64,
        translation_pitch=0.005,
        n_angles=64,
    )
