"""Exception and warning types shared across the package."""


class ParallaxDxtError(Exception):
    """Base class for all package-specific errors."""


class DegenerateCurve(ParallaxDxtError):
    """Curve has (near-)zero integrated intensity; its centroid is undefined."""


class ShapeOutOfBounds(ParallaxDxtError):
    """Requested phantom shape does not fit inside the voxel grid."""


class UnknownPreset(ParallaxDxtError):
    """Strain preset name not recognized."""


class OutsideSupport(ParallaxDxtError):
    """Voxel lies outside the phantom support mask."""


class GeometryMismatch(ParallaxDxtError):
    """Array dimensions are inconsistent with the scan geometry."""


class NonUniformAngles(ParallaxDxtError):
    """Operation requires a uniformly spaced rotation schedule."""


class MaskMismatch(ParallaxDxtError):
    """Validity masks of paired sinograms disagree."""


class EmptyInterior(ParallaxDxtError):
    """Erosion left no voxels to compute metrics over."""


class ZeroVariance(ParallaxDxtError):
    """Correlation undefined: fewer than two samples or zero variance."""


class RasterError(ParallaxDxtError):
    """Grid raster payload or sidecar header is malformed."""


class ConfigError(ParallaxDxtError):
    """Run configuration is invalid; message carries file and line context."""


class TruncatedPeak(UserWarning):
    """Peak leaks past the angle-grid edge, biasing its moments."""


class EmptyPhantom(UserWarning):
    """Phantom support mask contains no voxels."""


class NonHomogeneousWarning(UserWarning):
    """Parallax sinogram requested for a phantom with non-constant intensity."""


class DivisionFloor(UserWarning):
    """Weighted strain reconstruction hit the intensity floor inside the support."""
