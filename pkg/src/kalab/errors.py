"""Exception types shared across the package."""


class GeometryError(ValueError):
    """Invalid geometric input (bad metric, frame, form, ...)."""


class ImmersionRankError(GeometryError):
    """The differential of the map fails to have full rank at a point."""


class EigenPairingError(GeometryError):
    """Angle eigenvalues do not come in pairs; skew-adjointness is broken upstream."""


class AngleCrossingError(GeometryError):
    """Angle branches collide inside a finite-difference stencil."""

    def __init__(self, message, indices=()):
        super().__init__(message)
        self.indices = tuple(indices)


class CurvatureMismatchError(GeometryError):
    """Domain curvature computed two ways disagrees beyond tolerance."""

    def __init__(self, message, rm_fd=None, rm_gauss=None):
        super().__init__(message)
        self.rm_fd = rm_fd
        self.rm_gauss = rm_gauss


class FlowDivergenceError(RuntimeError):
    """The discrete flow could not find a volume-decreasing step."""


class ConfigError(ValueError):
    """Invalid run configuration (unknown ids, bad parameters, ...)."""
