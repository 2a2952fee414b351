"""Exception hierarchy shared by all modules."""


class CoassocError(Exception):
    """Base class for every error raised by this package."""


class ChartDomainError(CoassocError):
    """A point lies outside (or too close to the edge of) a chart's domain."""


class DegenerateFormError(CoassocError):
    """A 3-form is not definite, so no metric can be recovered from it."""


class DegenerateSpanError(CoassocError):
    """Supplied vectors do not span a 4-plane."""


class NotInSubgroupError(CoassocError):
    """A matrix does not belong to the requested subgroup of SO(5)."""


class SliceError(CoassocError):
    """A point is not on the canonical slice required by a closed formula."""


class SingularLocusError(CoassocError):
    """The reduced ODE has no unique direction at this state."""


class DomainError(CoassocError):
    """Arguments lie outside the domain of a level-set function."""


class NoRootError(CoassocError):
    """A bracketing root search could not find a sign change."""


class ConfigError(CoassocError):
    """Invalid run configuration (file, environment or flags)."""
