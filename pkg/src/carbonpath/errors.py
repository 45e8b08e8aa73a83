"""Exception hierarchy shared by all carbonpath modules."""


class CarbonPathError(Exception):
    """Base class for every error raised by the toolkit."""


class TableError(CarbonPathError):
    """Technology tables failed to parse or violate an invariant."""


class DesignSpaceError(CarbonPathError):
    """A requested combination lies outside the explorable design space."""


class MappingError(CarbonPathError):
    """Workload tiling or traffic derivation cannot proceed."""


class InterconnectError(CarbonPathError):
    """Topology or bandwidth model cannot be evaluated."""


class MetricsError(CarbonPathError):
    """A metric is undefined for the given inputs."""
