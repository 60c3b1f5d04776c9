"""Exception types raised by the cloaking engine."""


class ClusterCloakError(Exception):
    """Base class for all engine errors."""


class AnonymityUnsatisfiable(ClusterCloakError):
    """The population cannot satisfy the largest requested anonymity level."""


class DuplicateUser(ClusterCloakError):
    pass


class UnknownUser(ClusterCloakError):
    pass


class NoResult(ClusterCloakError):
    """The location service has no point of interest of the requested category."""


class OracleViolation(ClusterCloakError):
    """The independent feasibility check rejected a cluster state."""

    def __init__(self, message, violations=(), bundle_dir=None):
        super().__init__(message)
        self.violations = list(violations)
        self.bundle_dir = bundle_dir
