"""Exception types shared across the package."""


class FaultMGError(Exception):
    """Base class for all package-specific errors."""


class InvalidPartition(FaultMGError):
    """Partition specification violates a structural constraint."""


class NoHealthyRegion(FaultMGError):
    """A fault set covers every subdomain; no intact region remains."""


class UnrecoverableInterface(FaultMGError):
    """An interface master has no surviving redundant copy.

    Cannot occur when the container invariants hold; raised to guard
    against corrupted container tables.
    """


class ScheduleConflict(FaultMGError):
    """A fault fires while the recovery of an earlier fault is pending."""


class PcgBreakdown(FaultMGError):
    """CG encountered nonpositive curvature; the operator is not SPD."""


class ConfigError(FaultMGError):
    """Configuration file violates the schema.

    The message starts with the dotted path of the offending field.
    """


class NonConvergence(FaultMGError):
    """A solve exhausted max_cycles without reaching its tolerance."""
