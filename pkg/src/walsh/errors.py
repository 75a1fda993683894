"""Exceptions raised by the walsh library."""


class WalshError(Exception):
    """Base class for all library errors."""


class GridMismatch(WalshError):
    """Two objects live on different grids or value shapes disagree."""


class TileOutsideGrid(WalshError):
    """A tile or interval cannot be resolved by the grid."""


class IdentityViolation(WalshError):
    """A structural identity failed; this indicates an implementation bug."""


class NotATwoTree(WalshError):
    """An operation that needs a 2-tree received something else."""


class NonTermination(WalshError):
    """A greedy loop exceeded its selection budget."""


class CoverageError(WalshError):
    """A bitile was not covered by any tree of a forest."""


class PartitionError(WalshError):
    """Interval blocks do not partition the grid's dyadic intervals."""


class MissingWeight(WalshError):
    """A weight family has no entry for a required frequency interval."""


class InstanceTooLarge(WalshError):
    """An exhaustive computation was requested on a too large instance."""


class PreconditionViolated(WalshError):
    """A documented precondition of an estimate does not hold."""
