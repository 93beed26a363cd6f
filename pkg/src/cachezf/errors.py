"""Exception hierarchy shared by all cachezf modules."""


class CacheZFError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CacheZFError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class MemorySharingRequired(DomainError):
    """Replication factors are not integers.

    Algorithm-level placement only handles integer ``t_T`` and ``t_R``; use
    :func:`cachezf.scheduler.plan_memory_sharing` (or ``plan_delivery``) to
    split the configuration into integer corner configurations first.
    """


class SaturationRequired(DomainError):
    """``t_T + t_R > K_R``; apply :func:`cachezf.scheduler.saturate` first."""


class SingularChannelError(CacheZFError):
    """A zero-forcing subsystem is numerically singular for this channel.

    Attributes
    ----------
    slot : int
        Delivery slot whose subsystem failed.
    rows : tuple of int
        Receiver indices of the offending subsystem.
    cols : tuple of int
        Transmitter indices of the offending subsystem.
    cond : float
        Condition number that tripped the check.
    """

    def __init__(self, slot, rows, cols, cond):
        self.slot = slot
        self.rows = tuple(rows)
        self.cols = tuple(cols)
        self.cond = cond
        super().__init__(
            f"singular zero-forcing subsystem at slot {slot} "
            f"(rx {self.rows}, tx {self.cols}, cond={cond:.3g}); regenerate channel"
        )


class ExactCapExceeded(CacheZFError):
    """Instance too large for the exact solver; use ``min_blocks_greedy``."""


class ConsistencyError(CacheZFError):
    """An internal invariant failed. Always indicates a bug."""


class InstanceFormatError(CacheZFError, ValueError):
    """A JSON instance or config document is malformed."""
