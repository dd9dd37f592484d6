"""Exception hierarchy shared by all lowbit modules."""


class LowbitError(Exception):
    """Base class for every error raised by this package."""


class ZeroInBinaryInput(LowbitError, ValueError):
    """A binary operand contained the value 0."""


class InvalidCode(LowbitError, ValueError):
    """A 2-bit ternary code was (1, 1) or a bit was outside {0, 1}."""


class OutOfBounds(LowbitError, IndexError):
    """A packing request addressed rows/columns/depth outside the source."""


class DepthOverflow(LowbitError, ValueError):
    """The multiplication depth exceeds what the accumulator can hold."""


class ModeMismatch(LowbitError, TypeError):
    """Operand encodings do not match the requested multiplication mode."""


class ChannelOverflow(LowbitError, ValueError):
    """Too many input channels for an overflow-free GeMM-based convolution."""


class EmptyOutput(LowbitError, ValueError):
    """A convolution would produce an output with zero spatial extent."""


class InvalidPlan(LowbitError, ValueError):
    """A benchmark plan is malformed or infeasible."""


class OracleCheckFailed(LowbitError, AssertionError):
    """A benchmarked multiplication disagreed with its reference result."""
