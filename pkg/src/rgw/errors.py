"""Exception types shared across the solver, the toolkit, and the CLI."""


class RgwError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(RgwError):
    """Operands have incompatible shapes."""


class DivergenceInfinite(RgwError):
    """KL divergence is infinite: some a_i > 0 where b_i = 0."""


class EpsilonOutOfRange(RgwError):
    """Contamination level outside [0, 1]."""


class InvalidParams(RgwError):
    """A parameter violates its documented range or type."""


class InfeasibleInit(RgwError):
    """Initial coupling has entries outside [0, 1]."""


class InnerDiverged(RgwError):
    """Multiplicative Sinkhorn scalings overflowed; retry in log domain."""


class MaxInnerIterations(RgwError):
    """Inner loop hit its iteration cap before reaching tolerance."""


class NewtonStalled(RgwError):
    """Newton iteration on the dual root made no usable progress."""


class ZeroLipschitz(RgwError):
    """Gradient Lipschitz constant is zero; no finite step bound exists."""


class SamplingFailed(RgwError):
    """Could not draw a connected subgraph within the retry budget."""


class ParseError(RgwError):
    """Malformed input file.

    Carries the offending 1-based line or row index when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class SelfLoop(ParseError):
    """Edge list contains a self loop."""


class RaggedRows(ParseError):
    """Point cloud rows have inconsistent column counts."""


class EmptyFile(ParseError):
    """Input file contains no data rows."""
