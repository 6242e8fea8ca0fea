"""Exception hierarchy shared across the package."""


class SeqSAAError(Exception):
    """Base class for all errors raised by seqsaa."""


class Infeasible(SeqSAAError):
    """An LP (typically a second-stage subproblem) has no feasible point.

    For second-stage problems this means relatively complete recourse is
    violated; ``x`` and ``scenario`` carry the offending pair when known.
    """

    def __init__(self, message="problem is infeasible", x=None, scenario=None):
        super().__init__(message)
        self.x = x
        self.scenario = scenario


class Unbounded(SeqSAAError):
    """An LP is unbounded below (for recourse problems: Q = -inf)."""

    def __init__(self, message="problem is unbounded", x=None, scenario=None):
        super().__init__(message)
        self.x = x
        self.scenario = scenario


class NumericalFailure(SeqSAAError):
    """Simplex or QP failed to converge after bounded refactorizations."""


class LevelSetEmpty(SeqSAAError):
    """The level set of the cutting-plane model is empty."""


class TooLarge(SeqSAAError):
    """A requested extensive form exceeds the configured size cap."""


class OddSampleSize(SeqSAAError, ValueError):
    """Antithetic sampling needs an even number of draws."""


class NonMonotoneRequest(SeqSAAError, ValueError):
    """A validation stream was asked for fewer draws than before."""


class DualInfeasible(SeqSAAError):
    """A dual vector outside {lambda >= 0 : W^T lambda <= d} was offered to the pool."""


class MaxInnerExceeded(SeqSAAError):
    """Inner loop hit its iteration cap; ``result`` holds the best incumbent."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class InsufficientData(SeqSAAError):
    """Too few usable points for a regression."""


class InvalidSpec(SeqSAAError, ValueError):
    """Configuration or instance file failed validation."""


class TimedOut(SeqSAAError):
    """Wall-clock budget expired; ``report`` carries the partial run report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
