"""Exception and warning classes raised across the package."""


class HomodyneError(Exception):
    """Base class for all package errors."""


class NotHermitian(HomodyneError, ValueError):
    pass


class ShapeMismatch(HomodyneError, ValueError):
    pass


class BadSubsystem(HomodyneError, ValueError):
    pass


class InvalidState(HomodyneError, ValueError):
    """Matrix fails the density-operator invariants (trace, Hermiticity, positivity)."""


class TruncationLeak(HomodyneError):
    """Too much probability weight lies above the Fock cutoff."""


class BadParameter(HomodyneError, ValueError):
    pass


class BadSpace(HomodyneError, ValueError):
    """Hilbert space does not have the subsystem layout an interaction needs."""


class NotProjector(HomodyneError, ValueError):
    pass


class NegativeRate(HomodyneError, ValueError):
    pass


class StepNotConverged(HomodyneError):
    pass


class BadProvenance(HomodyneError, ValueError):
    pass


class WindowTooSmall(HomodyneError, ValueError):
    pass


class IllConditionedFit(HomodyneError):
    pass


class AsymmetricGrid(HomodyneError, ValueError):
    pass


class NonRealResult(HomodyneError):
    pass


class MissingComponent(HomodyneError, KeyError):
    pass


class ScenarioError(HomodyneError):
    """Scenario file failed to parse or validate.

    ``line`` is the 1-based line in the scenario file when it can be located.
    """

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)


class LeakageAlarm(UserWarning):
    """Population reached the top Fock level during evolution.

    Warning class: the series is still returned, with the alarm recorded in its
    metadata. The CLI escalates it to a failure.
    """
