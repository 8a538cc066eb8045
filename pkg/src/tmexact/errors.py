"""Exception hierarchy shared by every module."""


class TMError(Exception):
    """Base class for all toolkit errors."""


class InvalidProfile(TMError, ValueError):
    pass


class InfiniteMass(TMError, ValueError):
    pass


class ProfileOverflow(TMError, OverflowError):
    pass


class ZeroProfile(TMError, ZeroDivisionError):
    pass


class RegimeMismatch(TMError, ValueError):
    pass


class Infeasible(TMError, ValueError):
    pass


class NoConvergence(TMError, RuntimeError):
    pass


class NotMonotone(TMError, ValueError):
    pass


class EnergyBudgetExceeded(TMError, ValueError):
    pass


class ZeroBoundaryValue(TMError, ValueError):
    pass


class NotNormalized(TMError, ValueError):
    pass


class NoPlateau(TMError, ValueError):
    pass


class StiffnessFailure(TMError, RuntimeError):
    pass


class NoSignChange(TMError, RuntimeError):
    pass


class ConditionFailed(TMError, ValueError):
    pass


class NormBudgetExceeded(TMError, ValueError):
    pass
