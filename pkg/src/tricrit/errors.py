"""Exception hierarchy.

Each class carries an ``exit_code`` used by the command line front end:
2 for configuration problems, 3 for physics-domain violations and 4 for
failed numerical certificates.
"""


class TricritError(Exception):
    exit_code = 1


class ConfigError(TricritError, ValueError):
    exit_code = 2


class UnknownFigure(ConfigError):
    pass


class UnsupportedCombo(ConfigError):
    pass


class RangeError(ConfigError):
    pass


class InsufficientData(ConfigError):
    pass


class NonPositiveData(ConfigError):
    pass


class PhysicsError(TricritError):
    exit_code = 3


class PhaseError(PhysicsError):
    pass


class GapClosed(PhysicsError):
    pass


class AmbiguousRegion(PhysicsError):
    pass


class DegenerateGround(PhysicsError):
    pass


class ZeroVariance(PhysicsError):
    pass


class NotHermitian(PhysicsError):
    pass


class NumericalError(TricritError, ArithmeticError):
    exit_code = 4


class TruncationError(NumericalError):
    pass


class NoConvergence(NumericalError):
    def __init__(self, msg, estimates=None):
        super().__init__(msg)
        self.estimates = estimates


NonConvergence = NoConvergence


class StepRejection(NumericalError):
    pass


class PositivityError(NumericalError):
    pass


class PositivityWarning(UserWarning):
    pass


class OscillatoryQuadratureWarning(UserWarning):
    pass
