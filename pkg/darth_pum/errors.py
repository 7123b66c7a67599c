class DarthPumError(Exception):
    """
    Root of every error raised by the simulator.

    ``exit_code`` is what the command-line driver returns when the error
    escapes a subcommand.
    """

    exit_code = 1


class ConfigError(DarthPumError):
    exit_code = 2


class OracleMismatchError(DarthPumError):
    exit_code = 3


class CapacityError(DarthPumError):
    exit_code = 4


class BudgetError(DarthPumError):
    exit_code = 4


class FixedPointOverflowError(DarthPumError, OverflowError):
    pass


class PlanMismatchError(DarthPumError):
    pass


class ColumnConflictError(DarthPumError):
    pass


class ReservedRegisterError(DarthPumError):
    pass


class AddressRangeError(DarthPumError):
    pass


class RangeError(DarthPumError):
    """An analog sum fell outside the ADC full scale."""


class ParityError(DarthPumError):
    pass


class AlreadyReservedError(DarthPumError):
    pass


class ArbiterConflictError(DarthPumError):
    pass


class WidthConflictError(DarthPumError):
    pass


class ModeError(DarthPumError):
    pass


class ShapeError(DarthPumError):
    pass


class DirectionError(DarthPumError):
    pass


class MatrixIndexError(DarthPumError, IndexError):
    pass
