"""Exception types raised across the package."""


class AoiSchedError(Exception):
    """Base class for all package errors."""


class InvalidParams(AoiSchedError, ValueError):
    pass


class DegenerateSnr(AoiSchedError, ValueError):
    """SNR is not strictly positive, so the channel dispersion vanishes."""


class InvalidGeometry(AoiSchedError, ValueError):
    pass


class InvalidDuration(AoiSchedError, ValueError):
    pass


class DivergentAoI(AoiSchedError, ArithmeticError):
    """Error probability so close to one that the average age is unbounded."""


class Infeasible(AoiSchedError):
    """No allocation meets the error-probability and SNR thresholds."""


class InfeasibleSaturated(Infeasible):
    """A device cannot meet its thresholds inside the extended saturated round."""


class RoundingOverflow(AoiSchedError):
    pass


class ConstraintBrokenByRounding(AoiSchedError):
    pass


class InvalidSchedule(AoiSchedError, ValueError):
    pass


class GridTooLarge(AoiSchedError, ValueError):
    pass


class NoFixedPoint(AoiSchedError):
    pass


class ConfigError(AoiSchedError, ValueError):
    pass
