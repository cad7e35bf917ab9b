"""Exception types raised by the library."""


class KRFError(Exception):
    """Base class for library errors."""


class GridError(KRFError):
    pass


class DegenerateMetricError(KRFError):
    pass


class NotPlurisubharmonicError(KRFError):
    pass


class NewtonConvergenceError(KRFError):
    pass


class OutsideExistenceWindowError(KRFError):
    pass


class WindowGuardError(KRFError):
    pass


class HypothesisError(KRFError):
    pass


class CompatibilityError(KRFError):
    pass


class ConfigError(KRFError):
    pass
