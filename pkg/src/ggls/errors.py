"""Exception hierarchy shared by all modules."""


class GglsError(Exception):
    """Base class for every error raised by the package."""


class DataFormatError(GglsError):
    pass


class ConfigError(GglsError):
    pass


class NumericError(GglsError):
    pass


class InvalidSubspaceError(NumericError):
    pass


class SingularSystemError(NumericError):
    pass


class EvalError(GglsError):
    pass
