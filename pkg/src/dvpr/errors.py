"""Exception hierarchy. Every error the library raises derives from DvprError."""


class DvprError(Exception):
    pass


class DimensionMismatchError(DvprError, ValueError):
    pass


class EmptyInputError(DvprError, ValueError):
    pass


class InfeasibleKError(DvprError, ValueError):
    pass


class InfeasibleSplitError(DvprError, ValueError):
    pass


class ConfigurationError(DvprError, ValueError):
    pass


class UndefinedMetricError(DvprError, ValueError):
    pass


class FormatError(DvprError, ValueError):
    pass


class TruncationError(FormatError):
    pass


class DataError(DvprError, ValueError):
    pass
