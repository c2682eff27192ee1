"""Exception hierarchy shared by every pipeline stage."""


class VoltForecastError(Exception):
    """Base class for all package errors."""


class ParameterError(VoltForecastError, ValueError):
    """An argument or configuration value is outside its allowed range."""


class SchemaError(VoltForecastError):
    """Input file is missing a required column or has an invalid layout."""

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class CsvParseError(VoltForecastError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyInputError(VoltForecastError):
    pass


class UnimputableColumnError(VoltForecastError):
    pass


class OverAggressiveThresholdError(VoltForecastError):
    pass


class ZeroVarianceError(VoltForecastError):
    def __init__(self, message, feature=None):
        super().__init__(message)
        self.feature = feature


class UnknownFeatureError(VoltForecastError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class EmptySeriesError(VoltForecastError):
    pass


class DegenerateSplitError(VoltForecastError):
    pass


class ShapeError(VoltForecastError, ValueError):
    pass


class ZeroTargetError(VoltForecastError):
    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SingularSystemError(VoltForecastError):
    pass


class DivergenceError(VoltForecastError):
    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class PlanError(VoltForecastError):
    pass


class ConfigError(VoltForecastError):
    """Invalid run configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key
