"""Exception hierarchy.

Each class carries the process exit code the CLI uses when it escapes a command.
"""


class WcForecastError(Exception):
    exit_code = 3


class ConfigError(WcForecastError):
    exit_code = 1


class DataError(WcForecastError):
    exit_code = 2


class IngestionError(DataError):
    pass


class ProfileLookupError(DataError):
    """A team has no profile for the requested year (or any fallback year)."""


class BundleError(DataError):
    pass


class FitError(ValueError):
    """A classifier cannot be fit on the given data (e.g. a single class)."""


class InvariantError(WcForecastError):
    exit_code = 3
