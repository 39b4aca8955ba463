"""Exception hierarchy shared by the library and the CLI."""


class SpectrakitError(Exception):
    """Base class for all library errors."""


class ConfigError(SpectrakitError, ValueError):
    """Invalid parameters or incompatible inputs (CLI exit code 2)."""


class NumericalRefusal(SpectrakitError, ArithmeticError):
    """A computation was refused because its result would not be trustworthy
    (aliasing, unstable time stepping, failed fits).  CLI exit code 1."""


class AliasingError(NumericalRefusal):
    pass


class InstabilityError(NumericalRefusal):
    pass


class FitError(NumericalRefusal):
    pass
