"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """A sweep configuration file or override is invalid."""


class NumericalError(ArithmeticError):
    """A linear-algebra step left the tolerated numerical envelope."""


class InvariantError(RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""
