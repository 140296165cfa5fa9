class ConfigError(ValueError):
    """Invalid scenario or game data."""


class SingularTPBVPError(RuntimeError):
    """The boundary-value problem has no unique solution at this horizon."""
