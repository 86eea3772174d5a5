class InvalidInput(ValueError):
    """Raised when an operation receives data outside its declared domain."""


class ConfigError(ValueError):
    """Raised for malformed or incomplete configuration / scenario files."""
