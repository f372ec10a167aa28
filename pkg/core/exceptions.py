# Error types raised by the library. The CLI is the only place that catches them.


class FractionalError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(FractionalError):
    def __init__(self, what, expected, actual):
        self.what, self.expected, self.actual = what, expected, actual
        super().__init__(f"{what}: expected dimension {expected}, got {actual}")


class ParameterError(FractionalError):
    def __init__(self, name, value, reason):
        self.name, self.value, self.reason = name, value, reason
        super().__init__(f"invalid {name}={value!r}: {reason}")


class DenominatorError(FractionalError):
    """d(x) is not positive where the ratio needs it."""

    def __init__(self, value):
        self.value = value
        super().__init__(f"denominator d(x)={value!r} is not positive")


class UnsupportedVariantError(FractionalError):
    def __init__(self, variant, app, reason):
        self.variant, self.app, self.reason = variant, app, reason
        super().__init__(f"variant '{variant}' is not supported for '{app}': {reason}")


class NonFiniteIterateError(FractionalError):
    def __init__(self, name, t):
        self.name, self.t = name, t
        super().__init__(f"iterate {name} became non-finite at t={t}")


class ConfigError(FractionalError):
    def __init__(self, key, line, reason):
        self.key, self.line, self.reason = key, line, reason
        where = f" (line {line})" if line else ""
        super().__init__(f"config key '{key}'{where}: {reason}")


class DatasetError(FractionalError):
    pass


class LibsvmParseError(DatasetError):
    def __init__(self, path, line, reason):
        self.path, self.line, self.reason = path, line, reason
        super().__init__(f"{path}:{line}: {reason}")
