"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the function evaluated."""


class InvalidParameter(ValueError):
    def __init__(self, name, value):
        self.name = name
        self.value = value
        super().__init__(f"{name} must be a finite positive number, got {value!r}")


class InvalidGrid(ValueError):
    pass


class NotIntegral(ValueError):
    pass


class NotConverged(RuntimeError):
    def __init__(self, message, last_iterate, iterations):
        self.last_iterate = last_iterate
        self.iterations = iterations
        super().__init__(message)


class NonpositiveUtility(ValueError):
    """Some level's utility does not exceed the zero disagreement point."""

    def __init__(self, message, level=None):
        self.level = level
        super().__init__(message)


class NonBindingConstraint(ValueError):
    """The KKT multiplier of the population constraint is not positive."""

    def __init__(self, message, mu):
        self.mu = mu
        super().__init__(message)


class InvalidPlacement(ValueError):
    pass


class InsufficientData(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class ValidationError(ValueError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ReportIOError(OSError):
    def __init__(self, path, reason):
        self.path = path
        super().__init__(f"cannot write report to {path}: {reason}")
