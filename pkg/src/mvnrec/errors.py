"""Exception types shared across the package."""


class MvnrecError(Exception):
    """Base class for all package errors."""


class DataFormatError(MvnrecError):
    """A source file row could not be parsed."""

    def __init__(self, path, line_number, message):
        self.path = path
        self.line_number = line_number
        super().__init__(f"{path}:{line_number}: {message}")


class ConfigurationError(MvnrecError):
    """An option combination or config value is invalid."""


class UndefinedStatisticsError(MvnrecError):
    """Statistics requested for an empty dataset."""


class CapacityError(MvnrecError):
    """Item count exceeds the configured dense-matrix memory cap."""


class NotFittedError(MvnrecError):
    """A model was asked to score before fit."""


class LabelLookupError(MvnrecError):
    """An item label did not resolve; carries near-match suggestions."""

    def __init__(self, label, suggestions):
        self.label = label
        self.suggestions = list(suggestions)
        hint = f" (did you mean: {', '.join(self.suggestions)})" if self.suggestions else ""
        super().__init__(f"unknown item label {label!r}{hint}")
