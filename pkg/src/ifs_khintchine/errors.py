"""
Exception hierarchy shared by the library and the command-line runner.

Every exception carries the process exit code the CLI reports for it.
"""


class IfsKhintchineError(Exception):
    """Base exception for all library errors."""
    exit_code = 4


class ValidationError(IfsKhintchineError):
    """Raised when an input or configuration value violates a precondition."""
    exit_code = 2

    def __init__(self, message: str, key: str = None):
        if key:
            message = f"{key}: {message}"
        super().__init__(message)
        self.key = key


class BudgetExceededError(IfsKhintchineError):
    """Raised when a computation would exceed a configured resource budget."""
    exit_code = 3

    def __init__(self, budget_name: str, requested: int, limit: int):
        super().__init__(
            f"budget '{budget_name}' exceeded: requested {requested}, limit {limit}"
        )
        self.budget_name = budget_name
        self.requested = requested
        self.limit = limit


class PrecisionError(IfsKhintchineError):
    """Raised when certified point errors cannot be made small enough."""
    exit_code = 3


class BracketError(IfsKhintchineError):
    """Raised when a monotone root or transition could not be bracketed."""
    pass


class InvariantViolation(IfsKhintchineError):
    """Raised when a checked mathematical inequality fails."""
    pass
