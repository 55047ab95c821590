from typing import Any, Optional

from config import Config


class FailoverError(Exception):
    """Base error; `exit_code` is what the command line exits with."""

    exit_code = Config.EXIT_INTERNAL

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code


class InputError(FailoverError):
    """Malformed instance, assignment or argument."""

    exit_code = Config.EXIT_INPUT


class ConfigurationError(InputError):
    pass


class ProtocolError(InputError):
    """An interactive procedure was driven out of order."""


class LimitsRefusal(FailoverError):
    """The exact oracle refuses inputs beyond its search limits."""

    exit_code = Config.EXIT_LIMITS


class InvariantBreach(FailoverError):
    exit_code = Config.EXIT_INTERNAL


class ColumnGenerationError(InvariantBreach):
    def __init__(self, detail: str, best_so_far: Any = None):
        super().__init__(detail)
        self.best_so_far = best_so_far
