"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class ModkError(Exception):
    exit_code = 1


class InputError(ModkError, ValueError):
    """Malformed or out-of-domain user input."""

    exit_code = 2


class ResourceError(ModkError):
    """An enumeration or search cap was exceeded."""

    exit_code = 3

    def __init__(self, message: str, cap: int | None = None):
        super().__init__(message)
        self.cap = cap


class ContractError(ModkError):
    """An internal pre/postcondition failed."""

    exit_code = 4
