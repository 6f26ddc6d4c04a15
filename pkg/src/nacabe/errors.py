"""Exception hierarchy shared by every layer of the package."""


class NacAbeError(Exception):
    """Base class for all errors raised by nacabe."""


class DecodeError(NacAbeError, ValueError):
    """Malformed TLV input (truncated, trailing bytes, unknown critical type)."""


class EncodeError(NacAbeError, ValueError):
    """A packet field violates an encoding limit."""


class PolicySyntaxError(NacAbeError, ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class PolicyRejected(NacAbeError, ValueError):
    """Policy cannot be compiled into an access tree (e.g. ALWAYS_FALSE)."""


class PolicyNotSatisfied(NacAbeError):
    def __init__(self, message: str = "policy not satisfied"):
        super().__init__(message)


class ParamsMismatch(NacAbeError):
    def __init__(self, message: str = "params mismatch"):
        super().__init__(message)


class AuthenticationFailed(NacAbeError):
    def __init__(self, message: str = "authentication failed"):
        super().__init__(message)


class UnknownAttribute(NacAbeError, KeyError):
    def __init__(self, attribute: str):
        super().__init__(f"unknown attribute: {attribute!r}")
        self.attribute = attribute

    def __str__(self) -> str:
        return self.args[0]


class SchemaError(NacAbeError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


class FetchTimeout(NacAbeError):
    def __init__(self, name):
        super().__init__(f"fetch timed out: {name}")
        self.name = name


class ValidationFailed(NacAbeError):
    """Raised by protocol roles when a received packet does not validate."""

    def __init__(self, result):
        super().__init__(f"validation failed: {result.outcome.name} for {result.name}")
        self.result = result


class GrantError(NacAbeError, ValueError):
    pass
