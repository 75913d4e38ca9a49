from __future__ import annotations


class RegnormError(RuntimeError):
    code = "regnorm_error"

    def __init__(self, message: str, code: str | None = None) -> None:
        super().__init__(f"{code or self.code}: {message}")
        self.code = code or self.code
        self.message = message


class InputError(RegnormError, ValueError):
    """Bad shape, out-of-range parameter or unparsable text."""

    code = "input_error"


class NonsmoothNormError(InputError):
    code = "nonsmooth_norm"


class DomainError(RegnormError, ValueError):
    code = "domain_error"


class UnsupportedError(RegnormError):
    code = "unsupported"


class ConfigError(RegnormError, ValueError):
    code = "config_error"


class NumericError(RegnormError, ArithmeticError):
    code = "numeric_failure"
