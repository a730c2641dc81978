"""Exception hierarchy.

Every error carries the process exit code the command line uses for it:
2 for usage and configuration problems, 3 for bad input data, 4 for
failures while running a model.
"""


class LemmaNamerError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 4


# s-expressions


class SexpError(LemmaNamerError):
    """Malformed s-expression text.

    Args:
        message (str): Human readable description.
        position (int): Character offset where the problem was detected.
    """

    exit_code = 3

    def __init__(self, message: str, position: int) -> None:
        super().__init__(f"{message} at position {position}")
        self.position = position


class UnbalancedParen(SexpError):
    def __init__(self, position: int) -> None:
        super().__init__("unbalanced parenthesis", position)


class UnexpectedTrailingInput(SexpError):
    def __init__(self, position: int) -> None:
        super().__init__("unexpected trailing input", position)


class UnterminatedString(SexpError):
    def __init__(self, position: int) -> None:
        super().__init__("unterminated string", position)


class EmptyAtom(SexpError):
    def __init__(self, position: int) -> None:
        super().__init__("empty quoted atom", position)


class NestingTooDeep(SexpError):
    def __init__(self, position: int, limit: int) -> None:
        super().__init__(f"nesting deeper than {limit}", position)
        self.limit = limit


class MalformedToken(SexpError):
    """A sentence child that is not an ``(IDENT x)`` or ``(KEYWORD x)`` pair."""

    def __init__(self, index: int) -> None:
        super().__init__("malformed token", index)
        self.index = index


# data


class DataError(LemmaNamerError):
    exit_code = 3


class SchemaError(DataError):
    def __init__(self, line: int, reason: str) -> None:
        super().__init__(f"line {line}: {reason}")
        self.line = line


class SexpParseError(DataError):
    def __init__(self, line: int, field: str, cause: SexpError) -> None:
        super().__init__(f"line {line}: field {field!r}: {cause}")
        self.line = line
        self.field = field


class MissingReference(DataError):
    def __init__(self, qname: str) -> None:
        super().__init__(f"no reference name for {qname!r}")
        self.qname = qname


class UnknownTier(DataError):
    def __init__(self, tier: str) -> None:
        super().__init__(f"split manifest has no tier {tier!r}")
        self.tier = tier


class LeakageError(DataError):
    pass


# configuration


class ConfigError(LemmaNamerError):
    exit_code = 2


class ConfigMismatch(ConfigError):
    pass


class CheckpointMismatch(ConfigError):
    pass


class InvalidModelName(ConfigError):
    def __init__(self, name: str, reason: str) -> None:
        super().__init__(f"invalid model name {name!r}: {reason}")
        self.name = name


# models


class ModelError(LemmaNamerError):
    exit_code = 4


class EmptySequence(ModelError, ValueError):
    pass


class DimensionMismatch(ModelError, ValueError):
    pass


class NonFiniteValue(ModelError, ArithmeticError):
    pass


class ReferenceTooLong(ModelError):
    def __init__(self, length: int, max_decode_len: int) -> None:
        super().__init__(
            f"reference of {length} steps exceeds max_decode_len={max_decode_len}"
        )
        self.max_decode_len = max_decode_len


class EmptyTrainSet(ModelError):
    pass


# names and metrics


class NamingError(LemmaNamerError, ValueError):
    exit_code = 3


class EmptyName(NamingError):
    pass


class EmptyReference(NamingError):
    pass


class LengthMismatch(NamingError):
    pass
