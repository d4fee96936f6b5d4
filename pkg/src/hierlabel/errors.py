"""Exception taxonomy shared across the engine.

Every error raised on a user-facing path derives from :class:`EngineError`
and carries a short ``category`` slug so the command-line layer can emit a
single categorized error line and a nonzero exit code.
"""


class EngineError(Exception):
    category = "engine"


class DimensionError(EngineError):
    """Tensor shapes disagree with an operation's contract."""

    category = "dimension"


class RankError(EngineError):
    """An operation got a tensor of the wrong rank (e.g. non-scalar loss)."""

    category = "rank"


class DegenerateLengthError(EngineError):
    """A sequence dimension is too short for the requested operation."""

    category = "degenerate-length"


class EmptySupportError(EngineError):
    """A masked reduction was asked to operate over zero valid entries."""

    category = "empty-support"


class ParseError(EngineError):
    """Architecture expression could not be parsed; carries a byte offset."""

    category = "parse"

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(EngineError):
    category = "config"


class SchemaError(EngineError):
    """Unknown label name or inconsistent label schema."""

    category = "schema"


class FormatError(EngineError):
    """A binary or text interchange file is malformed; carries a byte offset."""

    category = "format"

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


class CoverageError(EngineError):
    """An embedding store does not cover a post in the dataset."""

    category = "coverage"


class EmptyPostError(EngineError):
    """Preprocessing reduced a post to the empty string."""

    category = "empty-post"


class EmptyInputError(EngineError):
    """A metric or reduction was called on zero rows."""

    category = "empty-input"


class InvalidTargetError(EngineError):
    """A loss received a target it cannot score (e.g. no positive label)."""

    category = "invalid-target"


class SplitError(EngineError):
    category = "split"


class MappingError(EngineError):
    """Label-powerset decode of an id that was never assigned."""

    category = "mapping"


class ExplainError(EngineError):
    """Attention explanation requested from a model without word-level groups."""

    category = "explain"


class NonFiniteGradientError(EngineError):
    """Training produced a NaN/inf gradient; names the offending parameter."""

    category = "non-finite-gradient"
