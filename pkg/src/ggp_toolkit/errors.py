class GgpError(Exception):
    """Base class for every error raised on purpose by the toolkit."""


class KifSyntaxError(GgpError):
    """Malformed s-expression text (unbalanced parentheses, stray tokens)."""


class RuleSheetError(GgpError):
    """Well-formed KIF that is not a valid rule sheet (safety, relation classes)."""


class BoardExtensionError(GgpError):
    """Board extension present but malformed."""


class NormalizationError(GgpError):
    pass


class CompileError(GgpError):
    pass


class EngineError(GgpError):
    pass


class IllegalMoveError(EngineError):
    pass


class KnowledgeFormatError(GgpError):
    pass


class RecordFormatError(GgpError):
    pass


class EvolutionError(GgpError):
    pass


class SearchError(GgpError):
    """Search asked to select at a node without edges."""
