"""Exception types shared across the toolkit."""


class BiascopeError(Exception):
    """Base class for all toolkit errors."""


class LexiconError(BiascopeError):
    """Inconsistent gender lexicon (overlapping pronoun sets, duplicate pairs, ...)."""


class LexiconParseError(LexiconError):
    """Syntactically invalid lexicon line."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class MergeError(BiascopeError):
    """Attempt to merge stats produced with different lexicons."""


class SwapError(BiascopeError):
    """Gender-swap precondition failure."""


class DocumentError(BiascopeError):
    """Coreference document invariant violation."""


class StoreFormatError(BiascopeError):
    """Embedding store header, manifest, or payload violates the format contract."""


class StoreLookupError(BiascopeError, KeyError):
    """Sentence id not present in an embedding store."""

    def __str__(self):  # KeyError quotes its argument; keep the plain message
        return BiascopeError.__str__(self)


class AlignmentError(BiascopeError):
    """Paired sentences disagree in token count or dimensionality."""


class DegenerateDataError(BiascopeError):
    """Input variance too small for a meaningful principal-component fit."""


class ProbeTrainingError(BiascopeError):
    """nu-SVC training failure (single class, infeasible nu, bad input)."""


class ConvergenceError(ProbeTrainingError):
    """Solver did not reach the KKT tolerance within the pass budget."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ParseError(BiascopeError):
    """Malformed evaluation input (WinoBias line, prediction record, ...)."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ClusteringError(BiascopeError):
    """Mention clustering is not a partition or lies out of bounds."""
