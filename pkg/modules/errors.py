"""
Error types
Structured exceptions shared by the parser, the chain engine and the analysis
pipeline. Every error converts to the result-dict shape used by the REST
service and the command line.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class SourceSpan:
    """Location of a token in network source text (1-based line/column)."""
    line: int
    column: int
    start: int
    end: int

    def to_dict(self):
        return {
            'line': self.line,
            'column': self.column,
            'start': self.start,
            'end': self.end,
        }


class CRNError(Exception):
    """Base class for every error raised by the toolkit."""

    code = 'crn_error'

    def __init__(self, message, code=None, span=None, details=None):
        super().__init__(message)
        self.message = message
        if code is not None:
            self.code = code
        self.span = span
        self.details = details or {}

    def to_dict(self):
        result = {'ok': False, 'code': self.code, 'error': self.message}
        if self.span is not None:
            result['span'] = self.span.to_dict()
        if self.details:
            result['details'] = self.details
        return result

    def __str__(self):
        if self.span is not None:
            return f"{self.message} (line {self.span.line}, column {self.span.column})"
        return self.message


class NetworkError(CRNError):
    code = 'invalid_network'


class ParseError(CRNError):
    code = 'syntax_error'


class KernelError(CRNError):
    code = 'kernel_error'


class JumpBudgetExceeded(KernelError):
    code = 'jump_budget_exceeded'

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class TierError(CRNError):
    code = 'tier_error'


class EmbeddingError(CRNError):
    code = 'embedding_error'


class CertificationError(CRNError):
    code = 'parameter_error'


class DiagnosticsError(CRNError):
    code = 'diagnostics_error'
