"""Exception hierarchy for the trendql engine."""


class TrendqlError(Exception):
    """Base class for all engine errors."""


class StorageError(TrendqlError):
    """Catalog, schema, or relation construction problem."""


class CsvError(StorageError):
    """CSV ingestion failure; carries row/column context when known."""

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        if row is not None and column is not None:
            message = f"{message} (row {row}, column {column})"
        super().__init__(message)


class QueryError(TrendqlError):
    """Lexical, syntactic, or semantic query problem.

    ``line`` and ``col`` are 1-based positions into the query text; they are
    always set for lexer and parser errors.
    """

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class AnalysisError(QueryError):
    """Semantic analysis failure (unknown columns, non-comparable sides...)."""


class PlanError(TrendqlError):
    """Malformed logical or physical plan."""


class ExecError(TrendqlError):
    """Operator failure during execution."""
