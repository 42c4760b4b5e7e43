from __future__ import annotations

import textwrap


class MicrovarError(Exception):
    """
    Base class for all errors raised by :mod:`lib.microvar`.
    """
    pass


class ParseError(MicrovarError):
    """
    A record in the newline-delimited corpus could not be parsed.
    """

    def __init__(self, line_number: int, message: str, line: str | None = None) -> None:
        """
        :param line_number: 1-based number of the offending line.
        :type line_number: int
        :param message: What is wrong with the record.
        :type message: str
        :param line: The offending line, defaults to None
        :type line: str | None, optional
        """
        def dumps(value: str | None) -> str:
            if not value:
                return ''

            value = value.encode('utf-8', 'backslashreplace').decode('utf-8')
            if len(value) > 200:
                value = value[:200] + '...'

            return '\n' + textwrap.indent(value, ' ' * 4)

        super().__init__(f'Line {line_number}: {message}' + dumps(line))

        self.line_number: int = line_number
        self.message: str = message
        self.line: str | None = line


class CorpusReadError(MicrovarError):
    """
    Corpus source can not be read.
    """

    def __init__(self, path: str, error: Exception) -> None:
        super().__init__(f'Unable to read corpus "{path}": {error}')
        self.path: str = path
        self.error: Exception = error


class EmptyDistributionError(MicrovarError):
    """
    A distribution has no events, its normalization is undefined.
    """
    pass


class GridMismatchError(MicrovarError):
    """
    Two grids do not share the same :class:`lib.microvar.grid.GridSpec`.
    """
    pass


class GridFormatError(MicrovarError):
    """
    Serialized grid is malformed.
    """
    pass


class UndefinedCorrelationError(MicrovarError):
    """
    Correlation or regression is undefined because one coordinate has zero variance.
    """
    pass


class NoDataError(MicrovarError):
    """
    There are no data points to compute the requested statistic from.
    """
    pass


class ConfigError(MicrovarError, ValueError):
    """
    Invalid configuration file or configuration entry.
    """
    pass
