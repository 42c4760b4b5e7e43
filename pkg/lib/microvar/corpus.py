"""
Geotagged record ingestion.

Input files are UTF-8, newline-delimited, one JSON object per line:

.. code-block:: json

    {"id": "1", "lon": -58.4, "lat": -34.6, "text": "hola", "lang": "es", "created_at": "2017-03-01T12:00:00Z"}

``created_at`` is optional, unknown keys are ignored and blank lines are
skipped.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timezone
from itertools import islice
from typing import IO, Any, Iterable, Iterator, Sequence

from .errors import CorpusReadError, ParseError
from .grid import Extent
from .logging import MicrovarLogger


@dataclass(frozen=True, slots=True)
class Tweet(object):
    """
    One geotagged text record.
    """

    id: str
    lon: float
    lat: float
    text: str
    lang: str
    created_at: datetime | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise ValueError('Record id must be a non-empty string')

        for name in ('id', 'text', 'lang'):
            value = getattr(self, name)
            if isinstance(value, str) and not _is_unicode(value):
                raise ValueError(f'Record {name} is not valid Unicode (lone surrogate)')

        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f'Longitude {self.lon} is out of range [-180, 180]')

        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f'Latitude {self.lat} is out of range [-90, 90]')

        if self.created_at is not None and self.created_at.tzinfo is None:
            object.__setattr__(self, 'created_at', self.created_at.replace(tzinfo=timezone.utc))


@dataclass(frozen=True, slots=True)
class CorpusFilter(object):
    """
    Records must lie in the closed ``extent``, have language ``lang`` (if set)
    and a timestamp in ``[start, end)`` (if ``time_range`` is set).
    """

    extent: Extent
    lang: str | None = None
    time_range: tuple[datetime, datetime] | None = None

    def __post_init__(self) -> None:
        if self.time_range is None:
            return

        start, end = (_as_utc(x) for x in self.time_range)
        if not start < end:
            raise ValueError(f'Invalid time range: start ({start}) must be before end ({end})')

        object.__setattr__(self, 'time_range', (start, end))

    def accepts(self, tweet: Tweet) -> bool:
        """
        :return: True if the record passes the filter.
        :rtype: bool
        """
        if not self.extent.contains(tweet.lon, tweet.lat):
            return False

        if self.lang is not None and tweet.lang != self.lang:
            return False

        if self.time_range is not None:
            if tweet.created_at is None:
                return False

            start, end = self.time_range
            if not start <= tweet.created_at < end:
                return False

        return True


MAX_REPORTED_ERRORS = 10
"""
Number of parse errors kept in :attr:`IngestReport.errors`.
"""


@dataclass(slots=True)
class IngestReport(object):
    """
    Ingestion counters. ``accepted + rejected_parse + rejected_filter`` is the
    number of non-blank lines read; ``blank`` lines are counted separately.

    Only the first :data:`MAX_REPORTED_ERRORS` parse errors are kept in
    ``errors``, ``rejected_parse`` counts all of them.
    """

    accepted: int = 0
    rejected_parse: int = 0
    rejected_filter: int = 0
    blank: int = 0
    errors: list[ParseError] = field(default_factory=list, compare=False, repr=False)

    @property
    def total(self) -> int:
        return self.accepted + self.rejected_parse + self.rejected_filter

    def __add__(self, other: IngestReport) -> IngestReport:
        if not isinstance(other, IngestReport):
            return NotImplemented

        return IngestReport(
            accepted=self.accepted + other.accepted,
            rejected_parse=self.rejected_parse + other.rejected_parse,
            rejected_filter=self.rejected_filter + other.rejected_filter,
            blank=self.blank + other.blank,
            errors=(self.errors + other.errors[:MAX_REPORTED_ERRORS - len(self.errors)])[:MAX_REPORTED_ERRORS],
        )

    def reject(self, error: ParseError) -> None:
        self.rejected_parse += 1
        if len(self.errors) < MAX_REPORTED_ERRORS:
            self.errors.append(error)

    def export(self) -> dict[str, int]:
        return {
            'accepted': self.accepted,
            'rejected_parse': self.rejected_parse,
            'rejected_filter': self.rejected_filter,
            'blank': self.blank,
        }


def _is_unicode(value: str) -> bool:
    try:
        value.encode('utf-8')
    except UnicodeEncodeError:
        return False

    return True


def _as_utc(value: datetime) -> datetime:
    if value.tzinfo is None:
        return value.replace(tzinfo=timezone.utc)

    return value.astimezone(timezone.utc)


def parse_timestamp(value: str) -> datetime:
    """
    Parse RFC 3339 timestamp, ``Z`` suffix included. Naive values are UTC.

    :raises ValueError: If the value is not a valid timestamp.
    :rtype: datetime
    """
    if value.endswith(('Z', 'z')):
        value = value[:-1] + '+00:00'

    return _as_utc(datetime.fromisoformat(value))


def format_timestamp(value: datetime) -> str:
    """
    Format timestamp as RFC 3339 in UTC with ``Z`` suffix.

    :rtype: str
    """
    return _as_utc(value).isoformat().replace('+00:00', 'Z')


def _coordinate(record: dict[str, Any], key: str, line_number: int, line: str) -> float:
    value = record[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(line_number, f'"{key}" is not a number: {value!r}', line)

    try:
        value = float(value)
    except OverflowError as e:
        raise ParseError(line_number, f'"{key}" is out of range', line) from e

    if not math.isfinite(value):
        raise ParseError(line_number, f'"{key}" is not finite: {value!r}', line)

    return value


def parse_record(line: str, line_number: int = 1) -> Tweet:
    """
    Parse one record.

    :param line: JSON object with keys ``id``, ``lon``, ``lat``, ``text``,
        ``lang`` and optional ``created_at``.
    :type line: str
    :param line_number: Line number reported in errors, defaults to 1
    :type line_number: int, optional
    :raises ParseError: If the record is malformed or a required field is
        missing or invalid.
    :rtype: Tweet
    """
    # Undecodable bytes arrive as surrogate escapes.
    if not _is_unicode(line):
        raise ParseError(line_number, 'Record is not valid UTF-8', line)

    try:
        record = json.loads(line)
    except ValueError as e:
        raise ParseError(line_number, f'Malformed record: {e}', line) from e

    if not isinstance(record, dict):
        raise ParseError(line_number, 'Record is not an object', line)

    for key in ('id', 'lon', 'lat', 'text', 'lang'):
        if key not in record or record[key] is None:
            raise ParseError(line_number, f'"{key}" property is missing', line)

    for key in ('id', 'text', 'lang'):
        if not isinstance(record[key], str):
            raise ParseError(line_number, f'"{key}" is not a string: {record[key]!r}', line)

    lon = _coordinate(record, 'lon', line_number, line)
    lat = _coordinate(record, 'lat', line_number, line)

    created_at = None
    if record.get('created_at') is not None:
        try:
            created_at = parse_timestamp(str(record['created_at']))
        except ValueError as e:
            raise ParseError(line_number, f'Invalid "created_at": {e}', line) from e

    try:
        return Tweet(record['id'], lon, lat, record['text'], record['lang'], created_at)
    except ValueError as e:
        raise ParseError(line_number, str(e), line) from e


def serialize_record(tweet: Tweet) -> str:
    """
    Serialize record to one line of the corpus format (without newline).

    :param tweet: Record.
    :type tweet: Tweet
    :rtype: str
    """
    record: dict[str, Any] = {
        'id': tweet.id,
        'lon': tweet.lon,
        'lat': tweet.lat,
        'text': tweet.text,
        'lang': tweet.lang,
    }

    if tweet.created_at is not None:
        record['created_at'] = format_timestamp(tweet.created_at)

    return json.dumps(record, ensure_ascii=False, separators=(',', ':'))


def write_corpus(tweets: Iterable[Tweet], path: str) -> int:
    """
    Write records into a corpus file.

    :param tweets: Records.
    :type tweets: Iterable[Tweet]
    :param path: Output path.
    :type path: str
    :return: Number of records written.
    :rtype: int
    """
    count = 0
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for tweet in tweets:
            f.write(serialize_record(tweet))
            f.write('\n')
            count += 1

    return count


def _ingest_chunk(
    chunk: Sequence[tuple[int, str]],
    filter: CorpusFilter,
    strict: bool,
) -> tuple[list[Tweet], IngestReport]:
    tweets: list[Tweet] = []
    report = IngestReport()

    for line_number, line in chunk:
        if not line.strip():
            report.blank += 1
            continue

        try:
            tweet = parse_record(line.rstrip('\r\n'), line_number)
        except ParseError as e:
            if strict:
                raise

            report.reject(e)
            continue

        if not filter.accepts(tweet):
            report.rejected_filter += 1
            continue

        tweets.append(tweet)
        report.accepted += 1

    return tweets, report


def _chunks(source: Iterable[str], size: int) -> Iterator[list[tuple[int, str]]]:
    numbered = enumerate(source, start=1)
    while chunk := list(islice(numbered, size)):
        yield chunk


def ingest(
    source: Iterable[str],
    filter: CorpusFilter,
    strict: bool = False,
    *,
    workers: int = 1,
    ordered: bool = True,
    chunk_size: int = 65536,
    logger: MicrovarLogger | None = None,
) -> tuple[list[Tweet], IngestReport]:
    """
    Parse and filter records from a line stream.

    With ``workers > 1`` the stream is cut into chunks of ``chunk_size`` lines
    which are processed on a thread pool. In ordered mode the output keeps
    input order, otherwise chunks are merged as they complete.

    :param source: Line stream, e.g. an open text file.
    :type source: Iterable[str]
    :param filter: Record filter.
    :type filter: CorpusFilter
    :param strict: Abort on the first parse error, defaults to False
    :type strict: bool, optional
    :param workers: Number of threads, defaults to 1
    :type workers: int, optional
    :param ordered: Preserve input order, defaults to True
    :type ordered: bool, optional
    :param chunk_size: Lines per chunk, defaults to 65536
    :type chunk_size: int, optional
    :param logger: Logger, defaults to the microvar logger.
    :type logger: MicrovarLogger | None, optional
    :raises ParseError: In strict mode, on the first malformed record.
    :return: Accepted records and ingestion report.
    :rtype: tuple[list[Tweet], IngestReport]
    """
    logger = logger if logger is not None else MicrovarLogger.GetLogger()
    tweets: list[Tweet] = []
    report = IngestReport()

    try:
        if workers <= 1:
            for chunk in _chunks(source, chunk_size):
                out, partial = _ingest_chunk(chunk, filter, strict)
                tweets.extend(out)
                report += partial
        else:
            with ThreadPoolExecutor(max_workers=workers) as executor:
                futures = [
                    executor.submit(_ingest_chunk, chunk, filter, strict) for chunk in _chunks(source, chunk_size)
                ]
                for future in (futures if ordered else as_completed(futures)):
                    out, partial = future.result()
                    tweets.extend(out)
                    report += partial
    except (OSError, UnicodeDecodeError) as e:
        raise CorpusReadError(getattr(source, 'name', '<stream>'), e) from e

    for error in report.errors[:10]:
        logger.debug(f'Rejected record: {error}')

    logger.info('Corpus ingested', extra={'data': {'Source': getattr(source, 'name', '<stream>'), **report.export()}})

    return tweets, report


def open_corpus(path: str) -> IO[str]:
    """
    Open corpus file for reading. Invalid UTF-8 sequences are decoded as
    surrogate escapes so that :func:`parse_record` rejects only the affected
    lines.

    :raises CorpusReadError: If the file can not be opened.
    :rtype: IO[str]
    """
    try:
        return open(path, 'r', encoding='utf-8', errors='surrogateescape')
    except OSError as e:
        raise CorpusReadError(path, e) from e


def ingest_files(
    paths: Sequence[str],
    filter: CorpusFilter,
    strict: bool = False,
    *,
    workers: int = 1,
    logger: MicrovarLogger | None = None,
) -> tuple[list[Tweet], IngestReport]:
    """
    Ingest several corpus files in the given order and merge the results.

    :param paths: Corpus files.
    :type paths: Sequence[str]
    :param filter: Record filter.
    :type filter: CorpusFilter
    :param strict: Abort on the first parse error, defaults to False
    :type strict: bool, optional
    :param workers: Number of threads, defaults to 1
    :type workers: int, optional
    :raises CorpusReadError: If any file can not be read.
    :raises ParseError: In strict mode, on the first malformed record.
    :rtype: tuple[list[Tweet], IngestReport]
    """
    tweets: list[Tweet] = []
    report = IngestReport()

    for path in paths:
        with open_corpus(path) as f:
            out, partial = ingest(f, filter, strict, workers=workers, logger=logger)

        tweets.extend(out)
        report += partial

    return tweets, report
