"""
Spatial binning of point records on a regular lon/lat grid.

Bins are addressed by ``(i, j)`` where ``i`` is the column (longitude) index
and ``j`` is the row (latitude) index, ``j`` growing northward. All arrays
are stored with shape ``(n, m)`` and indexed ``[i, j]``.

The extent is closed: coordinates exactly on ``lon_max`` (``lat_max``) belong
to the last column (row). Bins are treated as equal-area, there is no
``cos(lat)`` correction.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, NamedTuple, Sequence

import numpy as np

from .errors import EmptyDistributionError, GridFormatError, GridMismatchError

if TYPE_CHECKING:
    from .corpus import Tweet


SUM_TOLERANCE = 1e-12
"""
Tolerance of the sum identities (fractions sum to one, deltas sum to zero).
"""

GRID_FORMAT_MAGIC = '# microvar-grid 1'


@dataclass(frozen=True, slots=True)
class Extent(object):
    """
    Longitude/latitude bounding box in degrees.
    """

    lon_min: float
    lon_max: float
    lat_min: float
    lat_max: float

    def __post_init__(self) -> None:
        for name in ('lon_min', 'lon_max', 'lat_min', 'lat_max'):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f'Extent {name} must be a finite number')

        if not self.lon_min < self.lon_max:
            raise ValueError(f'Invalid extent: lon_min ({self.lon_min}) must be smaller than lon_max ({self.lon_max})')

        if not self.lat_min < self.lat_max:
            raise ValueError(f'Invalid extent: lat_min ({self.lat_min}) must be smaller than lat_max ({self.lat_max})')

    @property
    def width(self) -> float:
        return self.lon_max - self.lon_min

    @property
    def height(self) -> float:
        return self.lat_max - self.lat_min

    @property
    def center(self) -> tuple[float, float]:
        return ((self.lon_min + self.lon_max) / 2, (self.lat_min + self.lat_max) / 2)

    def contains(self, lon: float, lat: float) -> bool:
        """
        Check if the point lies in the closed extent.

        :param lon: Longitude.
        :type lon: float
        :param lat: Latitude.
        :type lat: float
        :rtype: bool
        """
        return self.lon_min <= lon <= self.lon_max and self.lat_min <= lat <= self.lat_max

    def export(self) -> list[float]:
        """
        Export the extent as ``[lon_min, lon_max, lat_min, lat_max]``.

        :rtype: list[float]
        """
        return [self.lon_min, self.lon_max, self.lat_min, self.lat_max]

    @classmethod
    def FromString(cls, value: str) -> Extent:
        """
        Parse extent from ``lonmin,lonmax,latmin,latmax``.

        :param value: Comma separated extent.
        :type value: str
        :raises ValueError: If the value is malformed.
        :rtype: Extent
        """
        parts = [x.strip() for x in value.split(',')]
        if len(parts) != 4:
            raise ValueError(f'Extent must have four comma separated values, got "{value}"')

        try:
            return cls(*[float(x) for x in parts])
        except ValueError as e:
            raise ValueError(f'Invalid extent "{value}": {e}') from e


class BinIndex(NamedTuple):
    """
    Grid bin address.
    """

    i: int
    """
    Column (longitude) index in ``[0, n)``.
    """

    j: int
    """
    Row (latitude) index in ``[0, m)``.
    """


@dataclass(frozen=True, slots=True)
class GridSpec(object):
    """
    Bin geometry: the extent divided into ``n`` columns and ``m`` rows.
    """

    extent: Extent
    n: int = 200
    m: int = 200

    def __post_init__(self) -> None:
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f'Number of columns must be a positive integer, got {self.n!r}')

        if isinstance(self.m, bool) or not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise ValueError(f'Number of rows must be a positive integer, got {self.m!r}')

    @property
    def dx(self) -> float:
        """
        Longitudinal size of a bin in degrees.
        """
        return self.extent.width / self.n

    @property
    def dy(self) -> float:
        """
        Latitudinal size of a bin in degrees.
        """
        return self.extent.height / self.m

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.m)

    @property
    def size(self) -> int:
        return self.n * self.m

    def centers(self, subdivisions: int = 1) -> tuple[np.ndarray, np.ndarray]:
        """
        Bin centers as two ``(n, m)`` arrays of longitudes and latitudes.

        With ``subdivisions > 1`` every bin is split into
        ``subdivisions x subdivisions`` equal cells and the arrays hold cell
        centers, shape ``(n * subdivisions, m * subdivisions)``.

        :param subdivisions: Cells per bin side, defaults to 1
        :type subdivisions: int, optional
        :rtype: tuple[np.ndarray, np.ndarray]
        """
        if subdivisions < 1:
            raise ValueError(f'Number of subdivisions must be positive, got {subdivisions}')

        q = subdivisions
        lon = self.extent.lon_min + (np.arange(self.n * q) + 0.5) * (self.dx / q)
        lat = self.extent.lat_min + (np.arange(self.m * q) + 0.5) * (self.dy / q)
        return np.meshgrid(lon, lat, indexing='ij')


def parse_shape(value: str) -> tuple[int, int]:
    """
    Parse grid shape from ``NxM`` (columns x rows).

    :raises ValueError: If the value is malformed or not positive.
    :rtype: tuple[int, int]
    """
    parts = value.lower().split('x')
    if len(parts) != 2:
        raise ValueError(f'Grid shape must be in NxM format, got "{value}"')

    try:
        n, m = (int(x.strip()) for x in parts)
    except ValueError as e:
        raise ValueError(f'Invalid grid shape "{value}": {e}') from e

    if n < 1 or m < 1:
        raise ValueError(f'Grid shape must be positive, got "{value}"')

    return n, m


class _Grid(object):
    """
    Immutable ``(n, m)`` array bound to a :class:`GridSpec`.
    """

    dtype: type = np.float64

    def __init__(self, spec: GridSpec, values: np.ndarray | Sequence[Sequence[float]]) -> None:
        array = np.array(values, dtype=self.dtype, copy=True)
        if array.shape != spec.shape:
            raise ValueError(f'Grid values have shape {array.shape}, expected {spec.shape}')

        array.setflags(write=False)

        self.spec: GridSpec = spec
        self._values: np.ndarray = array

    @property
    def values(self) -> np.ndarray:
        """
        Read-only ``(n, m)`` array indexed ``[i, j]``.
        """
        return self._values

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def m(self) -> int:
        return self.spec.m

    def nonzero(self) -> int:
        """
        :return: Number of bins with a nonzero value.
        :rtype: int
        """
        return int(np.count_nonzero(self._values))

    def __getitem__(self, index: tuple[int, int]):
        return self._values[index]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, self.__class__):
            return NotImplemented

        return self.spec == other.spec and np.array_equal(self._values, other._values)

    def __ne__(self, other: object) -> bool:
        return not self == other

    def __repr__(self) -> str:
        return f'{self.__class__.__name__}(n={self.n}, m={self.m})'


class CountGrid(_Grid):
    """
    Number of records per bin, ``c_ij``.
    """

    dtype = np.int64

    def __init__(self, spec: GridSpec, counts: np.ndarray | Sequence[Sequence[int]]) -> None:
        super().__init__(spec, counts)
        if (self._values < 0).any():
            raise ValueError('Bin counts must not be negative')

    @property
    def counts(self) -> np.ndarray:
        return self._values

    @property
    def total(self) -> int:
        """
        Sum of all bin counts (``N``).
        """
        return int(self._values.sum())

    def __add__(self, other: CountGrid) -> CountGrid:
        if not isinstance(other, CountGrid):
            return NotImplemented

        _check_same_spec(self, other)
        return CountGrid(self.spec, self._values + other._values)

    def __mul__(self, factor: int) -> CountGrid:
        if not isinstance(factor, (int, np.integer)) or isinstance(factor, bool):
            return NotImplemented

        return CountGrid(self.spec, self._values * factor)

    __rmul__ = __mul__

    @classmethod
    def Empty(cls, spec: GridSpec) -> CountGrid:
        return cls(spec, np.zeros(spec.shape, dtype=np.int64))


class FractionGrid(_Grid):
    """
    Share of records per bin, ``f_ij = c_ij / N``.
    """

    @property
    def fractions(self) -> np.ndarray:
        return self._values


class DeltaGrid(_Grid):
    """
    Relative distribution ``Δf_ij = f^T_ij - f^R_ij``. Positive values mark
    bins where the target is over-represented.
    """

    @property
    def delta(self) -> np.ndarray:
        return self._values

    def extremes(self) -> tuple[float, float]:
        """
        :return: Largest positive and smallest negative value (0.0 if absent).
        :rtype: tuple[float, float]
        """
        return (float(max(self._values.max(), 0.0)), float(min(self._values.min(), 0.0)))

    def __neg__(self) -> DeltaGrid:
        return DeltaGrid(self.spec, -self._values)


def _check_same_spec(a: _Grid, b: _Grid) -> None:
    if a.spec != b.spec:
        raise GridMismatchError(f'Grid specifications differ: {a.spec} != {b.spec}')


def bin_index(spec: GridSpec, lon: float, lat: float) -> BinIndex | None:
    """
    Find the bin that contains the point.

    :param spec: Grid specification.
    :type spec: GridSpec
    :param lon: Longitude.
    :type lon: float
    :param lat: Latitude.
    :type lat: float
    :return: Bin index or None if the point is outside the closed extent.
    :rtype: BinIndex | None
    """
    if not spec.extent.contains(lon, lat):
        return None

    i = math.floor((lon - spec.extent.lon_min) / spec.dx)
    j = math.floor((lat - spec.extent.lat_min) / spec.dy)

    # Max boundary (and float rounding right below it) belongs to the last bin.
    return BinIndex(min(i, spec.n - 1), min(j, spec.m - 1))


def bin_counts_arrays(lon: np.ndarray, lat: np.ndarray, spec: GridSpec) -> CountGrid:
    """
    Vectorized binning of coordinate arrays. Points outside the extent (and
    NaN coordinates) are not counted.

    :param lon: Longitudes.
    :type lon: np.ndarray
    :param lat: Latitudes.
    :type lat: np.ndarray
    :param spec: Grid specification.
    :type spec: GridSpec
    :rtype: CountGrid
    """
    lon = np.asarray(lon, dtype=np.float64)
    lat = np.asarray(lat, dtype=np.float64)
    if lon.shape != lat.shape:
        raise ValueError('Longitude and latitude arrays must have the same shape')

    ext = spec.extent
    inside = (lon >= ext.lon_min) & (lon <= ext.lon_max) & (lat >= ext.lat_min) & (lat <= ext.lat_max)

    i = np.minimum(np.floor((lon[inside] - ext.lon_min) / spec.dx).astype(np.int64), spec.n - 1)
    j = np.minimum(np.floor((lat[inside] - ext.lat_min) / spec.dy).astype(np.int64), spec.m - 1)

    counts = np.bincount(i * spec.m + j, minlength=spec.size).reshape(spec.shape)
    return CountGrid(spec, counts)


def bin_counts(tweets: Sequence[Tweet], spec: GridSpec, *, workers: int = 1) -> CountGrid:
    """
    Count records per bin.

    With ``workers > 1`` the input is split into chunks that are binned on a
    thread pool; the partial grids are merged by addition.

    :param tweets: Records to bin.
    :type tweets: Sequence[Tweet]
    :param spec: Grid specification.
    :type spec: GridSpec
    :param workers: Number of threads, defaults to 1
    :type workers: int, optional
    :rtype: CountGrid
    """
    def _bin(chunk: Sequence[Tweet]) -> CountGrid:
        lon = np.fromiter((t.lon for t in chunk), dtype=np.float64, count=len(chunk))
        lat = np.fromiter((t.lat for t in chunk), dtype=np.float64, count=len(chunk))
        return bin_counts_arrays(lon, lat, spec)

    tweets = tweets if isinstance(tweets, Sequence) else list(tweets)
    if workers <= 1 or len(tweets) < 2 * workers:
        return _bin(tweets)

    size = math.ceil(len(tweets) / workers)
    chunks = [tweets[x:x + size] for x in range(0, len(tweets), size)]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        partials = list(executor.map(_bin, chunks))

    return sum(partials[1:], partials[0])


def normalize(grid: CountGrid) -> FractionGrid:
    """
    Divide bin counts by the total, ``f_ij = c_ij / N``.

    :param grid: Count grid.
    :type grid: CountGrid
    :raises EmptyDistributionError: If the grid total is zero.
    :rtype: FractionGrid
    """
    total = grid.total
    if total <= 0:
        raise EmptyDistributionError('Unable to normalize an empty distribution (total count is 0)')

    return FractionGrid(grid.spec, grid.counts / total)


def delta(target: CountGrid, reference: CountGrid) -> DeltaGrid:
    """
    Relative distribution ``Δf = f^T - f^R``.

    :param target: Target count grid.
    :type target: CountGrid
    :param reference: Reference count grid.
    :type reference: CountGrid
    :raises GridMismatchError: If the grids have different specifications.
    :raises EmptyDistributionError: If either grid is empty.
    :rtype: DeltaGrid
    """
    _check_same_spec(target, reference)
    return DeltaGrid(target.spec, normalize(target).fractions - normalize(reference).fractions)


def dump_grid(grid: CountGrid) -> str:
    """
    Serialize count grid to the portable text format::

        # microvar-grid 1
        extent <lon_min> <lon_max> <lat_min> <lat_max>
        shape <n> <m>
        <c[0][0]> <c[1][0]> ... <c[n-1][0]>
        ...
        <c[0][m-1]> ... <c[n-1][m-1]>

    One line per row ``j`` (southernmost first), ``n`` counts per line.

    :param grid: Count grid.
    :type grid: CountGrid
    :rtype: str
    """
    ext = grid.spec.extent
    lines = [
        GRID_FORMAT_MAGIC,
        'extent ' + ' '.join(repr(float(x)) for x in ext.export()),
        f'shape {grid.n} {grid.m}',
    ]

    for j in range(grid.m):
        lines.append(' '.join(str(int(x)) for x in grid.counts[:, j]))

    return '\n'.join(lines) + '\n'


def load_grid(text: str | Iterable[str]) -> CountGrid:
    """
    Parse count grid serialized with :func:`dump_grid`.

    :param text: Serialized grid.
    :type text: str | Iterable[str]
    :raises GridFormatError: If the input is malformed.
    :rtype: CountGrid
    """
    lines = text.splitlines() if isinstance(text, str) else [x.rstrip('\n') for x in text]
    lines = [x.strip() for x in lines if x.strip()]

    if len(lines) < 3 or lines[0] != GRID_FORMAT_MAGIC:
        raise GridFormatError(f'Missing "{GRID_FORMAT_MAGIC}" header')

    try:
        key, *values = lines[1].split()
        if key != 'extent' or len(values) != 4:
            raise GridFormatError(f'Invalid extent line: "{lines[1]}"')
        extent = Extent(*[float(x) for x in values])

        key, *values = lines[2].split()
        if key != 'shape' or len(values) != 2:
            raise GridFormatError(f'Invalid shape line: "{lines[2]}"')
        spec = GridSpec(extent, int(values[0]), int(values[1]))
    except ValueError as e:
        raise GridFormatError(f'Invalid grid header: {e}') from e

    rows = lines[3:]
    if len(rows) != spec.m:
        raise GridFormatError(f'Expected {spec.m} rows, got {len(rows)}')

    counts = np.zeros(spec.shape, dtype=np.int64)
    for j, row in enumerate(rows):
        values = row.split()
        if len(values) != spec.n:
            raise GridFormatError(f'Row {j}: expected {spec.n} values, got {len(values)}')

        try:
            counts[:, j] = [int(x) for x in values]
        except ValueError as e:
            raise GridFormatError(f'Row {j}: {e}') from e

    if (counts < 0).any():
        raise GridFormatError('Bin counts must not be negative')

    return CountGrid(spec, counts)
