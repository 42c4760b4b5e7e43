"""
Similarity metrics between target and reference count grids.

Every bin of the grid is one point of the frequency-comparison scatter with
``x = c^R_ij`` and ``y = c^T_ij``. If both distributions have the same shape,
all points lie on the exact-correlation line ``y = k x`` with
``k = N_T / N_R``. Deviations are quantified by:

* least-squares fit and Pearson correlation (with two-sided p-value),
* the shot-noise band ``k * sqrt(c^R)`` around the exact-correlation line,
* the histogram of point angles ``atan2(c^T, c^R)`` in 1 degree bins.

Reductions use :func:`math.fsum` so results do not depend on summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np
import scipy.special
import yaml

from .errors import EmptyDistributionError, GridMismatchError, NoDataError, UndefinedCorrelationError
from .grid import BinIndex, CountGrid

ANGLE_BINS = 90


@dataclass(frozen=True, slots=True)
class ScatterPoint(object):
    """
    One bin in the frequency-comparison plot.
    """

    c_ref: int
    c_target: int
    bin: BinIndex


@dataclass(frozen=True, slots=True)
class RegressionResult(object):
    """
    Least-squares line ``y = slope * x + intercept`` and Pearson correlation.
    """

    slope: float
    intercept: float
    pearson_r: float
    p_value: float
    df: int


@dataclass(frozen=True, slots=True)
class NoiseBand(object):
    """
    Counting noise around the exact-correlation line: a reference count
    ``c`` allows the target count to deviate by ``k * sqrt(c)``.
    """

    k: float

    def band(self, c_ref: float | np.ndarray) -> float | np.ndarray:
        return noise_band(self.k, c_ref)

    def __call__(self, c_ref: float | np.ndarray) -> float | np.ndarray:
        return self.band(c_ref)

    def fraction_within(self, c_ref: np.ndarray, c_target: np.ndarray) -> float:
        """
        Share of points with ``|c_target - k * c_ref| <= k * sqrt(c_ref)``.

        :param c_ref: Reference counts.
        :type c_ref: np.ndarray
        :param c_target: Target counts.
        :type c_target: np.ndarray
        :rtype: float
        """
        c_ref = np.asarray(c_ref, dtype=np.float64)
        c_target = np.asarray(c_target, dtype=np.float64)
        if c_ref.size == 0:
            raise NoDataError('No points to evaluate')

        inside = np.abs(c_target - self.k * c_ref) <= self.band(c_ref)
        return float(np.count_nonzero(inside)) / c_ref.size


@dataclass(frozen=True)
class ComparisonStats(object):
    """
    Frequency comparison of two count grids.
    """

    regression: RegressionResult
    k_exact: float
    n_target: int
    n_reference: int
    c_ref: np.ndarray = field(repr=False, compare=False)
    """
    Reference counts of all bins in row-major ``[i, j]`` order.
    """

    c_target: np.ndarray = field(repr=False, compare=False)
    """
    Target counts of all bins, aligned with :attr:`c_ref`.
    """

    shape: tuple[int, int] = (0, 0)

    @property
    def noise_band(self) -> NoiseBand:
        return NoiseBand(self.k_exact)

    @property
    def points(self) -> list[ScatterPoint]:
        """
        Scatter points, one per bin.
        """
        m = self.shape[1]
        return [
            ScatterPoint(int(x), int(y), BinIndex(index // m, index % m))
            for index, (x, y) in enumerate(zip(self.c_ref, self.c_target))
        ]

    def noise_band_fraction(self) -> float:
        return self.noise_band.fraction_within(self.c_ref, self.c_target)


@dataclass(frozen=True)
class AngleHistogram(object):
    """
    Histogram of per-bin scatter angles in 1 degree bins ``[0, 1), ..., [89, 90]``.
    Mean and (population) standard deviation are computed over the raw angles.
    """

    bin_counts: tuple[int, ...]
    n_points: int
    mean_deg: float
    std_deg: float
    angles: np.ndarray = field(repr=False, compare=False, default_factory=lambda: np.zeros(0))


def _moments(points: Iterable[tuple[float, float]] | np.ndarray) -> tuple[int, float, float, float, float, float]:
    array = np.asarray(points if isinstance(points, np.ndarray) else list(points), dtype=np.float64)
    if array.size == 0:
        return (0, 0.0, 0.0, 0.0, 0.0, 0.0)

    if array.ndim != 2 or array.shape[1] != 2:
        raise ValueError('Points must be a sequence of (x, y) pairs')

    x = array[:, 0]
    y = array[:, 1]
    size = len(x)
    mx = math.fsum(x) / size
    my = math.fsum(y) / size
    dx = x - mx
    dy = y - my

    return (size, mx, my, math.fsum(dx * dx), math.fsum(dy * dy), math.fsum(dx * dy))


def pearson(points: Iterable[tuple[float, float]] | np.ndarray) -> float:
    """
    Pearson product-moment correlation coefficient.

    :param points: ``(x, y)`` pairs, at least two.
    :type points: Iterable[tuple[float, float]] | np.ndarray
    :raises NoDataError: If there are fewer than two points.
    :raises UndefinedCorrelationError: If either coordinate has zero variance.
    :rtype: float
    """
    size, _, _, sxx, syy, sxy = _moments(points)
    if size < 2:
        raise NoDataError(f'Pearson correlation requires at least 2 points, got {size}')

    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError('Pearson correlation is undefined, one coordinate has zero variance')

    r = sxy / (math.sqrt(sxx) * math.sqrt(syy))
    return max(-1.0, min(1.0, r))


def linear_fit(points: Iterable[tuple[float, float]] | np.ndarray) -> tuple[float, float]:
    """
    Ordinary least-squares fit ``y = slope * x + intercept``.

    :param points: ``(x, y)`` pairs, at least two.
    :type points: Iterable[tuple[float, float]] | np.ndarray
    :raises NoDataError: If there are fewer than two points.
    :raises UndefinedCorrelationError: If all ``x`` are equal.
    :return: ``(slope, intercept)``
    :rtype: tuple[float, float]
    """
    size, mx, my, sxx, _, sxy = _moments(points)
    if size < 2:
        raise NoDataError(f'Linear fit requires at least 2 points, got {size}')

    if sxx == 0:
        raise UndefinedCorrelationError('Linear fit is undefined, all x values are equal')

    slope = sxy / sxx
    return (slope, my - slope * mx)


def p_value(r: float, df: int) -> float:
    """
    Two-sided p-value of the Pearson coefficient.

    The test statistic ``t = r * sqrt(df / (1 - r^2))`` follows Student's t
    distribution with ``df`` degrees of freedom. Its two-sided tail equals
    the regularized incomplete beta ``I_x(df/2, 1/2)`` at
    ``x = df / (df + t^2) = 1 - r^2``.

    :param r: Correlation coefficient in ``[-1, 1]``.
    :type r: float
    :param df: Degrees of freedom (number of points - 2), at least 1.
    :type df: int
    :rtype: float
    """
    if not -1.0 <= r <= 1.0:
        raise ValueError(f'Correlation coefficient must be in [-1, 1], got {r}')

    if df < 1:
        raise ValueError(f'Degrees of freedom must be at least 1, got {df}')

    x = (1.0 - r) * (1.0 + r)
    if x <= 0.0:
        return 0.0

    return float(min(1.0, max(0.0, scipy.special.betainc(df / 2.0, 0.5, x))))


def noise_band(k: float, c_ref: float | np.ndarray) -> float | np.ndarray:
    """
    Shot-noise half-width ``k * sqrt(c_ref)`` in target-count units.

    :param k: Exact-correlation slope, positive.
    :type k: float
    :param c_ref: Reference count(s), not negative.
    :type c_ref: float | np.ndarray
    :rtype: float | np.ndarray
    """
    if not k > 0:
        raise ValueError(f'Slope k must be positive, got {k}')

    if np.any(np.asarray(c_ref) < 0):
        raise ValueError('Reference count must not be negative')

    if isinstance(c_ref, np.ndarray):
        return k * np.sqrt(c_ref)

    return k * math.sqrt(c_ref)


def _check_pair(target: CountGrid, reference: CountGrid) -> None:
    if target.spec != reference.spec:
        raise GridMismatchError(f'Grid specifications differ: {target.spec} != {reference.spec}')


def frequency_comparison(target: CountGrid, reference: CountGrid) -> ComparisonStats:
    """
    Compare two count grids: one scatter point per bin (empty bins included),
    least-squares fit, Pearson correlation with ``df = n*m - 2`` and the
    exact-correlation slope ``k = N_T / N_R``.

    :param target: Target count grid.
    :type target: CountGrid
    :param reference: Reference count grid.
    :type reference: CountGrid
    :raises GridMismatchError: If the grids have different specifications.
    :raises EmptyDistributionError: If either grid is empty.
    :raises NoDataError: If the grid has fewer than 3 bins.
    :raises UndefinedCorrelationError: If either grid is constant.
    :rtype: ComparisonStats
    """
    _check_pair(target, reference)

    n_target = target.total
    n_reference = reference.total
    if n_target <= 0 or n_reference <= 0:
        raise EmptyDistributionError(
            f'Both distributions must be non-empty (target: {n_target}, reference: {n_reference})'
        )

    c_ref = reference.counts.reshape(-1).copy()
    c_target = target.counts.reshape(-1).copy()
    if c_ref.size < 3:
        raise NoDataError(f'Frequency comparison requires at least 3 bins, got {c_ref.size}')

    points = np.column_stack((c_ref, c_target)).astype(np.float64)
    r = pearson(points)
    slope, intercept = linear_fit(points)
    df = int(c_ref.size - 2)

    c_ref.setflags(write=False)
    c_target.setflags(write=False)

    return ComparisonStats(
        regression=RegressionResult(slope, intercept, r, p_value(r, df), df),
        k_exact=n_target / n_reference,
        n_target=n_target,
        n_reference=n_reference,
        c_ref=c_ref,
        c_target=c_target,
        shape=target.spec.shape,
    )


def angles_deg(c_ref: np.ndarray, c_target: np.ndarray) -> np.ndarray:
    """
    Angles of the points to the x-axis in degrees, ``atan2(c_target, c_ref)``.
    Points at the origin are dropped.

    :rtype: np.ndarray
    """
    c_ref = np.asarray(c_ref, dtype=np.float64).reshape(-1)
    c_target = np.asarray(c_target, dtype=np.float64).reshape(-1)
    keep = (c_ref + c_target) > 0

    return np.degrees(np.arctan2(c_target[keep], c_ref[keep]))


def histogram_from_angles(angles: Sequence[float] | np.ndarray) -> AngleHistogram:
    """
    Build :class:`AngleHistogram` from angles in ``[0, 90]`` degrees.

    :raises NoDataError: If there are no angles.
    :rtype: AngleHistogram
    """
    angles = np.asarray(angles, dtype=np.float64).reshape(-1)
    if angles.size == 0:
        raise NoDataError('Angle histogram requires at least one non-empty bin')

    index = np.clip(np.floor(angles).astype(np.int64), 0, ANGLE_BINS - 1)
    counts = np.bincount(index, minlength=ANGLE_BINS)

    mean = math.fsum(angles) / angles.size
    std = math.sqrt(math.fsum((angles - mean) ** 2) / angles.size)

    angles = angles.copy()
    angles.setflags(write=False)

    return AngleHistogram(
        bin_counts=tuple(int(x) for x in counts),
        n_points=int(angles.size),
        mean_deg=min(90.0, max(0.0, mean)),
        std_deg=std,
        angles=angles,
    )


def angle_histogram(target: CountGrid, reference: CountGrid) -> AngleHistogram:
    """
    Histogram of scatter angles of all bins with ``c_target + c_ref > 0``.
    Angle 90 degrees falls into the last bin ``[89, 90]``.

    :param target: Target count grid.
    :type target: CountGrid
    :param reference: Reference count grid.
    :type reference: CountGrid
    :raises GridMismatchError: If the grids have different specifications.
    :raises NoDataError: If both grids are all zero.
    :rtype: AngleHistogram
    """
    _check_pair(target, reference)
    return histogram_from_angles(angles_deg(reference.counts, target.counts))


def build_report(
    stats: ComparisonStats,
    histogram: AngleHistogram,
    *,
    target: str,
    reference: str,
    extent: Sequence[float],
) -> dict[str, Any]:
    """
    Collect comparison results into the stats report structure. Key order is
    part of the format.

    :rtype: dict[str, Any]
    """
    reg = stats.regression
    return {
        'target': target,
        'reference': reference,
        'grid': {'n': stats.shape[0], 'm': stats.shape[1], 'extent': [float(x) for x in extent]},
        'n_target': stats.n_target,
        'n_reference': stats.n_reference,
        'k_exact': float(stats.k_exact),
        'slope': float(reg.slope),
        'intercept': float(reg.intercept),
        'pearson_r': float(reg.pearson_r),
        'p_value': float(reg.p_value),
        'df': reg.df,
        'noise_band_fraction': stats.noise_band_fraction(),
        'angle_mean_deg': float(histogram.mean_deg),
        'angle_std_deg': float(histogram.std_deg),
        'angle_points': histogram.n_points,
        'angle_histogram': list(histogram.bin_counts),
    }


def dump_report(report: dict[str, Any]) -> str:
    """
    Serialize stats report to YAML.

    :rtype: str
    """
    return yaml.safe_dump(report, sort_keys=False, default_flow_style=None, width=120)
