"""
SVG rendering of count maps, relative distributions, frequency-comparison
plots and angle histograms.

Maps use a linear lon/lat projection: bin ``(i, j)`` is drawn at
``x = (i + 0.5) / n * width`` and ``y = (1 - (j + 0.5) / m) * height`` so that
north is up. Marker area is proportional to the value (radius grows with the
square root). Markers are placed inside ``<g id="markers">`` and the scale
legend inside ``<g id="legend">``; empty maps contain no circles at all.

Output is deterministic: coordinates are rounded to 1/1000 px and elements
are emitted in grid order.
"""

from __future__ import annotations

import base64
import math
import pathlib
from dataclasses import dataclass, fields, replace
from typing import Any

import numpy as np
import svgwrite

from .grid import CountGrid, DeltaGrid, GridSpec
from .stats import ANGLE_BINS, AngleHistogram, ComparisonStats

IMAGE_TYPES = {
    '.png': 'image/png',
    '.jpg': 'image/jpeg',
    '.jpeg': 'image/jpeg',
    '.gif': 'image/gif',
}


@dataclass(frozen=True, slots=True)
class MapStyle(object):
    """
    Visual settings shared by all renderers.
    """

    width: int = 800
    height: int = 800
    max_marker_px: float = 12.0
    """
    Largest marker radius.
    """

    marker_scale_px: float = 1.0
    """
    Count maps: radius of a marker for a count of one, radius grows with ``sqrt(count)``.
    """

    alpha: float = 0.5
    color_pos: str = '#d62728'
    color_neg: str = '#1f5fbf'
    color_mono: str = '#52708c'
    background: str | None = None
    """
    Optional raster image (png, jpeg, gif) drawn under the markers.
    """

    legend: bool = True

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f'Canvas size must be positive, got {self.width}x{self.height}')

        if not self.max_marker_px > 0:
            raise ValueError(f'max_marker_px must be positive, got {self.max_marker_px}')

        if not self.marker_scale_px > 0:
            raise ValueError(f'marker_scale_px must be positive, got {self.marker_scale_px}')

        if not 0 < self.alpha <= 1:
            raise ValueError(f'alpha must be in (0, 1], got {self.alpha}')

    def with_overrides(self, overrides: dict[str, str]) -> MapStyle:
        """
        Apply ``key=value`` overrides given as strings (command line).

        :param overrides: Field name to value.
        :type overrides: dict[str, str]
        :raises ValueError: On unknown field or value that can not be converted.
        :rtype: MapStyle
        """
        types = {x.name: x.type for x in fields(self)}
        values: dict[str, Any] = {}

        for key, value in overrides.items():
            if key not in types:
                raise ValueError(f'Unknown style key "{key}", expected one of: {", ".join(sorted(types))}')

            kind = str(types[key])
            try:
                if kind == 'int':
                    values[key] = int(value)
                elif kind == 'float':
                    values[key] = float(value)
                elif kind == 'bool':
                    if value.lower() not in ('1', '0', 'true', 'false', 'yes', 'no', 'on', 'off'):
                        raise ValueError(f'not a boolean: "{value}"')
                    values[key] = value.lower() in ('1', 'true', 'yes', 'on')
                elif key == 'background':
                    values[key] = value or None
                else:
                    values[key] = value
            except ValueError as e:
                raise ValueError(f'Invalid value for style key "{key}": {e}') from e

        return replace(self, **values)


def _px(value: float) -> float:
    return round(float(value), 3)


def _drawing(style: MapStyle) -> svgwrite.Drawing:
    dwg = svgwrite.Drawing(size=(style.width, style.height), profile='full', debug=False)
    dwg.viewbox(0, 0, style.width, style.height)

    if style.background is not None:
        path = pathlib.Path(style.background)
        mime = IMAGE_TYPES.get(path.suffix.lower())
        if mime is None:
            raise ValueError(f'Unsupported background image type "{path.suffix}", use png, jpeg or gif')

        data = base64.b64encode(path.read_bytes()).decode('ascii')
        dwg.add(dwg.image(
            href=f'data:{mime};base64,{data}',
            insert=(0, 0),
            size=(style.width, style.height),
            preserveAspectRatio='none',
        ))

    return dwg


def bin_position(spec: GridSpec, i: int, j: int, style: MapStyle) -> tuple[float, float]:
    """
    Canvas position of the bin center, north up.

    :rtype: tuple[float, float]
    """
    return ((i + 0.5) / spec.n * style.width, (1.0 - (j + 0.5) / spec.m) * style.height)


def count_radius(count: float, style: MapStyle) -> float:
    """
    Marker radius for a count: ``marker_scale_px * sqrt(count)`` capped at ``max_marker_px``.

    :rtype: float
    """
    return min(style.marker_scale_px * math.sqrt(count), style.max_marker_px)


def delta_radius(value: float, vmax: float, style: MapStyle) -> float:
    """
    Marker radius for a relative distribution value, the largest ``|value|``
    maps to ``max_marker_px``.

    :rtype: float
    """
    return style.max_marker_px * math.sqrt(abs(value) / vmax)


def _legend(dwg: svgwrite.Drawing, entries: list[tuple[float, str, str]], style: MapStyle) -> None:
    """
    Draw legend entries ``(radius, fill, label)`` stacked in the lower left corner.
    """
    legend = dwg.add(dwg.g(id='legend', font_size='11px', font_family='sans-serif'))
    step = max(2 * style.max_marker_px + 4, 16)
    y = style.height - 8 - step / 2 - step * (len(entries) - 1)
    x = 8 + style.max_marker_px

    for radius, fill, label in entries:
        legend.add(dwg.circle(
            center=(_px(x), _px(y)), r=_px(radius),
            fill=fill, fill_opacity=style.alpha, stroke='#333333', stroke_width=0.5,
        ))
        legend.add(dwg.text(label, insert=(_px(x + style.max_marker_px + 6), _px(y + 4)), fill='#333333'))
        y += step


def render_counts(grid: CountGrid, style: MapStyle = MapStyle()) -> str:
    """
    Map of a count grid: one semi-transparent circle per nonzero bin.

    :param grid: Count grid.
    :type grid: CountGrid
    :param style: Style, defaults to MapStyle()
    :type style: MapStyle, optional
    :return: SVG document.
    :rtype: str
    """
    dwg = _drawing(style)
    markers = dwg.add(dwg.g(id='markers', fill=style.color_mono, fill_opacity=style.alpha))

    for i, j in zip(*np.nonzero(grid.counts)):
        x, y = bin_position(grid.spec, int(i), int(j), style)
        markers.add(dwg.circle(center=(_px(x), _px(y)), r=_px(count_radius(int(grid.counts[i, j]), style))))

    if style.legend and grid.nonzero():
        cmax = int(grid.counts.max())
        values = sorted({1, max(1, round(cmax / 4)), cmax})
        _legend(dwg, [(count_radius(v, style), style.color_mono, f'{v}') for v in values], style)

    return dwg.tostring()


def render_delta(delta: DeltaGrid, style: MapStyle = MapStyle()) -> str:
    """
    Map of a relative distribution: positive bins in ``color_pos``, negative
    in ``color_neg``, zero bins are not drawn.

    :param delta: Relative distribution.
    :type delta: DeltaGrid
    :param style: Style, defaults to MapStyle()
    :type style: MapStyle, optional
    :return: SVG document.
    :rtype: str
    """
    dwg = _drawing(style)
    markers = dwg.add(dwg.g(id='markers', fill_opacity=style.alpha))

    values = delta.delta
    high, low = delta.extremes()
    vmax = max(high, -low)

    for i, j in zip(*np.nonzero(values)):
        value = float(values[i, j])
        x, y = bin_position(delta.spec, int(i), int(j), style)
        markers.add(dwg.circle(
            center=(_px(x), _px(y)),
            r=_px(delta_radius(value, vmax, style)),
            fill=style.color_pos if value > 0 else style.color_neg,
        ))

    if style.legend and vmax > 0:
        _legend(dwg, [
            (style.max_marker_px, style.color_pos, f'+{vmax:.3g}'),
            (delta_radius(vmax / 4, vmax, style), style.color_pos, f'+{vmax / 4:.3g}'),
            (delta_radius(vmax / 4, vmax, style), style.color_neg, f'-{vmax / 4:.3g}'),
            (style.max_marker_px, style.color_neg, f'-{vmax:.3g}'),
        ], style)

    return dwg.tostring()


class _Axes(object):
    """
    Linear data-to-canvas mapping of a plot area with margins.
    """

    margin = 56

    def __init__(self, style: MapStyle, xmax: float, ymax: float) -> None:
        self.style = style
        self.xmax = xmax if xmax > 0 else 1.0
        self.ymax = ymax if ymax > 0 else 1.0
        self.left = self.margin
        self.bottom = style.height - self.margin
        self.plot_width = style.width - 2 * self.margin
        self.plot_height = style.height - 2 * self.margin

    def x(self, value: float) -> float:
        return _px(self.left + value / self.xmax * self.plot_width)

    def y(self, value: float) -> float:
        return _px(self.bottom - value / self.ymax * self.plot_height)

    def draw(self, dwg: svgwrite.Drawing, xlabel: str, ylabel: str, xticks: list[float], yticks: list[float]) -> None:
        axes = dwg.add(dwg.g(id='axes', stroke='#333333', stroke_width=1, font_size='11px', font_family='sans-serif'))
        axes.add(dwg.line(start=(self.x(0), self.y(0)), end=(self.x(self.xmax), self.y(0))))
        axes.add(dwg.line(start=(self.x(0), self.y(0)), end=(self.x(0), self.y(self.ymax))))

        for tick in xticks:
            axes.add(dwg.line(start=(self.x(tick), self.y(0)), end=(self.x(tick), _px(self.bottom + 4))))
            axes.add(dwg.text(f'{tick:g}', insert=(self.x(tick), _px(self.bottom + 16)),
                              text_anchor='middle', stroke='none', fill='#333333'))

        for tick in yticks:
            axes.add(dwg.line(start=(_px(self.left - 4), self.y(tick)), end=(self.x(0), self.y(tick))))
            axes.add(dwg.text(f'{tick:g}', insert=(_px(self.left - 6), _px(self.y(tick) + 4)),
                              text_anchor='end', stroke='none', fill='#333333'))

        axes.add(dwg.text(xlabel, insert=(_px(self.left + self.plot_width / 2), _px(self.style.height - 16)),
                          text_anchor='middle', stroke='none', fill='#333333'))
        middle = _px(self.bottom - self.plot_height / 2)
        axes.add(dwg.text(ylabel, insert=(16, middle), text_anchor='middle', stroke='none', fill='#333333',
                          transform=f'rotate(-90 16 {middle})'))


def _ticks(vmax: float, count: int = 5) -> list[float]:
    if vmax <= 0:
        return [0.0]

    raw = vmax / count
    magnitude = 10 ** math.floor(math.log10(raw))
    step = min((x * magnitude for x in (1, 2, 5, 10) if x * magnitude >= raw), default=raw)
    return [x * step for x in range(int(vmax / step) + 1)]


def render_comparison(stats: ComparisonStats, style: MapStyle = MapStyle()) -> str:
    """
    Frequency-comparison plot: target vs reference count per bin with the
    least-squares line, the exact-correlation line ``y = k x`` and the noise
    band ``y = k x +- k sqrt(x)``.

    :param stats: Comparison statistics.
    :type stats: ComparisonStats
    :param style: Style, defaults to MapStyle()
    :type style: MapStyle, optional
    :return: SVG document.
    :rtype: str
    """
    k = stats.k_exact
    reg = stats.regression
    xmax = float(stats.c_ref.max()) * 1.05 or 1.0
    ymax = float(max(stats.c_target.max(), k * xmax)) * 1.05 or 1.0
    axes = _Axes(style, xmax, ymax)

    dwg = svgwrite.Drawing(size=(style.width, style.height), profile='full', debug=False)
    dwg.viewbox(0, 0, style.width, style.height)
    axes.draw(dwg, 'reference count per bin', 'target count per bin', _ticks(xmax), _ticks(ymax))

    clip = dwg.defs.add(dwg.clipPath(id='plot-area'))
    clip.add(dwg.rect(insert=(axes.left, _px(axes.bottom - axes.plot_height)),
                      size=(axes.plot_width, axes.plot_height)))

    xs = np.linspace(0.0, xmax, 101)
    band = dwg.add(dwg.g(id='noise-band', fill='none', stroke='#888888', stroke_width=1,
                         clip_path='url(#plot-area)'))
    for sign in (1, -1):
        ys = np.maximum(k * xs + sign * k * np.sqrt(xs), 0.0)
        band.add(dwg.polyline([(axes.x(x), axes.y(y)) for x, y in zip(xs, ys)]))

    lines = dwg.add(dwg.g(id='lines', fill='none', stroke_width=1.5, clip_path='url(#plot-area)'))
    lines.add(dwg.line(start=(axes.x(0), axes.y(0)), end=(axes.x(xmax), axes.y(k * xmax)),
                       stroke=style.color_pos, stroke_dasharray='6,4'))
    lines.add(dwg.line(start=(axes.x(0), axes.y(reg.intercept)),
                       end=(axes.x(xmax), axes.y(reg.slope * xmax + reg.intercept)), stroke='#000000'))

    points = np.unique(np.column_stack((stats.c_ref, stats.c_target)), axis=0)
    markers = dwg.add(dwg.g(id='markers', fill=style.color_mono, fill_opacity=style.alpha))
    for x, y in points:
        markers.add(dwg.circle(center=(axes.x(x), axes.y(y)), r=2))

    dwg.add(dwg.text(
        f'r({reg.df}) = {reg.pearson_r:.3f}, p = {reg.p_value:.3g}, slope = {reg.slope:.3f}, k = {k:.3f}',
        insert=(axes.left, 24), font_size='13px', font_family='sans-serif', fill='#333333',
    ))

    return dwg.tostring()


def render_angle_histogram(histogram: AngleHistogram, style: MapStyle = MapStyle()) -> str:
    """
    Bar chart of the angle histogram with the mean angle marked.

    :param histogram: Angle histogram.
    :type histogram: AngleHistogram
    :param style: Style, defaults to MapStyle()
    :type style: MapStyle, optional
    :return: SVG document.
    :rtype: str
    """
    cmax = max(histogram.bin_counts) or 1
    axes = _Axes(style, float(ANGLE_BINS), float(cmax) * 1.05)

    dwg = svgwrite.Drawing(size=(style.width, style.height), profile='full', debug=False)
    dwg.viewbox(0, 0, style.width, style.height)
    axes.draw(dwg, 'angle (degrees)', 'number of bins', [float(x) for x in range(0, 91, 15)], _ticks(cmax * 1.05))

    bars = dwg.add(dwg.g(id='bars', fill=style.color_mono))
    for degree, count in enumerate(histogram.bin_counts):
        if not count:
            continue

        top = axes.y(count)
        bars.add(dwg.rect(insert=(axes.x(degree), top), size=(_px(axes.x(degree + 1) - axes.x(degree)),
                                                               _px(axes.y(0) - top))))

    dwg.add(dwg.line(start=(axes.x(histogram.mean_deg), axes.y(0)), end=(axes.x(histogram.mean_deg), axes.y(cmax)),
                     id='mean', stroke=style.color_pos, stroke_width=1.5, stroke_dasharray='6,4'))
    dwg.add(dwg.text(
        f'n = {histogram.n_points}, mean = {histogram.mean_deg:.1f}°, std = {histogram.std_deg:.1f}°',
        insert=(axes.left, 24), font_size='13px', font_family='sans-serif', fill='#333333',
    ))

    return dwg.tostring()


def save_svg(document: str, path: str | pathlib.Path) -> None:
    """
    Write SVG document with XML declaration.
    """
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write('<?xml version="1.0" encoding="utf-8" ?>\n')
        f.write(document)
        f.write('\n')
