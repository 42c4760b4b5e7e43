from __future__ import annotations

import pathlib
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from lib.microvar.grid import CountGrid, Extent, GridSpec, delta
from lib.microvar.render import (
    MapStyle,
    bin_position,
    render_angle_histogram,
    render_comparison,
    render_counts,
    render_delta,
    save_svg,
)
from lib.microvar.stats import angle_histogram, frequency_comparison

NS = {'svg': 'http://www.w3.org/2000/svg'}


def markers(document: str) -> list[ET.Element]:
    root = ET.fromstring(document)
    group = root.find(".//svg:g[@id='markers']", NS)
    return [] if group is None else group.findall('svg:circle', NS)


def legend(document: str) -> ET.Element | None:
    return ET.fromstring(document).find(".//svg:g[@id='legend']", NS)


@pytest.fixture
def spec() -> GridSpec:
    return GridSpec(Extent(0.0, 2.0, 0.0, 2.0), 2, 2)


def test_map_style__validation():
    with pytest.raises(ValueError):
        MapStyle(width=0)

    with pytest.raises(ValueError):
        MapStyle(max_marker_px=0)

    with pytest.raises(ValueError):
        MapStyle(alpha=1.5)


def test_map_style__overrides():
    style = MapStyle().with_overrides({
        'max_marker_px': '6', 'width': '400', 'legend': 'off', 'color_pos': '#ff0000', 'background': '',
    })

    assert style.max_marker_px == 6.0
    assert style.width == 400
    assert style.legend is False
    assert style.color_pos == '#ff0000'
    assert style.background is None


@pytest.mark.parametrize('overrides', [{'size': '3'}, {'width': 'wide'}, {'legend': 'maybe'}, {'alpha': '0'}])
def test_map_style__overrides_invalid(overrides: dict[str, str]):
    with pytest.raises(ValueError):
        MapStyle().with_overrides(overrides)


def test_bin_position__north_up(spec: GridSpec):
    style = MapStyle(width=100, height=100)

    assert bin_position(spec, 0, 0, style) == (25.0, 75.0)
    assert bin_position(spec, 1, 1, style) == (75.0, 25.0)


def test_render_counts__marker_per_nonzero_bin(spec: GridSpec):
    document = render_counts(CountGrid(spec, [[9, 0], [0, 1]]))
    circles = markers(document)

    assert len(circles) == 2
    assert float(circles[0].get('r')) / float(circles[1].get('r')) == pytest.approx(3.0)


def test_render_counts__equal_counts_equal_radii(spec: GridSpec):
    circles = markers(render_counts(CountGrid(spec, [[4, 4], [4, 4]])))

    assert len({x.get('r') for x in circles}) == 1


def test_render_counts__empty(spec: GridSpec):
    document = render_counts(CountGrid.Empty(spec))

    assert markers(document) == []
    assert legend(document) is None
    assert ET.fromstring(document).findall('.//svg:circle', NS) == []


def test_render_counts__max_marker_px(spec: GridSpec):
    circles = markers(render_counts(CountGrid(spec, [[10000, 1], [0, 0]]), MapStyle(max_marker_px=5)))

    assert max(float(x.get('r')) for x in circles) == 5.0


def test_render_counts__legend(spec: GridSpec):
    grid = CountGrid(spec, [[9, 0], [0, 1]])

    assert legend(render_counts(grid)) is not None
    assert legend(render_counts(grid, MapStyle(legend=False))) is None


def test_render_delta__opposite_colors(spec: GridSpec):
    style = MapStyle()
    target = CountGrid(spec, [[3, 0], [0, 0]])
    reference = CountGrid(spec, [[0, 0], [0, 3]])
    circles = markers(render_delta(delta(target, reference), style))

    assert len(circles) == 2
    assert {float(x.get('r')) for x in circles} == {style.max_marker_px}
    assert {x.get('fill') for x in circles} == {style.color_pos, style.color_neg}


def test_render_delta__zero_bins_skipped(spec: GridSpec):
    grid = CountGrid(spec, [[1, 2], [0, 0]])
    document = render_delta(delta(grid, grid))

    assert markers(document) == []
    assert legend(document) is None


def test_render_delta__largest_value_is_max_marker(spec: GridSpec):
    style = MapStyle(max_marker_px=20)
    target = CountGrid(spec, [[4, 1], [0, 0]])
    reference = CountGrid(spec, [[1, 1], [1, 2]])
    circles = markers(render_delta(delta(target, reference), style))

    assert max(float(x.get('r')) for x in circles) == 20.0


def test_render__deterministic(spec: GridSpec):
    grid = CountGrid(spec, [[9, 0], [3, 1]])

    assert render_counts(grid) == render_counts(CountGrid(spec, grid.counts.copy()))
    assert render_delta(delta(grid, CountGrid(spec, [[1, 1], [1, 1]]))) == \
        render_delta(delta(grid, CountGrid(spec, [[1, 1], [1, 1]])))


@pytest.mark.parametrize('seed', range(20))
def test_render_counts__fuzzed(seed: int):
    rng = np.random.default_rng(seed)
    spec = GridSpec(Extent(-58.53, -58.35, -34.71, -34.54), int(rng.integers(1, 40)), int(rng.integers(1, 40)))
    counts = rng.poisson(rng.uniform(0.1, 5), size=spec.shape) * rng.integers(0, 2, size=spec.shape)
    grid = CountGrid(spec, counts)
    style = MapStyle()
    circles = markers(render_counts(grid, style))

    assert len(circles) == grid.nonzero()
    for circle in circles:
        assert 0 <= float(circle.get('cx')) <= style.width
        assert 0 <= float(circle.get('cy')) <= style.height
        assert 0 < float(circle.get('r')) <= style.max_marker_px


def test_render_comparison__plot():
    spec = GridSpec(Extent(0.0, 3.0, 0.0, 1.0), 3, 1)
    target = CountGrid(spec, [[3], [1], [0]])
    reference = CountGrid(spec, [[1], [1], [2]])
    root = ET.fromstring(render_comparison(frequency_comparison(target, reference)))

    assert root.find(".//svg:g[@id='noise-band']", NS) is not None
    assert len(root.findall(".//svg:g[@id='noise-band']/svg:polyline", NS)) == 2
    assert len(root.findall(".//svg:g[@id='markers']/svg:circle", NS)) == 3


def test_render_angle_histogram__bars():
    spec = GridSpec(Extent(0.0, 3.0, 0.0, 1.0), 3, 1)
    target = CountGrid(spec, [[0], [1], [1]])
    reference = CountGrid(spec, [[1], [1], [0]])
    root = ET.fromstring(render_angle_histogram(angle_histogram(target, reference)))

    assert len(root.findall(".//svg:g[@id='bars']/svg:rect", NS)) == 3
    assert root.find(".//svg:line[@id='mean']", NS) is not None


def test_save_svg(tmp_path: pathlib.Path, spec: GridSpec):
    path = tmp_path / 'map.svg'
    save_svg(render_counts(CountGrid(spec, [[1, 0], [0, 0]])), path)
    text = path.read_text(encoding='utf-8')

    assert text.startswith('<?xml version="1.0" encoding="utf-8" ?>\n<svg')
    assert len(markers(text.split('\n', 1)[1])) == 1


def test_render_counts__background(tmp_path: pathlib.Path, spec: GridSpec):
    image = tmp_path / 'city.png'
    image.write_bytes(b'\x89PNG\r\n\x1a\n')
    root = ET.fromstring(render_counts(CountGrid(spec, [[1, 0], [0, 0]]), MapStyle(background=str(image))))

    assert root.find('svg:image', NS) is not None

    with pytest.raises(ValueError):
        render_counts(CountGrid.Empty(spec), MapStyle(background=str(tmp_path / 'city.bmp')))
