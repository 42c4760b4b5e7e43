from __future__ import annotations

import os
import subprocess
import sys
import pathlib
import xml.etree.ElementTree as ET

import numpy as np
import pytest
import yaml

from lib.microvar.cli import get_parser, main, parse_style
from lib.microvar.config import MicrovarConfig
from lib.microvar.constants import CONFIG_ENV, KnownExtent
from lib.microvar.corpus import CorpusFilter, Tweet, ingest_files, write_corpus
from lib.microvar.grid import CountGrid, GridSpec, bin_counts, dump_grid, load_grid
from lib.microvar.render import MapStyle, render_counts, save_svg
from lib.microvar.synth import planted_expectation

NS = {'svg': 'http://www.w3.org/2000/svg'}
CABA = KnownExtent.CABA.value
QUIET = ['--log-path', os.devnull]


def circles(path: pathlib.Path) -> list[ET.Element]:
    root = ET.fromstring(path.read_text(encoding='utf-8').split('\n', 1)[1])
    group = root.find(".//svg:g[@id='markers']", NS)
    return [] if group is None else group.findall('svg:circle', NS)


@pytest.fixture(autouse=True)
def shipped_config(monkeypatch: pytest.MonkeyPatch) -> None:
    monkeypatch.delenv(CONFIG_ENV, raising=False)


@pytest.fixture
def scenarios(tmp_path: pathlib.Path) -> str:
    path = tmp_path / 'scenarios.yaml'
    path.write_text(yaml.safe_dump({
        'token_sets': [{'name': 'tango', 'tokens': ['tango']}],
        'scenarios': [{'name': 'tiny', 'kind': 'null', 'n_tweets': 500, 'seed': 3, 'rate': 0.2}],
    }), encoding='utf-8')
    return str(path)


@pytest.fixture
def corpus(tmp_path: pathlib.Path) -> str:
    path = tmp_path / 'corpus.jsonl'
    tweets = []
    for index in range(40):
        text = 'la boca' if index % 3 == 0 else 'palermo soho'
        tweets.append(Tweet(str(index), -58.50 + 0.003 * index, -34.70 + 0.004 * index, text, 'es'))

    write_corpus(tweets, str(path))
    return str(path)


def test_parse_style():
    assert parse_style(['max_marker_px=6', ' alpha = 0.3 ']) == {'max_marker_px': '6', 'alpha': '0.3'}
    assert parse_style(None) == {}

    with pytest.raises(ValueError):
        parse_style(['max_marker_px'])


def test_get_parser__compare_defaults():
    args = get_parser().parse_args(['compare', '--input', 'a.jsonl', '--case', 'las-los', '--out', 'out'])

    assert args.grid == (200, 200)
    assert args.extent == CABA
    assert args.lang == 'es'
    assert args.log_path == '/dev/stderr'


@pytest.mark.parametrize('argv', [
    ['compare', '--input', 'a', '--out', 'o', '--grid', '0x5'],
    ['compare', '--input', 'a', '--out', 'o', '--extent', '1,2,3'],
    ['compare', '--input', 'a', '--out', 'o', '--since', 'yesterday'],
    ['compare', '--out', 'o'],
    ['frobnicate'],
])
def test_get_parser__invalid(argv: list[str]):
    with pytest.raises(SystemExit):
        get_parser().parse_args(argv)


def test_main__compare(tmp_path: pathlib.Path, corpus: str, capsys: pytest.CaptureFixture):
    out = tmp_path / 'out'
    assert main(QUIET + ['compare', '--input', corpus, '--case', 'la-boca-palermo', '--out', str(out)]) == 0

    printed = capsys.readouterr().out.split()
    assert len(printed) == 8
    assert all(pathlib.Path(x).is_file() for x in printed)

    report = yaml.safe_load((out / 'la-boca-vs-palermo.report.yaml').read_text(encoding='utf-8'))
    assert report['grid'] == {'n': 200, 'm': 200, 'extent': CABA.export()}
    assert (report['n_target'], report['n_reference']) == (14, 26)


def test_main__compare_options(tmp_path: pathlib.Path, corpus: str):
    out = tmp_path / 'out'
    argv = QUIET + [
        'compare', '--input', corpus, '--input', corpus, '--target-set', 'la-boca', '--reference-set', 'palermo',
        '--grid', '10x8', '--lang', '', '--out', str(out), '--style', 'max_marker_px=4', '--workers', '2',
    ]

    assert main(argv) == 0

    report = yaml.safe_load((out / 'la-boca-vs-palermo.report.yaml').read_text(encoding='utf-8'))
    assert (report['grid']['n'], report['grid']['m']) == (10, 8)
    assert report['n_target'] == 28
    assert max(float(x.get('r')) for x in circles(out / 'la-boca.counts.svg')) <= 4


def test_main__compare_missing_token(tmp_path: pathlib.Path, corpus: str, caplog: pytest.LogCaptureFixture):
    out = tmp_path / 'out'
    argv = QUIET + [
        'compare', '--input', corpus, '--target-set', 'tango', '--reference-set', 'palermo', '--out', str(out),
    ]

    assert main(argv) == 1
    assert not out.exists()
    assert any('selected no records' in x.getMessage() for x in caplog.records)


@pytest.mark.parametrize('extra', [
    ['--case', 'no-such-case'],
    ['--target-set', 'la-boca', '--reference-set', 'cumbia'],
    ['--case', 'la-boca-palermo', '--style', 'radius=3'],
    ['--case', 'la-boca-palermo', '--style', 'max_marker_px'],
])
def test_main__compare_errors(tmp_path: pathlib.Path, corpus: str, extra: list[str]):
    out = tmp_path / 'out'

    assert main(QUIET + ['compare', '--input', corpus, '--out', str(out)] + extra) == 1
    assert not out.exists()


def test_main__compare_unreadable_input(tmp_path: pathlib.Path):
    argv = QUIET + ['compare', '--input', str(tmp_path / 'missing.jsonl'), '--case', 'las-los', '--out', str(tmp_path)]

    assert main(argv) == 1


def test_main__compare_requires_sets(tmp_path: pathlib.Path, corpus: str):
    with pytest.raises(SystemExit):
        main(QUIET + ['compare', '--input', corpus, '--target-set', 'la-boca', '--out', str(tmp_path / 'out')])


def test_main__simulate(tmp_path: pathlib.Path, scenarios: str, capsys: pytest.CaptureFixture):
    first = tmp_path / 'first.jsonl'
    second = tmp_path / 'second.jsonl'

    assert main(QUIET + ['simulate', '--config', scenarios, '--scenario', 'tiny', '--out', str(first)]) == 0
    summary = yaml.safe_load(capsys.readouterr().out)
    assert main(QUIET + ['simulate', '--config', scenarios, '--scenario', 'tiny', '--out', str(second)]) == 0

    assert len(first.read_text(encoding='utf-8').splitlines()) == 500
    assert first.read_bytes() == second.read_bytes()
    assert summary['scenario'] == 'tiny'
    assert summary['kind'] == 'null'
    assert summary['seed'] == 3
    assert summary['records'] == 500
    assert summary['target']['token'] == 'tango'
    assert 0 < summary['target']['records'] < 500


def test_main__simulate_overrides(tmp_path: pathlib.Path, scenarios: str, capsys: pytest.CaptureFixture):
    out = tmp_path / 'corpus.jsonl'

    assert main(QUIET + [
        'simulate', '--config', scenarios, '--scenario', 'tiny', '--out', str(out), '--seed', '8', '--n-tweets', '20',
    ]) == 0
    summary = yaml.safe_load(capsys.readouterr().out)

    assert summary['seed'] == 8
    assert len(out.read_text(encoding='utf-8').splitlines()) == 20


def test_main__simulate_unknown(tmp_path: pathlib.Path, scenarios: str):
    out = tmp_path / 'corpus.jsonl'

    assert main(QUIET + ['simulate', '--config', scenarios, '--scenario', 'nope', '--out', str(out)]) == 1
    assert not out.exists()


def test_main__render_round_trip(tmp_path: pathlib.Path, corpus: str):
    spec = GridSpec(CABA, 30, 30)
    tweets, _ = ingest_files([corpus], CorpusFilter(CABA))
    grid = bin_counts(tweets, spec)
    grid_file = tmp_path / 'grid.txt'
    grid_file.write_text(dump_grid(grid), encoding='utf-8')

    direct = tmp_path / 'direct.svg'
    rendered = tmp_path / 'rendered.svg'
    save_svg(render_counts(load_grid(dump_grid(grid)), MapStyle()), direct)

    assert main(QUIET + ['render', '--grid', str(grid_file), '--out', str(rendered)]) == 0
    assert rendered.read_bytes() == direct.read_bytes()
    assert len(circles(rendered)) == grid.nonzero()


def test_main__render_empty(tmp_path: pathlib.Path):
    grid_file = tmp_path / 'empty.txt'
    grid_file.write_text(dump_grid(CountGrid.Empty(GridSpec(CABA, 5, 5))), encoding='utf-8')
    out = tmp_path / 'empty.svg'

    assert main(QUIET + ['render', '--grid', str(grid_file), '--out', str(out)]) == 0
    assert circles(out) == []


def test_main__render_style(tmp_path: pathlib.Path):
    spec = GridSpec(CABA, 2, 2)
    grid_file = tmp_path / 'grid.txt'
    grid_file.write_text(dump_grid(CountGrid(spec, [[400, 0], [0, 1]])), encoding='utf-8')
    out = tmp_path / 'map.svg'

    assert main(QUIET + ['render', '--grid', str(grid_file), '--out', str(out), '--style', 'max_marker_px=7']) == 0
    assert sorted(float(x.get('r')) for x in circles(out)) == [1.0, 7.0]


def test_main__render_delta(tmp_path: pathlib.Path):
    spec = GridSpec(CABA, 2, 2)
    target = tmp_path / 'target.txt'
    reference = tmp_path / 'reference.txt'
    target.write_text(dump_grid(CountGrid(spec, [[3, 0], [0, 0]])), encoding='utf-8')
    reference.write_text(dump_grid(CountGrid(spec, [[0, 0], [0, 3]])), encoding='utf-8')
    out = tmp_path / 'delta.svg'

    assert main(QUIET + ['render', '--grid', str(target), '--delta-with', str(reference), '--out', str(out)]) == 0
    assert {x.get('fill') for x in circles(out)} == {MapStyle().color_pos, MapStyle().color_neg}

    other = tmp_path / 'other.txt'
    other.write_text(dump_grid(CountGrid.Empty(GridSpec(CABA, 3, 3))), encoding='utf-8')
    assert main(QUIET + ['render', '--grid', str(target), '--delta-with', str(other), '--out', str(out)]) == 1


def test_main__render_malformed(tmp_path: pathlib.Path):
    grid_file = tmp_path / 'grid.txt'
    grid_file.write_text('# microvar-grid 1\nshape 2 2\n', encoding='utf-8')

    assert main(QUIET + ['render', '--grid', str(grid_file), '--out', str(tmp_path / 'map.svg')]) == 1
    assert main(QUIET + ['render', '--grid', str(tmp_path / 'missing.txt'), '--out', str(tmp_path / 'map.svg')]) == 1


def test_main__cases(capsys: pytest.CaptureFixture):
    assert main(QUIET + ['cases']) == 0
    listing = yaml.safe_load(capsys.readouterr().out)

    assert len(listing['cases']) == 7
    assert {'name': 'tango-futbol', 'target': 'tango', 'reference': 'futbol', 'description': 'Topical vocabulary.'} \
        in listing['cases']
    assert listing['scenarios'] == ['gradient', 'hotspot', 'null-5pct', 'null-uniform']


def test_main__cases_bad_config(tmp_path: pathlib.Path):
    config = tmp_path / 'bad.yaml'
    config.write_text('cases: []\n', encoding='utf-8')

    assert main(QUIET + ['cases', '--config', str(config)]) == 1


@pytest.mark.slow
def test_main__simulate_hotspot_flags_planted_bins(tmp_path: pathlib.Path):
    corpus = tmp_path / 'hotspot.jsonl'
    out = tmp_path / 'out'
    assert main(QUIET + ['simulate', '--scenario', 'hotspot', '--out', str(corpus)]) == 0
    assert main(QUIET + [
        'compare', '--input', str(corpus), '--case', 'tango-futbol', '--grid', '20x20', '--out', str(out),
    ]) == 0

    target = load_grid((out / 'tango.grid.txt').read_text(encoding='utf-8'))
    reference = load_grid((out / 'futbol.grid.txt').read_text(encoding='utf-8'))
    observed = target.counts / target.total - reference.counts / reference.total

    expectation = planted_expectation(MicrovarConfig.Default().scenario('hotspot'), target.spec)
    flagged = expectation.flagged
    agree = np.sign(observed[flagged]) == expectation.preferred[flagged]

    assert flagged.any()
    assert agree.mean() >= 0.95


def test_main__without_pytest():
    root = pathlib.Path(__file__).resolve().parent.parent
    code = (
        "import sys; sys.modules['pytest'] = None\n"
        "from lib.microvar.cli import main\n"
        "from lib.microvar.constants import KnownScenario\n"
        "assert KnownScenario.Null.value.name == 'null'\n"
        "sys.exit(main(['--log-path', sys.argv[1], 'cases']))\n"
    )
    result = subprocess.run(
        [sys.executable, '-c', code, os.devnull], cwd=root, capture_output=True, text=True, timeout=120,
    )

    assert result.returncode == 0, result.stderr
    assert 'tango-futbol' in result.stdout


def test_main__simulate_uniform_scenario(tmp_path: pathlib.Path, capsys: pytest.CaptureFixture):
    out = tmp_path / 'uniform.jsonl'

    assert main(QUIET + ['simulate', '--scenario', 'null-uniform', '--out', str(out), '--n-tweets', '2000']) == 0
    summary = yaml.safe_load(capsys.readouterr().out)
    tweets, report = ingest_files([str(out)], CorpusFilter(CABA))
    lon = np.array([x.lon for x in tweets])

    assert summary['scenario'] == 'null-uniform'
    assert report.accepted == 2000
    assert 0.45 < float((lon.mean() - CABA.lon_min) / CABA.width) < 0.55
