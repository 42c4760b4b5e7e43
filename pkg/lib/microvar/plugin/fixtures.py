from __future__ import annotations

import pathlib

import pytest

from ..corpus import write_corpus
from ..grid import GridSpec
from ..logging import MicrovarLogger
from ..synth import Scenario, generate
from ..marks import ScenarioMark


@pytest.fixture(scope='session')
def mv_logger() -> MicrovarLogger:
    """
    Microvar logger, writes to ``--mv-log-path`` if given.

    :rtype: MicrovarLogger
    """
    return MicrovarLogger.GetLogger()


@pytest.fixture(scope='session')
def mv_seeds(pytestconfig: pytest.Config) -> list[int]:
    """
    Seeds selected by ``--mv-seeds`` and ``--mv-base-seed``, for tests that
    need several scenarios per seed.

    :rtype: list[int]
    """
    return pytestconfig.pluginmanager.get_plugin('microvar').seed_list()


@pytest.fixture(scope='function')
def scenario_spec(request: pytest.FixtureRequest, scenario: Scenario) -> GridSpec:
    """
    Grid of the scenario given in ``@pytest.mark.scenario``.

    :rtype: GridSpec
    """
    mark = request.node.get_closest_marker('scenario')
    if mark is None:
        raise ValueError(f'{request.node.nodeid}: scenario_spec fixture requires @pytest.mark.scenario')

    return ScenarioMark.Create(request.node.nodeid, mark).spec()


@pytest.fixture(scope='function')
def corpus_file(tmp_path: pathlib.Path, scenario: Scenario) -> pathlib.Path:
    """
    Corpus of the parametrized scenario written in the record format.

    :rtype: pathlib.Path
    """
    path = tmp_path / f'{scenario.name}-{scenario.seed}.jsonl'
    write_corpus(generate(scenario), str(path))
    return path
