from __future__ import annotations

import logging
import sys
import textwrap

import pytest
import yaml

from ..logging import MicrovarLogger
from ..marks import ScenarioMark


class MicrovarPlugin(object):
    """
    Pytest microvar plugin. See lib.microvar.plugin docstring for description.
    """

    def __init__(self, config: pytest.Config) -> None:
        self.logger: logging.Logger = self._create_logger(config.option.verbose > 2)
        self.log_path: str | None = config.getoption('mv_log_path')
        self.seeds: int = config.getoption('mv_seeds')
        self.base_seed: int = config.getoption('mv_base_seed')

        if self.seeds < 1:
            raise ValueError(f'--mv-seeds must be positive, got {self.seeds}')

        self.mv_logger: MicrovarLogger = MicrovarLogger.Setup(self.log_path)

    @classmethod
    def GetLogger(cls) -> logging.Logger:
        """
        Get plugin's logger.
        """

        return logging.getLogger('lib.microvar.plugin')

    def seed_list(self, mark: pytest.Mark | None = None) -> list[int]:
        if mark is None:
            return [self.base_seed + x for x in range(self.seeds)]

        return ScenarioMark.Seeds(mark, self.seeds, self.base_seed)

    @pytest.hookimpl(trylast=True)
    def pytest_sessionstart(self, session: pytest.Session) -> None:
        """
        Log plugin settings.

        :meta private:
        """

        settings = {
            'log path': self.log_path,
            'seeds': self.seeds,
            'base seed': self.base_seed,
        }

        self.logger.info(self._fmt_bold('Microvar settings:'))
        self.logger.info(textwrap.indent(yaml.safe_dump(settings, sort_keys=False), '  '))

    def pytest_generate_tests(self, metafunc: pytest.Metafunc) -> None:
        """
        Parametrize tests marked with ``@pytest.mark.scenario`` by seed. The
        ``scenario`` argument receives the built :class:`Scenario`.

        :meta private:
        """

        mark = metafunc.definition.get_closest_marker('scenario')
        if mark is None:
            return

        nodeid = metafunc.definition.nodeid
        if 'scenario' not in metafunc.fixturenames:
            raise ValueError(f'{nodeid}: @pytest.mark.scenario requires "scenario" argument')

        scenario_mark = ScenarioMark.Create(nodeid, mark)
        seeds = self.seed_list(mark)

        metafunc.parametrize(
            'scenario',
            [scenario_mark.build(seed) for seed in seeds],
            ids=[f'{scenario_mark.name}-seed{seed}' for seed in seeds],
        )

    def _fmt_color(self, text: str, color: str) -> str:
        if sys.stdout.isatty():
            reset = '\033[0m'
            return f'{color}{text}{reset}'

        return text

    def _fmt_bold(self, text: str) -> str:
        return self._fmt_color(text, '\033[1m')

    def _create_logger(self, verbose) -> logging.Logger:
        logger = self.GetLogger()
        if not logger.handlers:
            stdout = logging.StreamHandler(sys.stdout)
            stdout.setLevel(logging.DEBUG)
            stdout.setFormatter(logging.Formatter('%(message)s'))
            logger.addHandler(stdout)

        logger.setLevel(logging.DEBUG if verbose else logging.INFO)

        return logger


# These pytest hooks must be available outside of the plugin's class because
# they are executed before the plugin is registered.

def pytest_addoption(parser):
    """
    :meta private:
    """

    parser.addoption(
        "--mv-log-path", action="store", help="Path to store microvar logs"
    )

    parser.addoption(
        "--mv-seeds", action="store", type=int, default=10,
        help="Number of seeds scenario tests are parametrized with (default: %(default)s)"
    )

    parser.addoption(
        "--mv-base-seed", action="store", type=int, default=20170101,
        help="First seed of scenario tests (default: %(default)s)"
    )


def pytest_configure(config: pytest.Config):
    """
    :meta private:
    """

    # register additional markers
    config.addinivalue_line(
        'markers',
        'scenario(mark: lib.microvar.constants.KnownScenario | lib.microvar.plugin.ScenarioMark, /, '
        + '*, seeds=None): synthetic scenario the test runs against, once per seed'
    )

    config.pluginmanager.register(MicrovarPlugin(config), 'microvar')
