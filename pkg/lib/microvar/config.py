from __future__ import annotations

import os
import pathlib
from dataclasses import dataclass
from typing import Any

import yaml

from .constants import CONFIG_ENV, KnownExtent
from .errors import ConfigError
from .grid import Extent, parse_shape
from .synth import Scenario
from .tokenmatch import TokenSet

SHIPPED_CONFIG = pathlib.Path(__file__).resolve().parents[2] / 'cases.yaml'
"""
Configuration shipped with the project (token sets, case pairs and scenarios).
"""


@dataclass(frozen=True, slots=True)
class CasePair(object):
    """
    Named target/reference comparison.
    """

    name: str
    target: TokenSet
    reference: TokenSet
    description: str = ''

    def export(self) -> dict[str, str]:
        return {
            'name': self.name,
            'target': self.target.name,
            'reference': self.reference.name,
            'description': self.description,
        }


class MicrovarConfig(object):
    """
    Microvar configuration.

    .. code-block:: yaml

        token_sets:
        - name: las
          tokens: [las]
        - name: los
          tokens: [los]
        cases:
        - name: las-los
          target: las
          reference: los
          description: Null case, articles with no expected spatial contrast.
        scenarios:
        - name: null-5pct
          kind: "null"
          n_tweets: 200000
          seed: 1
          grid: 50x50
    """

    def __init__(self, confdict: dict[str, Any] | None, *, extent: Extent | None = None) -> None:
        """
        :param confdict: Configuration as a dictionary.
        :type confdict: dict[str, Any] | None
        :param extent: Extent used to build scenarios, defaults to CABA.
        :type extent: Extent | None, optional
        :raises ConfigError: If the configuration is invalid.
        """
        if not isinstance(confdict, dict):
            raise ConfigError('Configuration must be a mapping')

        if 'token_sets' not in confdict:
            raise ConfigError('"token_sets" property is missing in microvar configuration')

        self.extent: Extent = extent if extent is not None else KnownExtent.CABA.value
        """Extent used to build scenarios"""

        self.token_sets: dict[str, TokenSet] = {}
        """Available token sets"""

        self.cases: dict[str, CasePair] = {}
        """Available case pairs"""

        self.scenarios: dict[str, Scenario] = {}
        """Available scenarios"""

        self.scenario_grids: dict[str, tuple[int, int]] = {}
        """Grid shape per scenario (if configured)"""

        for entry in confdict['token_sets'] or []:
            token_set = TokenSet.FromDict(entry)
            self.__add(self.token_sets, token_set.name, token_set, 'token set')

        for entry in confdict.get('cases', None) or []:
            case = self._create_case(entry)
            self.__add(self.cases, case.name, case, 'case')

        for entry in confdict.get('scenarios', None) or []:
            self._add_scenario(entry)

    def __add(self, target: dict[str, Any], name: str, value: Any, kind: str) -> None:
        if name in target:
            raise ConfigError(f'Duplicate {kind} name "{name}"')

        target[name] = value

    def _create_case(self, confdict: dict[str, Any]) -> CasePair:
        if not isinstance(confdict, dict):
            raise ConfigError(f'Case configuration must be a mapping, got {confdict!r}')

        for required in ('name', 'target', 'reference'):
            if not confdict.get(required, None):
                raise ConfigError(f'"{required}" property is missing in case configuration')

        name = str(confdict['name'])
        target = str(confdict['target'])
        reference = str(confdict['reference'])

        for role, value in (('target', target), ('reference', reference)):
            if value not in self.token_sets:
                raise ConfigError(f'Case "{name}": unknown {role} token set "{value}"')

        if target == reference:
            raise ConfigError(f'Case "{name}": target and reference token sets must differ')

        return CasePair(name, self.token_sets[target], self.token_sets[reference], str(confdict.get('description', '')))

    def _add_scenario(self, confdict: dict[str, Any]) -> None:
        if not isinstance(confdict, dict):
            raise ConfigError(f'Scenario configuration must be a mapping, got {confdict!r}')

        confdict = dict(confdict)
        grid = confdict.pop('grid', None)
        scenario = Scenario.FromDict(confdict, self.extent)
        self.__add(self.scenarios, scenario.name, scenario, 'scenario')

        if grid is not None:
            try:
                self.scenario_grids[scenario.name] = parse_shape(str(grid))
            except ValueError as e:
                raise ConfigError(f'Scenario "{scenario.name}": {e}') from e

    def token_set(self, name: str) -> TokenSet:
        """
        :raises LookupError: If no such token set is configured.
        :rtype: TokenSet
        """
        if name not in self.token_sets:
            raise LookupError(f'Unknown token set "{name}", available: {", ".join(sorted(self.token_sets))}')

        return self.token_sets[name]

    def case(self, name: str) -> CasePair:
        """
        :raises LookupError: If no such case is configured.
        :rtype: CasePair
        """
        if name not in self.cases:
            raise LookupError(f'Unknown case "{name}", available: {", ".join(sorted(self.cases))}')

        return self.cases[name]

    def scenario(self, name: str) -> Scenario:
        """
        :raises LookupError: If no such scenario is configured.
        :rtype: Scenario
        """
        if name not in self.scenarios:
            raise LookupError(f'Unknown scenario "{name}", available: {", ".join(sorted(self.scenarios))}')

        return self.scenarios[name]

    def export(self) -> dict[str, Any]:
        return {
            'token_sets': [x.export() for x in self.token_sets.values()],
            'cases': [x.export() for x in self.cases.values()],
            'scenarios': sorted(self.scenarios),
        }

    @classmethod
    def FromFile(cls, path: str | pathlib.Path, *, extent: Extent | None = None) -> MicrovarConfig:
        """
        Load configuration from YAML file.

        :raises ConfigError: If the file can not be read or is invalid.
        :rtype: MicrovarConfig
        """
        try:
            with open(path, 'r', encoding='utf-8') as f:
                confdict = yaml.safe_load(f)
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f'Unable to open microvar configuration "{path}": {str(e)}') from e

        return cls(confdict, extent=extent)

    @classmethod
    def Default(cls, *, extent: Extent | None = None) -> MicrovarConfig:
        """
        Load configuration from the path given in ``MICROVAR_CONFIG``
        environment variable, or the shipped ``cases.yaml``.

        :rtype: MicrovarConfig
        """
        return cls.FromFile(cls.DefaultPath(), extent=extent)

    @classmethod
    def DefaultPath(cls) -> str:
        return os.environ.get(CONFIG_ENV) or str(SHIPPED_CONFIG)
