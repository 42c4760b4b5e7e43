from __future__ import annotations

from enum import Enum
from typing import TYPE_CHECKING, Any

from .grid import Extent, GridSpec
from .synth import Scenario, ScenarioKind

if TYPE_CHECKING:
    import pytest


class ScenarioMark(object):
    """
    Scenario mark describes the synthetic corpus a test runs against. It
    defines:

    * **name**, that is used to identify the scenario in pytest output
    * **kind** (:class:`ScenarioKind`) of the planted structure
    * **extent** and **grid** the corpus is generated on and binned into
    * **params** passed to the scenario builder

    .. code-block:: python
        :caption: Example usage

        @pytest.mark.scenario(KnownScenario.Null)
        def test_null(scenario: Scenario, scenario_spec: GridSpec):
            assert True

        @pytest.mark.scenario(ScenarioMark('sparse', ScenarioKind.Null, extent, n_tweets=1000), seeds=3)
        def test_sparse(scenario: Scenario):
            assert True

    The test is parametrized, once per seed. The seed is visible in verbose
    pytest output after the test name, for example:

    .. code-block:: console

        tests/test_scenarios.py::test_null[null-seed20170101] PASSED
    """

    def __init__(
        self,
        name: str,
        kind: ScenarioKind,
        extent: Extent,
        grid: tuple[int, int] = (50, 50),
        **params: Any,
    ) -> None:
        """
        :param name: Scenario name used in pytest output.
        :type name: str
        :param kind: Planted structure.
        :type kind: ScenarioKind
        :param extent: Spatial extent.
        :type extent: Extent
        :param grid: Grid shape used by ``scenario_spec``, defaults to (50, 50)
        :type grid: tuple[int, int], optional
        :param params: Keyword arguments of the :class:`Scenario` builder.
        """
        self.name = name
        self.kind = ScenarioKind(kind)
        self.extent = extent
        self.grid = tuple(grid)
        self.params = params

    def build(self, seed: int) -> Scenario:
        """
        Build the scenario for given seed.

        :param seed: Random seed.
        :type seed: int
        :rtype: Scenario
        """
        match self.kind:
            case ScenarioKind.Null:
                builder = Scenario.Null
            case ScenarioKind.Hotspot:
                builder = Scenario.Hotspot
            case ScenarioKind.Gradient:
                builder = Scenario.Gradient

        return builder(self.extent, seed=seed, name=self.name, **self.params)

    def spec(self) -> GridSpec:
        return GridSpec(self.extent, *self.grid)

    def export(self) -> dict:
        """
        Export the scenario mark into a dictionary object that can be easily
        converted to JSON, YAML or other formats.

        :rtype: dict
        """
        return {
            'name': self.name,
            'kind': self.kind.value,
            'extent': self.extent.export(),
            'grid': list(self.grid),
            'params': dict(self.params),
        }

    @classmethod
    def Create(cls, item: pytest.Item | str, mark: pytest.Mark) -> ScenarioMark:
        """
        Create instance of :class:`ScenarioMark` from ``@pytest.mark.scenario``.

        :raises ValueError: If the marker arguments are invalid.
        :rtype: ScenarioMark
        """
        nodeid = item if isinstance(item, str) else item.nodeid
        error = f'{nodeid}: invalid arguments for @pytest.mark.scenario'

        if len(mark.args) != 1 or set(mark.kwargs) - {'seeds'}:
            raise ValueError(error)

        value = mark.args[0]

        # lib.microvar.constants.KnownScenario
        if isinstance(value, Enum):
            value = value.value

        if not isinstance(value, cls):
            raise ValueError(error)

        return value

    @classmethod
    def Seeds(cls, mark: pytest.Mark, count: int, base: int) -> list[int]:
        """
        Seeds the marked test runs with. The ``seeds`` marker keyword is
        either the number of seeds or an explicit list, the command line
        defaults apply otherwise.

        :rtype: list[int]
        """
        seeds = mark.kwargs.get('seeds', None)
        if seeds is None:
            return [base + x for x in range(count)]

        if isinstance(seeds, int):
            return [base + x for x in range(seeds)]

        return [int(x) for x in seeds]
