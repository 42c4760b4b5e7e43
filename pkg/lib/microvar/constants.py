from __future__ import annotations

from enum import Enum, unique
from typing import final

from .grid import Extent
from .marks import ScenarioMark
from .synth import ScenarioKind

DEFAULT_GRID = (200, 200)
"""
Default grid shape, ``n`` columns x ``m`` rows.
"""

DEFAULT_LANG = 'es'

CONFIG_ENV = 'MICROVAR_CONFIG'
"""
Environment variable with the default configuration path.
"""


@final
@unique
class KnownExtent(Enum):
    """
    Well-known analysis extents.
    """

    CABA = Extent(-58.531725, -58.355148, -34.705446, -34.538162)
    """
    Ciudad Autónoma de Buenos Aires.
    """


@final
@unique
class KnownScenario(Enum):
    """
    Well-known synthetic scenarios that can be given to
    ``pytest.mark.scenario`` directly. It is expected to use these values in
    favor of providing custom marker values.

    .. code-block:: python
        :caption: Example usage

        @pytest.mark.scenario(KnownScenario.Hotspot)
        def test_hotspot(scenario: Scenario, scenario_spec: GridSpec):
            assert True
    """

    Null = ScenarioMark(
        name='null',
        kind=ScenarioKind.Null,
        extent=KnownExtent.CABA.value,
        n_tweets=200_000,
        rate=0.05,
    )
    """
    Identical 5% usage of both tokens, no spatial contrast.

    .. scenario-mark:: KnownScenario.Null
    """

    Hotspot = ScenarioMark(
        name='hotspot',
        kind=ScenarioKind.Hotspot,
        extent=KnownExtent.CABA.value,
        grid=(20, 20),
        n_tweets=200_000,
        base=0.0005,
        peak=0.5,
    )
    """
    Disjoint target and reference hotspots over a tiny base rate.

    .. scenario-mark:: KnownScenario.Hotspot
    """

    Gradient = ScenarioMark(
        name='gradient',
        kind=ScenarioKind.Gradient,
        extent=KnownExtent.CABA.value,
        n_tweets=200_000,
        rate=0.05,
        strength=0.8,
    )
    """
    Opposite west-east usage trends.

    .. scenario-mark:: KnownScenario.Gradient
    """
