from __future__ import annotations

import pathlib
import time

import numpy as np
import pytest

from lib.microvar.constants import KnownExtent, KnownScenario
from lib.microvar.corpus import CorpusFilter, ingest_files
from lib.microvar.grid import CountGrid, GridSpec, bin_counts, delta
from lib.microvar.plugin import ScenarioMark
from lib.microvar.stats import NoiseBand, angle_histogram, frequency_comparison
from lib.microvar.synth import Scenario, ScenarioKind, SpatialModel, generate, planted_expectation
from lib.microvar.tokenmatch import TokenSet, select_many

CABA = KnownExtent.CABA.value
UNIFORM_NULL = ScenarioMark(
    'null-uniform', ScenarioKind.Null, CABA, n_tweets=200_000, rate=0.05, spatial=SpatialModel.Uniform(CABA),
)


def grids(scenario: Scenario, spec: GridSpec) -> tuple[CountGrid, CountGrid]:
    """
    Generate the scenario corpus, select both tokens and bin the selections.
    """
    target = TokenSet('target', (scenario.target_token,))
    reference = TokenSet('reference', (scenario.reference_token,))
    selected = select_many(generate(scenario), [target, reference])

    return bin_counts(selected['target'], spec), bin_counts(selected['reference'], spec)


@pytest.mark.scenario(KnownScenario.Null)
def test_null__correlation(scenario: Scenario, scenario_spec: GridSpec):
    target, reference = grids(scenario, scenario_spec)
    stats = frequency_comparison(target, reference)
    expectation = planted_expectation(scenario, scenario_spec)

    assert scenario_spec.shape == (50, 50)
    assert stats.regression.pearson_r > 0.9
    assert stats.regression.pearson_r > expectation.expected_pearson - 0.05
    assert abs(stats.regression.slope - stats.k_exact) <= 0.05 * stats.k_exact


@pytest.mark.scenario(KnownScenario.Null)
def test_null__delta_sums_to_zero(scenario: Scenario, scenario_spec: GridSpec):
    target, reference = grids(scenario, scenario_spec)

    assert abs(float(delta(target, reference).delta.sum())) <= 1e-12


@pytest.mark.scenario(KnownScenario.Hotspot)
def test_hotspot__planted_bins(scenario: Scenario, scenario_spec: GridSpec):
    target, reference = grids(scenario, scenario_spec)
    expectation = planted_expectation(scenario, scenario_spec)
    observed = delta(target, reference).delta
    flagged = expectation.flagged

    assert flagged.any()
    assert (np.sign(observed[flagged]) == expectation.preferred[flagged]).mean() >= 0.95


@pytest.mark.scenario(KnownScenario.Hotspot)
def test_hotspot__correlation_drops(scenario: Scenario, scenario_spec: GridSpec):
    null = Scenario.Null(scenario.extent, seed=scenario.seed, n_tweets=scenario.n_tweets)

    signal = frequency_comparison(*grids(scenario, scenario_spec)).regression.pearson_r
    baseline = frequency_comparison(*grids(null, scenario_spec)).regression.pearson_r

    assert signal <= baseline - 0.3


def test_angle_histogram__std_ordering(mv_seeds: list[int]):
    spec = GridSpec(CABA, 20, 20)

    for seed in mv_seeds:
        std = {}
        for scenario in (
            Scenario.Null(CABA, seed=seed, rate=0.1),
            Scenario.Gradient(CABA, seed=seed, rate=0.1),
            Scenario.Hotspot(CABA, seed=seed),
        ):
            std[scenario.kind] = angle_histogram(*grids(scenario, spec)).std_deg

        assert std[ScenarioKind.Null] < std[ScenarioKind.Gradient] < std[ScenarioKind.Hotspot], f'seed {seed}: {std}'


@pytest.mark.scenario(KnownScenario.Null)
def test_null__noise_band(scenario: Scenario, scenario_spec: GridSpec):
    target, reference = grids(scenario, scenario_spec)
    stats = frequency_comparison(target, reference)
    observed = stats.noise_band_fraction()

    # Independent Poisson counts around the expected counts.
    expectation = planted_expectation(scenario, scenario_spec)
    rng = np.random.Generator(np.random.PCG64(scenario.seed))
    fractions = []
    for _ in range(20):
        c_target = rng.poisson(expectation.expected_target)
        c_ref = rng.poisson(expectation.expected_reference)
        fractions.append(NoiseBand(c_target.sum() / c_ref.sum()).fraction_within(c_ref, c_target))

    assert observed >= float(np.mean(fractions)) - 0.05


@pytest.mark.slow
@pytest.mark.scenario(ScenarioMark('throughput', ScenarioKind.Null, CABA, grid=(200, 200), n_tweets=1_000_000), seeds=1)
def test_pipeline__throughput(scenario: Scenario, scenario_spec: GridSpec, corpus_file: pathlib.Path):
    start = time.perf_counter()

    tweets, report = ingest_files([str(corpus_file)], CorpusFilter(CABA, 'es'))
    selected = select_many(tweets, [TokenSet('tango', ('tango',)), TokenSet('futbol', ('fútbol', 'futbol'))])
    target = bin_counts(selected['tango'], scenario_spec)
    reference = bin_counts(selected['futbol'], scenario_spec)

    elapsed = time.perf_counter() - start

    assert report.accepted == 1_000_000
    assert target.total == len(selected['tango'])
    assert reference.total == len(selected['futbol'])
    assert elapsed < 10.0


@pytest.mark.slow
@pytest.mark.scenario(UNIFORM_NULL, seeds=1)
def test_null_uniform__monte_carlo_threshold(scenario: Scenario, scenario_spec: GridSpec):
    # Oracle runs use seeds following the tested one.
    oracle = np.array([
        frequency_comparison(*grids(UNIFORM_NULL.build(scenario.seed + i), scenario_spec)).regression.pearson_r
        for i in range(1, 21)
    ])
    threshold = float(oracle.min() - 3 * oracle.std())
    expectation = planted_expectation(scenario, scenario_spec)

    stats = frequency_comparison(*grids(scenario, scenario_spec))

    assert stats.regression.pearson_r >= threshold
    assert expectation.expected_pearson == pytest.approx(float(oracle.mean()), abs=0.03)
