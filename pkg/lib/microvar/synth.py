"""
Synthetic geotagged corpora with planted spatial token usage.

A :class:`Scenario` combines a spatial density of records
(:class:`SpatialModel`, a mixture of a uniform floor and truncated isotropic
Gaussian blobs) with two usage fields (:class:`UsageField`) that give the
probability that a record at ``(lon, lat)`` mentions the target or the
reference token. Both tokens are drawn independently.

Corpora are reproducible: each scenario draws from one
``numpy.random.Generator(PCG64(seed))`` stream in a fixed order (component
labels, positions, target draws, reference draws, filler text).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Sequence

import numpy as np
import scipy.stats

from .corpus import Tweet
from .errors import ConfigError
from .grid import Extent, GridSpec

FILLER_WORDS = (
    'hoy', 'che', 'mirá', 'esto', 'bien', 'mañana', 'gente', 'calle', 'barrio', 'noche', 'casa', 'amigos',
    'linda', 'tarde', 'vamos', 'todo', 'nada', 'siempre', 'ahora', 'después', 'ciudad', 'sol', 'lluvia',
    'café', 'mate', 'subte', 'colectivo', 'trabajo', 'finde', 'posta', 'genial', 'increíble', 'día', 'hola',
)

WEIGHT_TOLERANCE = 1e-12


class ScenarioKind(Enum):
    """
    Planted structure of a scenario.
    """

    Null = 'null'
    """
    Identical usage fields, no spatial preference.
    """

    Hotspot = 'hotspot'
    """
    Target and reference usage concentrated in hotspots.
    """

    Gradient = 'gradient'
    """
    Opposite linear west-east usage trends.
    """


@dataclass(frozen=True, slots=True)
class Blob(object):
    """
    Isotropic Gaussian centered at ``(lon, lat)`` with standard deviation ``sigma`` degrees.
    """

    lon: float
    lat: float
    sigma: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f'Blob sigma must be positive, got {self.sigma}')


@dataclass(frozen=True, slots=True)
class Component(object):
    """
    Mixture component, uniform over the extent when ``blob`` is None.
    """

    weight: float
    blob: Blob | None = None


@dataclass(frozen=True)
class SpatialModel(object):
    """
    Weighted mixture of a uniform density and Gaussian blobs, truncated to the extent.
    """

    extent: Extent
    components: tuple[Component, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'components', tuple(self.components))
        if not self.components:
            raise ValueError('Spatial model needs at least one component')

        for component in self.components:
            if not component.weight > 0:
                raise ValueError(f'Component weights must be positive, got {component.weight}')

            blob = component.blob
            if blob is not None and not self.extent.contains(blob.lon, blob.lat):
                raise ValueError(f'Blob center ({blob.lon}, {blob.lat}) lies outside of the extent')

        total = math.fsum(x.weight for x in self.components)
        if abs(total - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f'Component weights must sum to 1, got {total}')

    @property
    def weights(self) -> np.ndarray:
        return np.array([x.weight for x in self.components], dtype=np.float64)

    def density(self, lon: np.ndarray, lat: np.ndarray) -> np.ndarray:
        """
        Probability density (per square degree) of the truncated mixture.

        :rtype: np.ndarray
        """
        ext = self.extent
        lon = np.asarray(lon, dtype=np.float64)
        lat = np.asarray(lat, dtype=np.float64)
        out = np.zeros(np.broadcast(lon, lat).shape, dtype=np.float64)

        for component in self.components:
            blob = component.blob
            if blob is None:
                out += component.weight / (ext.width * ext.height)
                continue

            norm = scipy.stats.norm
            zx = norm.cdf(ext.lon_max, blob.lon, blob.sigma) - norm.cdf(ext.lon_min, blob.lon, blob.sigma)
            zy = norm.cdf(ext.lat_max, blob.lat, blob.sigma) - norm.cdf(ext.lat_min, blob.lat, blob.sigma)
            pdf = norm.pdf(lon, blob.lon, blob.sigma) * norm.pdf(lat, blob.lat, blob.sigma)
            out += component.weight * pdf / (zx * zy)

        inside = (lon >= ext.lon_min) & (lon <= ext.lon_max) & (lat >= ext.lat_min) & (lat <= ext.lat_max)
        return np.where(inside, out, 0.0)

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """
        Draw ``size`` points. Blob samples outside of the extent are re-drawn.

        :rtype: tuple[np.ndarray, np.ndarray]
        """
        ext = self.extent
        lon = np.empty(size, dtype=np.float64)
        lat = np.empty(size, dtype=np.float64)
        if size == 0:
            return lon, lat

        labels = rng.choice(len(self.components), size=size, p=self.weights / self.weights.sum())

        for index, component in enumerate(self.components):
            where = np.flatnonzero(labels == index)
            if where.size == 0:
                continue

            blob = component.blob
            if blob is None:
                lon[where] = rng.uniform(ext.lon_min, ext.lon_max, size=where.size)
                lat[where] = rng.uniform(ext.lat_min, ext.lat_max, size=where.size)
                continue

            accepted_lon: list[np.ndarray] = []
            accepted_lat: list[np.ndarray] = []
            need = where.size
            while need > 0:
                batch = int(need * 1.25) + 16
                x = rng.normal(blob.lon, blob.sigma, size=batch)
                y = rng.normal(blob.lat, blob.sigma, size=batch)
                keep = (x >= ext.lon_min) & (x <= ext.lon_max) & (y >= ext.lat_min) & (y <= ext.lat_max)
                x = x[keep][:need]
                y = y[keep][:need]
                accepted_lon.append(x)
                accepted_lat.append(y)
                need -= x.size

            lon[where] = np.concatenate(accepted_lon)
            lat[where] = np.concatenate(accepted_lat)

        return lon, lat

    @classmethod
    def Uniform(cls, extent: Extent) -> SpatialModel:
        return cls(extent, (Component(1.0),))

    @classmethod
    def City(cls, extent: Extent) -> SpatialModel:
        """
        Default city-like density: a uniform floor and two tight blobs, a
        dominant "downtown" in the east and a secondary center. Positions
        and widths are relative to the extent.

        :rtype: SpatialModel
        """
        return cls(extent, (
            Component(0.15),
            Component(0.60, _relative_blob(extent, 0.85, 0.60, 0.035)),
            Component(0.25, _relative_blob(extent, 0.55, 0.55, 0.060)),
        ))

    @classmethod
    def FromDict(cls, value: str | dict[str, Any], extent: Extent) -> SpatialModel:
        """
        Create spatial model from the ``spatial`` property of a scenario
        configuration entry. Blob positions and sigmas are relative to the
        extent.

        .. code-block:: yaml

            spatial: uniform    # or: city

            spatial:
              components:
              - weight: 0.2
              - {weight: 0.8, at: [0.5, 0.5], sigma: 0.05}

        :raises ConfigError: If the value is invalid.
        :rtype: SpatialModel
        """
        match value:
            case 'uniform':
                return cls.Uniform(extent)
            case 'city':
                return cls.City(extent)
            case {'components': list(entries)} if len(value) == 1:
                pass
            case _:
                raise ConfigError(f'Invalid spatial model {value!r}, use uniform, city or a components list')

        components = []
        try:
            for entry in entries:
                if not isinstance(entry, dict) or 'weight' not in entry or set(entry) - {'weight', 'at', 'sigma'}:
                    raise ConfigError(f'Invalid spatial model component {entry!r}')

                blob = None
                if 'at' in entry or 'sigma' in entry:
                    x, y = (float(v) for v in entry['at'])
                    blob = _relative_blob(extent, x, y, float(entry['sigma']))

                components.append(Component(float(entry['weight']), blob))

            return cls(extent, tuple(components))
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f'Invalid spatial model: {e!r}') from e


def _relative_blob(extent: Extent, x: float, y: float, sigma: float) -> Blob:
    return Blob(extent.lon_min + x * extent.width, extent.lat_min + y * extent.height, sigma * extent.width)


@dataclass(frozen=True, slots=True)
class Hotspot(object):
    """
    Local usage multiplier: ``1 + (multiplier - 1) * exp(-d^2 / (2 sigma^2))``.
    """

    lon: float
    lat: float
    sigma: float
    multiplier: float

    def __post_init__(self) -> None:
        if not self.sigma > 0:
            raise ValueError(f'Hotspot sigma must be positive, got {self.sigma}')

        if not self.multiplier >= 0:
            raise ValueError(f'Hotspot multiplier must not be negative, got {self.multiplier}')


@dataclass(frozen=True)
class UsageField(object):
    """
    Probability that a record at ``(lon, lat)`` contains a token::

        p = clip(base * (1 + gradient * u) * prod(hotspot multipliers), 0, 1)

    where ``u`` runs from -1 on the western edge to 1 on the eastern edge.
    """

    base: float
    hotspots: tuple[Hotspot, ...] = ()
    gradient: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, 'hotspots', tuple(self.hotspots))
        if not 0 <= self.base <= 1:
            raise ValueError(f'Base rate must be in [0, 1], got {self.base}')

        if not -1 <= self.gradient <= 1:
            raise ValueError(f'Gradient must be in [-1, 1], got {self.gradient}')

    def probability(self, lon: np.ndarray, lat: np.ndarray, extent: Extent) -> np.ndarray:
        """
        :rtype: np.ndarray
        """
        lon = np.asarray(lon, dtype=np.float64)
        lat = np.asarray(lat, dtype=np.float64)

        u = 2.0 * (lon - extent.lon_min) / extent.width - 1.0
        p = self.base * (1.0 + self.gradient * u) * np.ones_like(lat)
        for hotspot in self.hotspots:
            d2 = (lon - hotspot.lon) ** 2 + (lat - hotspot.lat) ** 2
            p = p * (1.0 + (hotspot.multiplier - 1.0) * np.exp(-d2 / (2.0 * hotspot.sigma ** 2)))

        return np.clip(p, 0.0, 1.0)


@dataclass(frozen=True)
class Scenario(object):
    """
    Synthetic corpus definition.
    """

    name: str
    kind: ScenarioKind
    spatial: SpatialModel
    target: UsageField
    reference: UsageField
    n_tweets: int
    seed: int
    target_token: str = 'tango'
    reference_token: str = 'fútbol'
    lang: str = 'es'
    filler: tuple[str, ...] = field(default=FILLER_WORDS, repr=False)

    def __post_init__(self) -> None:
        if isinstance(self.kind, str):
            object.__setattr__(self, 'kind', ScenarioKind(self.kind))

        if self.n_tweets < 0:
            raise ValueError(f'Number of records must not be negative, got {self.n_tweets}')

        if self.kind is ScenarioKind.Null and self.target != self.reference:
            raise ValueError('Null scenario requires identical target and reference usage fields')

        if not self.target_token or not self.reference_token:
            raise ValueError('Scenario tokens must not be empty')

        if self.target_token.casefold() == self.reference_token.casefold():
            raise ValueError('Target and reference tokens must differ')

        if not self.vocabulary:
            raise ValueError('No filler words left that do not contain the scenario tokens')

    @property
    def extent(self) -> Extent:
        return self.spatial.extent

    @property
    def vocabulary(self) -> tuple[str, ...]:
        """
        Filler words that contain neither token.
        """
        tokens = (self.target_token.casefold(), self.reference_token.casefold())
        return tuple(x for x in self.filler if not any(t in x.casefold() or x.casefold() in t for t in tokens))

    def with_seed(self, seed: int) -> Scenario:
        return replace(self, seed=seed)

    @classmethod
    def Null(
        cls,
        extent: Extent,
        *,
        seed: int = 0,
        n_tweets: int = 200_000,
        rate: float = 0.05,
        spatial: SpatialModel | None = None,
        name: str = 'null',
    ) -> Scenario:
        """
        Both tokens used at the same rate everywhere.

        :rtype: Scenario
        """
        usage = UsageField(rate)
        return cls(name, ScenarioKind.Null, spatial or SpatialModel.City(extent), usage, usage, n_tweets, seed)

    @classmethod
    def Hotspot(
        cls,
        extent: Extent,
        *,
        seed: int = 0,
        n_tweets: int = 200_000,
        base: float = 0.0005,
        peak: float = 0.5,
        target_at: tuple[float, float] = (0.25, 0.30),
        reference_at: tuple[float, float] = (0.60, 0.85),
        sigma: float = 0.06,
        spatial: SpatialModel | None = None,
        name: str = 'hotspot',
    ) -> Scenario:
        """
        Disjoint hotspots: the target token is used mostly around
        ``target_at``, the reference token around ``reference_at``. Positions
        and ``sigma`` are relative to the extent.

        :rtype: Scenario
        """
        if not 0 < base <= peak <= 1:
            raise ValueError(f'Expected 0 < base <= peak <= 1, got base={base}, peak={peak}')

        def usage(at: tuple[float, float]) -> UsageField:
            blob = _relative_blob(extent, at[0], at[1], sigma)
            return UsageField(base, (Hotspot(blob.lon, blob.lat, blob.sigma, peak / base),))

        return cls(
            name, ScenarioKind.Hotspot, spatial or SpatialModel.City(extent),
            usage(target_at), usage(reference_at), n_tweets, seed,
        )

    @classmethod
    def Gradient(
        cls,
        extent: Extent,
        *,
        seed: int = 0,
        n_tweets: int = 200_000,
        rate: float = 0.05,
        strength: float = 0.8,
        spatial: SpatialModel | None = None,
        name: str = 'gradient',
    ) -> Scenario:
        """
        Target usage grows from west to east, reference usage the other way round.

        :rtype: Scenario
        """
        return cls(
            name, ScenarioKind.Gradient, spatial or SpatialModel.City(extent),
            UsageField(rate, gradient=strength), UsageField(rate, gradient=-strength), n_tweets, seed,
        )

    @classmethod
    def FromDict(cls, confdict: dict[str, Any], extent: Extent) -> Scenario:
        """
        Create scenario from configuration entry.

        .. code-block:: yaml

            name: null-5pct
            kind: "null"        # null | hotspot | gradient
            n_tweets: 200000
            seed: 1
            rate: 0.05          # null, gradient
            strength: 0.8       # gradient
            base: 0.0005        # hotspot
            peak: 0.5           # hotspot
            target_token: tango
            reference_token: fútbol
            spatial: city       # uniform | city | {components: [...]}, see SpatialModel.FromDict

        :raises ConfigError: If the entry is invalid.
        :rtype: Scenario
        """
        if not isinstance(confdict, dict):
            raise ConfigError(f'Scenario configuration must be a mapping, got {confdict!r}')

        for required in ('name', 'kind'):
            if required not in confdict:
                raise ConfigError(f'"{required}" property is missing in scenario configuration')

        if not confdict['name']:
            raise ConfigError('"name" property is empty in scenario configuration')

        name = str(confdict['name'])
        known = {
            'name', 'kind', 'n_tweets', 'seed', 'rate', 'strength', 'base', 'peak', 'sigma',
            'target_at', 'reference_at', 'target_token', 'reference_token', 'lang', 'spatial',
        }
        unknown = set(confdict) - known
        if unknown:
            raise ConfigError(f'Scenario "{name}": unknown properties {sorted(unknown)}')

        # Unquoted YAML "kind: null" loads as None.
        kind = 'null' if confdict['kind'] is None else confdict['kind']
        spatial = SpatialModel.FromDict(confdict['spatial'], extent) if 'spatial' in confdict else None

        try:
            common = {
                'seed': int(confdict.get('seed', 0)),
                'n_tweets': int(confdict.get('n_tweets', 200_000)),
                'spatial': spatial,
                'name': name,
            }

            match ScenarioKind(kind):
                case ScenarioKind.Null:
                    scenario = cls.Null(extent, rate=float(confdict.get('rate', 0.05)), **common)
                case ScenarioKind.Hotspot:
                    extra = {x: tuple(confdict[x]) for x in ('target_at', 'reference_at') if x in confdict}
                    scenario = cls.Hotspot(
                        extent,
                        base=float(confdict.get('base', 0.0005)),
                        peak=float(confdict.get('peak', 0.5)),
                        sigma=float(confdict.get('sigma', 0.06)),
                        **extra,
                        **common,
                    )
                case ScenarioKind.Gradient:
                    scenario = cls.Gradient(
                        extent,
                        rate=float(confdict.get('rate', 0.05)),
                        strength=float(confdict.get('strength', 0.8)),
                        **common,
                    )

            overrides = {x: str(confdict[x]) for x in ('target_token', 'reference_token', 'lang') if x in confdict}
            return replace(scenario, **overrides) if overrides else scenario
        except (TypeError, ValueError) as e:
            raise ConfigError(f'Invalid scenario "{name}": {e}') from e


def _compose_text(words: Sequence[str], tokens: Sequence[tuple[int, str]], end: str) -> str:
    out = list(words)
    for position, token in sorted(tokens, key=lambda x: x[0], reverse=True):
        out.insert(position, token)

    return ' '.join(out) + end


def generate(scenario: Scenario) -> list[Tweet]:
    """
    Generate the scenario corpus: exactly ``n_tweets`` records inside the
    extent. The same scenario (seed included) always yields the same corpus.

    :param scenario: Scenario.
    :type scenario: Scenario
    :rtype: list[Tweet]
    """
    n = scenario.n_tweets
    rng = np.random.Generator(np.random.PCG64(scenario.seed))

    lon, lat = scenario.spatial.sample(rng, n)
    has_target = rng.random(n) < scenario.target.probability(lon, lat, scenario.extent)
    has_reference = rng.random(n) < scenario.reference.probability(lon, lat, scenario.extent)

    vocabulary = scenario.vocabulary
    lengths = rng.integers(3, 8, size=n)
    words = rng.integers(0, len(vocabulary), size=int(lengths.sum()))
    target_at = rng.integers(0, lengths + 1)
    reference_at = rng.integers(0, lengths + 1)
    endings = rng.integers(0, 4, size=n)

    offsets = np.concatenate(([0], np.cumsum(lengths)))
    punctuation = ('', '!', '?', '.')
    tweets: list[Tweet] = []

    for index in range(n):
        body = [vocabulary[x] for x in words[offsets[index]:offsets[index + 1]]]
        tokens = []
        if has_target[index]:
            tokens.append((int(target_at[index]), scenario.target_token))

        if has_reference[index]:
            tokens.append((int(reference_at[index]), scenario.reference_token))

        tweets.append(Tweet(
            f'{scenario.name}-{scenario.seed}-{index}',
            float(lon[index]),
            float(lat[index]),
            _compose_text(body, tokens, punctuation[endings[index]]),
            scenario.lang,
        ))

    return tweets


@dataclass(frozen=True)
class PlantedExpectation(object):
    """
    Ground truth of a scenario on a grid.
    """

    spec: GridSpec
    expected_target: np.ndarray = field(repr=False)
    """
    Expected target count per bin.
    """

    expected_reference: np.ndarray = field(repr=False)
    """
    Expected reference count per bin.
    """

    expected_delta: np.ndarray = field(repr=False)
    """
    Expected relative distribution per bin.
    """

    preferred: np.ndarray = field(repr=False)
    """
    Per bin: +1 where the target is expected to be over-represented, -1 for
    the reference, 0 where no preference is expected (not flagged).
    """

    flagged: np.ndarray = field(repr=False)
    """
    Bins whose expected relative distribution exceeds ``z`` times its shot noise.
    """

    expected_pearson: float | None
    """
    Expected Pearson r of the frequency comparison (independent Poisson
    counts), None if undefined.
    """

    @property
    def no_preference(self) -> bool:
        return not self.flagged.any()

    def summary(self) -> dict[str, Any]:
        return {
            'target_bins': int(np.count_nonzero(self.preferred > 0)),
            'reference_bins': int(np.count_nonzero(self.preferred < 0)),
            'expected_target_total': float(self.expected_target.sum()),
            'expected_reference_total': float(self.expected_reference.sum()),
            'expected_pearson': self.expected_pearson,
        }


def expected_counts(scenario: Scenario, spec: GridSpec, *, quadrature: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """
    Expected target and reference counts per bin, integrating density times
    usage probability on a ``quadrature x quadrature`` midpoint rule per bin.

    :rtype: tuple[np.ndarray, np.ndarray]
    """
    q = quadrature
    ext = spec.extent
    lon, lat = spec.centers(q)

    mass = scenario.spatial.density(lon, lat) * (spec.dx * spec.dy / (q * q))

    def integrate(usage: UsageField) -> np.ndarray:
        values = mass * usage.probability(lon, lat, ext)
        return scenario.n_tweets * values.reshape(spec.n, q, spec.m, q).sum(axis=(1, 3))

    return integrate(scenario.target), integrate(scenario.reference)


def planted_expectation(scenario: Scenario, spec: GridSpec | None = None, *, z: float = 3.0) -> PlantedExpectation:
    """
    Analytically known signal of the scenario on the grid: expected counts,
    expected relative distribution and the bins where its sign should be
    observable above counting noise.

    :param scenario: Scenario.
    :type scenario: Scenario
    :param spec: Grid, defaults to 50x50 bins over the scenario extent.
    :type spec: GridSpec | None, optional
    :param z: Flagging threshold in shot-noise standard deviations, defaults to 3.0
    :type z: float, optional
    :rtype: PlantedExpectation
    """
    spec = spec if spec is not None else GridSpec(scenario.extent, 50, 50)
    a, b = expected_counts(scenario, spec)
    total_a = float(a.sum())
    total_b = float(b.sum())

    if total_a > 0 and total_b > 0:
        expected = a / total_a - b / total_b
        sigma = np.sqrt(a / total_a ** 2 + b / total_b ** 2)
    else:
        expected = np.zeros(spec.shape)
        sigma = np.zeros(spec.shape)

    if scenario.kind is ScenarioKind.Null:
        expected = np.zeros(spec.shape)

    flagged = (sigma > 0) & (np.abs(expected) > z * sigma)
    preferred = np.where(flagged, np.sign(expected), 0).astype(np.int8)

    var_a = float(a.var()) + float(a.mean())
    var_b = float(b.var()) + float(b.mean())
    cov = float(((a - a.mean()) * (b - b.mean())).mean())
    r = cov / math.sqrt(var_a * var_b) if var_a > 0 and var_b > 0 else None

    return PlantedExpectation(spec, a, b, expected, preferred, flagged, r)
