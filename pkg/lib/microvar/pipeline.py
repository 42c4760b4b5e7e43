"""
End-to-end comparison: ingest, select, bin, compare, render and report.
"""

from __future__ import annotations

import pathlib
import shutil
import tempfile
from dataclasses import dataclass, field
from datetime import datetime
from typing import Any

import regex

from .config import MicrovarConfig
from .constants import DEFAULT_GRID, DEFAULT_LANG, KnownExtent
from .corpus import CorpusFilter, IngestReport, ingest_files
from .errors import ConfigError, EmptyDistributionError
from .grid import CountGrid, DeltaGrid, Extent, GridSpec, bin_counts, delta, dump_grid
from .logging import MicrovarLogger
from .render import MapStyle, render_angle_histogram, render_comparison, render_counts, render_delta, save_svg
from .stats import AngleHistogram, ComparisonStats, angle_histogram, build_report, dump_report, frequency_comparison
from .tokenmatch import MatchConfig, select_many


def artifact_name(name: str) -> str:
    """
    Make token set name safe to use in file names.

    :rtype: str
    """
    return regex.sub(r'[^A-Za-z0-9_.-]', '_', name)


@dataclass(frozen=True)
class RunConfig(object):
    """
    Parameters of one comparison run.
    """

    inputs: tuple[str, ...]
    target: str
    reference: str
    out_dir: str
    config_path: str | None = None
    """
    Token set configuration, defaults to :meth:`MicrovarConfig.Default`.
    """

    extent: Extent = KnownExtent.CABA.value
    n: int = DEFAULT_GRID[0]
    m: int = DEFAULT_GRID[1]
    lang: str | None = DEFAULT_LANG
    since: datetime | None = None
    until: datetime | None = None
    strict: bool = False
    style: dict[str, str] = field(default_factory=dict)
    """
    :class:`MapStyle` overrides as given on the command line.
    """

    workers: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, 'inputs', tuple(self.inputs))
        if not self.inputs:
            raise ValueError('At least one input corpus is required')

        if self.target == self.reference:
            raise ValueError(f'Target and reference token sets must differ, both are "{self.target}"')

        if self.n < 1 or self.m < 1:
            raise ValueError(f'Grid shape must be positive, got {self.n}x{self.m}')

        if self.since is not None and self.until is not None and not self.since < self.until:
            raise ValueError(f'Invalid time range: since ({self.since}) must be before until ({self.until})')

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.extent, self.n, self.m)

    @property
    def filter(self) -> CorpusFilter:
        time_range = None
        if self.since is not None or self.until is not None:
            time_range = (self.since or datetime.min, self.until or datetime.max)

        return CorpusFilter(self.extent, self.lang, time_range)

    @property
    def artifacts(self) -> dict[str, str]:
        """
        Artifact file names by kind.
        """
        t = artifact_name(self.target)
        r = artifact_name(self.reference)
        pair = f'{t}-vs-{r}'

        return {
            'target_counts': f'{t}.counts.svg',
            'reference_counts': f'{r}.counts.svg',
            'delta': f'{pair}.delta.svg',
            'scatter': f'{pair}.scatter.svg',
            'angles': f'{pair}.angles.svg',
            'report': f'{pair}.report.yaml',
            'target_grid': f'{t}.grid.txt',
            'reference_grid': f'{r}.grid.txt',
        }


class ArtifactDirectory(object):
    """
    Output directory that is populated atomically. Artifacts are written
    into a temporary sibling directory which replaces ``path`` when the
    context exits cleanly. On error the temporary directory is removed and
    ``path`` is left untouched.

    .. code-block:: python

        with ArtifactDirectory('./out') as out:
            save_svg(document, out / 'map.svg')
    """

    def __init__(self, path: str | pathlib.Path) -> None:
        self.path: pathlib.Path = pathlib.Path(path)
        """
        Final output directory.
        """

        self.tmp: pathlib.Path | None = None
        """
        Directory the artifacts are written to while the context is active.
        """

    def __enter__(self) -> pathlib.Path:
        parent = self.path.absolute().parent
        parent.mkdir(parents=True, exist_ok=True)
        self.tmp = pathlib.Path(tempfile.mkdtemp(prefix=f'.{self.path.name}.', dir=parent))
        return self.tmp

    def __exit__(self, exception_type, exception_value, traceback) -> None:
        assert self.tmp is not None

        if exception_type is not None:
            shutil.rmtree(self.tmp, ignore_errors=True)
            self.tmp = None
            return

        backup = None
        try:
            if self.path.exists():
                backup = self.path.with_name(f'{self.tmp.name}.old')
                self.path.rename(backup)

            self.tmp.rename(self.path)
        except OSError:
            if backup is not None and not self.path.exists():
                backup.rename(self.path)

            shutil.rmtree(self.tmp, ignore_errors=True)
            raise
        finally:
            self.tmp = None

        if backup is not None:
            shutil.rmtree(backup, ignore_errors=True)


@dataclass(frozen=True)
class ComparisonResult(object):
    """
    Outcome of :meth:`Comparison.Run`.
    """

    target: CountGrid
    reference: CountGrid
    delta: DeltaGrid
    stats: ComparisonStats
    histogram: AngleHistogram
    ingest: IngestReport
    report: dict[str, Any]
    artifacts: dict[str, pathlib.Path]


class Comparison(object):
    """
    Target/reference comparison pipeline.
    """

    def __init__(self, config: RunConfig, logger: MicrovarLogger | None = None) -> None:
        self.config: RunConfig = config
        self.logger: MicrovarLogger = logger if logger is not None else MicrovarLogger.GetLogger()

    def _token_sets(self):
        try:
            if self.config.config_path is not None:
                conf = MicrovarConfig.FromFile(self.config.config_path, extent=self.config.extent)
            else:
                conf = MicrovarConfig.Default(extent=self.config.extent)

            return conf.token_set(self.config.target), conf.token_set(self.config.reference)
        except LookupError as e:
            raise ConfigError(str(e.args[0])) from e

    def grids(self) -> tuple[CountGrid, CountGrid, IngestReport]:
        """
        Ingest the corpora and bin both selections.

        :raises EmptyDistributionError: If a token set selects no records.
        :rtype: tuple[CountGrid, CountGrid, IngestReport]
        """
        cfg = self.config
        target_set, reference_set = self._token_sets()

        tweets, report = ingest_files(cfg.inputs, cfg.filter, cfg.strict, workers=cfg.workers, logger=self.logger)
        selected = select_many(tweets, [target_set, reference_set], MatchConfig())

        grids = []
        for token_set in (target_set, reference_set):
            grid = bin_counts(selected[token_set.name], cfg.spec, workers=cfg.workers)
            if grid.total == 0:
                raise EmptyDistributionError(
                    f'Token set "{token_set.name}" selected no records out of {report.accepted} accepted'
                )

            self.logger.debug('Selection binned', extra={'data': {
                'Token set': token_set.name,
                'Records': len(selected[token_set.name]),
                'Non-empty bins': grid.nonzero(),
            }})
            grids.append(grid)

        return grids[0], grids[1], report

    def run(self) -> ComparisonResult:
        """
        Run the comparison and write all artifacts.

        :rtype: ComparisonResult
        """
        cfg = self.config
        style = MapStyle().with_overrides(cfg.style)
        target, reference, ingest = self.grids()

        relative = delta(target, reference)
        stats = frequency_comparison(target, reference)
        histogram = angle_histogram(target, reference)
        report = build_report(stats, histogram, target=cfg.target, reference=cfg.reference, extent=cfg.extent.export())
        report['ingest'] = ingest.export()

        names = cfg.artifacts
        with ArtifactDirectory(cfg.out_dir) as out:
            save_svg(render_counts(target, style), out / names['target_counts'])
            save_svg(render_counts(reference, style), out / names['reference_counts'])
            save_svg(render_delta(relative, style), out / names['delta'])
            save_svg(render_comparison(stats, style), out / names['scatter'])
            save_svg(render_angle_histogram(histogram, style), out / names['angles'])
            (out / names['target_grid']).write_text(dump_grid(target), encoding='utf-8')
            (out / names['reference_grid']).write_text(dump_grid(reference), encoding='utf-8')
            (out / names['report']).write_text(dump_report(report), encoding='utf-8')

        artifacts = {key: pathlib.Path(cfg.out_dir) / value for key, value in names.items()}

        self.logger.info('Comparison finished', extra={'data': {
            'Target': f'{cfg.target} ({stats.n_target})',
            'Reference': f'{cfg.reference} ({stats.n_reference})',
            'Pearson r': f'{stats.regression.pearson_r:.6f}',
            'Slope': f'{stats.regression.slope:.6f} (k = {stats.k_exact:.6f})',
            'Angle std': f'{histogram.std_deg:.2f}',
            'Output': cfg.out_dir,
        }})

        return ComparisonResult(target, reference, relative, stats, histogram, ingest, report, artifacts)

    @classmethod
    def Run(cls, config: RunConfig, logger: MicrovarLogger | None = None) -> ComparisonResult:
        """
        Run comparison described by ``config``.

        :param config: Run configuration.
        :type config: RunConfig
        :param logger: Logger, defaults to the microvar logger.
        :type logger: MicrovarLogger | None, optional
        :raises MicrovarError: On any pipeline error, no artifacts are left behind.
        :rtype: ComparisonResult
        """
        return cls(config, logger).run()
