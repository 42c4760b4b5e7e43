"""
Command line interface.

.. code-block:: console

    python -m lib.microvar compare --input tweets.jsonl --case las-los --out ./las-los
    python -m lib.microvar simulate --scenario null-5pct --out null.jsonl --seed 7
    python -m lib.microvar render --grid las.grid.txt --delta-with los.grid.txt --out delta.svg
    python -m lib.microvar cases
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from typing import Sequence

import colorama
import yaml

from .config import MicrovarConfig
from .constants import DEFAULT_GRID, DEFAULT_LANG, KnownExtent
from .corpus import parse_timestamp, write_corpus
from .errors import MicrovarError
from .grid import Extent, delta, load_grid, parse_shape
from .logging import MicrovarLogger
from .pipeline import Comparison, RunConfig
from .render import MapStyle, render_counts, render_delta, save_svg
from .synth import generate
from .tokenmatch import TokenSet, select_many


def parse_style(values: Sequence[str] | None) -> dict[str, str]:
    """
    Parse ``key=value`` style overrides.

    :raises ValueError: If a value is not in ``key=value`` format.
    :rtype: dict[str, str]
    """
    out: dict[str, str] = {}
    for value in values or []:
        key, sep, item = value.partition('=')
        if not sep or not key.strip():
            raise ValueError(f'Style override must be in key=value format, got "{value}"')

        out[key.strip()] = item.strip()

    return out


def _load_config(path: str | None) -> MicrovarConfig:
    return MicrovarConfig.FromFile(path) if path else MicrovarConfig.Default()


def cmd_compare(config: RunConfig, logger: MicrovarLogger) -> int:
    """
    Compare target and reference distributions and write all artifacts into
    ``config.out_dir``.

    :return: Exit status.
    :rtype: int
    """
    result = Comparison.Run(config, logger)
    for path in result.artifacts.values():
        print(path)

    return 0


def cmd_simulate(
    config: MicrovarConfig,
    name: str,
    out: str,
    logger: MicrovarLogger,
    *,
    seed: int | None = None,
    n_tweets: int | None = None,
) -> int:
    """
    Generate corpus of a configured scenario.

    :return: Exit status.
    :rtype: int
    """
    scenario = config.scenario(name)
    if seed is not None:
        scenario = replace(scenario, seed=seed)

    if n_tweets is not None:
        scenario = replace(scenario, n_tweets=n_tweets)

    tweets = generate(scenario)
    count = write_corpus(tweets, out)

    selected = select_many(tweets, [
        TokenSet('target', (scenario.target_token,)),
        TokenSet('reference', (scenario.reference_token,)),
    ])

    summary = {
        'scenario': scenario.name,
        'kind': scenario.kind.value,
        'seed': scenario.seed,
        'records': count,
        'target': {'token': scenario.target_token, 'records': len(selected['target'])},
        'reference': {'token': scenario.reference_token, 'records': len(selected['reference'])},
        'output': out,
    }

    logger.info('Corpus generated', extra={'data': {
        'Scenario': f'{scenario.name} ({scenario.kind.value}, seed {scenario.seed})',
        'Records': count,
        'Output': out,
    }})

    print(yaml.safe_dump(summary, sort_keys=False, allow_unicode=True), end='')
    return 0


def cmd_render(grid: str, out: str, style: MapStyle, logger: MicrovarLogger, *, delta_with: str | None = None) -> int:
    """
    Render serialized count grid, or the relative distribution of two grids.

    :return: Exit status.
    :rtype: int
    """
    with open(grid, 'r', encoding='utf-8') as f:
        target = load_grid(f)

    if delta_with is None:
        document = render_counts(target, style)
    else:
        with open(delta_with, 'r', encoding='utf-8') as f:
            reference = load_grid(f)

        document = render_delta(delta(target, reference), style)

    save_svg(document, out)
    logger.info(f'Map written to {out}')
    return 0


def cmd_cases(config: MicrovarConfig) -> int:
    """
    Print configured token sets, case pairs and scenarios.

    :return: Exit status.
    :rtype: int
    """
    print(yaml.safe_dump(config.export(), sort_keys=False, allow_unicode=True), end='')
    return 0


def _timestamp(value: str):
    try:
        return parse_timestamp(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f'invalid timestamp "{value}": {e}')


def _extent(value: str) -> Extent:
    try:
        return Extent.FromString(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _shape(value: str) -> tuple[int, int]:
    try:
        return parse_shape(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def get_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='microvar',
        description='Micro-scale spatial variation of token usage in geotagged text.',
    )
    parser.add_argument('--log-path', default='/dev/stderr', help='Log file (default: %(default)s)')
    parser.add_argument('-v', '--verbose', action='store_true', help='Log debug messages')

    commands = parser.add_subparsers(dest='command', required=True)

    caba = KnownExtent.CABA.value
    compare = commands.add_parser('compare', help='Compare target and reference distributions')
    compare.add_argument('--input', action='append', required=True, help='Corpus file, may be repeated')
    compare.add_argument('--config', help='Token set configuration (default: $MICROVAR_CONFIG or cases.yaml)')
    compare.add_argument('--case', help='Configured case pair, sets target and reference')
    compare.add_argument('--target-set', help='Target token set name')
    compare.add_argument('--reference-set', help='Reference token set name')
    compare.add_argument(
        '--extent', type=_extent, default=caba,
        help='lonmin,lonmax,latmin,latmax (default: ' + ','.join(str(x) for x in caba.export()) + ')',
    )
    compare.add_argument('--grid', type=_shape, default=DEFAULT_GRID, help='Grid shape NxM (default: 200x200)')
    compare.add_argument('--lang', default=DEFAULT_LANG, help='Language filter, empty for any (default: %(default)s)')
    compare.add_argument('--since', type=_timestamp, help='Only records created at or after this time')
    compare.add_argument('--until', type=_timestamp, help='Only records created before this time')
    compare.add_argument('--out', required=True, help='Output directory')
    compare.add_argument('--strict', action='store_true', help='Abort on the first malformed record')
    compare.add_argument('--style', action='append', help='Rendering override key=value, may be repeated')
    compare.add_argument('--workers', type=int, default=1, help='Ingestion and binning threads (default: %(default)s)')

    simulate = commands.add_parser('simulate', help='Generate synthetic corpus')
    simulate.add_argument('--config', help='Scenario configuration (default: $MICROVAR_CONFIG or cases.yaml)')
    simulate.add_argument('--scenario', required=True, help='Scenario name')
    simulate.add_argument('--out', required=True, help='Output corpus file')
    simulate.add_argument('--seed', type=int, help='Override scenario seed')
    simulate.add_argument('--n-tweets', type=int, help='Override number of records')

    render = commands.add_parser('render', help='Render serialized grid')
    render.add_argument('--grid', required=True, help='Serialized count grid')
    render.add_argument('--delta-with', help='Reference grid, renders the relative distribution')
    render.add_argument('--out', required=True, help='Output SVG file')
    render.add_argument('--style', action='append', help='Rendering override key=value, may be repeated')

    cases = commands.add_parser('cases', help='List configured token sets, cases and scenarios')
    cases.add_argument('--config', help='Configuration (default: $MICROVAR_CONFIG or cases.yaml)')

    return parser


def _run_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> RunConfig:
    target, reference = args.target_set, args.reference_set
    if args.case:
        case = _load_config(args.config).case(args.case)
        target = target or case.target.name
        reference = reference or case.reference.name

    if not target or not reference:
        parser.error('compare: --target-set and --reference-set (or --case) are required')

    return RunConfig(
        inputs=tuple(args.input),
        target=target,
        reference=reference,
        out_dir=args.out,
        config_path=args.config,
        extent=args.extent,
        n=args.grid[0],
        m=args.grid[1],
        lang=args.lang or None,
        since=args.since,
        until=args.until,
        strict=args.strict,
        style=parse_style(args.style),
        workers=args.workers,
    )


def main(argv: Sequence[str] | None = None) -> int:
    """
    Command line entry point.

    :param argv: Arguments, defaults to ``sys.argv[1:]``.
    :type argv: Sequence[str] | None, optional
    :return: Exit status, 0 on success.
    :rtype: int
    """
    parser = get_parser()
    args = parser.parse_args(argv)
    logger = MicrovarLogger.Setup(args.log_path, level=logging.DEBUG if args.verbose else logging.INFO)

    try:
        match args.command:
            case 'compare':
                return cmd_compare(_run_config(args, parser), logger)
            case 'simulate':
                return cmd_simulate(
                    _load_config(args.config), args.scenario, args.out, logger,
                    seed=args.seed, n_tweets=args.n_tweets,
                )
            case 'render':
                style = MapStyle().with_overrides(parse_style(args.style))
                return cmd_render(args.grid, args.out, style, logger, delta_with=args.delta_with)
            case 'cases':
                return cmd_cases(_load_config(args.config))
    except LookupError as e:
        logger.error(logger.colorize(f'microvar {args.command}: {e.args[0]}', colorama.Fore.RED))
    except (MicrovarError, ValueError, OSError) as e:
        logger.error(logger.colorize(f'microvar {args.command}: {e}', colorama.Fore.RED))

    return 1


if __name__ == '__main__':
    sys.exit(main())
