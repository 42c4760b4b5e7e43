"""
Token-set matching against record text.

Text and tokens are normalized the same way (canonical composition, then
case folding unless disabled). A token matches in ``word`` mode when it is
delimited on both sides by a character that is neither a Unicode letter nor
a digit (or by the string boundary); in ``substring`` mode plain containment
is enough. A set without an explicit mode uses ``word`` for tokens of two
or more characters and ``substring`` for single characters, so single
letters such as ``b`` and ``v`` are counted inside words.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import TYPE_CHECKING, Any, Iterable, Sequence

import regex

from .errors import ConfigError

if TYPE_CHECKING:
    from .corpus import Tweet


class MatchMode(Enum):
    """
    Token boundary rule.
    """

    Word = 'word'
    """
    Token must be delimited by non-letter/non-digit characters or string boundaries.
    """

    Substring = 'substring'
    """
    Token may appear anywhere in the text.
    """


@dataclass(frozen=True, slots=True)
class MatchConfig(object):
    """
    Text normalization applied before matching.
    """

    normalization: str = 'NFC'
    """
    Unicode normalization form (``NFC`` or ``NFKC``).
    """

    casefold: bool = True
    """
    Default case folding policy, token sets may override it.
    """

    def __post_init__(self) -> None:
        if self.normalization not in ('NFC', 'NFKC'):
            raise ValueError(f'Unsupported normalization form "{self.normalization}", use NFC or NFKC')


@dataclass(frozen=True, slots=True)
class TokenSet(object):
    """
    Named set of tokens. A record is selected by the set if it contains at
    least one of the tokens.
    """

    name: str
    tokens: tuple[str, ...]
    mode: MatchMode | None = None
    """
    Boundary rule for all tokens, None selects it per token by length.
    """

    casefold: bool | None = None
    """
    Case folding override, None uses :attr:`MatchConfig.casefold`.
    """

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError('Token set name must not be empty')

        tokens = (self.tokens,) if isinstance(self.tokens, str) else tuple(self.tokens)
        if not tokens:
            raise ValueError(f'Token set "{self.name}" has no tokens')

        for token in tokens:
            if not isinstance(token, str) or not token:
                raise ValueError(f'Token set "{self.name}" contains an empty or non-string token: {token!r}')

        object.__setattr__(self, 'tokens', tokens)

        if isinstance(self.mode, str):
            object.__setattr__(self, 'mode', MatchMode(self.mode))

    def effective_casefold(self, config: MatchConfig) -> bool:
        return config.casefold if self.casefold is None else self.casefold

    def effective_mode(self, token: str) -> MatchMode:
        """
        :param token: Token in its normalization form, before case folding.
        :type token: str
        :return: Boundary rule used for the token.
        :rtype: MatchMode
        """
        if self.mode is not None:
            return self.mode

        return MatchMode.Word if len(token) >= 2 else MatchMode.Substring

    def with_token(self, token: str) -> TokenSet:
        """
        :return: Copy of the set with one more token.
        :rtype: TokenSet
        """
        return TokenSet(self.name, self.tokens + (token,), self.mode, self.casefold)

    def export(self) -> dict[str, Any]:
        out: dict[str, Any] = {'name': self.name, 'tokens': list(self.tokens)}
        if self.mode is not None:
            out['mode'] = self.mode.value

        if self.casefold is not None:
            out['casefold'] = self.casefold

        return out

    @classmethod
    def FromDict(cls, confdict: dict[str, Any]) -> TokenSet:
        """
        Create token set from configuration entry.

        .. code-block:: yaml

            name: las
            tokens: [las]
            mode: word        # optional: word | substring
            casefold: true    # optional

        :raises ConfigError: If the entry is invalid.
        :rtype: TokenSet
        """
        if not isinstance(confdict, dict):
            raise ConfigError(f'Token set configuration must be a mapping, got {confdict!r}')

        for required in ('name', 'tokens'):
            if not confdict.get(required):
                raise ConfigError(f'"{required}" property is missing in token set configuration')

        tokens = confdict['tokens']
        if isinstance(tokens, str) or not isinstance(tokens, list):
            raise ConfigError(f'Token set "{confdict["name"]}": "tokens" must be a list')

        mode = confdict.get('mode', None)
        casefold = confdict.get('casefold', None)

        try:
            return cls(
                str(confdict['name']),
                tuple(str(x) for x in tokens),
                MatchMode(mode) if mode is not None else None,
                bool(casefold) if casefold is not None else None,
            )
        except ValueError as e:
            raise ConfigError(f'Invalid token set "{confdict["name"]}": {e}') from e


def normalize_text(text: str, config: MatchConfig = MatchConfig(), *, casefold: bool | None = None) -> str:
    """
    Normalize text for matching. The result is idempotent:
    ``normalize_text(normalize_text(s)) == normalize_text(s)``.

    :param text: Text.
    :type text: str
    :param config: Matching configuration, defaults to MatchConfig()
    :type config: MatchConfig, optional
    :param casefold: Override :attr:`MatchConfig.casefold`, defaults to None
    :type casefold: bool | None, optional
    :rtype: str
    """
    fold = config.casefold if casefold is None else casefold
    text = unicodedata.normalize(config.normalization, text)
    if not fold:
        return text

    # Folding may decompose a few characters (e.g. U+01F0), compose again.
    return unicodedata.normalize(config.normalization, text.casefold())


@lru_cache(maxsize=256)
def compile_pattern(set: TokenSet, config: MatchConfig = MatchConfig()) -> regex.Pattern:
    """
    Compile the token set into a single pattern that is searched in text
    normalized by :func:`normalize_text` with the set's case folding policy.

    :param set: Token set.
    :type set: TokenSet
    :param config: Matching configuration, defaults to MatchConfig()
    :type config: MatchConfig, optional
    :rtype: regex.Pattern
    """
    casefold = set.effective_casefold(config)

    # Mode is decided before folding, "ß" folds to "ss".
    compiled: dict[tuple[str, bool], None] = {}
    for raw in set.tokens:
        mode = set.effective_mode(normalize_text(raw, config, casefold=False))
        compiled[(normalize_text(raw, config, casefold=casefold), mode is MatchMode.Word)] = None

    alternatives = []
    for token, word in sorted(compiled):
        escaped = regex.escape(token)
        if word:
            escaped = r'(?<![\p{L}\p{N}])' + escaped + r'(?![\p{L}\p{N}])'

        alternatives.append(escaped)

    return regex.compile('|'.join(alternatives))


def matches(text: str, set: TokenSet, config: MatchConfig = MatchConfig()) -> bool:
    """
    :return: True if the text contains at least one token of the set.
    :rtype: bool
    """
    casefold = set.effective_casefold(config)
    return compile_pattern(set, config).search(normalize_text(text, config, casefold=casefold)) is not None


def select(tweets: Iterable[Tweet], set: TokenSet, config: MatchConfig = MatchConfig()) -> list[Tweet]:
    """
    Select records whose text contains at least one token of the set. Input
    order is preserved.

    :param tweets: Records.
    :type tweets: Iterable[Tweet]
    :param set: Token set.
    :type set: TokenSet
    :param config: Matching configuration, defaults to MatchConfig()
    :type config: MatchConfig, optional
    :rtype: list[Tweet]
    """
    return select_many(tweets, [set], config)[set.name]


def select_many(
    tweets: Iterable[Tweet],
    sets: Sequence[TokenSet],
    config: MatchConfig = MatchConfig(),
) -> dict[str, list[Tweet]]:
    """
    Evaluate several token sets in a single pass, each text is normalized
    once per case folding policy. Selections are independent: a record that
    matches several sets is returned in each of them.

    :param tweets: Records.
    :type tweets: Iterable[Tweet]
    :param sets: Token sets with unique names.
    :type sets: Sequence[TokenSet]
    :param config: Matching configuration, defaults to MatchConfig()
    :type config: MatchConfig, optional
    :raises ValueError: If set names are not unique.
    :return: Selection per set name.
    :rtype: dict[str, list[Tweet]]
    """
    names = [x.name for x in sets]
    if len(set(names)) != len(names):
        raise ValueError(f'Token set names must be unique within one run: {names}')

    compiled = [(x.name, x.effective_casefold(config), compile_pattern(x, config).search) for x in sets]
    policies = sorted({fold for _, fold, _ in compiled})
    out: dict[str, list[Tweet]] = {name: [] for name in names}

    for tweet in tweets:
        texts = {fold: normalize_text(tweet.text, config, casefold=fold) for fold in policies}
        for name, fold, search in compiled:
            if search(texts[fold]) is not None:
                out[name].append(tweet)

    return out
