"""Tokenization, ingredient-line parsing and vocabulary construction."""

from __future__ import annotations

import csv
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from glyset.corpus import Recipe

UNK = "<unk>"
MIN_COUNT = 5

_PUNCT = re.compile(r"[^\w\s]|_")
_PARENS = re.compile(r"\([^()]*\)")


def _strip_punct(text: str) -> str:
    # also treat unicode punctuation/symbol categories as separators
    text = _PUNCT.sub(" ", text)
    return "".join(" " if unicodedata.category(ch)[0] in "PS" else ch for ch in text)


def tokenize_text(text: str) -> list[str]:
    return _strip_punct(text.lower()).split()


@dataclass(frozen=True)
class TokenizedRecipe:
    id: str
    tokens_title: tuple[str, ...]
    tokens_ingredients: tuple[str, ...]
    tokens_directions: tuple[str, ...]

    @property
    def all_tokens(self) -> tuple[str, ...]:
        return self.tokens_title + self.tokens_ingredients + self.tokens_directions


def _tokenize_lines(lines: Iterable[str]) -> tuple[str, ...]:
    return tuple(tok for line in lines for tok in tokenize_text(line))


def tokenize(r: Recipe, parsed: bool = False, stoplist: frozenset[str] | None = None) -> TokenizedRecipe:
    """Lowercase, replace punctuation by spaces, split on whitespace.

    With ``parsed=True`` the ingredient lines go through
    :func:`parse_ingredients` first.
    """
    ingredients = parse_ingredients(r.ingredients, stoplist) if parsed else r.ingredients
    return TokenizedRecipe(
        id=r.id,
        tokens_title=tuple(tokenize_text(r.title)),
        tokens_ingredients=_tokenize_lines(ingredients),
        tokens_directions=_tokenize_lines(r.directions),
    )


def load_stoplist(path: str | Path | None = None) -> frozenset[str]:
    """Quantity/unit words, one per line. ``None`` loads the shipped default."""
    if path is None:
        text = resources.files("glyset").joinpath("data/quantity_stoplist.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip() and not w.startswith("#"))


_DEFAULT_STOPLIST: frozenset[str] | None = None


def default_stoplist() -> frozenset[str]:
    global _DEFAULT_STOPLIST
    if _DEFAULT_STOPLIST is None:
        _DEFAULT_STOPLIST = load_stoplist()
    return _DEFAULT_STOPLIST


def _is_numeral(word: str) -> bool:
    """Integers, decimals, fractions, ranges and unicode vulgar fractions."""
    has_num = False
    for ch in word:
        if ch in "./-⁄":
            continue
        if unicodedata.numeric(ch, None) is None:
            return False
        has_num = True
    return has_num


def parse_ingredient(line: str, stoplist: frozenset[str] | None = None) -> str:
    stoplist = default_stoplist() if stoplist is None else stoplist
    prev = None
    while prev != line:
        prev, line = line, _PARENS.sub(" ", line)
    kept = []
    for word in line.split():
        bare = word.strip(".,;:!?").lower()
        if not bare or _is_numeral(bare) or bare in stoplist:
            continue
        kept.append(word)
    return " ".join(kept).strip(" ,;:")


def parse_ingredients(lines: Sequence[str], stoplist: frozenset[str] | None = None) -> list[str]:
    """Drop numerals, quantity/unit words and parenthesized comments from each line."""
    return [parse_ingredient(line, stoplist) for line in lines]


@dataclass(frozen=True)
class Vocabulary:
    index: Mapping[str, int]
    counts: Mapping[str, int]
    min_count: int = MIN_COUNT

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def lookup(self, token: str) -> str:
        return token if token in self.index else UNK

    @property
    def tokens(self) -> list[str]:
        return sorted(self.index, key=self.index.__getitem__)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["token", "index", "count"])
            for tok in self.tokens:
                w.writerow([tok, self.index[tok], self.counts[tok]])


def build_vocabulary(corpus: Sequence[TokenizedRecipe], min_count: int = MIN_COUNT) -> Vocabulary:
    """Index tokens seen at least ``min_count`` times, ordered by (count desc, token asc)."""
    if not corpus:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    counts: Counter[str] = Counter()
    for tr in corpus:
        counts.update(tr.all_tokens)
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    return Vocabulary(
        index={t: i for i, t in enumerate(kept)},
        counts={t: counts[t] for t in kept},
        min_count=min_count,
    )
