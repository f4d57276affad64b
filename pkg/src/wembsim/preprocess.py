"""Caption tokenization and filtering (stopwords, out-of-vocabulary words)."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import FrozenSet, Iterable, List, Optional

from .embeddings import EmbeddingTable, lookup

# Anything that is not a letter, digit or apostrophe becomes a separator.
_NON_WORD = re.compile(r"[^\w']|_")


@dataclass(frozen=True)
class StopwordList:
    words: FrozenSet[str]

    def __post_init__(self):
        for w in self.words:
            if not w or w != w.lower():
                raise ValueError(f"stopwords must be non-empty lowercase strings, got {w!r}")

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "StopwordList":
        words = set()
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if line:
                words.add(line.lower())
        return cls(frozenset(words))

    @classmethod
    def from_file(cls, path) -> "StopwordList":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def english(cls) -> "StopwordList":
        """The 179-word NLTK 3.x English list, shipped with the package."""
        text = resources.files("wembsim").joinpath("data/stopwords_en.txt").read_text("utf-8")
        return cls.from_lines(text.splitlines())

    @classmethod
    def empty(cls) -> "StopwordList":
        return cls(frozenset())


@dataclass(frozen=True)
class Caption:
    raw: str
    tokens: List[str] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.tokens


def tokenize(text: str) -> List[str]:
    """Lowercase, turn non ``[letter|digit|']`` characters into spaces, split."""
    return _NON_WORD.sub(" ", text.lower()).split()


def filter_tokens(
    tokens: Iterable[str],
    stops: Optional[StopwordList] = None,
    vocab: Optional[EmbeddingTable] = None,
) -> List[str]:
    out = []
    for tok in tokens:
        if stops is not None and tok in stops:
            continue
        if vocab is not None and lookup(vocab, tok) is None:
            continue
        out.append(tok)
    return out


def make_caption(
    text: str,
    stops: Optional[StopwordList] = None,
    vocab: Optional[EmbeddingTable] = None,
) -> Caption:
    return Caption(raw=text, tokens=filter_tokens(tokenize(text), stops, vocab))
