"""Lexical salience-valence tables over labelled parking sentences.

For each term, ``N_total`` counts sentences containing it (once per
sentence), salience is ``log10(N_total)`` and valence is
``(N_positive - N_negative) / N_total``.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

from .classify.labels import AttitudeLabel

DEFAULT_MIN_COUNT = 30
_APOSTROPHES = str.maketrans("", "", "'’")


def terms_of(text: str) -> set[str]:
    """Distinct lower-cased alphanumeric terms; apostrophes are deleted first."""
    cleaned = "".join(ch if ch.isalnum() else " " for ch in text.lower().translate(_APOSTROPHES))
    return set(cleaned.split())


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Stopwords, one per line; ``None`` loads the bundled 127-word list."""
    if path is None:
        text = resources.files("parksent").joinpath("data/stopwords.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip() and not w.startswith("#"))


def scaled_min_count(subset_size: int, full_size: int, base: int = DEFAULT_MIN_COUNT) -> int:
    """Frequency floor scaled by the subset's share of the corpus, at least 1."""
    if full_size <= 0:
        return max(1, base)
    return max(1, int(round(base * subset_size / full_size)))


@dataclass(frozen=True)
class LsvaEntry:
    term: str
    n_total: int
    n_positive: int
    n_negative: int

    @property
    def salience(self) -> float:
        return math.log10(self.n_total)

    @property
    def valence(self) -> float:
        return (self.n_positive - self.n_negative) / self.n_total


def _text_label(item):
    if isinstance(item, tuple):
        return item[0], item[1]
    return item.text, item.label


def compute_lsva(sentences: Iterable, min_count: int = 1, stopwords: Iterable[str] = (),
                 subset: Callable | None = None) -> list[LsvaEntry]:
    """Salience-valence table sorted by descending salience, then term.

    ``sentences`` holds ``(text, label)`` pairs or objects with ``text`` and
    ``label``; ``subset`` optionally filters them first.
    """
    if min_count < 1:
        raise ValueError("min_count must be at least 1")
    stop = frozenset(stopwords)
    total, pos, neg = Counter(), Counter(), Counter()
    for item in sentences:
        if subset is not None and not subset(item):
            continue
        text, label = _text_label(item)
        label = AttitudeLabel.parse(label)
        terms = terms_of(text) - stop
        total.update(terms)
        if label is AttitudeLabel.POSITIVE:
            pos.update(terms)
        elif label is AttitudeLabel.NEGATIVE:
            neg.update(terms)
    entries = [LsvaEntry(t, n, pos[t], neg[t]) for t, n in total.items() if n >= min_count]
    entries.sort(key=lambda e: (-e.n_total, e.term))
    return entries
