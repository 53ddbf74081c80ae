"""TF-IDF features with smoothed idf and L2-normalised rows."""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

_WORD_RE = re.compile(r"\w+(?:['’]\w+)?", re.UNICODE)


def analyze(text: str, ngram_range: tuple[int, int] = (1, 2)) -> list[str]:
    words = _WORD_RE.findall(text.lower())
    lo, hi = ngram_range
    terms = []
    for n in range(lo, hi + 1):
        terms.extend(" ".join(words[i:i + n]) for i in range(len(words) - n + 1))
    return terms


@dataclass
class TfidfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    min_df: int = 2
    ngram_range: tuple[int, int] = (1, 2)
    norm: str = "l2"

    def counts(self, texts: Iterable[str]) -> sp.csr_matrix:
        indptr, indices, data = [0], [], []
        for text in texts:
            tf = Counter(self.vocabulary[t] for t in analyze(text, self.ngram_range)
                         if t in self.vocabulary)
            cols = sorted(tf)
            indices.extend(cols)
            data.extend(float(tf[c]) for c in cols)
            indptr.append(len(indices))
        return sp.csr_matrix(
            (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr)),
            shape=(len(indptr) - 1, len(self.vocabulary)),
        )

    def transform(self, texts: Iterable[str]) -> sp.csr_matrix:
        X = self.counts(texts)
        X = X @ sp.diags(self.idf)
        X = sp.csr_matrix(X)
        if self.norm == "l2":
            norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
            nz = norms > 0
            scale = np.ones_like(norms)
            scale[nz] = 1.0 / norms[nz]
            X = sp.csr_matrix(sp.diags(scale) @ X)
        X.sort_indices()
        return X


def build_tfidf(texts: Sequence[str], min_df: int = 2, ngram_range: tuple[int, int] = (1, 2)) -> TfidfModel:
    texts = list(texts)
    if not texts:
        raise ValueError("cannot build TF-IDF from an empty corpus")
    df: Counter = Counter()
    for text in texts:
        df.update(set(analyze(text, ngram_range)))
    terms = sorted(t for t, c in df.items() if c >= min_df)
    n = len(texts)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in terms])
    return TfidfModel({t: i for i, t in enumerate(terms)}, idf, min_df, tuple(ngram_range))
