"""Vocabulary filtering, IQR length truncation and bag-of-words vectors."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence, TypeVar

import numpy as np

from .corpus import TokenizedSection

T = TypeVar("T")

# Anything with a digit, a non-word character or an underscore is rejected.
DEFAULT_REJECT = r"\d|[^\w]|_"


@dataclass(frozen=True)
class VocabCriteria:
    min_doc_freq: int = 200
    max_doc_fraction: float = 0.70
    min_chars: int = 3
    reject_pattern: str = DEFAULT_REJECT

    def __post_init__(self):
        if self.min_doc_freq < 1:
            raise ValueError("min_doc_freq must be >= 1")
        if not 0 < self.max_doc_fraction <= 1:
            raise ValueError("max_doc_fraction must lie in (0, 1]")


@dataclass
class Vocabulary:
    terms: list[str]
    doc_freq: dict[str, int]
    num_docs: int = 0
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index


@dataclass(frozen=True)
class TruncationPolicy:
    q1: float
    q3: float
    q_trunc: float

    @property
    def max_tokens(self) -> int:
        return int(math.floor(self.q_trunc))


@dataclass
class BowVector:
    section_id: str
    counts: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted term ids and their counts."""
        ids = np.array(sorted(self.counts), dtype=np.int64)
        cts = np.array([self.counts[i] for i in ids], dtype=np.float64)
        return ids, cts


def compute_truncation(lengths: Sequence[int]) -> TruncationPolicy:
    """IQR outlier bound on section lengths: ``q3 + 1.5 * (q3 - q1)``."""
    if len(lengths) == 0:
        raise ValueError("no lengths")
    arr = np.asarray(lengths, dtype=np.float64)
    q1, q3 = np.percentile(arr, [25, 75], method="linear")
    return TruncationPolicy(float(q1), float(q3), float(q3 + 1.5 * (q3 - q1)))


def partial_doc_freq(streams: Iterable[Sequence[str]]) -> tuple[Counter, int]:
    """Document frequencies of one shard; merge shards with :func:`merge_doc_freq`."""
    df: Counter = Counter()
    n = 0
    for tokens in streams:
        df.update(set(tokens))
        n += 1
    return df, n


def merge_doc_freq(parts: Iterable[tuple[Counter, int]]) -> tuple[Counter, int]:
    total: Counter = Counter()
    n = 0
    for df, m in parts:
        total.update(df)
        n += m
    return total, n


def _tokens_of(item) -> Sequence[str]:
    return item.tokens if isinstance(item, TokenizedSection) else item


def vocabulary_from_doc_freq(df: Counter, num_docs: int, criteria: VocabCriteria) -> Vocabulary:
    reject = re.compile(criteria.reject_pattern)
    max_df = criteria.max_doc_fraction * num_docs
    keep = sorted(
        t for t, f in df.items()
        if f >= criteria.min_doc_freq and f <= max_df
        and len(t) >= criteria.min_chars and not reject.search(t)
    )
    return Vocabulary(keep, {t: df[t] for t in keep}, num_docs)


def build_vocabulary(sections: Iterable, criteria: VocabCriteria = VocabCriteria(),
                     shards: int = 1) -> Vocabulary:
    """Build the filtered vocabulary, terms in lexicographic order.

    ``sections`` may hold :class:`TokenizedSection` objects or plain token
    lists.  With ``shards > 1`` the document-frequency pass is split into
    partial maps that are merged, which gives the same result.
    """
    streams = [_tokens_of(s) for s in sections]
    if shards > 1 and streams:
        size = math.ceil(len(streams) / shards)
        df, n = merge_doc_freq(partial_doc_freq(streams[i:i + size]) for i in range(0, len(streams), size))
    else:
        df, n = partial_doc_freq(streams)
    return vocabulary_from_doc_freq(df, n, criteria)


def vectorize(section: TokenizedSection, vocab: Vocabulary, policy: TruncationPolicy | None = None) -> BowVector:
    """Count in-vocabulary tokens, after prefix truncation when a policy is given."""
    tokens = section.tokens
    if policy is not None:
        tokens = tokens[:max(policy.max_tokens, 0)]
    counts: Counter = Counter()
    index = vocab.index
    for tok in tokens:
        j = index.get(tok)
        if j is not None:
            counts[j] += 1
    return BowVector(section.section_id, dict(sorted(counts.items())))


def split_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {sum(fractions)!r}")
    if any(f < 0 for f in fractions):
        raise ValueError("fractions must be non-negative")
    sizes = [int(math.floor(f * n + 1e-9)) for f in fractions]
    sizes[-1] += n - sum(sizes)
    return sizes


def split_shuffle(items: Sequence[T], fractions: Sequence[float], seed: int) -> list[list[T]]:
    """Seeded shuffle, then cut into parts of floor(f * n); the remainder goes to the last part."""
    sizes = split_sizes(len(items), fractions)
    order = np.random.default_rng(seed).permutation(len(items))
    parts, start = [], 0
    for size in sizes:
        parts.append([items[i] for i in order[start:start + size]])
        start += size
    return parts


# ---------------------------------------------------------------------------
# File formats


def write_vocabulary(path: str | Path, vocab: Vocabulary) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, t in enumerate(vocab.terms):
            fh.write(f"{t}\t{i}\t{vocab.doc_freq[t]}\n")


def read_vocabulary(path: str | Path) -> Vocabulary:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            term, idx, df = line.split("\t")
            if int(idx) != len(rows):
                raise ValueError(f"{path}:{lineno}: index {idx} out of order")
            rows.append((term, int(df)))
    return Vocabulary([t for t, _ in rows], dict(rows))


def write_bow(path: str | Path, vectors: Iterable[BowVector]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for v in vectors:
            fh.write(json.dumps({"section_id": v.section_id,
                                 "counts": {str(k): c for k, c in sorted(v.counts.items())}}) + "\n")
            n += 1
    return n


def read_bow(path: str | Path) -> Iterator[BowVector]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                yield BowVector(obj["section_id"], {int(k): int(c) for k, c in obj["counts"].items()})
