"""IOB-annotated sentences: two-column TSV I/O, cleaning, sentence splitting."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..corpus import tokenize
from ..iob import ENTITY_CLASSES, label_space, repair_iob2

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnotatedSentence:
    tokens: tuple[str, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.labels):
            raise ValueError("tokens and labels differ in length")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class LoadStats:
    read: int
    repaired_labels: int
    dropped_short: int
    dropped_duplicates: int
    kept: int


class AnnotationError(ValueError):
    pass


def read_annotations(path: str | Path, classes: Sequence[str] = ENTITY_CLASSES) -> list[AnnotatedSentence]:
    """Parse the TSV as-is: labels are validated but nothing is repaired or dropped."""
    valid = set(label_space(classes))
    sentences: list[AnnotatedSentence] = []
    toks: list[str] = []
    labs: list[str] = []
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                if toks:
                    sentences.append(AnnotatedSentence(tuple(toks), tuple(labs)))
                    toks, labs = [], []
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise AnnotationError(f"{path}:{lineno}: expected 'token<TAB>label'")
            if parts[1] not in valid:
                raise AnnotationError(f"{path}:{lineno}: unknown label {parts[1]!r}")
            toks.append(parts[0])
            labs.append(parts[1])
    if toks:
        sentences.append(AnnotatedSentence(tuple(toks), tuple(labs)))
    return sentences


def clean_sentences(sentences: Iterable[AnnotatedSentence]) -> tuple[list[AnnotatedSentence], LoadStats]:
    """Repair IOB2 openings, drop one-token sentences and exact duplicates (first kept)."""
    kept: list[AnnotatedSentence] = []
    seen: set[AnnotatedSentence] = set()
    n = fixes = short = dups = 0
    for s in sentences:
        n += 1
        labels, f = repair_iob2(s.labels)
        fixes += f
        if len(s) < 2:
            short += 1
            continue
        s = AnnotatedSentence(s.tokens, tuple(labels))
        if s in seen:
            dups += 1
            continue
        seen.add(s)
        kept.append(s)
    if fixes:
        log.warning("repaired %d I- label(s) that did not continue an entity", fixes)
    return kept, LoadStats(n, fixes, short, dups, len(kept))


def load_annotations(path: str | Path, classes: Sequence[str] = ENTITY_CLASSES, with_stats: bool = False):
    sentences, stats = clean_sentences(read_annotations(path, classes))
    return (sentences, stats) if with_stats else sentences


def write_annotations(path: str | Path, sentences: Iterable[AnnotatedSentence]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for s in sentences:
            for t, lab in zip(s.tokens, s.labels):
                fh.write(f"{t}\t{lab}\n")
            fh.write("\n")
            n += 1
    return n


_ABBREVIATIONS = frozenset({"e.g", "i.e", "fig", "figs", "approx", "ca", "no", "nos", "vs", "etc", "wt", "vol",
                            "ex", "eq", "equiv", "ref", "refs", "al", "resp", "mt", "temp"})


def split_sentences(text: str) -> list[list[str]]:
    """Tokenize ``text`` and cut after '.' or ';' tokens, unless the previous token is a known abbreviation."""
    tokens = tokenize(text)
    out: list[list[str]] = []
    cur: list[str] = []
    for i, tok in enumerate(tokens):
        cur.append(tok)
        if tok in (".", ";"):
            prev = tokens[i - 1].lower() if i else ""
            if tok == "." and prev in _ABBREVIATIONS:
                continue
            out.append(cur)
            cur = []
    if cur:
        out.append(cur)
    return out
