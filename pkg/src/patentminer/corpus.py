"""Section segmentation and token normalization for patent descriptions.

Patent descriptions arrive as one long body of text.  They are cut into
heading-delimited sections, tokenized by a rule-based tokenizer that keeps
chemical names intact, and normalized (numbers masked, stopwords and
punctuation dropped, lemmatized) before vectorization.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from importlib import resources as _pkg_resources
from pathlib import Path
from typing import Iterable, Iterator, Sequence

NUM_TOKEN = "[NUM]"

_DEFAULT_HEADING_PATTERNS = (r"EXAMPLE\s+\d+[A-Za-z]?[.:]?", r"Step\s+\d+[A-Za-z]?[.:]?")


@dataclass(frozen=True)
class RawDocument:
    doc_id: str
    body: str


@dataclass(frozen=True)
class Section:
    section_id: str
    heading: str
    body: str


@dataclass(frozen=True)
class TokenizedSection:
    section_id: str
    tokens: list[str]
    raw_len: int
    heading: str = ""


@dataclass(frozen=True)
class HeadingConfig:
    """Predicate deciding which lines of a description are headings.

    A line is a heading when it has at most ``max_tokens`` whitespace tokens,
    contains no sentence-final period followed by more text, and is either
    fully upper-case, title-case ending in an ordinal, or a full match of one
    of ``patterns``.
    """

    max_tokens: int = 12
    patterns: tuple[str, ...] = _DEFAULT_HEADING_PATTERNS
    allow_upper: bool = True
    allow_title_ordinal: bool = True

    def compiled(self) -> list[re.Pattern]:
        return [re.compile(p) for p in self.patterns]


@dataclass(frozen=True)
class NormResources:
    stopwords: frozenset[str] = field(default_factory=frozenset)
    lemmas: dict[str, str] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Segmentation

_SENTENCE_BREAK = re.compile(r"[.!?]\s+\S")
_ORDINAL = re.compile(r"^(\d+[A-Za-z]?|[IVXLC]{2,})[.:)]?$")
_CONNECTORS = frozenset({"of", "the", "and", "for", "in", "a", "an", "to", "with", "on", "by", "from"})


def _is_title_ordinal(words: Sequence[str]) -> bool:
    if len(words) < 2 or not _ORDINAL.match(words[-1]):
        return False
    head = words[:-1]
    if not head[0][:1].isupper():
        return False
    for w in head:
        first = w[:1]
        if first.isalpha() and not first.isupper() and w.lower() not in _CONNECTORS:
            return False
    return True


def _is_upper_line(line: str) -> bool:
    letters = [c for c in line if c.isalpha()]
    return len(letters) >= 2 and all(not c.islower() for c in letters) and any(c.isupper() for c in letters)


def is_heading(line: str, rules: HeadingConfig = HeadingConfig(), _compiled=None) -> bool:
    text = line.strip()
    if not text:
        return False
    words = text.split()
    if len(words) > rules.max_tokens:
        return False
    if _SENTENCE_BREAK.search(text):
        return False
    patterns = _compiled if _compiled is not None else rules.compiled()
    if any(p.fullmatch(text) for p in patterns):
        return True
    if rules.allow_upper and _is_upper_line(text):
        return True
    return rules.allow_title_ordinal and _is_title_ordinal(words)


def segment_sections(doc: RawDocument, heading_rules: HeadingConfig = HeadingConfig()) -> list[Section]:
    """Split a document body into sections at heading lines.

    Text before the first heading becomes a section with an empty heading
    (only if it is not blank).  Every heading opens a section, even when its
    body is empty.
    """
    compiled = heading_rules.compiled()
    sections: list[Section] = []
    heading: str | None = None
    lines: list[str] = []

    def flush() -> None:
        body = "\n".join(lines).strip()
        if heading is None and not body:
            return
        sections.append(Section(f"{doc.doc_id}#{len(sections)}", heading or "", body))

    for line in doc.body.splitlines():
        if is_heading(line, heading_rules, compiled):
            flush()
            heading = line.strip()
            lines = []
        else:
            lines.append(line)
    flush()
    return sections


# ---------------------------------------------------------------------------
# Tokenization

_OPENERS = {"(": ")", "[": "]", "{": "}"}
_CLOSERS = {v: k for k, v in _OPENERS.items()}
_QUOTES = set("\"'`“”‘’«»")
_TRAILING = set(".,;:!?")
_DEGREE_SPLIT = re.compile(r"^([+\-±]?\d+(?:[.,]\d+)*)(°.*)$")


def _peel(chunk: str) -> list[str]:
    lead: list[str] = []
    trail: list[str] = []
    changed = True
    while chunk and changed:
        changed = False
        last = chunk[-1]
        if len(chunk) > 1:
            unbalanced = last in _CLOSERS and chunk.count(_CLOSERS[last]) < chunk.count(last)
            if last in _TRAILING or last in _QUOTES or unbalanced:
                trail.append(last)
                chunk = chunk[:-1]
                changed = True
        if len(chunk) > 1:
            first = chunk[0]
            if first in _QUOTES:
                lead.append(first)
                chunk = chunk[1:]
                changed = True
            elif first in _OPENERS and chunk.count(first) > chunk.count(_OPENERS[first]):
                lead.append(first)
                chunk = chunk[1:]
                changed = True
    core: list[str] = []
    if chunk:
        m = _DEGREE_SPLIT.match(chunk)
        core = [m.group(1), m.group(2)] if m else [chunk]
    return lead + core + trail[::-1]


def tokenize(text: str) -> list[str]:
    """Split text on whitespace, then peel punctuation off chunk edges.

    Brackets are only peeled when unbalanced within the chunk, so ring-locant
    chemical names such as ``7H-pyrrolo[2,3-d]pyrimidin-6-yl`` survive as one
    token.  A number glued to a degree sign is split (``25°C`` -> ``25``,
    ``°C``).
    """
    tokens: list[str] = []
    for chunk in unicodedata.normalize("NFC", text).split():
        tokens.extend(_peel(chunk))
    return tokens


# ---------------------------------------------------------------------------
# Normalization

_NUMBER = re.compile(
    r"[+\-±]?(?:\d+(?:[.,]\d+)*|[.,]\d+)"
    r"(?:[\-–](?:\d+(?:[.,]\d+)*))?"
    r"(?:%|(?::\d+(?:[.,]\d+)*)+)?"
)
_DOUBLED = re.compile(r"([b-df-hj-np-tv-z])\1$")


def is_number(token: str) -> bool:
    return _NUMBER.fullmatch(token) is not None


def is_punctuation(token: str) -> bool:
    return bool(token) and all(unicodedata.category(c)[0] in "PS" for c in token)


def _undouble(stem: str) -> str:
    if _DOUBLED.search(stem) and stem[-1] not in "lsz":
        return stem[:-1]
    return stem


def suffix_lemma(word: str) -> str:
    """Fallback lemmatizer used for words missing from the lemma table."""
    if len(word) <= 3 or not word.isalpha():
        return word
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("ied") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith(("ches", "shes", "xes", "zes")):
        return word[:-2]
    if word.endswith(("ss", "us", "is")):
        return word
    if word.endswith("s"):
        return word[:-1]
    if word.endswith("ed") and len(word) > 4:
        stem = word[:-2]
        if any(c in "aeiouy" for c in stem):
            return _undouble(stem)
        return word
    if word.endswith("ing") and len(word) > 5:
        stem = word[:-3]
        if any(c in "aeiouy" for c in stem):
            return _undouble(stem)
    return word


def _normalize_one(token: str, res: NormResources) -> str | None:
    if token == NUM_TOKEN:
        return token
    if is_number(token):
        return NUM_TOKEN
    if is_punctuation(token):
        return None
    low = token.lower()
    if low in res.stopwords:
        return None
    lemma = res.lemmas.get(low)
    if lemma is None:
        lemma = suffix_lemma(low)
    if not lemma or lemma in res.stopwords:
        return None
    return lemma


def normalize(tokens: Iterable[str], resources: NormResources) -> list[str]:
    """Mask numbers, drop stopwords/punctuation, lowercase and lemmatize.

    Each token is normalized to a fixed point of the single-token rule, which
    makes the whole operation idempotent for any resource tables.
    """
    out: list[str] = []
    for tok in tokens:
        cur: str | None = tok
        for _ in range(8):
            nxt = _normalize_one(cur, resources)
            if nxt is None or nxt == cur:
                cur = nxt
                break
            cur = nxt
        if cur is not None:
            out.append(cur)
    return out


def tokenize_section(section: Section, resources: NormResources, include_heading: bool = False) -> TokenizedSection:
    text = f"{section.heading}\n{section.body}" if include_heading else section.body
    tokens = normalize(tokenize(text), resources)
    return TokenizedSection(section.section_id, tokens, len(tokens), section.heading)


# ---------------------------------------------------------------------------
# Resources and file I/O


def _data_path(name: str):
    return _pkg_resources.files("patentminer").joinpath("data").joinpath(name)


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    text = Path(path).read_text(encoding="utf-8") if path else _data_path("stopwords.txt").read_text(encoding="utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip() and not w.startswith("#"))


def load_lemmas(path: str | Path | None = None) -> dict[str, str]:
    text = Path(path).read_text(encoding="utf-8") if path else _data_path("lemmas.tsv").read_text(encoding="utf-8")
    table: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"lemma table line {lineno}: expected 'surface<TAB>lemma'")
        table[parts[0].strip().lower()] = parts[1].strip().lower()
    return table


def load_resources(stopwords_path=None, lemma_path=None) -> NormResources:
    return NormResources(load_stopwords(stopwords_path), load_lemmas(lemma_path))


def read_documents(path: str | Path) -> list[RawDocument]:
    docs: list[RawDocument] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            obj = json.loads(line)
            doc_id = str(obj.get("doc_id", ""))
            if not doc_id:
                raise ValueError(f"{path}:{lineno}: empty doc_id")
            if doc_id in seen:
                raise ValueError(f"{path}:{lineno}: duplicate doc_id {doc_id!r}")
            seen.add(doc_id)
            docs.append(RawDocument(doc_id, obj.get("body", "") or ""))
    return docs


def write_sections(path: str | Path, sections: Iterable[TokenizedSection]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for s in sections:
            fh.write(json.dumps({"section_id": s.section_id, "heading": s.heading, "tokens": s.tokens},
                                ensure_ascii=False) + "\n")
            n += 1
    return n


def read_sections(path: str | Path) -> Iterator[TokenizedSection]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                toks = list(obj["tokens"])
                yield TokenizedSection(obj["section_id"], toks, len(toks), obj.get("heading", ""))


def write_section_texts(path: str | Path, sections: Iterable[Section]) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for s in sections:
            fh.write(json.dumps({"section_id": s.section_id, "heading": s.heading, "body": s.body},
                                ensure_ascii=False) + "\n")
            n += 1
    return n


def read_section_texts(path: str | Path) -> Iterator[Section]:
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                obj = json.loads(line)
                yield Section(obj["section_id"], obj.get("heading", ""), obj.get("body", ""))
