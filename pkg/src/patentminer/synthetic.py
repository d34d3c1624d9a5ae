"""Synthetic corpora with known structure, used by tests and demos."""

from __future__ import annotations

import numpy as np

from .vectorize import BowVector


def planted_topics(num_topics: int = 3, vocab_size: int = 300, seed: int = 0) -> np.ndarray:
    """Topic-word matrix whose rows have disjoint, equal-size supports."""
    rng = np.random.default_rng(seed)
    width = vocab_size // num_topics
    phi = np.zeros((num_topics, vocab_size))
    for k in range(num_topics):
        w = rng.dirichlet(np.full(width, 1.0))
        phi[k, k * width:(k + 1) * width] = w
    return phi


def lda_corpus(phi: np.ndarray, num_docs: int = 3000, mean_len: int = 60, doc_alpha: float = 0.1,
               seed: int = 0) -> list[BowVector]:
    """Documents drawn from the LDA generative process with fixed topics ``phi``."""
    rng = np.random.default_rng(seed)
    k, v = phi.shape
    docs = []
    for d in range(num_docs):
        theta = rng.dirichlet(np.full(k, doc_alpha))
        n = max(1, rng.poisson(mean_len))
        counts = rng.multinomial(n, theta @ phi)
        nz = np.flatnonzero(counts)
        docs.append(BowVector(f"doc{d}", {int(j): int(counts[j]) for j in nz}))
    return docs


def gaussian_blobs(centers: np.ndarray, n_per: int, spread: float, seed: int = 0):
    rng = np.random.default_rng(seed)
    centers = np.asarray(centers, dtype=np.float64)
    pts = np.concatenate([c + spread * rng.standard_normal((n_per, centers.shape[1])) for c in centers])
    labels = np.repeat(np.arange(len(centers)), n_per)
    return pts, labels


# ---------------------------------------------------------------------------
# Template-grammar NER corpus

NER_LEXICON = {
    "OPERATION": [["stirred"], ["filtered"], ["dried"], ["spray", "dried"], ["granulated"], ["milled"],
                  ["heated"], ["cooled"], ["concentrated"], ["blended"], ["compressed"], ["washed"]],
    "AMOUNT": [["25", "mg"], ["0.5", "g"], ["10", "mL"], ["2", "mmol"], ["100", "mg"], ["1.2", "kg"],
               ["50", "mL"], ["3", "equivalents"]],
    "SOLVENT": [["ethanol"], ["methanol"], ["water"], ["acetone"], ["dichloromethane"], ["ethyl", "acetate"],
                ["toluene"], ["THF"], ["isopropanol"]],
    "API": [["ibuprofen"], ["paracetamol"], ["metformin"], ["atorvastatin"], ["compound", "A"],
            ["sildenafil", "citrate"], ["imatinib"], ["omeprazole"]],
    "CONDITION": [["room", "temperature"], ["80", "°C"], ["reflux"], ["2", "hours"], ["overnight"],
                  ["reduced", "pressure"], ["nitrogen", "atmosphere"], ["30", "minutes"]],
}

_TEMPLATES = [
    "the {API} was {OPERATION} in {AMOUNT} of {SOLVENT} at {CONDITION} .",
    "{AMOUNT} of {API} was dissolved in {SOLVENT} and {OPERATION} for {CONDITION} .",
    "the mixture was {OPERATION} under {CONDITION} .",
    "{SOLVENT} ( {AMOUNT} ) was added and the solution was {OPERATION} .",
    "after {CONDITION} the solid {API} was {OPERATION} with {SOLVENT} .",
    "then {AMOUNT} of {SOLVENT} was added to the {API} .",
    "the resulting product was {OPERATION} at {CONDITION} to give {API} .",
    "a suspension of {API} in {SOLVENT} was {OPERATION} .",
]


def ner_corpus(num_sentences: int = 1000, seed: int = 0):
    """Sentences from fixed templates with entity slots filled from disjoint lexicons."""
    from .ner.data import AnnotatedSentence

    rng = np.random.default_rng(seed)
    out = []
    for _ in range(num_sentences):
        template = _TEMPLATES[rng.integers(len(_TEMPLATES))]
        toks, labs = [], []
        for piece in template.split():
            if piece.startswith("{") and piece.endswith("}"):
                cls = piece[1:-1]
                options = NER_LEXICON[cls]
                words = options[rng.integers(len(options))]
                toks += words
                labs += [f"B-{cls}"] + [f"I-{cls}"] * (len(words) - 1)
            else:
                toks.append(piece)
                labs.append("O")
        out.append(AnnotatedSentence(tuple(toks), tuple(labs)))
    return out


# ---------------------------------------------------------------------------
# End-to-end pipeline fixture

FIXTURE_TOPICS = {
    "formulation": ("tablet granule excipient lactose binder compression coating capsule disintegrant "
                    "lubricant stearate hardness friability povidone cellulose").split(),
    "synthesis": ("reaction intermediate catalyst crystallization distillation reagent precipitate "
                  "chromatography hydrolysis ester amide coupling workup filtrate residue").split(),
    "pharmacology": ("receptor binding assay inhibition patient clinical plasma efficacy placebo "
                     "subjects exposure potency enzyme serum response").split(),
    "background": ("invention embodiment claim disclosure herein aspect prior object skilled "
                   "variations scope modifications apparent described field").split(),
}
RELEVANT_TOPICS = ("formulation", "synthesis")
_FILLER_GLUE = ["the", "of", "and", "with", "for", "was", "were", "a", "in"]


def _filler_sentence(rng: np.random.Generator, words: list[str]) -> tuple[list[str], list[str]]:
    n = int(rng.integers(6, 11))
    toks = []
    for i in range(n):
        pool = words if i % 2 else _FILLER_GLUE
        toks.append(pool[rng.integers(len(pool))])
    toks.append(".")
    return toks, ["O"] * len(toks)


def _template_sentence(rng: np.random.Generator) -> tuple[list[str], list[str]]:
    template = _TEMPLATES[rng.integers(len(_TEMPLATES))]
    toks, labs = [], []
    for piece in template.split():
        if piece.startswith("{") and piece.endswith("}"):
            cls = piece[1:-1]
            words = NER_LEXICON[cls][rng.integers(len(NER_LEXICON[cls]))]
            toks += words
            labs += [f"B-{cls}"] + [f"I-{cls}"] * (len(words) - 1)
        else:
            toks.append(piece)
            labs.append("O")
    return toks, labs


def fixture_sentences(rng: np.random.Generator, topic: str, count: int):
    """Sentences of one section: template sentences (with entities) only in relevant topics."""
    out = []
    for _ in range(count):
        if topic in RELEVANT_TOPICS and rng.random() < 0.5:
            out.append(_template_sentence(rng))
        else:
            out.append(_filler_sentence(rng, FIXTURE_TOPICS[topic]))
    return out


def pipeline_fixture(num_docs: int = 200, num_annotated: int = 600, seed: int = 0):
    """Documents with "EXAMPLE n" sections, each drawn from one topic.

    Returns ``(documents, truth, annotations)``: documents as dicts with
    ``doc_id`` and ``body``; truth maps section id to ``(topic, sentences)``
    with gold labels; annotations is a separate labelled set drawn from
    the relevant topics.
    """
    from .ner.data import AnnotatedSentence

    rng = np.random.default_rng(seed)
    names = sorted(FIXTURE_TOPICS)
    docs, truth = [], {}
    for d in range(num_docs):
        doc_id = f"US{1000000 + d}"
        lines = []
        for s in range(int(rng.integers(3, 6))):
            topic = names[rng.integers(len(names))]
            sents = fixture_sentences(rng, topic, int(rng.integers(4, 9)))
            lines.append(f"EXAMPLE {s + 1}")
            lines.append(" ".join(" ".join(t) for t, _ in sents))
            truth[f"{doc_id}#{s}"] = (topic, sents)
        docs.append({"doc_id": doc_id, "body": "\n".join(lines)})
    annotations = []
    while len(annotations) < num_annotated:
        # annotators only see sections that survived relevance filtering
        topic = RELEVANT_TOPICS[rng.integers(len(RELEVANT_TOPICS))]
        for toks, labs in fixture_sentences(rng, topic, 1):
            annotations.append(AnnotatedSentence(tuple(toks), tuple(labs)))
    return docs, truth, annotations


def write_pipeline_fixture(out_dir, num_docs: int = 200, num_annotated: int = 600, seed: int = 0) -> None:
    """Write documents.jsonl, annotations.tsv and truth.jsonl into ``out_dir``."""
    import json
    from pathlib import Path

    from .ner.data import write_annotations

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    docs, truth, annotations = pipeline_fixture(num_docs, num_annotated, seed)
    with open(out / "documents.jsonl", "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps(d, ensure_ascii=False) + "\n")
    with open(out / "truth.jsonl", "w", encoding="utf-8") as fh:
        for sid, (topic, sents) in truth.items():
            fh.write(json.dumps({"section_id": sid, "topic": topic,
                                 "sentences": [{"tokens": t, "labels": l} for t, l in sents]},
                                ensure_ascii=False) + "\n")
    write_annotations(out / "annotations.tsv", annotations)


if __name__ == "__main__":
    import sys

    write_pipeline_fixture(sys.argv[1] if len(sys.argv) > 1 else "fixture")
