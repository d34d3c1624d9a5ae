"""Command-line pipeline: one subcommand per stage, handing off through files.

Every stage reads its inputs from ``--out-dir`` (or explicit paths) and writes
its outputs there.  Settings come from built-in defaults, then an optional
``--config`` file of ``section.key = value`` lines, then command-line flags.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import cluster, corpus, metrics, topics, vectorize
from ._util import hash_terms
from .iob import ENTITY_CLASSES, decode_entities, label_space
from .ner.model import TaggerConfig

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# ---------------------------------------------------------------------------
# Configuration

DEFAULTS: dict[str, Any] = {
    "seed": 0,
    "corpus.include_heading": False,
    "corpus.heading_max_tokens": 12,
    "vocab.min_doc_freq": 200,
    "vocab.max_doc_fraction": 0.70,
    "vocab.min_chars": 3,
    "vocab.truncate": True,
    "vocab.shards": 1,
    "lda.num_topics": 60,
    "lda.grid": [20, 30, 40, 50, 60, 70, 80],
    "lda.passes": 1,
    "lda.chunk_size": 4096,
    "lda.inner_iterations": 50,
    "lda.tau0": 1.0,
    "lda.kappa": 0.5,
    "lda.shuffle": False,
    "lda.test_fraction": 0.1,
    "keywords.n": 10,
    "kmeans.k": 20,
    "kmeans.grid": list(range(5, 61)),
    "kmeans.batch_size": 4096,
    "kmeans.max_iters": 100,
    "kmeans.transform": "l2",
    "kmeans.sample_size": 10000,
    "kmeans.replicates": 6,
    "kmeans.criterion": "davies_bouldin",
    "ner.split": [0.8, 0.1, 0.1],
    "ner.strict": False,
}
DEFAULTS.update({f"ner.{f.name}": f.default for f in dataclasses.fields(TaggerConfig)
                 if f.name not in ("seed", "strict")})


def parse_value(text: str, like: Any) -> Any:
    """Coerce ``text`` to the type of the default value ``like``."""
    text = text.strip()
    try:
        if isinstance(like, bool):
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
        if isinstance(like, list):
            item = like[0] if like else 0.0
            return [parse_value(x, item) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad value {text!r} (expected {type(like).__name__})") from None
    return text


def read_config(path: str | Path) -> dict[str, Any]:
    """Parse a flat ``section.key = value`` file; ``#`` starts a comment."""
    out: dict[str, Any] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        if key.startswith("paths."):
            out[key] = value.strip()
        elif key in DEFAULTS:
            out[key] = parse_value(value, DEFAULTS[key])
        else:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
    return out


@dataclasses.dataclass
class Context:
    settings: dict[str, Any]
    out_dir: Path
    summary: dict[str, Any] = dataclasses.field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.settings[key]

    @property
    def seed(self) -> int:
        return int(self.settings["seed"])

    def input(self, key: str, default_name: str) -> Path:
        """Resolve an input path and fail with the offending path if it is absent."""
        value = self.settings.get(key) or self.settings.get(f"paths.{key}")
        path = Path(value) if value else self.out_dir / default_name
        if not path.exists():
            raise DataError(f"missing input: {path}")
        return path

    def output(self, name: str) -> Path:
        self.summary.setdefault("outputs", []).append(name)
        return self.out_dir / name


# ---------------------------------------------------------------------------
# Stage helpers


def _load_vocab(ctx: Context) -> vectorize.Vocabulary:
    return vectorize.read_vocabulary(ctx.input("vocab", "vocab.tsv"))


def _load_bow(ctx: Context) -> list[vectorize.BowVector]:
    return list(vectorize.read_bow(ctx.input("bow", "bow.jsonl")))


def _lda_config(ctx: Context, num_topics: int) -> topics.LdaConfig:
    return topics.LdaConfig(num_topics=num_topics, passes=ctx["lda.passes"], chunk_size=ctx["lda.chunk_size"],
                            inner_iterations=ctx["lda.inner_iterations"], tau0=ctx["lda.tau0"],
                            kappa=ctx["lda.kappa"], shuffle=ctx["lda.shuffle"], seed=ctx.seed)


def _load_thetas(ctx: Context) -> tuple[list[str], np.ndarray]:
    ids, thetas = topics.read_doc_topics(ctx.input("doc_topics", "doc_topics.tsv"))
    if not ids:
        raise DataError("doc_topics table is empty")
    return ids, thetas


def _tagger_config(ctx: Context) -> TaggerConfig:
    kw = {f.name: ctx[f"ner.{f.name}"] for f in dataclasses.fields(TaggerConfig) if f.name != "seed"}
    return TaggerConfig(**kw, seed=ctx.seed)


def _read_any_annotations(path: Path):
    """Load annotations against the default classes, or against the classes present in the file."""
    from .ner.data import clean_sentences, read_annotations

    labels = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if len(parts) == 2:
                labels.add(parts[1])
    classes = sorted({lab[2:] for lab in labels if lab[:2] in ("B-", "I-")})
    if set(classes) <= set(ENTITY_CLASSES):
        classes = list(ENTITY_CLASSES)
    bad = sorted(labels - set(label_space(classes)))
    if bad:
        raise DataError(f"{path}: malformed label(s) {bad[:3]}")
    sentences, stats = clean_sentences(read_annotations(path, classes))
    return sentences, stats, classes


# ---------------------------------------------------------------------------
# Subcommands


def cmd_ingest(ctx: Context) -> str:
    docs = corpus.read_documents(ctx.input("input", "documents.jsonl"))
    rules = corpus.HeadingConfig(max_tokens=ctx["corpus.heading_max_tokens"])
    res = corpus.load_resources(ctx.settings.get("paths.stopwords"), ctx.settings.get("paths.lemmas"))
    sections = [s for d in docs for s in corpus.segment_sections(d, rules)]
    tokenized = [corpus.tokenize_section(s, res, ctx["corpus.include_heading"]) for s in sections]
    corpus.write_section_texts(ctx.output("section_texts.jsonl"), sections)
    corpus.write_sections(ctx.output("sections.jsonl"), tokenized)
    ctx.summary.update(documents=len(docs), sections=len(sections))
    return f"{len(docs)} documents -> {len(sections)} sections"


def cmd_build_vocab(ctx: Context) -> str:
    sections = list(corpus.read_sections(ctx.input("sections", "sections.jsonl")))
    if not sections:
        raise DataError("no sections to build a vocabulary from")
    criteria = vectorize.VocabCriteria(ctx["vocab.min_doc_freq"], ctx["vocab.max_doc_fraction"],
                                       ctx["vocab.min_chars"])
    policy = vectorize.compute_truncation([s.raw_len for s in sections]) if ctx["vocab.truncate"] else None
    streams = [s.tokens[:max(policy.max_tokens, 0)] if policy else s.tokens for s in sections]
    vocab = vectorize.build_vocabulary(streams, criteria, shards=ctx["vocab.shards"])
    if len(vocab) == 0:
        raise DataError("vocabulary is empty under the configured criteria")
    vectorize.write_vocabulary(ctx.output("vocab.tsv"), vocab)
    trunc = dataclasses.asdict(policy) if policy else None
    ctx.output("truncation.json").write_text(json.dumps(trunc, sort_keys=True) + "\n", encoding="utf-8")
    ctx.summary.update(terms=len(vocab), sections=len(sections),
                       max_tokens=policy.max_tokens if policy else None)
    return f"{len(vocab)} terms from {len(sections)} sections" + (
        f", truncation at {policy.max_tokens} tokens" if policy else "")


def cmd_vectorize(ctx: Context) -> str:
    vocab = _load_vocab(ctx)
    trunc = json.loads(ctx.input("truncation", "truncation.json").read_text(encoding="utf-8"))
    policy = vectorize.TruncationPolicy(**trunc) if trunc else None
    bows = [vectorize.vectorize(s, vocab, policy) for s in corpus.read_sections(ctx.input("sections", "sections.jsonl"))]
    vectorize.write_bow(ctx.output("bow.jsonl"), bows)
    empty = sum(1 for b in bows if not b.counts)
    ctx.summary.update(vectors=len(bows), empty=empty)
    return f"{len(bows)} vectors over {len(vocab)} terms ({empty} empty)"


def cmd_train_lda(ctx: Context) -> str:
    vocab, bows = _load_vocab(ctx), _load_bow(ctx)
    model = topics.train_lda(bows, _lda_config(ctx, ctx["lda.num_topics"]), len(vocab), hash_terms(vocab.terms))
    topics.save_model(ctx.output("lda.json"), model)
    docs = [topics.infer_doc_topics(model, b) for b in bows]
    topics.write_doc_topics(ctx.output("doc_topics.tsv"), docs)
    rep = topics.perplexity(model, bows)
    ctx.summary.update(num_topics=model.num_topics, train_perplexity=rep.perplexity, bound=rep.bound)
    return f"K={model.num_topics}, training perplexity {rep.perplexity:.4f} ({rep.bound} bound)"


def cmd_sweep_topics(ctx: Context) -> str:
    vocab, bows = _load_vocab(ctx), _load_bow(ctx)
    res = topics.sweep_topics(bows, ctx["lda.grid"], _lda_config(ctx, 1), len(vocab),
                              test_fraction=ctx["lda.test_fraction"], vocab_hash=hash_terms(vocab.terms))
    with open(ctx.output("topic_sweep.tsv"), "w", encoding="utf-8") as fh:
        fh.write("K\tperplexity\n")
        for k, p in res.table:
            fh.write(f"{k}\t{p!r}\n")
    ctx.summary.update(table=[[k, p] for k, p in res.table], best_k=res.best_k)
    return f"best K={res.best_k} over grid {[k for k, _ in res.table]}"


def cmd_keywords(ctx: Context) -> str:
    vocab = _load_vocab(ctx)
    model = topics.load_model(ctx.input("lda", "lda.json"))
    if model.vocab_hash and model.vocab_hash != hash_terms(vocab.terms):
        raise DataError("LDA model was trained on a different vocabulary")
    topics.write_keywords(ctx.output("keywords.tsv"), model, vocab.terms, ctx["keywords.n"])
    ctx.summary.update(num_topics=model.num_topics, n=ctx["keywords.n"])
    return f"top {ctx['keywords.n']} keywords for {model.num_topics} topics"


def cmd_train_kmeans(ctx: Context) -> str:
    ids, thetas = _load_thetas(ctx)
    t = cluster.Transform(ctx["kmeans.transform"])
    data = cluster.apply_transform(thetas, t)
    model = cluster.train_minibatch_kmeans(data, ctx["kmeans.k"], ctx["kmeans.batch_size"], ctx["kmeans.max_iters"],
                                           ctx.seed, transform=t)
    cluster.save_model(ctx.output("kmeans.json"), model)
    cluster.write_assignments(ctx.output("assignments.tsv"), ids, cluster.assign_all(model.centroids, data))
    rep = cluster.quality_report(model, data, ctx["kmeans.sample_size"], ctx["kmeans.replicates"], ctx.seed)
    cluster.write_quality(ctx.output("cluster_quality.tsv"), [rep])
    ctx.summary.update(k=model.k, davies_bouldin=rep.davies_bouldin, silhouette=rep.silhouette_mean)
    return f"k={model.k}, DB {rep.davies_bouldin:.4f}, silhouette {rep.silhouette_mean:.4f}"


def cmd_sweep_clusters(ctx: Context) -> str:
    ids, thetas = _load_thetas(ctx)
    t = cluster.Transform(ctx["kmeans.transform"])
    grid = [k for k in ctx["kmeans.grid"] if 2 <= k <= len(ids)]
    if not grid:
        raise DataError(f"no k in the grid fits {len(ids)} sections")
    res = cluster.sweep_clusters(cluster.apply_transform(thetas, t), grid, ctx["kmeans.batch_size"],
                                 ctx["kmeans.max_iters"], ctx.seed, ctx["kmeans.sample_size"],
                                 ctx["kmeans.replicates"], ctx["kmeans.criterion"], t)
    cluster.write_quality(ctx.output("cluster_sweep.tsv"), res.reports)
    ctx.summary.update(selected_k=res.selected_k, criterion=ctx["kmeans.criterion"])
    return f"selected k={res.selected_k} by {ctx['kmeans.criterion']} over {len(grid)} values"


def cmd_assign(ctx: Context) -> str:
    model = cluster.load_model(ctx.input("kmeans", "kmeans.json"))
    ids, thetas = _load_thetas(ctx)
    if thetas.shape[1] != model.centroids.shape[1]:
        raise DataError(f"doc_topics has {thetas.shape[1]} topics, model expects {model.centroids.shape[1]}")
    labels = cluster.assign_all(model.centroids, cluster.apply_transform(thetas, model.transform))
    cluster.write_assignments(ctx.output("assignments.tsv"), ids, labels)
    ctx.summary.update(sections=len(ids), k=model.k)
    return f"{len(ids)} sections assigned to {len(set(labels.tolist()))} of {model.k} clusters"


def cmd_label_template(ctx: Context) -> str:
    km = cluster.load_model(ctx.input("kmeans", "kmeans.json"))
    lda = topics.load_model(ctx.input("lda", "lda.json"))
    vocab = _load_vocab(ctx)
    n = ctx["keywords.n"]
    with open(ctx.output("labels_template.tsv"), "w", encoding="utf-8") as fh:
        fh.write("# cluster_id\tdominant_topic\tlabel\trelevant(0/1); edit label and relevant columns\n")
        for c in range(km.k):
            topic = cluster.dominant_topic(km, c)
            words = [w for w, _ in topics.top_keywords(lda, topic, n, vocab.terms)]
            fh.write(f"# cluster {c} topic {topic}: {' '.join(words)}\n")
            fh.write(f"{c}\t{topic}\t{' '.join(words[:3])}\t0\n")
    ctx.summary.update(clusters=km.k)
    return f"template for {km.k} clusters"


def cmd_filter_sections(ctx: Context) -> str:
    assignments = cluster.read_assignments(ctx.input("assignments", "assignments.tsv"))
    labels = cluster.read_labels(ctx.input("labels", "labels.tsv"))
    keep, counts = cluster.filter_relevant(assignments, labels)
    keep_set = set(keep)
    texts = [s for s in corpus.read_section_texts(ctx.input("section_texts", "section_texts.jsonl"))
             if s.section_id in keep_set]
    corpus.write_section_texts(ctx.output("relevant_sections.jsonl"), texts)
    ctx.summary.update(input_sections=len(assignments), kept=len(texts), cluster_counts=counts)
    return f"kept {len(texts)} of {len(assignments)} sections"


def cmd_ner_train(ctx: Context) -> str:
    import torch

    from .ner.data import write_annotations
    from .ner.tagger import save_tagger, train_tagger

    torch.manual_seed(ctx.seed)
    if ctx.settings.get("train"):
        train, _, classes = _read_any_annotations(ctx.input("train", ""))
        dev, _, _ = _read_any_annotations(ctx.input("dev", ""))
    else:
        sentences, _, classes = _read_any_annotations(ctx.input("annotations", "annotations.tsv"))
        parts = vectorize.split_shuffle(sentences, ctx["ner.split"], ctx.seed)
        if len(parts) != 3:
            raise UsageError("ner.split needs three fractions (train, dev, test)")
        train, dev, test = parts
        for name, part in zip(("ner_train.tsv", "ner_dev.tsv", "ner_test.tsv"), parts):
            write_annotations(ctx.output(name), part)
    if not train or not dev:
        raise DataError("train and dev splits must be non-empty")
    config = _tagger_config(ctx)
    emb = ctx.settings.get("embeddings") or ctx.settings.get("paths.embeddings")
    if emb and not Path(emb).exists():
        raise DataError(f"missing input: {emb}")
    result = train_tagger(train, dev, config, classes, embeddings_path=emb)
    save_tagger(ctx.output("tagger.json"), result.model)
    with open(ctx.output("ner_history.tsv"), "w", encoding="utf-8") as fh:
        fh.write("epoch\tloss\tdev_f1\n")
        for h in result.history:
            fh.write(f"{h.epoch}\t{h.loss!r}\t{h.dev_f1!r}\n")
    ctx.summary.update(train=len(train), dev=len(dev), best_epoch=result.best_epoch, best_dev_f1=result.best_dev_f1)
    return f"best dev token F1 {result.best_dev_f1:.4f} at epoch {result.best_epoch} of {len(result.history)}"


def cmd_ner_tag(ctx: Context) -> str:
    from .ner.data import split_sentences
    from .ner.tagger import load_tagger, predict, write_tagging

    model = load_tagger(ctx.input("model", "tagger.json"))
    ids, sents = [], []
    for sec in corpus.read_section_texts(ctx.input("input", "relevant_sections.jsonl")):
        for s in split_sentences(sec.body):
            ids.append(sec.section_id)
            sents.append(s)
    labels = predict(model, sents, strict=ctx["ner.strict"]) if sents else []
    write_tagging(ctx.output("tagging.jsonl"), sents, labels, ids)
    n_ent = sum(1 for labs in labels for lab in labs if lab.startswith("B-"))
    ctx.summary.update(sentences=len(sents), entities=n_ent)
    return f"tagged {len(sents)} sentences from {len(set(ids))} sections, {n_ent} entities opened"


def cmd_ner_eval(ctx: Context) -> str:
    from .ner.tagger import load_tagger, predict

    model = load_tagger(ctx.input("model", "tagger.json"))
    sents, _, _ = _read_any_annotations(ctx.input("annotations", "ner_test.tsv"))
    if not sents:
        raise DataError("no sentences to evaluate")
    classes = [lab[2:] for lab in model.labels if lab.startswith("B-")]
    pred = predict(model, [list(s.tokens) for s in sents], strict=ctx["ner.strict"])
    gold = [list(s.labels) for s in sents]
    tok, cm = metrics.token_prf(pred, gold, classes)
    ent = metrics.entity_prf([decode_entities(s.tokens, p) for s, p in zip(sents, pred)],
                             [decode_entities(s.tokens, s.labels) for s in sents], classes)
    metrics.write_prf(ctx.output("ner_token_prf.tsv"), tok)
    metrics.write_prf(ctx.output("ner_entity_prf.tsv"), ent)
    metrics.write_confusion(ctx.output("ner_confusion.tsv"), cm)
    ctx.summary.update(sentences=len(sents), token_f1=tok.f1, entity_f1=ent.f1)
    return f"token micro-F1 {tok.f1:.4f}, entity micro-F1 {ent.f1:.4f} on {len(sents)} sentences"


def _read_columns(path: Path, ncols: int) -> list[list[str]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != ncols:
                raise DataError(f"{path}:{lineno}: expected {ncols} tab-separated columns")
            rows.append(parts)
    return rows


def cmd_agreement(ctx: Context) -> str:
    # relevance file: item, model flag, manual flag; scores file: cluster id, score in {0, 0.5, 1}
    rel = _read_columns(ctx.input("relevance", "relevance_ratings.tsv"), 3)
    scores = _read_columns(ctx.input("scores", "label_scores.tsv"), 2)
    try:
        rep = metrics.agreement_report([int(r[1]) for r in rel], [int(r[2]) for r in rel],
                                       [float(s[1]) for s in scores])
    except ValueError as exc:
        raise DataError(str(exc)) from None
    with open(ctx.output("agreement.tsv"), "w", encoding="utf-8") as fh:
        fh.write("kappa\tpct_agreement_worst\tpct_agreement_best\n")
        fh.write(f"{rep.kappa!r}\t{rep.pct_agreement_worst!r}\t{rep.pct_agreement_best!r}\n")
    ctx.summary.update(kappa=rep.kappa, worst=rep.pct_agreement_worst, best=rep.pct_agreement_best)
    return f"kappa {rep.kappa:.4f}, agreement {rep.pct_agreement_worst:.1%} to {rep.pct_agreement_best:.1%}"


# ---------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


_PATH_FLAGS = {
    "input": "input file", "sections": "tokenized sections", "vocab": "vocabulary TSV", "bow": "bag-of-words",
    "truncation": "truncation JSON", "lda": "LDA model", "doc_topics": "document-topic TSV",
    "kmeans": "k-means model", "assignments": "assignment TSV", "labels": "edited cluster labels",
    "section_texts": "section texts", "annotations": "IOB annotation TSV", "train": "training annotations",
    "dev": "dev annotations", "model": "tagger checkpoint", "embeddings": "word vector file",
    "relevance": "relevance ratings TSV", "scores": "label scores TSV",
}

# name -> (handler, path flags, (flag, settings key) overrides)
_COMMANDS: dict[str, tuple[Callable[[Context], str], list[str], list[tuple[str, str]]]] = {
    "ingest": (cmd_ingest, ["input"], [("--include-heading", "corpus.include_heading")]),
    "build-vocab": (cmd_build_vocab, ["sections"], [("--min-doc-freq", "vocab.min_doc_freq"),
                                                    ("--max-doc-fraction", "vocab.max_doc_fraction"),
                                                    ("--shards", "vocab.shards")]),
    "vectorize": (cmd_vectorize, ["sections", "vocab", "truncation"], []),
    "train-lda": (cmd_train_lda, ["vocab", "bow"], [("--num-topics", "lda.num_topics"), ("--passes", "lda.passes")]),
    "sweep-topics": (cmd_sweep_topics, ["vocab", "bow"], [("--grid", "lda.grid"), ("--passes", "lda.passes")]),
    "keywords": (cmd_keywords, ["vocab", "lda"], [("--n", "keywords.n")]),
    "train-kmeans": (cmd_train_kmeans, ["doc_topics"], [("--k", "kmeans.k"), ("--transform", "kmeans.transform")]),
    "sweep-clusters": (cmd_sweep_clusters, ["doc_topics"], [("--grid", "kmeans.grid"),
                                                            ("--transform", "kmeans.transform"),
                                                            ("--criterion", "kmeans.criterion")]),
    "assign": (cmd_assign, ["kmeans", "doc_topics"], []),
    "label-template": (cmd_label_template, ["kmeans", "lda", "vocab"], [("--n", "keywords.n")]),
    "filter-sections": (cmd_filter_sections, ["assignments", "labels", "section_texts"], []),
    "ner-train": (cmd_ner_train, ["annotations", "train", "dev", "embeddings"],
                  [("--max-epochs", "ner.max_epochs"), ("--hidden-size", "ner.hidden_size"),
                   ("--dropout", "ner.dropout"), ("--use-conv", "ner.use_conv"), ("--use-char", "ner.use_char"),
                   ("--use-attention", "ner.use_attention"), ("--word-dim", "ner.word_dim")]),
    "ner-tag": (cmd_ner_tag, ["model", "input"], [("--strict", "ner.strict")]),
    "ner-eval": (cmd_ner_eval, ["model", "annotations"], [("--strict", "ner.strict")]),
    "agreement": (cmd_agreement, ["relevance", "scores"], []),
}


_HELP = {
    "ingest": "segment documents into sections and normalize tokens",
    "build-vocab": "compute truncation and the filtered vocabulary",
    "vectorize": "bag-of-words vectors for every section",
    "train-lda": "fit LDA and infer document-topic vectors",
    "sweep-topics": "held-out perplexity over a topic-count grid",
    "keywords": "top keywords per topic",
    "train-kmeans": "cluster document-topic vectors",
    "sweep-clusters": "Davies-Bouldin and silhouette over a k grid",
    "assign": "assign sections to clusters of a saved model",
    "label-template": "editable cluster label file with keywords",
    "filter-sections": "keep sections of clusters marked relevant",
    "ner-train": "train the CRF tagger",
    "ner-tag": "tag sentences of relevant sections",
    "ner-eval": "token and entity scores plus confusion matrix",
    "agreement": "Cohen's kappa and percentage agreement",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="patentminer", description="Patent manufacturing text-mining pipeline.")
    parser.add_argument("--config", help="flat 'section.key = value' settings file")
    parser.add_argument("--seed", type=int, help="seed for every stochastic stage")
    parser.add_argument("--threads", type=int, default=1, help="torch intra-op threads (1 keeps runs reproducible)")
    parser.add_argument("--out-dir", default=".", help="directory for stage inputs and outputs")
    parser.add_argument("--json-summary", action="store_true", help="print the summary as one JSON object")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    for name, (_, paths, options) in _COMMANDS.items():
        p = sub.add_parser(name, help=_HELP[name])
        for key in paths:
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, help=_PATH_FLAGS[key])
        for flag, key in options:
            like = DEFAULTS[key]
            if isinstance(like, bool):
                p.add_argument(flag, dest=key, action="store_const", const=True)
            else:
                p.add_argument(flag, dest=key, help=f"overrides {key}")
    return parser


def _settings(args: argparse.Namespace) -> dict[str, Any]:
    settings = dict(DEFAULTS)
    if args.config:
        if not Path(args.config).exists():
            raise DataError(f"missing input: {args.config}")
        settings.update(read_config(args.config))
    _, paths, options = _COMMANDS[args.command]
    for key in paths:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    for _, key in options:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value if isinstance(value, bool) else parse_value(value, DEFAULTS[key])
    if args.seed is not None:
        settings["seed"] = args.seed
    return settings


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError("a subcommand is required")
        settings = _settings(args)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        if args.command.startswith("ner-"):
            import torch

            torch.set_num_threads(args.threads)
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        ctx = Context(settings, out_dir, {"command": args.command})
        line = _COMMANDS[args.command][0](ctx)
    except UsageError as exc:
        print(f"patentminer: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"patentminer: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    if args.json_summary:
        ctx.summary["message"] = line
        print(json.dumps(ctx.summary, sort_keys=True, default=str))
    else:
        print(f"{args.command}: {line}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
