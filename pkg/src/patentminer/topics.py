"""Latent Dirichlet Allocation trained with online variational Bayes.

The topic-word posterior q(beta | lambda) is updated once per chunk of
documents.  Each update blends the chunk's rescaled sufficient statistics
into lambda with a decaying step size ``(tau0 + t) ** -kappa``.

Held-out scoring and per-document inference use the point estimate
``phi = lambda / lambda.sum(1)`` as topic-word distributions; the
per-document log-likelihood is the variational lower bound given ``phi``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import gammaln, psi

from .vectorize import BowVector, split_shuffle


def asymmetric_alpha(num_topics: int) -> np.ndarray:
    """``alpha_k = 1 / (k + sqrt(K))`` for k = 0..K-1."""
    k = np.arange(num_topics, dtype=np.float64)
    return 1.0 / (k + math.sqrt(num_topics))


@dataclass
class LdaConfig:
    num_topics: int
    alpha: list[float] | None = None
    eta: float | None = None
    passes: int = 1
    inner_iterations: int = 50
    chunk_size: int = 4096
    tau0: float = 1.0
    kappa: float = 0.5
    gamma_tol: float = 1e-3
    shuffle: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.num_topics < 1:
            raise ValueError("num_topics must be >= 1")
        if self.alpha is None:
            self.alpha = asymmetric_alpha(self.num_topics).tolist()
        self.alpha = [float(a) for a in self.alpha]
        if len(self.alpha) != self.num_topics:
            raise ValueError("alpha must have one entry per topic")
        if self.eta is None:
            self.eta = 1.0 / self.num_topics
        if any(a <= 0 for a in self.alpha) or self.eta <= 0:
            raise ValueError("alpha and eta must be positive")
        if self.chunk_size < 1 or self.passes < 1 or self.inner_iterations < 1:
            raise ValueError("chunk_size, passes and inner_iterations must be >= 1")


@dataclass
class LdaModel:
    lam: np.ndarray
    config: LdaConfig
    vocab_hash: str = ""
    updates: int = 0

    @property
    def num_topics(self) -> int:
        return self.lam.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.lam.shape[1]

    @property
    def alpha(self) -> np.ndarray:
        return np.asarray(self.config.alpha, dtype=np.float64)

    @property
    def topic_word(self) -> np.ndarray:
        return self.lam / self.lam.sum(axis=1, keepdims=True)


@dataclass
class DocTopics:
    section_id: str
    gamma: np.ndarray

    @property
    def theta(self) -> np.ndarray:
        return self.gamma / self.gamma.sum()


@dataclass(frozen=True)
class PerplexityReport:
    num_docs: int
    total_words: int
    total_log_likelihood: float
    bound: str = "elbo"

    @property
    def perplexity(self) -> float:
        return math.exp(-self.total_log_likelihood / self.total_words)


@dataclass
class SweepResult:
    table: list[tuple[int, float]]
    best_k: int
    models: dict[int, LdaModel] = field(default_factory=dict, repr=False)


# ---------------------------------------------------------------------------
# Variational pieces


def dirichlet_expectation(a: np.ndarray) -> np.ndarray:
    """E[log x] for x ~ Dir(a), row-wise for 2-D input."""
    if a.ndim == 1:
        return psi(a) - psi(a.sum())
    return psi(a) - psi(a.sum(axis=1, keepdims=True))


def doc_bound(cts: np.ndarray, gamma: np.ndarray, alpha: np.ndarray, log_topics: np.ndarray) -> float:
    """Lower bound on log p(w_d) with word assignments optimized out.

    ``log_topics`` is K x n: log topic-word weights restricted to the
    document's word ids.
    """
    elogtheta = dirichlet_expectation(gamma)
    words = np.logaddexp.reduce(elogtheta[:, None] + log_topics, axis=0)
    score = float(cts @ words)
    score += float(np.sum((alpha - gamma) * elogtheta))
    score += float(np.sum(gammaln(gamma)) - gammaln(gamma.sum()))
    score += float(gammaln(alpha.sum()) - np.sum(gammaln(alpha)))
    return score


def e_step_doc(cts: np.ndarray, topic_cols: np.ndarray, alpha: np.ndarray, max_iter: int, tol: float,
               trace: list | None = None):
    """Coordinate ascent on one document's gamma.

    ``topic_cols`` is K x n, the exponentiated topic-word weights of the
    document's words.  Returns (gamma, exp E[log theta], phinorm).  When
    ``trace`` is a list, the document bound after every gamma update is
    appended to it.
    """
    k = alpha.shape[0]
    gamma = alpha + cts.sum() / k
    exp_elogtheta = np.exp(dirichlet_expectation(gamma))
    phinorm = exp_elogtheta @ topic_cols + 1e-100
    log_cols = np.log(topic_cols) if trace is not None else None
    for _ in range(max_iter):
        last = gamma
        gamma = alpha + exp_elogtheta * ((cts / phinorm) @ topic_cols.T)
        exp_elogtheta = np.exp(dirichlet_expectation(gamma))
        phinorm = exp_elogtheta @ topic_cols + 1e-100
        if trace is not None:
            trace.append(doc_bound(cts, gamma, alpha, log_cols))
        if np.mean(np.abs(gamma - last)) < tol:
            break
    return gamma, exp_elogtheta, phinorm


# ---------------------------------------------------------------------------
# Training


def _check_corpus(corpus: Sequence[BowVector], vocab_size: int) -> None:
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    for doc in corpus:
        if doc.counts and max(doc.counts) >= vocab_size:
            raise ValueError(f"document {doc.section_id!r} has term id >= vocab size {vocab_size}")


def init_model(config: LdaConfig, vocab_size: int, vocab_hash: str = "") -> LdaModel:
    rng = np.random.default_rng(config.seed)
    lam = rng.gamma(100.0, 1.0 / 100.0, (config.num_topics, vocab_size))
    return LdaModel(lam, config, vocab_hash)


def update_chunk(model: LdaModel, chunk: Sequence[BowVector], corpus_size: int) -> None:
    """One E-step over ``chunk`` followed by one online M-step."""
    cfg = model.config
    alpha = model.alpha
    exp_elogbeta = np.exp(dirichlet_expectation(model.lam))
    sstats = np.zeros_like(model.lam)
    for doc in chunk:
        ids, cts = doc.arrays()
        if ids.size == 0:
            continue
        cols = exp_elogbeta[:, ids]
        _, exp_elogtheta, phinorm = e_step_doc(cts, cols, alpha, cfg.inner_iterations, cfg.gamma_tol)
        sstats[:, ids] += np.outer(exp_elogtheta, cts / phinorm)
    sstats *= exp_elogbeta
    rho = (cfg.tau0 + model.updates) ** (-cfg.kappa)
    scale = corpus_size / len(chunk)
    model.lam = (1.0 - rho) * model.lam + rho * (cfg.eta + scale * sstats)
    model.updates += 1


def train_lda(corpus: Sequence[BowVector], config: LdaConfig, vocab_size: int, vocab_hash: str = "",
              callback=None) -> LdaModel:
    """Fit LDA by online variational Bayes.

    With ``config.shuffle`` the document order is re-permuted every pass
    from the seeded generator; otherwise the input order is used.
    ``callback(model, pass_index)`` runs after each pass.
    """
    _check_corpus(corpus, vocab_size)
    model = init_model(config, vocab_size, vocab_hash)
    rng = np.random.default_rng([config.seed, 1])
    docs = list(corpus)
    n = len(docs)
    for p in range(config.passes):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        for start in range(0, n, config.chunk_size):
            chunk = [docs[i] for i in order[start:start + config.chunk_size]]
            update_chunk(model, chunk, n)
        if callback is not None:
            callback(model, p)
    return model


# ---------------------------------------------------------------------------
# Inference and scoring


def _infer(model: LdaModel, doc: BowVector, max_iter: int | None, tol: float | None, trace=None):
    cfg = model.config
    max_iter = max(cfg.inner_iterations, 200) if max_iter is None else max_iter
    tol = cfg.gamma_tol if tol is None else tol
    ids, cts = doc.arrays()
    if ids.size and ids[-1] >= model.vocab_size:
        raise ValueError(f"term id {ids[-1]} out of range for vocabulary of {model.vocab_size}")
    alpha = model.alpha
    if ids.size == 0:
        return alpha.copy(), ids, cts
    cols = model.topic_word[:, ids]
    gamma, _, _ = e_step_doc(cts, cols, alpha, max_iter, tol, trace)
    return gamma, ids, cts


def infer_doc_topics(model: LdaModel, bow: BowVector, max_iter: int | None = None,
                     tol: float | None = None) -> DocTopics:
    gamma, _, _ = _infer(model, bow, max_iter, tol)
    return DocTopics(bow.section_id, gamma)


def perplexity(model: LdaModel, heldout: Sequence[BowVector], max_iter: int | None = None,
               tol: float | None = None) -> PerplexityReport:
    """Held-out perplexity ``exp(-sum log p(w_d) / sum N_d)`` using the per-document bound."""
    phi = model.topic_word
    alpha = model.alpha
    ll = 0.0
    words = 0
    for doc in heldout:
        gamma, ids, cts = _infer(model, doc, max_iter, tol)
        if ids.size == 0:
            continue
        ll += doc_bound(cts, gamma, alpha, np.log(phi[:, ids]))
        words += int(cts.sum())
    if words == 0:
        raise ValueError("held-out set has zero words")
    return PerplexityReport(len(heldout), words, ll)


def top_keywords(model: LdaModel, topic: int, n: int = 10, terms: Sequence[str] | None = None):
    """The ``n`` most probable words of ``topic`` as (term, probability), ties broken by term index."""
    if not 0 <= topic < model.num_topics:
        raise ValueError(f"topic {topic} out of range [0, {model.num_topics})")
    row = model.topic_word[topic]
    order = np.argsort(-row, kind="stable")[:n]
    return [(terms[j] if terms is not None else int(j), float(row[j])) for j in order]


def sweep_topics(corpus: Sequence[BowVector], grid: Sequence[int], base: LdaConfig, vocab_size: int,
                 test_fraction: float = 0.1, split_seed: int | None = None, keep_models: bool = False,
                 vocab_hash: str = "") -> SweepResult:
    """Train one model per topic count on a train split and pick the lowest test perplexity.

    Alpha and eta are reset to their per-K defaults for every grid entry.
    """
    if not grid:
        raise ValueError("empty topic grid")
    seed = base.seed if split_seed is None else split_seed
    train, test = split_shuffle(list(corpus), [1.0 - test_fraction, test_fraction], seed)
    table = []
    models = {}
    for k in grid:
        cfg_kw = asdict(base)
        cfg_kw.update(num_topics=int(k), alpha=None, eta=None)
        cfg = LdaConfig(**cfg_kw)
        model = train_lda(train, cfg, vocab_size, vocab_hash)
        table.append((int(k), perplexity(model, test).perplexity))
        if keep_models:
            models[int(k)] = model
    best = min(table, key=lambda r: r[1])[0]
    return SweepResult(table, best, models)


# ---------------------------------------------------------------------------
# Persistence


def save_model(path: str | Path, model: LdaModel) -> None:
    obj = {"format": "patentminer.lda/1", "config": asdict(model.config), "vocab_size": model.vocab_size,
           "vocab_hash": model.vocab_hash, "updates": model.updates, "lambda": model.lam.tolist()}
    Path(path).write_text(json.dumps(obj), encoding="utf-8")


def load_model(path: str | Path) -> LdaModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    lam = np.asarray(obj["lambda"], dtype=np.float64)
    if lam.shape[1] != obj["vocab_size"]:
        raise ValueError("lambda shape does not match vocab_size")
    return LdaModel(lam, LdaConfig(**obj["config"]), obj.get("vocab_hash", ""), obj.get("updates", 0))


def write_keywords(path: str | Path, model: LdaModel, terms: Sequence[str], n: int = 10) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for k in range(model.num_topics):
            for rank, (term, p) in enumerate(top_keywords(model, k, n, terms), 1):
                fh.write(f"{k}\t{rank}\t{term}\t{p!r}\n")


def write_doc_topics(path: str | Path, docs: Sequence[DocTopics]) -> None:
    """Section id followed by theta, one row per section (TSV)."""
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(d.section_id + "\t" + "\t".join(repr(float(x)) for x in d.theta) + "\n")


def read_doc_topics(path: str | Path) -> tuple[list[str], np.ndarray]:
    ids, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if len(parts) > 1:
                ids.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
    return ids, np.asarray(rows, dtype=np.float64)
