import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from patentminer.synthetic import lda_corpus, planted_topics
from patentminer.topics import (
    LdaConfig,
    LdaModel,
    asymmetric_alpha,
    e_step_doc,
    infer_doc_topics,
    load_model,
    perplexity,
    save_model,
    sweep_topics,
    top_keywords,
    train_lda,
    write_keywords,
)
from patentminer.vectorize import BowVector


def best_matching_cosines(est, true):
    """Brute force over all topic matchings; returns the per-topic cosines of the best one."""
    def cos(a, b):
        return a @ b / (np.linalg.norm(a) * np.linalg.norm(b))
    k = true.shape[0]
    best = None
    for perm in itertools.permutations(range(est.shape[0]), k):
        sims = [cos(est[perm[i]], true[i]) for i in range(k)]
        if best is None or sum(sims) > sum(best):
            best = sims
    return best


def fixed_model(phi, alpha=None):
    k = phi.shape[0]
    return LdaModel(np.asarray(phi, dtype=float) * 1000.0, LdaConfig(num_topics=k, alpha=alpha))


@pytest.fixture(scope="module")
def planted():
    phi = planted_topics(3, 90, seed=0)
    docs = lda_corpus(phi, 600, mean_len=40, seed=1)
    return phi, docs


def test_default_priors():
    cfg = LdaConfig(num_topics=4)
    assert cfg.alpha == pytest.approx([1 / (k + 2.0) for k in range(4)])
    assert cfg.eta == 0.25
    assert np.all(np.diff(asymmetric_alpha(10)) < 0)


def test_config_validation():
    with pytest.raises(ValueError):
        LdaConfig(num_topics=3, alpha=[1.0, -1.0, 1.0])
    with pytest.raises(ValueError):
        LdaConfig(num_topics=3, eta=0.0)


def test_single_topic_is_smoothed_unigram():
    docs = [BowVector("a", {0: 3, 1: 1}), BowVector("b", {1: 2, 3: 4}), BowVector("c", {2: 1})]
    cfg = LdaConfig(num_topics=1, eta=0.5)
    model = train_lda(docs, cfg, 5)
    counts = np.array([3, 3, 1, 4, 0], dtype=float)
    expected = (counts + 0.5) / (counts.sum() + 5 * 0.5)
    np.testing.assert_allclose(model.topic_word[0], expected, rtol=1e-12)


def test_uniform_single_topic_perplexity_is_vocab_size():
    V = 17
    model = LdaModel(np.ones((1, V)), LdaConfig(num_topics=1))
    docs = [BowVector("a", {0: 3, 5: 2}), BowVector("b", {16: 1, 2: 9})]
    rep = perplexity(model, docs)
    assert rep.perplexity == pytest.approx(V, rel=1e-12)
    assert rep.total_words == 15 and rep.num_docs == 2


def test_perplexity_report_consistency(planted):
    phi, docs = planted
    model = train_lda(docs[:300], LdaConfig(num_topics=3, chunk_size=100, passes=2), 90)
    rep = perplexity(model, docs[300:])
    assert rep.perplexity == math.exp(-rep.total_log_likelihood / rep.total_words)
    assert rep.perplexity >= 1.0
    assert rep.bound == "elbo"


def test_perplexity_rejects_empty():
    model = LdaModel(np.ones((2, 4)), LdaConfig(num_topics=2))
    with pytest.raises(ValueError, match="zero words"):
        perplexity(model, [BowVector("a", {})])


def test_train_errors():
    with pytest.raises(ValueError, match="empty"):
        train_lda([], LdaConfig(num_topics=2), 10)
    with pytest.raises(ValueError, match="vocab size"):
        train_lda([BowVector("a", {12: 1})], LdaConfig(num_topics=2), 10)


def test_empty_document_posterior_is_prior():
    model = LdaModel(np.ones((3, 6)), LdaConfig(num_topics=3))
    dt = infer_doc_topics(model, BowVector("e", {}))
    alpha = np.asarray(model.config.alpha)
    np.testing.assert_allclose(dt.theta, alpha / alpha.sum())


def test_planted_topic_argmax():
    phi = np.zeros((3, 9))
    for k in range(3):
        phi[k, 3 * k:3 * k + 3] = 1 / 3
    model = fixed_model(phi + 1e-9)
    dt = infer_doc_topics(model, BowVector("d", {6: 4, 7: 2, 8: 5}))
    assert int(np.argmax(dt.theta)) == 2


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.integers(0, 19), st.integers(1, 20), max_size=12), st.integers(0, 1000))
def test_theta_normalized(counts, seed):
    lam = np.random.default_rng(seed).gamma(1.0, 1.0, (4, 20))
    model = LdaModel(lam, LdaConfig(num_topics=4))
    theta = infer_doc_topics(model, BowVector("x", counts)).theta
    assert abs(theta.sum() - 1) < 1e-9 and np.all(theta >= 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_estep_bound_monotone(seed):
    rng = np.random.default_rng(seed)
    k, n = 5, 12
    cols = rng.dirichlet(np.ones(n), size=k)
    cts = rng.integers(1, 10, n).astype(float)
    trace = []
    e_step_doc(cts, cols, asymmetric_alpha(k), max_iter=100, tol=0.0, trace=trace)
    assert np.all(np.diff(trace) >= -1e-8)


def test_normalization_after_training(planted):
    phi, docs = planted
    model = train_lda(docs, LdaConfig(num_topics=3, chunk_size=128, passes=2), 90)
    np.testing.assert_allclose(model.topic_word.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(np.isfinite(model.lam))


def test_recovers_planted_topics(planted):
    phi, docs = planted
    model = train_lda(docs, LdaConfig(num_topics=3, chunk_size=100, passes=5), 90)
    assert min(best_matching_cosines(model.topic_word, phi)) > 0.9


def test_training_perplexity_non_increasing_over_passes(planted):
    phi, docs = planted
    seq = []
    train_lda(docs, LdaConfig(num_topics=3, chunk_size=600, passes=5), 90,
              callback=lambda m, p: seq.append(perplexity(m, docs).perplexity))
    assert len(seq) == 5
    assert all(b <= a + 1e-9 for a, b in zip(seq, seq[1:])), seq


def test_deterministic(planted):
    phi, docs = planted
    cfg = LdaConfig(num_topics=3, chunk_size=64, passes=2, shuffle=True, seed=7)
    a = train_lda(docs, cfg, 90)
    b = train_lda(docs, cfg, 90)
    assert np.array_equal(a.lam, b.lam)


def test_shuffling_helps_order_biased_corpus():
    phi = planted_topics(3, 90, seed=4)
    rng = np.random.default_rng(5)
    docs = []
    for k in range(3):
        for d in range(300):
            counts = rng.multinomial(40, phi[k])
            docs.append(BowVector(f"{k}-{d}", {int(j): int(c) for j, c in enumerate(counts) if c}))
    heldout = [docs[i] for i in range(0, 900, 9)]
    train = [d for i, d in enumerate(docs) if i % 9]
    base = dict(num_topics=3, chunk_size=50, passes=1, seed=0)
    ordered = train_lda(train, LdaConfig(**base), 90)
    shuffled = train_lda(train, LdaConfig(shuffle=True, **base), 90)
    assert perplexity(shuffled, heldout).perplexity <= perplexity(ordered, heldout).perplexity


def test_top_keywords_delta_and_uniform():
    lam = np.full((2, 6), 1e-12)
    lam[0, 4] = 1.0
    lam[1] = 1.0
    model = LdaModel(lam, LdaConfig(num_topics=2))
    kw = top_keywords(model, 0, 3)
    assert kw[0][0] == 4 and kw[0][1] == pytest.approx(1.0)
    uni = top_keywords(model, 1, 3, terms=list("abcdef"))
    assert [t for t, _ in uni] == ["a", "b", "c"]
    assert all(p == pytest.approx(1 / 6) for _, p in uni)
    with pytest.raises(ValueError):
        top_keywords(model, 2)


def test_top_keywords_within_planted_support(planted):
    phi, docs = planted
    model = train_lda(docs, LdaConfig(num_topics=3, chunk_size=100, passes=5), 90)
    supports = [set(np.flatnonzero(row)) for row in phi]
    for k in range(3):
        words = {w for w, _ in top_keywords(model, k, 10)}
        assert any(words <= s for s in supports)


def test_sweep_grid_of_one(planted):
    phi, docs = planted
    res = sweep_topics(docs[:200], [4], LdaConfig(num_topics=4, chunk_size=100), 90)
    assert res.best_k == 4 and len(res.table) == 1


def test_sweep_prefers_true_k_over_ten_times():
    phi = planted_topics(3, 90, seed=2)
    wins = 0
    for seed in range(5):
        docs = lda_corpus(phi, 500, mean_len=40, seed=100 + seed)
        res = sweep_topics(docs, [3, 30], LdaConfig(num_topics=3, chunk_size=100, passes=3, seed=seed), 90)
        wins += res.best_k == 3
    assert wins >= 4


def test_save_load_and_keywords(tmp_path, planted):
    phi, docs = planted
    model = train_lda(docs[:100], LdaConfig(num_topics=3, chunk_size=50), 90, vocab_hash="abc")
    save_model(tmp_path / "m.json", model)
    back = load_model(tmp_path / "m.json")
    assert np.array_equal(back.lam, model.lam) and back.vocab_hash == "abc"
    write_keywords(tmp_path / "k.tsv", model, [f"w{i}" for i in range(90)], n=10)
    rows = (tmp_path / "k.tsv").read_text().splitlines()
    assert len(rows) == 30 and rows[0].split("\t")[:2] == ["0", "1"]
