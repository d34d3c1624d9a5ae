"""
Filtering patent sections by topic
==================================

Sections are turned into bag-of-words vectors, described by LDA topic
mixtures, clustered, and the clusters about manufacturing are kept.
"""

import numpy as np

from patentminer import cluster, corpus, topics, vectorize
from patentminer.synthetic import pipeline_fixture

# a synthetic corpus: 200 documents, each split into "EXAMPLE n" sections
docs, truth, _ = pipeline_fixture(num_docs=200, seed=0)
res = corpus.load_resources()
sections = [s for d in docs for s in corpus.segment_sections(corpus.RawDocument(d["doc_id"], d["body"]))]
tokenized = [corpus.tokenize_section(s, res) for s in sections]
print(len(sections), "sections; first tokens:", tokenized[0].tokens[:8])

# overly long sections are cut at the IQR outlier bound before counting
policy = vectorize.compute_truncation([s.raw_len for s in tokenized])
print("truncation bound:", policy.q_trunc)

# the corpus is small, so the document-frequency floor is lowered
vocab = vectorize.build_vocabulary([s.tokens[:policy.max_tokens] for s in tokenized],
                                   vectorize.VocabCriteria(min_doc_freq=5))
bows = [vectorize.vectorize(s, vocab, policy) for s in tokenized]
print(len(vocab), "terms")

# held-out perplexity over a small grid of topic counts
sweep = topics.sweep_topics(bows, [2, 4, 6], topics.LdaConfig(1, passes=3, chunk_size=128, shuffle=True, seed=4),
                            len(vocab))
for k, p in sweep.table:
    print(f"K={k}  perplexity={p:.2f}")

lda = topics.train_lda(bows, topics.LdaConfig(4, passes=5, chunk_size=128, shuffle=True, seed=4), len(vocab))
for k in range(lda.num_topics):
    print(k, " ".join(w for w, _ in topics.top_keywords(lda, k, 6, vocab.terms)))

# document-topic vectors, L2-normalized so Euclidean k-means behaves like cosine distance
theta = np.array([topics.infer_doc_topics(lda, b).theta for b in bows])
x = cluster.apply_transform(theta, "l2")
grid = cluster.sweep_clusters(x, [2, 3, 4, 5, 6], batch_size=256, seed=4, sample_size=400, replicates=2,
                              transform="l2", keep_models=True)
for r in grid.reports:
    print(f"k={r.k}  DB={r.davies_bouldin:.3f}  silhouette={r.silhouette_mean:.3f}")

# a person would read the keywords and decide; here the planted topic names stand in
km = grid.models[grid.selected_k]
assign = dict(zip([b.section_id for b in bows], cluster.assign_all(km.centroids, x).tolist()))
labels = []
for c in range(km.k):
    words = {w for w, _ in topics.top_keywords(lda, cluster.dominant_topic(km, c), 10, vocab.terms)}
    labels.append(cluster.ClusterLabel(c, cluster.dominant_topic(km, c), " ".join(sorted(words)[:3]),
                                       bool(words & {"tablet", "excipient", "reaction", "intermediate"})))
keep, counts = cluster.filter_relevant(assign, labels)
relevant = {sid for sid, (t, _) in truth.items() if t in ("formulation", "synthesis")}
print(f"kept {len(keep)} sections; {len(relevant & set(keep))} of {len(relevant)} truly relevant")
