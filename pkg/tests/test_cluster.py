import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from patentminer.cluster import (
    ClusterLabel,
    ClusterModel,
    Transform,
    apply_transform,
    assign,
    assign_all,
    cosine_distance,
    davies_bouldin,
    dominant_topic,
    filter_relevant,
    hellinger_sq,
    inertia,
    kmeans_plus_plus,
    load_model,
    read_labels,
    save_model,
    silhouette,
    silhouette_sampled,
    sweep_clusters,
    train_minibatch_kmeans,
    write_labels,
)
from patentminer.synthetic import gaussian_blobs


# --- independent brute-force references -------------------------------------

def brute_db(points, labels, centroids):
    present = sorted(set(int(l) for l in labels))
    scat = {}
    for c in present:
        members = [p for p, l in zip(points, labels) if l == c]
        scat[c] = sum(math.dist(p, centroids[c]) for p in members) / len(members)
    total = 0.0
    for i in present:
        total += max((scat[i] + scat[j]) / math.dist(centroids[i], centroids[j]) for j in present if j != i)
    return total / len(present)


def brute_silhouette(points, labels):
    n = len(points)
    vals = []
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            vals.append(0.0)
            continue
        a = sum(math.dist(points[i], points[j]) for j in own) / len(own)
        b = min(
            sum(math.dist(points[i], points[j]) for j in range(n) if labels[j] == c)
            / sum(1 for j in range(n) if labels[j] == c)
            for c in set(labels) if c != labels[i]
        )
        vals.append((b - a) / max(a, b) if max(a, b) > 0 else 0.0)
    return sum(vals) / n


def random_instance(rng, max_points=100, max_k=5):
    k = int(rng.integers(2, max_k + 1))
    n = int(rng.integers(2 * k, max_points + 1))
    pts = rng.normal(size=(n, 3))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    rng.shuffle(labels)
    cents = np.array([pts[labels == c].mean(axis=0) for c in range(k)])
    return pts, labels, cents


# --- transforms ---------------------------------------------------------------

def test_l2_examples():
    np.testing.assert_array_equal(apply_transform(np.array([1.0, 0.0]), Transform.L2_NORMALIZE), [1.0, 0.0])
    with pytest.raises(ValueError):
        apply_transform(np.zeros(3), Transform.L2_NORMALIZE)


def test_sqrt_transform_hellinger_example():
    p, q = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    x, y = apply_transform(p, "sqrt"), apply_transform(q, "sqrt")
    assert np.sum((x - y) ** 2) == pytest.approx(1.0, abs=1e-15)
    assert hellinger_sq(p, q) == pytest.approx(1.0)


def test_cosine_identity_on_unit_vectors(rng):
    for _ in range(1000):
        x, y = apply_transform(rng.dirichlet(np.ones(6)), "l2"), apply_transform(rng.dirichlet(np.ones(6)), "l2")
        assert abs(np.sum((x - y) ** 2) / 2 - (1 - x @ y)) < 1e-9
        assert abs(np.sum((x - y) ** 2) / 2 - cosine_distance(x, y)) < 1e-9


def test_identity_copies():
    a = np.array([0.2, 0.8])
    b = apply_transform(a, Transform.IDENTITY)
    b[0] = 9
    assert a[0] == 0.2


# --- assignment ---------------------------------------------------------------

def test_assign_ties_and_coincident():
    model = ClusterModel(np.array([[0.0, 0.0], [2.0, 0.0]]), np.zeros(2, dtype=int))
    assert assign(model, np.array([2.0, 0.0])) == 1
    assert assign(model, np.array([1.0, 5.0])) == 0
    with pytest.raises(ValueError, match="dimension"):
        assign(model, np.array([1.0, 2.0, 3.0]))


def test_assign_matches_exhaustive_scan(rng):
    cents = rng.normal(size=(7, 4))
    pts = rng.normal(size=(500, 4))
    got = assign_all(cents, pts)
    for p, g in zip(pts, got):
        d = [sum((a - b) ** 2 for a, b in zip(p, c)) for c in cents]
        assert g == d.index(min(d))


# --- minibatch k-means --------------------------------------------------------

def test_two_point_masses():
    pts = np.concatenate([np.zeros((50, 2)), np.full((50, 2), 100.0)])
    pts += np.random.default_rng(0).normal(scale=0.01, size=pts.shape)
    model = train_minibatch_kmeans(pts, 2, batch_size=32, seed=3)
    cents = sorted(model.centroids.tolist())
    assert np.allclose(cents[0], 0, atol=0.05) and np.allclose(cents[1], 100, atol=0.05)
    labels = assign_all(model.centroids, pts)
    assert len(set(labels[:50])) == 1 and len(set(labels[50:])) == 1 and labels[0] != labels[-1]


def test_k_equals_n():
    pts = np.random.default_rng(1).normal(size=(8, 3))
    model = train_minibatch_kmeans(pts, 8, batch_size=8, seed=0)
    assert inertia(model, pts) == pytest.approx(0.0, abs=1e-20)


def test_kmeans_errors():
    with pytest.raises(ValueError):
        train_minibatch_kmeans(np.zeros((3, 2)), 4)
    with pytest.raises(ValueError):
        train_minibatch_kmeans(np.zeros((0, 2)), 2)


def test_kmeans_deterministic(rng):
    pts, _ = gaussian_blobs(np.eye(3) * 5, 100, 0.5, seed=2)
    a = train_minibatch_kmeans(pts, 3, batch_size=64, seed=11)
    b = train_minibatch_kmeans(pts, 3, batch_size=64, seed=11)
    assert np.array_equal(a.centroids, b.centroids)


def test_inertia_improves_over_initialization():
    pts, _ = gaussian_blobs(np.array([[0, 0], [6, 0], [0, 6], [6, 6]]), 200, 1.0, seed=5)
    rng = np.random.default_rng(9)
    sub = rng.choice(len(pts), 40, replace=False)
    init = ClusterModel(kmeans_plus_plus(pts[np.sort(sub)], 4, rng), np.zeros(4, dtype=int))
    model = train_minibatch_kmeans(pts, 4, batch_size=100, seed=9)
    assert inertia(model, pts) <= inertia(init, pts)


def test_empty_cluster_repair():
    # many duplicates force k-means++ to pick coincident centers
    pts = np.concatenate([np.zeros((40, 2)), np.ones((2, 2)) * 10])
    model = train_minibatch_kmeans(pts, 3, batch_size=42, seed=0)
    assert np.all(model.counts > 0)
    assert np.all(np.isfinite(model.centroids))


# --- metrics ------------------------------------------------------------------

def test_db_two_singletons():
    pts = np.array([[0.0, 0.0], [3.0, 4.0]])
    assert davies_bouldin(pts, np.array([0, 1]), pts) == 0.0


def test_db_hand_computed():
    # cluster 0: (0,0),(2,0) centroid (1,0), S0 = 1 ; cluster 1: (10,0),(10,4) centroid (10,2), S1 = 2
    # M01 = sqrt(81 + 4) ; DB = mean of (3/M, 3/M)
    pts = np.array([[0.0, 0.0], [2.0, 0.0], [10.0, 0.0], [10.0, 4.0]])
    cents = np.array([[1.0, 0.0], [10.0, 2.0]])
    assert davies_bouldin(pts, np.array([0, 0, 1, 1]), cents) == pytest.approx(3 / math.sqrt(85), abs=1e-15)


def test_db_duplication_invariant(rng):
    pts, labels, cents = random_instance(rng)
    a = davies_bouldin(pts, labels, cents)
    b = davies_bouldin(np.concatenate([pts, pts]), np.concatenate([labels, labels]), cents)
    assert a == pytest.approx(b, abs=1e-12)


def test_db_empty_cluster_warns():
    pts = np.array([[0.0], [1.0], [5.0]])
    cents = np.array([[0.5], [5.0], [99.0]])
    with pytest.warns(RuntimeWarning):
        davies_bouldin(pts, np.array([0, 0, 1]), cents)
    with pytest.raises(ValueError):
        with pytest.warns(RuntimeWarning):
            davies_bouldin(pts, np.array([0, 0, 0]), cents)


def test_metrics_match_brute_force(rng):
    for _ in range(20):
        pts, labels, cents = random_instance(rng)
        assert abs(davies_bouldin(pts, labels, cents) - brute_db(pts.tolist(), labels.tolist(), cents.tolist())) < 1e-9
        assert abs(silhouette(pts, labels) - brute_silhouette(pts.tolist(), labels.tolist())) < 1e-9


def test_silhouette_matches_sklearn(rng):
    sk = pytest.importorskip("sklearn.metrics")
    pts, labels, cents = random_instance(rng)
    assert silhouette(pts, labels) == pytest.approx(sk.silhouette_score(pts, labels), abs=1e-9)
    assert davies_bouldin(pts, labels, cents) == pytest.approx(sk.davies_bouldin_score(pts, labels), abs=1e-9)


def test_silhouette_tight_blobs():
    pts, labels = gaussian_blobs(np.array([[0.0, 0.0], [1000.0, 0.0]]), 50, 1.0, seed=0)
    mean, std = silhouette_sampled(pts, labels, sample_size=60, replicates=3, seed=1)
    assert mean > 0.99 and std >= 0


def test_silhouette_singleton_zero():
    pts = np.array([[0.0], [0.1], [5.0]])
    # point 2 is a singleton: contributes 0
    s = silhouette(pts, np.array([0, 0, 1]))
    a0, b0 = 0.1, 5.0
    a1, b1 = 0.1, 4.9
    assert s == pytest.approx(((b0 - a0) / b0 + (b1 - a1) / b1 + 0.0) / 3)


def test_silhouette_one_cluster_errors():
    with pytest.raises(ValueError):
        silhouette_sampled(np.zeros((4, 2)), np.zeros(4, dtype=int))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_silhouette_bounds(seed):
    pts, labels, _ = random_instance(np.random.default_rng(seed), max_points=30)
    assert -1 <= silhouette(pts, labels) <= 1


# --- sweep, labels, relevance -------------------------------------------------

def test_sweep_grid_of_one():
    pts, _ = gaussian_blobs(np.eye(2) * 10, 30, 1.0)
    res = sweep_clusters(pts, [2], batch_size=32, sample_size=100, replicates=2)
    assert res.selected_k == 2 and len(res.reports) == 1


def test_sweep_selects_planted_k():
    wins = 0
    for seed in range(5):
        pts, _ = gaussian_blobs(np.array([[0, 0], [10, 0], [5, 8.66]]), 200, 1.0, seed=seed)
        wins += sweep_clusters(pts, [2, 3, 4, 8], batch_size=128, seed=seed, sample_size=400,
                               replicates=2).selected_k == 3
    assert wins >= 4


def test_dominant_topic_examples_and_invariance(rng):
    model = ClusterModel(np.array([[0.1, 0.8, 0.1], [0.4, 0.4, 0.2]]), np.ones(2, dtype=int))
    assert dominant_topic(model, 0) == 1
    assert dominant_topic(model, 1) == 0
    thetas = rng.dirichlet(np.ones(5) * 0.3, size=300)
    for t in (Transform.L2_NORMALIZE, Transform.ELEMENTWISE_SQRT):
        x = apply_transform(thetas, t)
        m = train_minibatch_kmeans(x, 4, batch_size=100, seed=0, transform=t)
        labels = assign_all(m.centroids, x)
        for c in range(4):
            members = thetas[labels == c]
            if len(members):
                assert dominant_topic(m, c) == int(np.argmax(m.centroids[c]))
                assert np.argmax(apply_transform(m.centroids[c], Transform.IDENTITY)) == dominant_topic(m, c)


def test_dominant_topic_member_mean_on_clean_clusters():
    rng = np.random.default_rng(3)
    thetas = np.concatenate([rng.dirichlet([20, 1, 1], 100), rng.dirichlet([1, 1, 20], 100)])
    x = apply_transform(thetas, "sqrt")
    m = train_minibatch_kmeans(x, 2, batch_size=100, seed=1, transform="sqrt")
    labels = assign_all(m.centroids, x)
    for c in range(2):
        assert dominant_topic(m, c) == int(np.argmax(thetas[labels == c].mean(axis=0)))


def test_filter_relevant():
    asg = {"a": 0, "b": 1, "c": 2, "d": 1}
    labels = [ClusterLabel(0, 3, "tablet", True), ClusterLabel(1, 0, "pharmacology", False),
              ClusterLabel(2, 5, "synthesis", True)]
    keep, counts = filter_relevant(asg, labels)
    assert set(keep) == {sid for sid, c in asg.items() if c in (0, 2)}
    assert counts == {0: 1, 1: 2, 2: 1}
    all_rel = [ClusterLabel(c, 0, "x", True) for c in range(3)]
    assert filter_relevant(asg, all_rel)[0] == list(asg)
    none_rel = [ClusterLabel(c, 0, "x", False) for c in range(3)]
    assert filter_relevant(asg, none_rel)[0] == []
    with pytest.raises(ValueError, match=r"\[2\]"):
        filter_relevant(asg, labels[:2])


def test_model_and_label_files(tmp_path):
    model = ClusterModel(np.array([[0.25, 0.75], [1.0, 0.0]]), np.array([3, 4]), Transform.L2_NORMALIZE, 5, 7)
    save_model(tmp_path / "k.json", model)
    back = load_model(tmp_path / "k.json")
    assert np.array_equal(back.centroids, model.centroids) and back.transform is Transform.L2_NORMALIZE
    labels = [ClusterLabel(0, 1, "wet granulation", True), ClusterLabel(1, 0, "assay", False)]
    write_labels(tmp_path / "l.tsv", labels)
    assert (tmp_path / "l.tsv").read_text() == "0\t1\twet granulation\t1\n1\t0\tassay\t0\n"
    assert read_labels(tmp_path / "l.tsv") == labels
