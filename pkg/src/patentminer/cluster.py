"""Minibatch k-means over document-topic vectors, plus cluster quality metrics.

k-means here always uses squared Euclidean distance.  Cosine and Hellinger
geometry are obtained by transforming the topic mixtures first:
L2-normalized vectors give ``cos_dist = ||x - y||^2 / 2`` and the
element-wise map ``x -> sqrt(x / 2)`` turns squared Euclidean distance into
squared Hellinger distance.
"""

from __future__ import annotations

import enum
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


class Transform(str, enum.Enum):
    L2_NORMALIZE = "l2"
    ELEMENTWISE_SQRT = "sqrt"
    IDENTITY = "identity"


def apply_transform(theta: np.ndarray, t: Transform | str) -> np.ndarray:
    """Transform one vector or each row of a matrix."""
    t = Transform(t)
    x = np.asarray(theta, dtype=np.float64)
    if np.any(x < 0):
        raise ValueError("topic vectors must be non-negative")
    if t is Transform.IDENTITY:
        return x.copy()
    if t is Transform.ELEMENTWISE_SQRT:
        return np.sqrt(x / 2.0)
    norms = np.linalg.norm(x, axis=-1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("cannot L2-normalize a zero vector")
    return x / norms


def hellinger_sq(p: np.ndarray, q: np.ndarray) -> float:
    return float(np.sum((np.sqrt(p / 2.0) - np.sqrt(q / 2.0)) ** 2))


def cosine_distance(x: np.ndarray, y: np.ndarray) -> float:
    return float(1.0 - x @ y / (np.linalg.norm(x) * np.linalg.norm(y)))


@dataclass
class ClusterModel:
    centroids: np.ndarray
    counts: np.ndarray
    transform: Transform = Transform.IDENTITY
    seed: int = 0
    iterations: int = 0

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


@dataclass(frozen=True)
class QualityReport:
    k: int
    davies_bouldin: float
    davies_bouldin_std: float
    silhouette_mean: float
    silhouette_std: float
    sample_size: int = 10000
    replicates: int = 6


@dataclass
class ClusterSweep:
    reports: list[QualityReport]
    selected_k: int
    models: dict[int, ClusterModel] = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class ClusterLabel:
    cluster_id: int
    dominant_topic: int
    label_text: str
    relevant: bool


# ---------------------------------------------------------------------------
# Assignment


def sq_distances(points: np.ndarray, centroids: np.ndarray, block: int = 4096) -> np.ndarray:
    """n x k squared Euclidean distances, computed by direct differences."""
    points = np.atleast_2d(points)
    out = np.empty((points.shape[0], centroids.shape[0]))
    for s in range(0, points.shape[0], block):
        diff = points[s:s + block, None, :] - centroids[None, :, :]
        out[s:s + block] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def assign_all(centroids: np.ndarray, points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if points.shape[1] != centroids.shape[1]:
        raise ValueError(f"dimension mismatch: points have {points.shape[1]}, centroids {centroids.shape[1]}")
    # argmin returns the first minimum, so ties go to the lowest cluster id
    return np.argmin(sq_distances(points, centroids), axis=1)


def assign(model: ClusterModel, vector: np.ndarray) -> int:
    return int(assign_all(model.centroids, np.asarray(vector, dtype=np.float64)[None, :])[0])


# ---------------------------------------------------------------------------
# Training


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = sq_distances(points, points[chosen[0]][None, :])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rng.choice(rest))
        chosen.append(nxt)
        d2 = np.minimum(d2, sq_distances(points, points[nxt][None, :])[:, 0])
    return points[chosen].copy()


def train_minibatch_kmeans(data: np.ndarray, k: int, batch_size: int = 4096, max_iters: int = 100,
                           seed: int = 0, tol: float = 1e-4, transform: Transform | str = Transform.IDENTITY,
                           init_factor: int = 10) -> ClusterModel:
    """Minibatch k-means with per-centroid ``1 / count`` learning rates.

    ``data`` must already be transformed; ``transform`` is only recorded on
    the model so later points can be mapped the same way.  Initialization is
    k-means++ on a seeded subsample of ``init_factor * k`` points.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise ValueError("empty data")
    n = data.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds number of points {n}")
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    sub = rng.choice(n, size=min(n, init_factor * k), replace=False)
    centroids = kmeans_plus_plus(data[np.sort(sub)], k, rng)
    counts = np.zeros(k, dtype=np.int64)
    bs = min(batch_size, n)
    it = 0
    for it in range(1, max_iters + 1):
        batch = data[rng.choice(n, size=bs, replace=False)]
        labels = assign_all(centroids, batch)
        old = centroids.copy()
        for c in range(k):
            members = batch[labels == c]
            m = members.shape[0]
            if m == 0:
                continue
            # closed form of m sequential updates c += (x - c) / count
            centroids[c] = (centroids[c] * counts[c] + members.sum(axis=0)) / (counts[c] + m)
            counts[c] += m
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            _repair_empty(centroids, counts, batch, labels, empty)
        shift = np.mean(np.linalg.norm(centroids - old, axis=1))
        if shift < tol:
            break
    return ClusterModel(centroids, counts, Transform(transform), seed, it)


def _repair_empty(centroids, counts, batch, labels, empty) -> None:
    for c in empty:
        sizes = np.bincount(labels, minlength=centroids.shape[0])
        big = int(np.argmax(sizes))
        members = np.flatnonzero(labels == big)
        if members.size == 0:
            continue
        d = sq_distances(batch[members], centroids[big][None, :])[:, 0]
        far = members[int(np.argmax(d))]
        centroids[c] = batch[far]
        counts[c] = 1
        labels[far] = c


def inertia(model: ClusterModel, points: np.ndarray) -> float:
    return float(np.min(sq_distances(points, model.centroids), axis=1).sum())


# ---------------------------------------------------------------------------
# Quality metrics


def davies_bouldin(points: np.ndarray, assignments: np.ndarray, centroids: np.ndarray) -> float:
    """Mean over clusters of max_j (S_i + S_j) / M_ij.

    S_i is the mean Euclidean distance of members to their centroid and M_ij
    the distance between centroids.  Clusters without members are skipped
    with a warning.
    """
    points = np.asarray(points, dtype=np.float64)
    assignments = np.asarray(assignments)
    present = [c for c in range(centroids.shape[0]) if np.any(assignments == c)]
    missing = centroids.shape[0] - len(present)
    if missing:
        warnings.warn(f"{missing} empty cluster(s) excluded from Davies-Bouldin", RuntimeWarning, stacklevel=2)
    if len(present) < 2:
        raise ValueError("Davies-Bouldin needs at least two non-empty clusters")
    cent = centroids[present]
    scatter = np.array([
        np.mean(np.linalg.norm(points[assignments == c] - centroids[c], axis=1)) for c in present
    ])
    sep = np.sqrt(sq_distances(cent, cent))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (scatter[:, None] + scatter[None, :]) / sep
    np.fill_diagonal(ratio, -np.inf)
    ratio[np.isnan(ratio)] = 0.0
    return float(np.mean(np.max(ratio, axis=1)))


def silhouette(points: np.ndarray, assignments: np.ndarray) -> float:
    """Mean silhouette over all points; singleton clusters score 0."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(assignments)
    uniq, inv = np.unique(labels, return_inverse=True)
    if uniq.size < 2:
        raise ValueError("silhouette needs at least two clusters")
    n = points.shape[0]
    sizes = np.bincount(inv)
    sums = np.zeros((n, uniq.size))
    for s in range(0, n, 2048):
        d = np.sqrt(sq_distances(points[s:s + 2048], points))
        for j in range(uniq.size):
            sums[s:s + 2048, j] = d[:, inv == j].sum(axis=1)
    own = sizes[inv]
    a = np.where(own > 1, sums[np.arange(n), inv] / np.maximum(own - 1, 1), 0.0)
    means = sums / sizes[None, :]
    means[np.arange(n), inv] = np.inf
    b = means.min(axis=1)
    denom = np.maximum(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        s = np.where(denom > 0, (b - a) / denom, 0.0)
    s[own == 1] = 0.0
    return float(s.mean())


def silhouette_sampled(points: np.ndarray, assignments: np.ndarray, sample_size: int = 10000,
                       replicates: int = 6, seed: int = 0) -> tuple[float, float]:
    """Silhouette on ``replicates`` uniform subsamples; returns (mean, std)."""
    points = np.asarray(points, dtype=np.float64)
    assignments = np.asarray(assignments)
    if np.unique(assignments).size < 2:
        raise ValueError("all points are in one cluster")
    rng = np.random.default_rng(seed)
    scores = []
    for idx in _samples(points.shape[0], sample_size, replicates, rng):
        scores.append(silhouette(points[idx], assignments[idx]))
    return float(np.mean(scores)), float(np.std(scores))


def _samples(n: int, size: int, replicates: int, rng: np.random.Generator):
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    for _ in range(replicates):
        if n <= size:
            yield np.arange(n)
        else:
            yield np.sort(rng.choice(n, size=size, replace=False))


def quality_report(model: ClusterModel, points: np.ndarray, sample_size: int = 10000, replicates: int = 6,
                   seed: int = 0) -> QualityReport:
    labels = assign_all(model.centroids, points)
    rng = np.random.default_rng(seed)
    dbs, sils = [], []
    for idx in _samples(points.shape[0], sample_size, replicates, rng):
        dbs.append(davies_bouldin(points[idx], labels[idx], model.centroids))
        sils.append(silhouette(points[idx], labels[idx]))
    return QualityReport(model.k, float(np.mean(dbs)), float(np.std(dbs)), float(np.mean(sils)),
                         float(np.std(sils)), sample_size, replicates)


def sweep_clusters(data: np.ndarray, k_grid: Sequence[int] = tuple(range(5, 61)), batch_size: int = 4096,
                   max_iters: int = 100, seed: int = 0, sample_size: int = 10000, replicates: int = 6,
                   criterion: str = "davies_bouldin", transform: Transform | str = Transform.IDENTITY,
                   keep_models: bool = False) -> ClusterSweep:
    """Fit one model per k and select by minimum Davies-Bouldin (or maximum silhouette)."""
    if not k_grid:
        raise ValueError("empty k grid")
    if criterion not in ("davies_bouldin", "silhouette"):
        raise ValueError(f"unknown criterion {criterion!r}")
    reports, models = [], {}
    for k in k_grid:
        model = train_minibatch_kmeans(data, int(k), batch_size, max_iters, seed, transform=transform)
        reports.append(quality_report(model, data, sample_size, replicates, seed))
        if keep_models:
            models[int(k)] = model
    if criterion == "davies_bouldin":
        best = min(reports, key=lambda r: r.davies_bouldin).k
    else:
        best = max(reports, key=lambda r: r.silhouette_mean).k
    return ClusterSweep(reports, best, models)


# ---------------------------------------------------------------------------
# Labels and relevance


def dominant_topic(model: ClusterModel, cluster_id: int) -> int:
    """Topic with the largest centroid coordinate (argmax survives both transforms)."""
    return int(np.argmax(model.centroids[cluster_id]))


def filter_relevant(assignments: Mapping[str, int], labels: Sequence[ClusterLabel]):
    """Section ids whose cluster is flagged relevant, plus per-cluster section counts."""
    by_id = {lab.cluster_id: lab for lab in labels}
    missing = sorted({c for c in assignments.values() if c not in by_id})
    if missing:
        raise ValueError(f"no label entry for cluster(s) {missing}")
    keep = [sid for sid, c in assignments.items() if by_id[c].relevant]
    counts: dict[int, int] = {}
    for c in assignments.values():
        counts[c] = counts.get(c, 0) + 1
    return keep, dict(sorted(counts.items()))


# ---------------------------------------------------------------------------
# File formats


def save_model(path: str | Path, model: ClusterModel) -> None:
    obj = {"format": "patentminer.kmeans/1", "transform": model.transform.value, "seed": model.seed,
           "iterations": model.iterations, "counts": model.counts.tolist(), "centroids": model.centroids.tolist()}
    Path(path).write_text(json.dumps(obj), encoding="utf-8")


def load_model(path: str | Path) -> ClusterModel:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    return ClusterModel(np.asarray(obj["centroids"], dtype=np.float64), np.asarray(obj["counts"], dtype=np.int64),
                        Transform(obj["transform"]), obj.get("seed", 0), obj.get("iterations", 0))


def write_assignments(path: str | Path, ids: Sequence[str], labels: Sequence[int]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sid, c in zip(ids, labels):
            fh.write(f"{sid}\t{int(c)}\n")


def read_assignments(path: str | Path) -> dict[str, int]:
    out: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            if len(parts) == 2:
                out[parts[0]] = int(parts[1])
    return out


def write_labels(path: str | Path, labels: Sequence[ClusterLabel]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for lab in labels:
            text = lab.label_text.replace("\t", " ").replace("\n", " ")
            fh.write(f"{lab.cluster_id}\t{lab.dominant_topic}\t{text}\t{int(lab.relevant)}\n")


def read_labels(path: str | Path) -> list[ClusterLabel]:
    labels = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4 or parts[3].strip() not in ("0", "1"):
                raise ValueError(f"{path}:{lineno}: expected cluster_id, dominant_topic, label, relevant(0/1)")
            labels.append(ClusterLabel(int(parts[0]), int(parts[1]), parts[2], parts[3].strip() == "1"))
    return labels


def write_quality(path: str | Path, reports: Sequence[QualityReport]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("k\tdavies_bouldin\tdavies_bouldin_std\tsilhouette_mean\tsilhouette_std\tsample_size\treplicates\n")
        for r in reports:
            fh.write(f"{r.k}\t{r.davies_bouldin!r}\t{r.davies_bouldin_std!r}\t{r.silhouette_mean!r}\t"
                     f"{r.silhouette_std!r}\t{r.sample_size}\t{r.replicates}\n")
