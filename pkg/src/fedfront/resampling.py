"""Client-side rebalancing: SMOTE oversampling followed by Tomek-link removal.

Partitions here are a few hundred rows, so nearest neighbors are computed
by exact brute force on the preprocessed feature space. All randomness
comes in through an explicit numpy Generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SMOTE_NEIGHBORS = 5


@dataclass
class NeighborIndex:
    """Exact k nearest neighbors per row under Euclidean distance.

    Lists are sorted by ascending distance with ties broken by the lower
    row index; a row never lists itself.
    """

    k: int
    neighbor_lists: np.ndarray  # shape (n, k), row indices


@dataclass
class ResampleReport:
    before_counts: tuple[int, int]  # (negatives, positives)
    synthetic_added: int
    tomek_removed: int
    after_counts: tuple[int, int]


def _distance_matrix(features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2)


def build_knn(features: np.ndarray, k: int) -> NeighborIndex:
    """Brute-force k nearest neighbors for every row (self excluded)."""
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[0]
    if n <= k:
        raise ValueError(f"need more than k={k} rows, got {n}")
    dist = _distance_matrix(x)
    np.fill_diagonal(dist, np.inf)
    # Stable sort on distances keeps equal-distance neighbors in index order.
    order = np.argsort(dist, axis=1, kind="stable")
    return NeighborIndex(k=k, neighbor_lists=order[:, :k])


def _nearest_neighbor(features: np.ndarray) -> np.ndarray:
    dist = _distance_matrix(features)
    np.fill_diagonal(dist, np.inf)
    return np.argmin(dist, axis=1)  # argmin ties resolve to the lower index


def smote(
    features: np.ndarray,
    labels: np.ndarray,
    k: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Oversample the minority class to parity by segment interpolation.

    Each synthetic point is x_i + lambda * (x_nn - x_i) for a random
    minority row x_i, one of its k nearest minority neighbors x_nn (k is
    capped at minority - 1) and lambda ~ Uniform(0, 1). Originals are kept
    and synthetics appended. Inputs with minority count <= 1 pass through
    untouched.
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).ravel()
    counts = np.bincount(y, minlength=2)
    minority = int(np.argmin(counts))
    n_min = int(counts[minority])
    n_maj = int(counts.max())
    deficit = n_maj - n_min
    if n_min <= 1 or deficit == 0:
        return x.copy(), y.copy()

    min_rows = np.flatnonzero(y == minority)
    x_min = x[min_rows]
    k_eff = min(k, n_min - 1)
    knn = build_knn(x_min, k_eff)

    parents = rng.integers(0, n_min, size=deficit)
    picks = rng.integers(0, k_eff, size=deficit)
    lam = rng.random(deficit)
    neighbors = knn.neighbor_lists[parents, picks]
    synth = x_min[parents] + lam[:, None] * (x_min[neighbors] - x_min[parents])

    new_x = np.vstack([x, synth])
    new_y = np.concatenate([y, np.full(deficit, minority, dtype=np.int64)])
    return new_x, new_y


def tomek_links(features: np.ndarray, labels: np.ndarray) -> set[tuple[int, int]]:
    """All opposite-label pairs that are each other's single nearest neighbor."""
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64).ravel()
    if x.shape[0] < 2:
        raise ValueError("need at least 2 rows to search for Tomek links")
    nn = _nearest_neighbor(x)
    links = set()
    for a in range(x.shape[0]):
        b = int(nn[a])
        if a < b and nn[b] == a and y[a] != y[b]:
            links.add((a, b))
    return links


def smote_tomek(
    features: np.ndarray,
    labels: np.ndarray,
    rng: np.random.Generator,
    k: int = SMOTE_NEIGHBORS,
) -> tuple[np.ndarray, np.ndarray, ResampleReport]:
    """SMOTE to parity, then drop both members of every Tomek link."""
    y_before = np.asarray(labels, dtype=np.int64).ravel()
    before = (int(np.sum(y_before == 0)), int(np.sum(y_before == 1)))

    x_os, y_os = smote(features, labels, k, rng)
    added = y_os.shape[0] - y_before.shape[0]

    removed = 0
    if x_os.shape[0] >= 2:
        links = tomek_links(x_os, y_os)
        if links:
            drop = np.fromiter(
                (i for pair in links for i in pair), dtype=np.int64
            )
            keep = np.setdiff1d(np.arange(x_os.shape[0]), drop)
            removed = x_os.shape[0] - keep.shape[0]
            x_os = x_os[keep]
            y_os = y_os[keep]

    after = (int(np.sum(y_os == 0)), int(np.sum(y_os == 1)))
    report = ResampleReport(
        before_counts=before,
        synthetic_added=added,
        tomek_removed=removed,
        after_counts=after,
    )
    return x_os, y_os, report
