"""Small deterministic clustering helpers shared by warm starts and reporting."""

from __future__ import annotations

import numpy as np


def average_linkage_partition(similarity: np.ndarray, k: int) -> np.ndarray:
    """Agglomerative average-linkage grouping into exactly ``k`` clusters.

    ``similarity`` is a symmetric (p, p) matrix (higher = more alike). Merges the
    pair of clusters with the highest average inter-cluster similarity until k
    remain; ties break toward the lowest row-major index, so the result is
    deterministic. Returns integer labels 0..k-1 ordered by first member.
    """
    sim = np.asarray(similarity, dtype=float)
    p = sim.shape[0]
    if sim.shape != (p, p):
        raise ValueError("similarity must be square")
    if not 1 <= k <= p:
        raise ValueError(f"k must be in [1, {p}]")

    members: list[list[int]] = [[i] for i in range(p)]
    link = sim.copy()
    np.fill_diagonal(link, -np.inf)
    alive = np.ones(p, dtype=bool)
    n_active = p

    while n_active > k:
        ci, cj = divmod(int(np.argmax(link)), p)
        if ci > cj:
            ci, cj = cj, ci
        ni, nj = len(members[ci]), len(members[cj])
        # average linkage: merged similarity is the size-weighted mean
        merged = (link[ci] * ni + link[cj] * nj) / (ni + nj)
        link[ci] = merged
        link[:, ci] = merged
        link[ci, ci] = -np.inf
        link[cj, :] = -np.inf
        link[:, cj] = -np.inf
        members[ci].extend(members[cj])
        members[cj] = []
        alive[cj] = False
        n_active -= 1

    labels = np.empty(p, dtype=int)
    order = sorted(np.flatnonzero(alive), key=lambda c: min(members[c]))
    for new_id, ci in enumerate(order):
        labels[members[ci]] = new_id
    return labels


def correlation_similarity(mat: np.ndarray) -> np.ndarray:
    """Column correlation matrix with degenerate columns mapped to 0 similarity."""
    centered = mat - mat.mean(axis=0)
    norms = np.sqrt(np.sum(centered**2, axis=0))
    norms[norms == 0] = 1.0
    scaled = centered / norms
    corr = scaled.T @ scaled
    return np.clip(corr, -1.0, 1.0)
