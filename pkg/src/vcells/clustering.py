"""Virtual-cell formation.

Agglomerative hierarchical clustering of BS positions under the minimax
linkage (the smallest enclosing radius, around a member point, of the union
of two clusters), exhaustive set-partition enumeration, and nearest-BS user
affiliation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .network import NetworkInstance


@dataclass(frozen=True)
class Dendrogram:
    """Merge history of the agglomerative clustering.

    Leaves are numbered 0..n_leaves-1; merge i creates cluster n_leaves+i.
    Each merge records (id_a, id_b, linkage_m, new_id).
    """

    n_leaves: int
    merges: tuple[tuple[int, int, float, int], ...]


@dataclass(frozen=True)
class Clustering:
    """A proper partition of BSs into virtual BSs plus user affiliations.

    bs_blocks: tuple of sorted index tuples, ordered by smallest member.
    user_cell: user index -> position of its cell in bs_blocks.
    """

    bs_blocks: tuple[tuple[int, ...], ...]
    user_cell: np.ndarray

    @property
    def n_cells(self) -> int:
        return len(self.bs_blocks)


def pairwise_distances(points: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix via the plain sqrt(dx^2 + dy^2) expression.

    Spelled out (rather than np.linalg.norm over an axis) so that the
    two-point case rounds identically to the scalar distance formula.
    """
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2))


def set_radius(points: np.ndarray, center_index: int) -> float:
    """Largest Euclidean distance from points[center_index] to any member."""
    pts = np.asarray(points, dtype=float)
    diff = pts - pts[center_index]
    return float(np.sqrt((diff ** 2).sum(axis=1)).max())


def minimax_linkage(s1: np.ndarray, s2: np.ndarray) -> float:
    """Minimax linkage: min over candidate centers in the union of set_radius."""
    union = np.vstack([np.asarray(s1, dtype=float), np.asarray(s2, dtype=float)])
    d = pairwise_distances(union)
    return float(d.max(axis=1).min())


def _linkage_of(dist: np.ndarray, members: list[int]) -> float:
    sub = dist[np.ix_(members, members)]
    return float(sub.max(axis=1).min())


def hierarchical_cluster(points: np.ndarray) -> Dendrogram:
    """Greedy agglomeration: n-1 merges, each minimizing the minimax linkage.

    Linkages of the merged cluster to all survivors are recomputed exactly
    after each merge. Ties break toward the lexicographically smallest pair
    of cluster ids, so the result is deterministic.
    """
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n < 1:
        raise ValueError("need at least one point")
    dist = pairwise_distances(pts)

    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    link: dict[tuple[int, int], float] = {}
    active = list(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            link[(i, j)] = dist[i, j]

    merges = []
    next_id = n
    while len(active) > 1:
        best = None
        best_val = np.inf
        for ai in range(len(active)):
            for aj in range(ai + 1, len(active)):
                pair = (active[ai], active[aj])
                val = link[pair]
                if val < best_val:
                    best_val = val
                    best = pair
        a, b = best
        merged = sorted(members[a] + members[b])
        members[next_id] = merged
        active = [c for c in active if c not in (a, b)]
        for c in active:
            link[(min(c, next_id), max(c, next_id))] = _linkage_of(dist, members[c] + merged)
        active.append(next_id)
        merges.append((a, b, best_val, next_id))
        next_id += 1

    return Dendrogram(n_leaves=n, merges=tuple(merges))


def cut_dendrogram(dend: Dendrogram, v: int) -> tuple[tuple[int, ...], ...]:
    """Partition of the leaves into v blocks: undo the last v-1 merges.

    Cuts are nested: the cut at v refines the cut at v-1.
    """
    n = dend.n_leaves
    if not 1 <= v <= n:
        raise ValueError(f"cut level {v} out of range [1, {n}]")
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    for a, b, _, new_id in dend.merges[: n - v]:
        members[new_id] = sorted(members.pop(a) + members.pop(b))
    blocks = sorted(members.values(), key=lambda m: m[0])
    return tuple(tuple(m) for m in blocks)


def format_dendrogram(dend: Dendrogram) -> list[str]:
    """Text dump, one line per merge."""
    return [
        f"merge {a} {b} -> {new_id} linkage={val:.6f}"
        for a, b, val, new_id in dend.merges
    ]


def enumerate_partitions(n: int, k: int) -> Iterator[tuple[tuple[int, ...], ...]]:
    """Yield every partition of {0..n-1} into exactly k non-empty blocks once.

    Enumeration follows restricted growth strings in lexicographic order;
    the count equals the Stirling number of the second kind S(n, k). Blocks
    are ordered by first occurrence, i.e. by smallest member.
    """
    if not 1 <= k <= n:
        raise ValueError(f"cannot split {n} items into {k} non-empty blocks")
    labels = [0] * n

    def rec(i: int, used: int):
        if i == n:
            if used == k:
                blocks: list[list[int]] = [[] for _ in range(k)]
                for idx, lab in enumerate(labels):
                    blocks[lab].append(idx)
                yield tuple(tuple(b) for b in blocks)
            return
        if used + (n - i) < k:
            return
        for lab in range(min(used + 1, k)):
            labels[i] = lab
            yield from rec(i + 1, max(used, lab + 1))

    yield from rec(1, 1)


def affiliate_users(bs_blocks, instance: NetworkInstance) -> Clustering:
    """Attach each user to the cell whose block contains its nearest BS.

    Distance ties go to the lowest BS index.
    """
    blocks = tuple(tuple(sorted(b)) for b in bs_blocks)
    blocks = tuple(sorted(blocks, key=lambda b: b[0]))
    block_of_bs = np.empty(instance.n_bs, dtype=int)
    block_of_bs.fill(-1)
    for ci, block in enumerate(blocks):
        for b in block:
            block_of_bs[b] = ci
    nearest = np.argmin(instance.user_bs_distances(), axis=1)
    clustering = Clustering(bs_blocks=blocks, user_cell=block_of_bs[nearest])
    validate_clustering(clustering, instance.n_bs, instance.n_users)
    return clustering


def validate_clustering(clustering: Clustering, n_bs: int, n_users: int):
    """Check the proper-clustering invariants; raises ValueError."""
    seen: set[int] = set()
    for block in clustering.bs_blocks:
        if len(block) == 0:
            raise ValueError("empty BS block")
        if seen & set(block):
            raise ValueError("BS blocks are not disjoint")
        seen |= set(block)
    if seen != set(range(n_bs)):
        raise ValueError("BS blocks do not cover all BSs")
    cells = clustering.user_cell
    if cells.shape != (n_users,):
        raise ValueError("user_cell has wrong shape")
    if n_users and (cells.min() < 0 or cells.max() >= len(clustering.bs_blocks)):
        raise ValueError("user_cell entries out of range")
