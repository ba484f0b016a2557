"""Uniform random labelled trees via the Prufer bijection, plus the leaf and
maximum-degree statistics the tree-packing harnesses rely on.

Convention: smallest-leaf-first. Decoding consumes the code left to right,
always attaching the smallest current leaf; encoding repeatedly removes the
smallest leaf and records its neighbor. The two maps are mutually inverse.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .core import Graph


@dataclass(frozen=True)
class TreeStats:
    n: int
    leaf_count: int
    max_degree: int


def prufer_decode(seq: list[int], n: int) -> Graph:
    """The unique labelled tree on 0..n-1 with Prufer code seq.

    Vertex degrees are 1 + (occurrences in seq); the tree has n-1 edges.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if len(seq) != n - 2:
        raise ValueError(f"code length {len(seq)} != n-2 = {n - 2}")
    for a in seq:
        if not 0 <= a < n:
            raise ValueError(f"label {a} out of range")
    degree = [1] * n
    for a in seq:
        degree[a] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for a in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, a))
        degree[a] -= 1
        if degree[a] == 1:
            heapq.heappush(leaves, a)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    return Graph(n, edges)


def is_tree(g: Graph) -> bool:
    """Connected with exactly n-1 edges."""
    n = g.n
    if n == 0 or g.edge_count != n - 1:
        return False
    seen = 1
    stack = [0]
    count = 1
    while stack:
        v = stack.pop()
        for u in g.adj[v]:
            if not (seen >> u & 1):
                seen |= 1 << u
                count += 1
                stack.append(u)
    return count == n


def prufer_encode(t: Graph) -> list[int]:
    """Inverse of prufer_decode: strip smallest leaves, record neighbors."""
    if not is_tree(t):
        raise ValueError("input is not a tree")
    n = t.n
    if n == 2:
        return []
    degree = [t.degree(v) for v in range(n)]
    alive_mask = [mk for mk in t.adj_mask]
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    code = []
    for _ in range(n - 2):
        leaf = heapq.heappop(leaves)
        parent = alive_mask[leaf].bit_length() - 1  # single bit left
        code.append(parent)
        alive_mask[parent] &= ~(1 << leaf)
        degree[parent] -= 1
        if degree[parent] == 1:
            heapq.heappush(leaves, parent)
    return code


def random_tree(n: int, rng) -> Graph:
    """Uniform over the n^(n-2) labelled trees: decode a uniform code."""
    if n < 2:
        raise ValueError("need n >= 2")
    return prufer_decode([rng.randrange(n) for _ in range(n - 2)], n)


def tree_stats(t: Graph) -> TreeStats:
    if not is_tree(t):
        raise ValueError("input is not a tree")
    degs = [t.degree(v) for v in range(t.n)]
    return TreeStats(
        n=t.n,
        leaf_count=sum(1 for d in degs if d == 1),
        max_degree=max(degs),
    )
