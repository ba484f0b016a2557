"""Foundational graph types: simple undirected graphs on vertex set 0..n-1,
degeneracy orders, and (co)quasirandomness checkers.

Graphs are immutable after construction and safe to share. Neighborhoods are
kept both as sorted tuples and as integer bitmasks; all set-heavy work
(common neighborhoods, subset enumeration) runs on the bitmasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence


def _popcount_select(mask: int, k: int) -> int:
    """Index of the k-th (0-based) set bit of mask."""
    idx = 0
    while True:
        chunk = mask & 0xFFFFFFFF
        c = chunk.bit_count()
        if k < c:
            while True:
                if mask & 1:
                    if k == 0:
                        return idx
                    k -= 1
                mask >>= 1
                idx += 1
        k -= c
        mask >>= 32
        idx += 32


def bits(mask: int) -> list[int]:
    """Set bits of mask as a sorted list of indices."""
    out = []
    idx = 0
    while mask:
        if mask & 1:
            out.append(idx)
        mask >>= 1
        idx += 1
    return out


class Graph:
    """Simple undirected graph on vertices 0..n-1.

    Invariants: no self-loops, no duplicate edges, symmetric adjacency;
    edge_count is half the sum of adjacency list lengths.
    """

    __slots__ = ("n", "adj", "adj_mask", "edge_count")

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        self.n = n
        masks = [0] * n
        m = 0
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if masks[u] >> v & 1:
                raise ValueError(f"duplicate edge ({u},{v})")
            masks[u] |= 1 << v
            masks[v] |= 1 << u
            m += 1
        self.adj_mask = tuple(masks)
        self.adj = tuple(tuple(bits(mk)) for mk in masks)
        self.edge_count = m

    # -- basic queries ----------------------------------------------------

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adj_mask[u] >> v & 1)

    def degree(self, v: int) -> int:
        return len(self.adj[v])

    def edges(self) -> list[tuple[int, int]]:
        """All edges as sorted (u, v) pairs with u < v."""
        return [(u, v) for u in range(self.n) for v in self.adj[u] if u < v]

    def density(self) -> Fraction:
        """Exact density e / C(n,2); zero for n < 2."""
        if self.n < 2:
            return Fraction(0)
        return Fraction(self.edge_count, self.n * (self.n - 1) // 2)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self.adj_mask == other.adj_mask
        )

    def __hash__(self) -> int:
        return hash((self.n, self.adj_mask))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.edge_count})"

    # -- derived graphs ---------------------------------------------------

    def without_edges(self, removed: Iterable[tuple[int, int]]) -> "Graph":
        """Graph with the given edges removed; raises if one is absent."""
        gone = set()
        for u, v in removed:
            if not self.has_edge(u, v):
                raise ValueError(f"edge ({u},{v}) not present")
            gone.add((min(u, v), max(u, v)))
        return Graph(self.n, [e for e in self.edges() if e not in gone])

    def union_edges(self, other: "Graph") -> "Graph":
        """Edge-disjoint union with a graph on the same vertex set."""
        if other.n != self.n:
            raise ValueError("vertex-set mismatch")
        return Graph(self.n, self.edges() + other.edges())


def complete_graph(n: int) -> Graph:
    return Graph(n, combinations(range(n), 2))


def empty_graph(n: int) -> Graph:
    return Graph(n, [])


def gnp_random_graph(n: int, p: float, rng) -> Graph:
    """Erdos-Renyi G(n, p) with independent edge coins from rng."""
    return Graph(n, [e for e in combinations(range(n), 2) if rng.random() < p])


# -- edge-list text format -------------------------------------------------
#
# First line "n m", then m lines "u v" with 0 <= u < v < n.


def write_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.edge_count}"]
    lines.extend(f"{u} {v}" for u, v in g.edges())
    return "\n".join(lines) + "\n"


def read_edge_list(text: str) -> Graph:
    rows = [ln for ln in (s.strip() for s in text.splitlines()) if ln]
    if not rows:
        raise ValueError("empty edge-list input")
    head = rows[0].split()
    if len(head) != 2:
        raise ValueError("header must be 'n m'")
    n, m = int(head[0]), int(head[1])
    if len(rows) - 1 != m:
        raise ValueError(f"expected {m} edge lines, got {len(rows) - 1}")
    edges = []
    for ln in rows[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ValueError(f"bad edge line: {ln!r}")
        u, v = int(parts[0]), int(parts[1])
        if not (0 <= u < v < n):
            raise ValueError(f"edge line {ln!r} violates 0 <= u < v < n")
        edges.append((u, v))
    return Graph(n, edges)  # Graph() rejects duplicates


# -- degeneracy ------------------------------------------------------------


@dataclass(frozen=True)
class DegeneracyOrder:
    """A vertex order with all left-degrees at most D."""

    order: tuple[int, ...]
    D: int

    def position(self) -> dict[int, int]:
        return {v: i for i, v in enumerate(self.order)}


def degeneracy_order(g: Graph) -> DegeneracyOrder:
    """Min-degree peeling order (ties by smallest label), reversed.

    The returned D is the true degeneracy of g: the max degree seen at
    removal time, which equals max over subgraphs of the min degree.
    """
    n = g.n
    deg = [len(g.adj[v]) for v in range(n)]
    alive = [True] * n
    # bucket queue over degrees
    buckets: list[set[int]] = [set() for _ in range(n + 1)]
    for v in range(n):
        buckets[deg[v]].add(v)
    removal = []
    D = 0
    cur = 0
    for _ in range(n):
        while cur <= n and not buckets[cur]:
            cur += 1
        v = min(buckets[cur])
        buckets[cur].remove(v)
        alive[v] = False
        D = max(D, deg[v])
        removal.append(v)
        for u in g.adj[v]:
            if alive[u]:
                buckets[deg[u]].remove(u)
                deg[u] -= 1
                buckets[deg[u]].add(u)
        if cur > 0:
            cur -= 1
    removal.reverse()
    return DegeneracyOrder(order=tuple(removal), D=D)


def left_degrees(g: Graph, order: Sequence[int]) -> list[int]:
    """Left-degree of each position under the given order."""
    seen = 0
    out = []
    for v in order:
        out.append((g.adj_mask[v] & seen).bit_count())
        seen |= 1 << v
    return out


def is_degenerate_order(g: Graph, order: Sequence[int], D: int) -> bool:
    if sorted(order) != list(range(g.n)):
        return False
    return max(left_degrees(g, order), default=0) <= D


# -- common neighborhoods and quasirandomness --------------------------------


def common_neighbourhood(g: Graph, S: Iterable[int]) -> set[int]:
    """Vertices adjacent to every member of S; all of V for S = empty."""
    mask = (1 << g.n) - 1
    for s in S:
        if not 0 <= s < g.n:
            raise ValueError(f"vertex {s} out of range")
        mask &= g.adj_mask[s]
    return set(bits(mask))


@dataclass(frozen=True)
class QuasirandomReport:
    """Worst relative deviation of common-neighborhood sizes from p^|S| n."""

    density: Fraction
    codensity: Fraction | None
    level: int
    worst_ratio_error: float
    witness: tuple[int, ...]
    witness_R: tuple[int, ...] | None
    degenerate: bool
    mode: str  # "exact" | "sampled"

    def holds(self, alpha: float) -> bool:
        return not self.degenerate and self.worst_ratio_error <= alpha


def _ratio_error(count: int, target: float) -> float:
    if target > 0:
        return abs(count - target) / target
    return 0.0 if count == 0 else math.inf


def _subset_stream(n: int, k: int, mode: str, samples: int, rng):
    """Nonempty subsets of range(n) with size <= k: all of them, or sampled."""
    if mode == "exact":
        for ell in range(1, k + 1):
            yield from combinations(range(n), ell)
    else:
        for _ in range(samples):
            ell = rng.randint(1, k)
            yield tuple(sorted(rng.sample(range(n), ell)))


def check_quasirandom(
    g: Graph,
    alpha: float,
    k: int,
    mode: str = "exact",
    samples: int | None = None,
    rng=None,
) -> QuasirandomReport:
    """Worst error of |N(S)| against p^|S| n over subsets S with |S| <= k.

    Exact mode enumerates all subsets (caller keeps n^k feasible); sampled
    mode draws `samples` uniform subsets (default 10*n*k) from rng.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > g.n:
        raise ValueError("k exceeds vertex count")
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        if samples is None:
            samples = 10 * g.n * k
    p = g.density()
    pf = float(p)
    degenerate = g.edge_count == 0
    worst = 0.0
    witness: tuple[int, ...] = ()
    for S in _subset_stream(g.n, k, mode, samples or 0, rng):
        mask = (1 << g.n) - 1
        for s in S:
            mask &= g.adj_mask[s]
        err = _ratio_error(mask.bit_count(), pf ** len(S) * g.n)
        if err > worst:
            worst = err
            witness = S
            if worst == math.inf:
                break
    return QuasirandomReport(
        density=p,
        codensity=None,
        level=k,
        worst_ratio_error=worst,
        witness=witness,
        witness_R=None,
        degenerate=degenerate,
        mode=mode,
    )


def check_coquasirandom(
    f: Graph,
    f_star: Graph,
    alpha: float,
    L: int,
    mode: str = "exact",
    samples: int | None = None,
    rng=None,
) -> QuasirandomReport:
    """Worst error of |N_F(R) cap N_F*(S\\R)| against p^|R| (p*)^|S\\R| n.

    f and f_star must live on the same vertex set and share no edge.
    """
    if f.n != f_star.n:
        raise ValueError("vertex-set mismatch")
    for u in range(f.n):
        if f.adj_mask[u] & f_star.adj_mask[u]:
            v = bits(f.adj_mask[u] & f_star.adj_mask[u])[0]
            raise ValueError(f"graphs share edge ({u},{v})")
    if L < 1:
        raise ValueError("L must be >= 1")
    if mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs an rng")
        if samples is None:
            samples = 10 * f.n * L
    p = f.density()
    ps = f_star.density()
    pf, psf = float(p), float(ps)
    full = (1 << f.n) - 1
    worst = 0.0
    witness: tuple[int, ...] = ()
    witness_R: tuple[int, ...] = ()
    for S in _subset_stream(f.n, L, mode, samples or 0, rng):
        for r in range(1 << len(S)):
            R = tuple(S[i] for i in range(len(S)) if r >> i & 1)
            mask = full
            for s in R:
                mask &= f.adj_mask[s]
            for s in S:
                if s not in R:
                    mask &= f_star.adj_mask[s]
            target = pf ** len(R) * psf ** (len(S) - len(R)) * f.n
            err = _ratio_error(mask.bit_count(), target)
            if err > worst:
                worst = err
                witness = S
                witness_R = R
    return QuasirandomReport(
        density=p,
        codensity=ps,
        level=L,
        worst_ratio_error=worst,
        witness=witness,
        witness_R=witness_R,
        degenerate=(f.edge_count == 0 or f_star.edge_count == 0),
        mode=mode,
    )
