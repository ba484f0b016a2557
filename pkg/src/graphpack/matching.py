"""Bipartite matching machinery: Hopcroft-Karp maximum matching, exhaustive
perfect-matching enumeration, and uniform perfect-matching samplers (exact
via enumeration, approximate via a Broder-style switch chain through
near-perfect matchings).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass


class EnumerationOverflow(Exception):
    """Exact enumeration exceeded its result budget."""


@dataclass(frozen=True)
class BipartiteGraph:
    """Bipartite graph; adj[u] lists right-side neighbors of left vertex u."""

    nleft: int
    nright: int
    adj: tuple[tuple[int, ...], ...]

    @classmethod
    def from_edges(cls, nleft: int, nright: int, edges) -> "BipartiteGraph":
        lists: list[set[int]] = [set() for _ in range(nleft)]
        for u, w in edges:
            if not (0 <= u < nleft and 0 <= w < nright):
                raise ValueError(f"edge ({u},{w}) out of range")
            lists[u].add(w)
        return cls(nleft, nright, tuple(tuple(sorted(s)) for s in lists))

    def edge_count(self) -> int:
        return sum(len(a) for a in self.adj)

    def edges(self) -> list[tuple[int, int]]:
        return [(u, w) for u in range(self.nleft) for w in self.adj[u]]

    def right_adj(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.nright)]
        for u in range(self.nleft):
            for w in self.adj[u]:
                out[w].append(u)
        return out

    def degree_left(self, u: int) -> int:
        return len(self.adj[u])

    def degree_right(self, w: int) -> int:
        return sum(1 for u in range(self.nleft) if w in set(self.adj[u]))


NIL = -1


def hopcroft_karp(g: BipartiteGraph) -> tuple[list[int], list[int], int]:
    """Maximum matching; returns (match_left, match_right, size)."""
    match_l = [NIL] * g.nleft
    match_r = [NIL] * g.nright
    inf = g.nleft + 1
    dist = [0] * (g.nleft + 1)  # dist[nleft] plays the NIL role

    def bfs() -> bool:
        q = deque()
        for u in range(g.nleft):
            if match_l[u] == NIL:
                dist[u] = 0
                q.append(u)
            else:
                dist[u] = inf
        dist[g.nleft] = inf
        while q:
            u = q.popleft()
            if dist[u] < dist[g.nleft]:
                for w in g.adj[u]:
                    nxt = match_r[w]
                    idx = g.nleft if nxt == NIL else nxt
                    if dist[idx] == inf:
                        dist[idx] = dist[u] + 1
                        if nxt != NIL:
                            q.append(nxt)
        return dist[g.nleft] != inf

    def dfs(u: int) -> bool:
        for w in g.adj[u]:
            nxt = match_r[w]
            idx = g.nleft if nxt == NIL else nxt
            if dist[idx] == dist[u] + 1:
                if nxt == NIL or dfs(nxt):
                    match_l[u] = w
                    match_r[w] = u
                    return True
        dist[u] = inf
        return False

    size = 0
    while bfs():
        for u in range(g.nleft):
            if match_l[u] == NIL and dfs(u):
                size += 1
    return match_l, match_r, size


def enumerate_perfect_matchings(
    g: BipartiteGraph, limit: int = 500_000
) -> list[tuple[int, ...]]:
    """All perfect matchings as tuples (right image per left vertex).

    Backtracking on the most-constrained free left vertex; raises
    EnumerationOverflow past `limit` results.
    """
    if g.nleft != g.nright:
        return []
    n = g.nleft
    masks = [0] * n
    for u in range(n):
        for w in g.adj[u]:
            masks[u] |= 1 << w
    out: list[tuple[int, ...]] = []
    assign = [NIL] * n

    def rec(placed: int, used: int) -> None:
        if placed == n:
            out.append(tuple(assign))
            if len(out) > limit:
                raise EnumerationOverflow(f"more than {limit} matchings")
            return
        # most-constrained unassigned left vertex
        best, best_free, best_cnt = -1, 0, n + 1
        for u in range(n):
            if assign[u] == NIL:
                free = masks[u] & ~used
                c = free.bit_count()
                if c == 0:
                    return
                if c < best_cnt:
                    best, best_free, best_cnt = u, free, c
        u = best
        free = best_free
        while free:
            b = free & -free
            w = b.bit_length() - 1
            assign[u] = w
            rec(placed + 1, used | b)
            assign[u] = NIL
            free ^= b
        return

    rec(0, 0)
    return out


def count_perfect_matchings(g: BipartiteGraph, limit: int = 500_000) -> int:
    return len(enumerate_perfect_matchings(g, limit))


@dataclass(frozen=True)
class MatchingSample:
    """A sampled perfect matching: assignment[u] is the right image of u."""

    assignment: tuple[int, ...]
    sampler: str  # "exact" | "mcmc"
    mixing_steps: int = 0


def default_mcmc_budget(g: BipartiteGraph) -> int:
    e = g.edge_count()
    return max(200, int(50 * e * math.log(max(e, 2))))


class _BroderChain:
    """Switch chain on perfect and near-perfect matchings, uniform stationary.

    From a perfect matching, picking a matched edge drops it (one hole per
    side); from a near-perfect matching, an edge across the holes closes it
    and an edge at one hole slides that hole. All other picks idle.
    """

    def __init__(self, g: BipartiteGraph, match_l: list[int], rng):
        self.g = g
        self.rng = rng
        self.edges = g.edges()
        if not self.edges:
            raise ValueError("cannot run the chain on an empty graph")
        self.match_l = list(match_l)
        self.match_r = [NIL] * g.nright
        for u, w in enumerate(match_l):
            if w != NIL:
                self.match_r[w] = u
        self.hole_l = next((u for u, w in enumerate(match_l) if w == NIL), NIL)
        self.hole_r = next(
            (w for w in range(g.nright) if self.match_r[w] == NIL), NIL
        )
        self.last_perfect = (
            tuple(self.match_l) if self.hole_l == NIL else None
        )

    def step(self) -> None:
        u, w = self.edges[self.rng.randrange(len(self.edges))]
        ml, mr = self.match_l, self.match_r
        if self.hole_l == NIL:  # perfect state
            if ml[u] == w:
                ml[u] = NIL
                mr[w] = NIL
                self.hole_l, self.hole_r = u, w
            return
        if u == self.hole_l and w == self.hole_r:
            ml[u] = w
            mr[w] = u
            self.hole_l = self.hole_r = NIL
            self.last_perfect = tuple(ml)
        elif u == self.hole_l:
            z = mr[w]  # w is matched since w != hole_r
            ml[z] = NIL
            ml[u] = w
            mr[w] = u
            self.hole_l = z
        elif w == self.hole_r:
            y = ml[u]
            mr[y] = NIL
            ml[u] = w
            mr[w] = u
            self.hole_r = y

    def run(self, steps: int) -> None:
        for _ in range(steps):
            self.step()


def sample_perfect_matching(
    g: BipartiteGraph,
    mode: str = "auto",
    budget: int | None = None,
    rng=None,
    exact_cap: int = 12,
    limit: int = 500_000,
) -> MatchingSample | None:
    """One (approximately) uniform perfect matching, or None if none exists.

    exact: enumerate all matchings and pick uniformly (sides <= exact_cap).
    mcmc: run the switch chain for `budget` steps from a Hopcroft-Karp
    matching and return the last perfect state visited.
    auto: exact below the cap, falling back to mcmc if enumeration blows up.
    """
    if rng is None:
        raise ValueError("an rng is required")
    if g.nleft != g.nright:
        return None
    if g.nleft == 0:
        return MatchingSample(assignment=(), sampler="exact")
    if mode not in ("auto", "exact", "mcmc"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and g.nleft > exact_cap:
        raise ValueError(
            f"exact mode capped at side size {exact_cap}, got {g.nleft}"
        )
    use_exact = mode == "exact" or (mode == "auto" and g.nleft <= exact_cap)
    if use_exact:
        try:
            all_pm = enumerate_perfect_matchings(g, limit)
        except EnumerationOverflow:
            if mode == "exact":
                raise
            use_exact = False
        else:
            if not all_pm:
                return None
            return MatchingSample(
                assignment=all_pm[rng.randrange(len(all_pm))], sampler="exact"
            )
    match_l, _, size = hopcroft_karp(g)
    if size < g.nleft:
        return None
    steps = default_mcmc_budget(g) if budget is None else budget
    chain = _BroderChain(g, match_l, rng)
    chain.run(steps)
    return MatchingSample(
        assignment=chain.last_perfect, sampler="mcmc", mixing_steps=steps
    )


def sample_matchings_mcmc(
    g: BipartiteGraph,
    count: int,
    rng,
    burn: int | None = None,
    thin: int | None = None,
) -> list[tuple[int, ...]]:
    """Correlated bulk samples from one long chain (burn-in, then thinning)."""
    match_l, _, size = hopcroft_karp(g)
    if size < g.nleft or g.nleft != g.nright:
        raise ValueError("graph has no perfect matching")
    chain = _BroderChain(g, match_l, rng)
    chain.run(default_mcmc_budget(g) if burn is None else burn)
    if thin is None:
        thin = max(10, 2 * g.edge_count())
    out = []
    for _ in range(count):
        chain.run(thin)
        out.append(chain.last_perfect)
    return out
