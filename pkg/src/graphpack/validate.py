"""Exact packing validation and a brute-force oracle packer for tiny
instances. The validator never raises on bad packings; violations are
report content with witnesses.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Graph, degeneracy_order


@dataclass(frozen=True)
class PackingReport:
    ok: bool
    perfect: bool
    violation: tuple | None  # (kind, witness...) of the first failure
    used_edges: int
    total_guest_edges: int


def validate_packing(hhat: Graph, guests: list[Graph], maps) -> PackingReport:
    """Check that maps give pairwise edge-disjoint embeddings into hhat.

    Checks, in order: per-guest injectivity, guest edges landing on host
    edges, and cross-guest edge-disjointness. The packing is perfect iff it
    is valid and the guests' edges exactly exhaust the host's.
    """
    total = sum(g.edge_count for g in guests)

    def report(violation):
        return PackingReport(
            ok=False,
            perfect=False,
            violation=violation,
            used_edges=0,
            total_guest_edges=total,
        )

    if len(maps) != len(guests):
        return report(("map-count", len(maps), len(guests)))
    used: set[tuple[int, int]] = set()
    for i, (g, phi) in enumerate(zip(guests, maps)):
        if len(phi) < g.n:
            return report(("map-incomplete", i, len(phi), g.n))
        images = list(phi[: g.n])
        if any(not 0 <= v < hhat.n for v in images):
            return report(("map-out-of-range", i))
        if len(set(images)) != g.n:
            return report(("not-injective", i))
        for x, y in g.edges():
            u, v = phi[x], phi[y]
            if not hhat.has_edge(u, v):
                return report(("non-edge", i, (x, y), (u, v)))
            key = (min(u, v), max(u, v))
            if key in used:
                return report(("edge-reused", i, key))
            used.add(key)
    return PackingReport(
        ok=True,
        perfect=len(used) == hhat.edge_count,
        violation=None,
        used_edges=len(used),
        total_guest_edges=total,
    )


# ---------------------------------------------------------------------------
# brute-force oracle


@dataclass(frozen=True)
class BruteForceResult:
    status: str  # "sat" | "unsat" | "timeout"
    maps: tuple[tuple[int, ...], ...] | None
    nodes: int


class _Budget(Exception):
    pass


def brute_force_pack(
    guests: list[Graph], host: Graph, limit: int = 2_000_000
) -> BruteForceResult:
    """Exhaustive search for an edge-disjoint embedding of all guests.

    Backtracks over guests in order, placing each guest's vertices along a
    degeneracy order with edge-disjointness pruning. "unsat" is exact when
    the search completes; exceeding the node budget yields "timeout".
    Intended for host sizes up to ~8.
    """
    if sum(g.edge_count for g in guests) > host.edge_count:
        return BruteForceResult(status="unsat", maps=None, nodes=0)
    for g in guests:
        if g.n > host.n:
            return BruteForceResult(status="unsat", maps=None, nodes=0)
    used: set[tuple[int, int]] = set()
    orders = [degeneracy_order(g).order for g in guests]
    maps: list[list[int]] = [[-1] * g.n for g in guests]
    nodes = 0

    def place(gi: int, pos: int, taken: int) -> bool:
        nonlocal nodes
        if gi == len(guests):
            return True
        g = guests[gi]
        if pos == g.n:
            return place(gi + 1, 0, 0)
        order = orders[gi]
        x = order[pos]
        placed_nbrs = [y for y in g.adj[x] if maps[gi][y] != -1]
        for v in range(host.n):
            if taken >> v & 1:
                continue
            new_edges = []
            fits = True
            for y in placed_nbrs:
                u = maps[gi][y]
                if not host.has_edge(u, v):
                    fits = False
                    break
                key = (min(u, v), max(u, v))
                if key in used:
                    fits = False
                    break
                new_edges.append(key)
            if not fits or len(set(new_edges)) != len(new_edges):
                continue
            nodes += 1
            if nodes > limit:
                raise _Budget()
            maps[gi][x] = v
            used.update(new_edges)
            if place(gi, pos + 1, taken | 1 << v):
                return True
            maps[gi][x] = -1
            used.difference_update(new_edges)
        return False

    try:
        found = place(0, 0, 0)
    except _Budget:
        return BruteForceResult(status="timeout", maps=None, nodes=nodes)
    if not found:
        return BruteForceResult(status="unsat", maps=None, nodes=nodes)
    return BruteForceResult(
        status="sat",
        maps=tuple(tuple(m) for m in maps),
        nodes=nodes,
    )
