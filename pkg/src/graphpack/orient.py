"""Edge orientations: uniform random orientation and the switch-based repair
that drives every vertex's out-degree to a prescribed target.

Each switch picks an overloaded vertex x, an underloaded vertex y, and a
middle vertex m with x->m and m->y, then reverses both edges. The total
potential sum |deg+(v) - w(v)| drops by exactly 2 per switch, and no
vertex's potential ever changes sign or grows.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Graph, _popcount_select, bits


class OrientationFailure(Exception):
    """Switch repair ran out of middle vertices or exceeded the flip budget."""


@dataclass(frozen=True)
class OrientedGraph:
    """An orientation of a base graph: one direction per edge."""

    base: Graph
    out_mask: tuple[int, ...]

    def out_degree(self, v: int) -> int:
        return self.out_mask[v].bit_count()

    def out_neighbors(self, v: int) -> list[int]:
        return bits(self.out_mask[v])

    def in_mask(self, v: int) -> int:
        return self.base.adj_mask[v] & ~self.out_mask[v]

    def directed(self, u: int, v: int) -> bool:
        """True iff the edge uv is oriented u -> v."""
        if not self.base.has_edge(u, v):
            raise ValueError(f"({u},{v}) is not an edge")
        return bool(self.out_mask[u] >> v & 1)

    def check(self) -> None:
        for u in range(self.base.n):
            both = self.out_mask[u] & ~self.base.adj_mask[u]
            if both:
                raise AssertionError("out-edge outside the base graph")
        total = sum(m.bit_count() for m in self.out_mask)
        if total != self.base.edge_count:
            raise AssertionError("out-degrees do not sum to edge count")
        for u, v in self.base.edges():
            fwd = self.out_mask[u] >> v & 1
            bwd = self.out_mask[v] >> u & 1
            if fwd + bwd != 1:
                raise AssertionError(f"edge ({u},{v}) oriented {fwd + bwd} times")


def random_orientation(h: Graph, rng) -> OrientedGraph:
    """Each edge independently gets a uniform direction."""
    out = [0] * h.n
    for u, v in h.edges():
        if rng.getrandbits(1):
            out[u] |= 1 << v
        else:
            out[v] |= 1 << u
    return OrientedGraph(base=h, out_mask=tuple(out))


@dataclass
class SwitchStats:
    rounds: int
    direct_flips: int
    max_changed_edges: int
    end_uses: list[int]
    middle_uses: list[int]


def orientation_switch(
    h: Graph,
    h0: OrientedGraph,
    w,
    flip_cap: float,
    rng,
    debug: bool = False,
) -> tuple[OrientedGraph, SwitchStats]:
    """Repair h0 until deg+(v) = w(v) for every v, via 2-path switches.

    End vertices are argmax/argmin of the potential (ties toward smaller
    labels); the middle vertex is uniform over N+(x) cap N-(y). When that
    set is empty but the edge x->y itself exists, the edge is flipped
    directly (the 2-path switch cannot handle such degenerate hosts).

    Halts with OrientationFailure when any vertex has more than
    flip_cap * n edges oriented differently from h0 (a retryable outcome),
    or when neither a middle vertex nor a direct edge is available.
    Raises ValueError when the weights are infeasible (a fault).
    """
    n = h.n
    if h0.base != h:
        raise ValueError("h0 must orient h")
    if len(w) != n:
        raise ValueError("need one weight per vertex")
    if any(x < 0 for x in w):
        raise ValueError("weights must be nonnegative")
    if sum(w) != h.edge_count:
        raise ValueError(
            f"weight sum {sum(w)} != edge count {h.edge_count}"
        )
    out = list(h0.out_mask)
    phi = [out[v].bit_count() - w[v] for v in range(n)]
    total = sum(abs(x) for x in phi)
    assert total % 2 == 0
    changed = [0] * n  # edges at v oriented differently from h0
    cap = flip_cap * n
    stats = SwitchStats(
        rounds=0,
        direct_flips=0,
        max_changed_edges=0,
        end_uses=[0] * n,
        middle_uses=[0] * n,
    )
    sign0 = [0 if x == 0 else (1 if x > 0 else -1) for x in phi]

    def flip(a: int, b: int) -> None:
        """Reverse the edge a->b (must currently be oriented a->b)."""
        out[a] &= ~(1 << b)
        out[b] |= 1 << a
        # toggled once: now differs from h0 iff h0 had a->b
        delta = 1 if (h0.out_mask[a] >> b & 1) else -1
        changed[a] += delta
        changed[b] += delta

    rounds = total // 2
    for _ in range(rounds):
        worst = max(changed)
        stats.max_changed_edges = max(stats.max_changed_edges, worst)
        if worst > cap:
            raise OrientationFailure(
                f"a vertex changed {worst} edges, budget {cap:.1f}"
            )
        x = min(range(n), key=lambda v: (-phi[v], v))
        y = min(range(n), key=lambda v: (phi[v], v))
        assert phi[x] > 0 and phi[y] < 0
        mid = out[x] & h.adj_mask[y] & ~out[y]
        if mid:
            m = _popcount_select(mid, rng.randrange(mid.bit_count()))
            flip(x, m)
            flip(m, y)
            stats.middle_uses[m] += 1
        elif out[x] >> y & 1:
            flip(x, y)
            stats.direct_flips += 1
        else:
            raise OrientationFailure(
                f"no middle vertex between {x} and {y}"
            )
        phi[x] -= 1
        phi[y] += 1
        stats.end_uses[x] += 1
        stats.end_uses[y] += 1
        stats.rounds += 1
        if debug:
            new_total = sum(abs(v) for v in phi)
            if new_total != total - 2:
                raise AssertionError("potential did not drop by exactly 2")
            total = new_total
            for v in range(n):
                if phi[v] != out[v].bit_count() - w[v]:
                    raise AssertionError(f"potential of {v} out of sync")
                if phi[v] * sign0[v] < 0:
                    raise AssertionError(f"potential of {v} changed sign")
        else:
            total -= 2
    result = OrientedGraph(base=h, out_mask=tuple(out))
    if debug:
        result.check()
        for v in range(n):
            if result.out_degree(v) != w[v]:
                raise AssertionError(f"vertex {v}: deg+ != target")
    return result, stats
