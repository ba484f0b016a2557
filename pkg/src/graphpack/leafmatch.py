"""Leaf matching graphs and the sequential leaf-matching loop.

After the almost-perfect stage, every special guest has omitted leaves
dangling at the host images of their parents. For each host vertex r the
leaf matching graph pairs the leaves dangling at r with r's out-neighbors
in the repaired orientation; edges avoid host vertices already used by the
leaf's own guest. Sampling a perfect matching per vertex and knocking out
newly-conflicting edges from later graphs completes the packing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .matching import BipartiteGraph, sample_perfect_matching
from .orient import OrientedGraph
from .prep import GuestSequence, WeightMap


class MatchLeavesFailure(Exception):
    """Some leaf matching graph lost its last perfect matching (retryable)."""

    def __init__(self, r: int):
        super().__init__(f"no perfect matching at host vertex {r}")
        self.r = r


@dataclass(frozen=True)
class LeafMatchingGraph:
    """Bipartite graph between leaves dangling at r and out-neighbors of r.

    left_labels[i] = (guest index s, omitted leaf vertex x); right[j] is a
    host vertex. base_adj holds generation-0 edges as right-index tuples:
    (x, u) is present iff u is outside the image of guest s's almost-perfect
    embedding.
    """

    r: int
    left_labels: tuple[tuple[int, int], ...]
    right: tuple[int, ...]
    base_adj: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return len(self.left_labels)

    def bipartite(self) -> BipartiteGraph:
        return BipartiteGraph(len(self.left_labels), len(self.right), self.base_adj)


def image_mask(embedding, count: int) -> int:
    mask = 0
    for x in range(count):
        mask |= 1 << embedding[x]
    return mask


def build_leaf_graphs(
    seq: GuestSequence,
    oriented: OrientedGraph,
    weights: WeightMap,
    embeddings,
) -> list[LeafMatchingGraph]:
    """One leaf matching graph per host vertex, sides of equal size.

    Requires the orientation to satisfy deg+(r) = w(r) everywhere; a side
    mismatch signals an orientation bug and raises.
    """
    n = seq.n
    dangling: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    im_masks: dict[int, int] = {}
    for s, guest in enumerate(seq.guests):
        if not guest.special:
            continue
        phi = embeddings[s]
        im_masks[s] = image_mask(phi, guest.embedded_vertex_count())
        for x in guest.omitted:
            r = phi[guest.leaf_parent[x]]
            dangling[r].append((s, x))
    out = []
    for r in range(n):
        left = tuple(sorted(dangling[r]))
        right = tuple(oriented.out_neighbors(r))
        if len(left) != weights.host[r] or len(right) != weights.host[r]:
            raise ValueError(
                f"host vertex {r}: {len(left)} leaves, {len(right)} "
                f"out-neighbors, weight {weights.host[r]}"
            )
        adj = []
        for s, _x in left:
            blocked = im_masks[s]
            adj.append(
                tuple(j for j, u in enumerate(right) if not blocked >> u & 1)
            )
        out.append(
            LeafMatchingGraph(
                r=r, left_labels=left, right=right, base_adj=tuple(adj)
            )
        )
    return out


# ---------------------------------------------------------------------------
# certifiers


@dataclass(frozen=True)
class MatchingPreconditions:
    m1_holds: bool
    m1_worst: float
    m1_witness: tuple
    m2_exceptional: int
    m2_budget: float
    m2_holds: bool
    m3_holds: bool
    m3_worst: float
    m3_witness: tuple

    @property
    def all_hold(self) -> bool:
        return self.m1_holds and self.m2_holds and self.m3_holds


def _side_degrees(g: BipartiteGraph) -> tuple[list[int], list[int]]:
    left = [len(a) for a in g.adj]
    right = [0] * g.nright
    for a in g.adj:
        for w in a:
            right[w] += 1
    return left, right


def check_matching_preconditions(
    F: BipartiteGraph,
    F_prime: BipartiteGraph,
    m: float,
    p: float,
    mu: float,
) -> MatchingPreconditions:
    """Check the degree (M1), codegree (M2) and erosion (M3) hypotheses.

    M1: deg_F(x) = (1 +- p) mu m on both sides. M2: codegrees on the left
    side equal (1 +- p) mu^2 m for all but m^2/log m pairs (the raw
    exceptional count is reported; the budget is asymptotic and generous at
    small m). M3: deg_F - deg_F' < 100 p m / mu^2 everywhere.
    """
    if F.nleft != F_prime.nleft or F.nright != F_prime.nright:
        raise ValueError("F' must span F")
    for u in range(F.nleft):
        if not set(F_prime.adj[u]) <= set(F.adj[u]):
            raise ValueError(f"F' has an edge at {u} missing from F")
    degL, degR = _side_degrees(F)
    degLp, degRp = _side_degrees(F_prime)
    lo, hi = (1 - p) * mu * m, (1 + p) * mu * m
    m1_worst, m1_witness = 0.0, ()
    for side, degs in (("U", degL), ("W", degR)):
        for i, dg in enumerate(degs):
            err = max(lo - dg, dg - hi, 0.0)
            if err > m1_worst:
                m1_worst, m1_witness = err, (side, i, dg)
    clo, chi = (1 - p) * mu * mu * m, (1 + p) * mu * mu * m
    masks = []
    for u in range(F.nleft):
        mk = 0
        for w in F.adj[u]:
            mk |= 1 << w
        masks.append(mk)
    exceptional = 0
    for u in range(F.nleft):
        for v in range(u + 1, F.nleft):
            cd = (masks[u] & masks[v]).bit_count()
            if not clo <= cd <= chi:
                exceptional += 1
    budget = m * m / math.log(m) if m > 1 else math.inf
    bound3 = 100 * p * m / (mu * mu)
    m3_holds = True
    m3_worst, m3_witness = 0.0, ()
    for side, degs, degsp in (("U", degL, degLp), ("W", degR, degRp)):
        for i, (a, b) in enumerate(zip(degs, degsp)):
            gap = a - b
            if gap >= bound3:
                m3_holds = False
                if gap > m3_worst:
                    m3_worst, m3_witness = gap, (side, i, gap)
    return MatchingPreconditions(
        m1_holds=m1_worst == 0.0,
        m1_worst=m1_worst,
        m1_witness=m1_witness,
        m2_exceptional=exceptional,
        m2_budget=budget,
        m2_holds=exceptional <= budget,
        m3_holds=m3_holds,
        m3_worst=m3_worst,
        m3_witness=m3_witness,
    )


@dataclass(frozen=True)
class DegreeCodegreeReport:
    degree_holds: bool
    degree_witness: tuple
    codegree_exceptional: int
    codegree_budget: float
    codegree_holds: bool

    @property
    def holds(self) -> bool:
        return self.degree_holds and self.codegree_holds


def check_degree_codegree(
    F: BipartiteGraph, eps: float, d: float
) -> DegreeCodegreeReport:
    """Degree-codegree regularity certificate.

    (i) every left vertex has degree > (d - eps)|W|; (ii) all but at most
    2 eps |U|^2 left pairs have codegree < (d + eps)^2 |W|.
    """
    if F.nleft != F.nright:
        raise ValueError("equal sides required")
    W = F.nright
    bound_i = (d - eps) * W
    degree_holds, witness = True, ()
    for u in range(F.nleft):
        if not len(F.adj[u]) > bound_i:
            degree_holds, witness = False, (u, len(F.adj[u]))
            break
    masks = []
    for u in range(F.nleft):
        mk = 0
        for w in F.adj[u]:
            mk |= 1 << w
        masks.append(mk)
    bound_ii = (d + eps) ** 2 * W
    exceptional = 0
    for u in range(F.nleft):
        for v in range(u + 1, F.nleft):
            if not (masks[u] & masks[v]).bit_count() < bound_ii:
                exceptional += 1
    budget = 2 * eps * F.nleft**2
    return DegreeCodegreeReport(
        degree_holds=degree_holds,
        degree_witness=witness,
        codegree_exceptional=exceptional,
        codegree_budget=budget,
        codegree_holds=exceptional <= budget,
    )


# ---------------------------------------------------------------------------
# the sequential loop


def _alive_rows(
    fg: LeafMatchingGraph, blocked: dict[int, int]
) -> tuple[tuple[int, ...], ...]:
    rows = []
    for i, (s, _x) in enumerate(fg.left_labels):
        blk = blocked.get(s, 0)
        rows.append(
            tuple(j for j in fg.base_adj[i] if not blk >> fg.right[j] & 1)
        )
    return tuple(rows)


def match_leaves(
    graphs: list[LeafMatchingGraph],
    seq: GuestSequence,
    mode: str = "auto",
    budget: int | None = None,
    rng=None,
    exact_cap: int = 12,
    trace: bool = False,
):
    """Assign omitted leaves vertex by vertex, thinning later graphs.

    Round r samples a perfect matching sigma_r in what remains of graph r;
    every edge of a later graph pointing a guest's leaf at a host vertex
    newly taken by that same guest is then removed. Returns one
    {(guest, leaf) -> host vertex} map per round, plus the per-round removal
    trace when trace=True. Raises MatchLeavesFailure(r) when a graph has no
    perfect matching left (retryable).
    """
    if rng is None:
        raise ValueError("an rng is required")
    blocked: dict[int, int] = {}
    sigmas: list[dict[tuple[int, int], int]] = []
    removals: list[list[tuple[int, tuple[int, int], int]]] = []
    for r, fg in enumerate(graphs):
        rows = _alive_rows(fg, blocked)
        bg = BipartiteGraph(len(fg.left_labels), len(fg.right), rows)
        sample = sample_perfect_matching(
            bg, mode=mode, budget=budget, rng=rng, exact_cap=exact_cap
        )
        if sample is None:
            raise MatchLeavesFailure(r)
        sigma = {
            fg.left_labels[i]: fg.right[j]
            for i, j in enumerate(sample.assignment)
        }
        sigmas.append(sigma)
        newly: dict[int, int] = {}
        for (s, _x), u in sigma.items():
            newly[s] = newly.get(s, 0) | 1 << u
        if trace:
            batch = []
            for k in range(r + 1, len(graphs)):
                later = graphs[k]
                live = _alive_rows(later, blocked)
                for i, (s, x) in enumerate(later.left_labels):
                    hit = newly.get(s, 0)
                    for j in live[i]:
                        if hit >> later.right[j] & 1:
                            batch.append((k, (s, x), later.right[j]))
            removals.append(batch)
        for s, mask in newly.items():
            blocked[s] = blocked.get(s, 0) | mask
    if trace:
        return sigmas, removals
    return sigmas


def assert_per_guest_injective(
    seq: GuestSequence, embeddings, sigmas
) -> None:
    """No omitted leaf may land on a vertex its own guest already uses."""
    taken: dict[int, set[int]] = {}
    for s, guest in enumerate(seq.guests):
        if guest.special:
            taken[s] = {
                embeddings[s][x]
                for x in range(guest.embedded_vertex_count())
            }
    for sigma in sigmas:
        for (s, x), u in sigma.items():
            if u in taken[s]:
                raise AssertionError(
                    f"guest {s}: leaf {x} landed on already-used vertex {u}"
                )
            taken[s].add(u)
