"""Guest preparation: turn an arbitrary guest family into the shape the
packing engine consumes.

Stages, in order:
  * compress        -- overlay many sparse guests into few denser ones
  * leaf omission   -- strip an independent leaf set from each special guest
  * padding         -- bring every guest to exactly n vertices, isolated
                       vertices last in the order
  * ordering        -- degeneracy order whose suffix is an independent set of
                       uniform degree (the completion tail)

Vertex identity is preserved throughout: omitted leaves stay as isolated
placeholder vertices in the stripped graph, so the stripped guest has the
same vertex count and the final assembly simply re-targets those ids.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .core import (
    DegeneracyOrder,
    Graph,
    degeneracy_order,
    left_degrees,
    read_edge_list,
)


class InsufficientLeavesError(ValueError):
    """A special guest cannot supply the required independent leaf set."""


# ---------------------------------------------------------------------------
# compression


@dataclass(frozen=True)
class Overlay:
    """One output of compress: a graph that edge-disjointly overlays inputs.

    members maps each covered input index to the vertex map (input vertex ->
    overlay vertex) it was packed with.
    """

    graph: Graph
    members: tuple[tuple[int, tuple[int, ...]], ...]


def _mergeable(g: Graph, n: int) -> bool:
    deg1 = sum(1 for v in range(g.n) if g.degree(v) >= 1)
    deg2 = sum(1 for v in range(g.n) if g.degree(v) >= 2)
    return deg1 <= 2 * n / 3 and deg2 <= n / 3


def _tripartition(g: Graph, n: int) -> tuple[list[int], list[int], list[int]]:
    """Split [n] into A (isolated), B (degree <= 1), C with |A| = |C|.

    C absorbs every degree >= 2 vertex and then one endpoint per
    degree-1/degree-1 edge, which minimizes matching edges left inside B.
    """
    if n % 3 == 2:
        a = n // 3 + 1
    else:
        a = n // 3
    b = n - 2 * a
    deg = [g.degree(v) if v < g.n else 0 for v in range(n)]
    high = [v for v in range(n) if deg[v] >= 2]
    if len(high) > a:
        raise ValueError("graph not mergeable: too many degree >= 2 vertices")
    C = list(high)
    taken = set(C)
    # break degree-1 matching edges by pulling one endpoint into C
    for v in range(n):
        if len(C) == a:
            break
        if deg[v] == 1 and v not in taken:
            u = g.adj[v][0]
            if deg[u] == 1 and u not in taken:
                C.append(v)
                taken.add(v)
    for v in range(n):
        if len(C) == a:
            break
        if deg[v] == 1 and v not in taken:
            C.append(v)
            taken.add(v)
    for v in range(n):
        if len(C) == a:
            break
        if deg[v] == 0 and v not in taken:
            C.append(v)
            taken.add(v)
    A = [v for v in range(n) if deg[v] == 0 and v not in taken][:a]
    taken.update(A)
    if len(A) < a:
        raise ValueError("graph not mergeable: too few isolated vertices")
    B = [v for v in range(n) if v not in taken]
    assert len(B) == b
    return A, B, C


def _matching_order(g: Graph, part: list[int]) -> list[int]:
    """Order part so matched pairs of g[part] are consecutive, singles last."""
    inside = set(part)
    paired = []
    seen = set()
    singles = []
    for v in sorted(part):
        if v in seen:
            continue
        mates = [u for u in g.adj[v] if u < g.n and u in inside and u not in seen]
        if mates:
            u = mates[0]
            paired.extend([v, u])
            seen.update((v, u))
        else:
            singles.append(v)
            seen.add(v)
    return paired + singles


def _merge(g1: Overlay, g2: Overlay, n: int) -> Overlay | None:
    """Pack g2 into g1 via the A/B/C tripartition; None if it cannot be done."""
    A1, B1, C1 = _tripartition(g1.graph, n)
    A2, B2, C2 = _tripartition(g2.graph, n)
    ord1 = _matching_order(g1.graph, B1)
    ord2 = _matching_order(g2.graph, B2)
    b = len(ord1)
    phi = {}
    for j, v in enumerate(ord2):
        phi[v] = ord1[(j + 1) % b] if b else v
    for x, y in zip(A2, C1):
        phi[x] = y
    for x, y in zip(C2, A1):
        phi[x] = y
    edges = set(g1.graph.edges())
    for u, v in g2.graph.edges():
        pu, pv = phi[u], phi[v]
        e = (min(pu, pv), max(pu, pv))
        if e in edges:
            return None  # only possible for tiny B parts
        edges.add(e)
    members = list(g1.members)
    for idx, vmap in g2.members:
        members.append((idx, tuple(phi[x] for x in vmap)))
    return Overlay(graph=Graph(n, sorted(edges)), members=tuple(members))


def compress(guests: list[Graph], n: int) -> list[Overlay]:
    """Overlay guests pairwise while two of them stay sparse enough.

    Two graphs merge while both have at most 2n/3 vertices of degree >= 1
    and at most n/3 of degree >= 2. The result is a packing of the inputs:
    every input edge appears exactly once across the overlays.
    """
    for g in guests:
        if g.n > n:
            raise ValueError(f"guest on {g.n} vertices exceeds host size {n}")
    items = [
        Overlay(
            graph=Graph(n, g.edges()),
            members=((i, tuple(range(g.n))),),
        )
        for i, g in enumerate(guests)
    ]
    while True:
        mergeable = [
            (sum(1 for v in range(n) if it.graph.degree(v) >= 1), k)
            for k, it in enumerate(items)
            if _mergeable(it.graph, n)
        ]
        if len(mergeable) < 2:
            break
        mergeable.sort()
        merged = None
        (_, i0) = mergeable[0]
        for _, j in mergeable[1:]:
            merged = _merge(items[i0], items[j], n)
            if merged is not None:
                items = [it for k, it in enumerate(items) if k not in (i0, j)]
                items.append(merged)
                break
        if merged is None:
            break
    return items


# ---------------------------------------------------------------------------
# independent uniform-degree tails


def uniform_independent_tail(
    g: Graph, D: int
) -> tuple[int, DegeneracyOrder, set[int]]:
    """A 2D-degenerate order ending in an independent set of uniform degree.

    Picks the largest degree bucket among degrees 0..2D (ties toward the
    smaller degree), thins it greedily to an independent set, and moves that
    set to the end of a degeneracy order. The set has at least
    (2D+1)^-3 v(g) vertices whenever v(g) >= (2D+1)^3.
    """
    buckets: dict[int, list[int]] = {d: [] for d in range(2 * D + 1)}
    for v in range(g.n):
        d = g.degree(v)
        if d <= 2 * D:
            buckets[d].append(v)
    d_star = max(range(2 * D + 1), key=lambda d: (len(buckets[d]), -d))
    tail: set[int] = set()
    blocked = 0
    for v in buckets[d_star]:
        if not (blocked >> v & 1):
            tail.add(v)
            blocked |= (1 << v) | g.adj_mask[v]
    base = degeneracy_order(g).order
    order = tuple(v for v in base if v not in tail) + tuple(sorted(tail))
    D_out = max(left_degrees(g, order), default=0)
    return d_star, DegeneracyOrder(order=order, D=D_out), tail


# ---------------------------------------------------------------------------
# guest sequences


@dataclass(frozen=True)
class OrderedGuest:
    """A guest graph prepared for the packing engine.

    graph lives on exactly n vertices; for special guests the omitted leaf
    edges are already stripped, with the omitted leaves kept as isolated
    placeholder vertices. input_edges always records the original guest
    (omitted leaf edges included) on its original input_n vertices.
    """

    graph: Graph
    order: DegeneracyOrder
    special: bool
    omitted: tuple[int, ...]
    leaf_parent: dict[int, int]
    input_n: int
    input_edges: tuple[tuple[int, int], ...]
    tail_size: int
    tail_degree: int
    tail_pad: int  # size of the final padding block (special guests)
    left_at: tuple[tuple[int, ...], ...] = field(repr=False, default=())

    @property
    def n(self) -> int:
        return self.graph.n

    def original_graph(self) -> Graph:
        return Graph(self.input_n, self.input_edges)

    def embedded_vertex_count(self) -> int:
        """Vertices carrying identity for the almost-perfect stage.

        For special guests this is n - floor(mu*n): the original guest plus
        its in-sequence padding, excluding the final padding to n.
        """
        return self.n - self.tail_pad


def _left_neighbor_table(g: Graph, order: tuple[int, ...]) -> tuple:
    pos = {v: i for i, v in enumerate(order)}
    table = []
    for i, v in enumerate(order):
        table.append(tuple(u for u in g.adj[v] if pos[u] < i))
    return tuple(table)


def _trailing_isolated(g: Graph, order: tuple[int, ...]) -> int:
    count = 0
    for v in reversed(order):
        if g.degree(v) != 0:
            break
        count += 1
    return count


def make_ordered_guest(
    graph: Graph,
    special: bool,
    omitted: tuple[int, ...],
    leaf_parent: dict[int, int],
    input_n: int,
    input_edges: tuple[tuple[int, int], ...],
    D: int,
    isolated_suffix: tuple[int, ...],
    tail_pad: int,
) -> OrderedGuest:
    """Order a padded guest: core degeneracy order, isolated suffix last.

    Guests without isolated vertices fall back to the uniform independent
    tail of degree d <= 2D; everyone else gets the degree-0 tail formed by
    the isolated suffix.
    """
    if isolated_suffix:
        suffix_set = set(isolated_suffix)
        base = [v for v in degeneracy_order(graph).order if v not in suffix_set]
        order = tuple(base) + tuple(isolated_suffix)
        tail_size = _trailing_isolated(graph, order)
        tail_degree = 0
        D_out = max(left_degrees(graph, order), default=0)
        dorder = DegeneracyOrder(order=order, D=D_out)
    else:
        tail_degree, dorder, tail = uniform_independent_tail(graph, D)
        tail_size = 0
        for v in reversed(dorder.order):
            if v in tail and graph.degree(v) == tail_degree:
                tail_size += 1
            else:
                break
    return OrderedGuest(
        graph=graph,
        order=dorder,
        special=special,
        omitted=omitted,
        leaf_parent=leaf_parent,
        input_n=input_n,
        input_edges=input_edges,
        tail_size=tail_size,
        tail_degree=tail_degree,
        left_at=_left_neighbor_table(graph, dorder.order),
        tail_pad=tail_pad,
    )


@dataclass(frozen=True)
class GuestSequence:
    """Prepared guests; the last floor(mu*n) are exactly the special ones."""

    guests: tuple[OrderedGuest, ...]
    n: int
    mu: Fraction
    nu: Fraction
    total_edges: int

    @property
    def special_count(self) -> int:
        return int(self.mu * self.n)

    @property
    def ell(self) -> int:
        return int(self.nu * self.n)

    def check(self) -> None:
        spec = self.special_count
        for i, g in enumerate(self.guests):
            want = i >= len(self.guests) - spec
            if g.special != want:
                raise ValueError(f"guest {i}: special flag misplaced")
            if g.graph.n != self.n:
                raise ValueError(f"guest {i}: not padded to n={self.n}")
        total = sum(len(g.input_edges) for g in self.guests)
        if total != self.total_edges:
            raise ValueError("total_edges does not match original guests")


@dataclass(frozen=True)
class RawGuest:
    graph: Graph
    special: bool


def _select_omitted(g: Graph, ell: int, rng) -> tuple[tuple[int, ...], dict[int, int]]:
    """ell independent leaves of g, uniform among valid greedy choices.

    Leaves are degree-1 vertices; independence only bites for single-edge
    components, where at most one endpoint may be selected.
    """
    leaves = [v for v in range(g.n) if g.degree(v) == 1]
    order = rng.sample(leaves, len(leaves)) if leaves else []
    chosen: list[int] = []
    blocked = 0
    for v in order:
        if len(chosen) == ell:
            break
        if blocked >> v & 1:
            continue
        chosen.append(v)
        blocked |= (1 << v) | g.adj_mask[v]
    if len(chosen) < ell:
        raise InsufficientLeavesError(
            f"guest has only {len(chosen)} selectable independent leaves, "
            f"needs {ell}"
        )
    chosen.sort()
    return tuple(chosen), {v: g.adj[v][0] for v in chosen}


def pad_graph(g: Graph, n: int) -> Graph:
    if g.n > n:
        raise ValueError(f"cannot pad {g.n} vertices down to {n}")
    return Graph(n, g.edges())


def build_subgraph_sequence(
    raw: list[RawGuest],
    n: int,
    mu: Fraction,
    nu: Fraction,
    D: int,
    rng,
) -> GuestSequence:
    """Build the packed-form sequence: omit leaves, pad, order.

    Special guests lose an independent set of ell = floor(nu*n) leaves
    (kept as isolated placeholders), get padded to n - floor(mu*n) and then
    to n, with all padding at the end of the order. Non-special guests are
    padded straight to n. ell = 0 leaves every guest's edges untouched.
    """
    mu = Fraction(mu)
    nu = Fraction(nu)
    spec_count = int(mu * n)
    ell = int(nu * n)
    flagged = [g for g in raw if g.special]
    if len(flagged) != spec_count:
        raise ValueError(
            f"{len(flagged)} guests flagged special, need floor(mu*n) = {spec_count}"
        )
    for i, g in enumerate(raw):
        want = i >= len(raw) - spec_count
        if g.special != want:
            raise ValueError("special guests must come last in the sequence")
    guests = []
    total = 0
    for g in raw:
        total += g.graph.edge_count
        if g.special:
            mid = n - spec_count
            if g.graph.n > mid:
                raise ValueError(
                    f"special guest has {g.graph.n} vertices, limit {mid}"
                )
            sized = pad_graph(g.graph, mid)
            omitted, parent = _select_omitted(sized, ell, rng)
            stripped = sized.without_edges(
                [(v, parent[v]) for v in omitted]
            )
            padded = pad_graph(stripped, n)
            own_iso = tuple(
                v
                for v in range(mid)
                if padded.degree(v) == 0 and v not in set(omitted)
            )
            suffix = own_iso + omitted + tuple(range(mid, n))
            guests.append(
                make_ordered_guest(
                    graph=padded,
                    special=True,
                    omitted=omitted,
                    leaf_parent=parent,
                    input_n=g.graph.n,
                    input_edges=tuple(g.graph.edges()),
                    D=D,
                    isolated_suffix=suffix,
                    tail_pad=spec_count,
                )
            )
        else:
            padded = pad_graph(g.graph, n)
            iso = tuple(v for v in range(n) if padded.degree(v) == 0)
            guests.append(
                make_ordered_guest(
                    graph=padded,
                    special=False,
                    omitted=(),
                    leaf_parent={},
                    input_n=g.graph.n,
                    input_edges=tuple(g.graph.edges()),
                    D=D,
                    isolated_suffix=iso,
                    tail_pad=0,
                )
            )
    return GuestSequence(
        guests=tuple(guests), n=n, mu=mu, nu=nu, total_edges=total
    )


# ---------------------------------------------------------------------------
# weights


@dataclass(frozen=True)
class WeightMap:
    """Omitted-leaf counts: per special guest per parent, and per host vertex."""

    per_guest: dict[int, dict[int, int]]
    host: tuple[int, ...]

    def total(self) -> int:
        return sum(self.host)


def guest_weights(guest: OrderedGuest) -> dict[int, int]:
    w: dict[int, int] = {}
    for leaf in guest.omitted:
        p = guest.leaf_parent[leaf]
        w[p] = w.get(p, 0) + 1
    return w


def compute_weights(
    seq: GuestSequence, embeddings: list[tuple[int, ...]]
) -> WeightMap:
    """Host-side dangling-leaf weights w(v) = sum over specials of w_s at v.

    embeddings[s] maps every vertex of guest s's padded graph to a host
    vertex; each special guest must be fully embedded.
    """
    if len(embeddings) != len(seq.guests):
        raise ValueError("one embedding per guest required")
    host = [0] * seq.n
    per_guest: dict[int, dict[int, int]] = {}
    for s, guest in enumerate(seq.guests):
        if not guest.special:
            continue
        phi = embeddings[s]
        if len(phi) < guest.embedded_vertex_count():
            raise ValueError(f"special guest {s} is not fully embedded")
        w = guest_weights(guest)
        per_guest[s] = w
        for x, cnt in w.items():
            host[phi[x]] += cnt
    return WeightMap(per_guest=per_guest, host=tuple(host))


# ---------------------------------------------------------------------------
# manifest format: JSON listing guest files, special flags, mu, nu, D


def load_manifest(path: str | Path) -> tuple[list[RawGuest], int, Fraction, Fraction, int]:
    path = Path(path)
    data = json.loads(path.read_text())
    n = int(data["n"])
    mu = Fraction(str(data["mu"]))
    nu = Fraction(str(data["nu"]))
    D = int(data["degeneracy"])
    raw = []
    for entry in data["guests"]:
        g = read_edge_list((path.parent / entry["path"]).read_text())
        raw.append(RawGuest(graph=g, special=bool(entry.get("special", False))))
    return raw, n, mu, nu, D


def save_manifest(
    path: str | Path,
    guest_files: list[tuple[str, bool]],
    n: int,
    mu: Fraction,
    nu: Fraction,
    D: int,
) -> None:
    data = {
        "n": n,
        "mu": str(mu),
        "nu": str(nu),
        "degeneracy": D,
        "guests": [{"path": p, "special": s} for p, s in guest_files],
    }
    Path(path).write_text(json.dumps(data, indent=2) + "\n")
