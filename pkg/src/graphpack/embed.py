"""Sequential uniform random embedding of a guest prefix into a host, and
the diet / codiet / cover pseudo-randomness diagnostics evaluated on the
evolving host minus the used image set.

Embedding failure (an empty candidate set) is a normal, retryable outcome
and is raised as EmbedFailure; the packer converts it into a trial restart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

from .core import Graph, _popcount_select, bits
from .prep import OrderedGuest


class EmbedFailure(Exception):
    """RandomEmbedding hit an empty free candidate set at order index t."""

    def __init__(self, t: int):
        super().__init__(f"empty candidate set at order index {t}")
        self.t = t


@dataclass
class PartialEmbedding:
    """Injective map of the first t order positions of a guest into a host.

    images is indexed by guest vertex (None where unembedded); used_mask is
    the bitmask of occupied host vertices.
    """

    guest_id: int
    n_host: int
    images: list[int | None]
    used_mask: int
    t: int

    @classmethod
    def empty(cls, guest_id: int, n_guest: int, n_host: int) -> "PartialEmbedding":
        return cls(
            guest_id=guest_id,
            n_host=n_host,
            images=[None] * n_guest,
            used_mask=0,
            t=0,
        )

    def image_of(self, x: int) -> int:
        v = self.images[x]
        if v is None:
            raise KeyError(f"guest vertex {x} not embedded")
        return v

    def used(self) -> set[int]:
        return set(bits(self.used_mask))

    def place(self, x: int, v: int) -> None:
        self.images[x] = v
        self.used_mask |= 1 << v
        self.t += 1


def candidate_mask(
    host_adj_mask, psi: PartialEmbedding, left_neighbors
) -> int:
    full = (1 << psi.n_host) - 1
    mask = full
    for u in left_neighbors:
        img = psi.images[u]
        if img is None:
            raise ValueError(f"left-neighbor {u} not embedded yet")
        mask &= host_adj_mask[img]
    return mask


def candidate_set(
    guest: OrderedGuest, host: Graph, psi: PartialEmbedding, x: int
) -> set[int]:
    """Common host neighborhood of the images of x's left-neighbors.

    All of V(host) when x has no left-neighbors. Does not exclude used
    vertices; callers subtract psi.used() themselves.
    """
    pos = guest.order.position()[x]
    return set(bits(candidate_mask(host.adj_mask, psi, guest.left_at[pos])))


def random_embedding(
    guest: OrderedGuest,
    host: Graph,
    t_star: int,
    rng,
    psi: PartialEmbedding | None = None,
    guest_id: int = 0,
) -> PartialEmbedding:
    """Embed order positions 0..t_star-1, each uniform on its free candidates.

    Raises EmbedFailure(t) when position t has no free candidate; this is a
    normal outcome, not a fault.
    """
    if t_star > guest.n:
        raise ValueError("t_star exceeds guest size")
    if host.n == 0:
        raise ValueError("host is empty")
    if psi is None:
        psi = PartialEmbedding.empty(guest_id, guest.n, host.n)
    order = guest.order.order
    for t in range(psi.t, t_star):
        free = candidate_mask(host.adj_mask, psi, guest.left_at[t]) & ~psi.used_mask
        c = free.bit_count()
        if c == 0:
            raise EmbedFailure(t)
        v = _popcount_select(free, rng.randrange(c))
        psi.place(order[t], v)
    return psi


# ---------------------------------------------------------------------------
# diet / codiet / cover condition diagnostics
#
# These are Theta(n^L) and off by default in production runs; the pipeline
# enables them at checkpoints when the diagnostics level asks for it.


@dataclass(frozen=True)
class ConditionReport:
    kind: str  # "diet" | "codiet" | "cover"
    beta: float
    params: dict
    holds: bool
    worst_violation: float
    witness: tuple
    degenerate: bool = False


def _subsets(n: int, L: int, mode: str, samples: int, rng):
    if mode == "exact":
        for ell in range(1, L + 1):
            yield from combinations(range(n), ell)
    else:
        for _ in range(samples):
            ell = rng.randint(1, L)
            yield tuple(sorted(rng.sample(range(n), ell)))


def diet_check(
    host: Graph,
    X: set[int],
    beta: float,
    L: int,
    mode: str = "exact",
    samples: int | None = None,
    rng=None,
) -> ConditionReport:
    """|N_H(S) \\ X| = (1 +- beta) p^|S| (n - |X|) for all S with |S| <= L."""
    x_mask = 0
    for v in X:
        if not 0 <= v < host.n:
            raise ValueError(f"vertex {v} out of range")
        x_mask |= 1 << v
    rest = host.n - len(X)
    p = float(host.density())
    if rest == 0:
        return ConditionReport(
            kind="diet",
            beta=beta,
            params={"L": L, "n_minus_X": 0},
            holds=False,
            worst_violation=math.inf,
            witness=(),
            degenerate=True,
        )
    if mode == "sampled" and samples is None:
        samples = 10 * host.n * L
    worst = 0.0
    witness: tuple = ()
    for S in _subsets(host.n, L, mode, samples or 0, rng):
        mask = (1 << host.n) - 1
        for s in S:
            mask &= host.adj_mask[s]
        count = (mask & ~x_mask).bit_count()
        target = p ** len(S) * rest
        err = abs(count - target) / target if target > 0 else (
            0.0 if count == 0 else math.inf
        )
        if err > worst:
            worst = err
            witness = S
    return ConditionReport(
        kind="diet",
        beta=beta,
        params={"L": L, "n_minus_X": rest},
        holds=worst <= beta,
        worst_violation=worst,
        witness=witness,
    )


def codiet_check(
    host: Graph,
    reservoir: Graph,
    X: set[int],
    beta: float,
    L: int,
    mode: str = "exact",
    samples: int | None = None,
    rng=None,
) -> ConditionReport:
    """Codiet inequality over all S (|S| <= L) and all R subset of S."""
    if host.n != reservoir.n:
        raise ValueError("vertex-set mismatch")
    for u in range(host.n):
        if host.adj_mask[u] & reservoir.adj_mask[u]:
            raise ValueError("host and reservoir share an edge")
    x_mask = 0
    for v in X:
        x_mask |= 1 << v
    rest = host.n - len(X)
    p = float(host.density())
    ps = float(reservoir.density())
    if rest == 0:
        return ConditionReport(
            kind="codiet",
            beta=beta,
            params={"L": L, "n_minus_X": 0},
            holds=False,
            worst_violation=math.inf,
            witness=(),
            degenerate=True,
        )
    if mode == "sampled" and samples is None:
        samples = 10 * host.n * L
    full = (1 << host.n) - 1
    worst = 0.0
    witness: tuple = ()
    for S in _subsets(host.n, L, mode, samples or 0, rng):
        for r in range(1 << len(S)):
            R = tuple(S[i] for i in range(len(S)) if r >> i & 1)
            mask = full
            for s in R:
                mask &= host.adj_mask[s]
            for s in S:
                if s not in R:
                    mask &= reservoir.adj_mask[s]
            count = (mask & ~x_mask).bit_count()
            target = p ** len(R) * ps ** (len(S) - len(R)) * rest
            err = abs(count - target) / target if target > 0 else (
                0.0 if count == 0 else math.inf
            )
            if err > worst:
                worst = err
                witness = (S, R)
    return ConditionReport(
        kind="codiet",
        beta=beta,
        params={"L": L, "n_minus_X": rest},
        holds=worst <= beta,
        worst_violation=worst,
        witness=witness,
    )


def cover_check(
    guest: OrderedGuest,
    host: Graph,
    psi: PartialEmbedding,
    i: int,
    eps: float,
    beta: float,
) -> ConditionReport:
    """Cover condition on the order window [i, i + eps*n).

    For each host vertex v and left-degree class d, the number of window
    positions x with v in N_H(psi(left-neighbors of x))) must be
    (1 +- beta) p^d |X_{i,d}| +- eps^2 n.
    """
    n = host.n
    width = int(eps * n)
    window = range(i, min(i + width, guest.n))
    p = float(host.density())
    full = (1 << n) - 1
    by_class: dict[int, list[int]] = {}
    for t in window:
        left = guest.left_at[t]
        for u in left:
            if psi.images[u] is None:
                raise ValueError(
                    f"left-neighbor {u} of window position {t} not embedded"
                )
        by_class.setdefault(len(left), []).append(t)
    worst = 0.0
    witness: tuple = ()
    holds = True
    for d, members in sorted(by_class.items()):
        counts = [0] * n
        for t in members:
            mask = full
            for u in guest.left_at[t]:
                mask &= host.adj_mask[psi.images[u]]
            for v in bits(mask):
                counts[v] += 1
        target = p**d * len(members)
        slack = beta * target + eps * eps * n
        for v in range(n):
            dev = abs(counts[v] - target)
            excess = dev - slack
            if excess > worst:
                worst = excess
                witness = (v, d)
            if excess > 0:
                holds = False
    return ConditionReport(
        kind="cover",
        beta=beta,
        params={"eps": eps, "i": i, "classes": sorted(by_class)},
        holds=holds,
        worst_violation=max(worst, 0.0),
        witness=witness,
    )
