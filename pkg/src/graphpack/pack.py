"""The sequential packing engine: reservoir split, per-guest random
embedding, spanning completion through the reservoir, and exact density
bookkeeping. Also the constant schedule, both the faithful reference
computation (log-space, since the constants are double-exponentially
impractical) and tame desk presets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import Graph, bits
from .embed import EmbedFailure, PartialEmbedding, random_embedding
from .matching import BipartiteGraph, hopcroft_karp
from .prep import GuestSequence, OrderedGuest


class PackFailure(Exception):
    """A guest could not be embedded or completed; retry with a fresh seed."""

    def __init__(self, s: int, t: int, why: str):
        super().__init__(f"guest {s} failed at order index {t}: {why}")
        self.s = s
        self.t = t


class CompletionFailure(Exception):
    """No perfect matching between the tail and the unused host vertices."""


# ---------------------------------------------------------------------------
# constant schedule


@dataclass(frozen=True)
class ConstantSchedule:
    """Named constants driving the engine and its diagnostics.

    The reference ("paper") schedule evaluates its error functions in log
    space: C is a double exponential, so alpha values underflow any float
    and only their logarithms (or even just log-log comparisons) are
    meaningful. alpha_rate_log and beta_rate_log store the logs of the
    exponential growth rates of alpha_x and beta_t.
    """

    kind: str
    D: int
    gamma: float
    n: int
    eta: float
    delta: float
    log_C: float
    log_Cprime: float
    alpha_base_log: float  # log alpha at x = 2n
    alpha_rate_log: float
    beta_rate_log: float
    log_eps: float
    log_c: float
    log_xi: float

    def log_alpha(self, x: float) -> float:
        coeff = (x - 2 * self.n) / self.n
        if coeff == 0:
            return self.alpha_base_log
        return self.alpha_base_log + math.exp(self.alpha_rate_log) * coeff

    def alpha(self, x: float) -> float:
        try:
            return math.exp(self.log_alpha(x))
        except OverflowError:
            return math.inf

    def log_beta(self, log_alpha: float, t: float) -> float:
        if t == 0:
            return log_alpha
        return log_alpha + math.exp(self.beta_rate_log) * t / self.n

    def beta(self, alpha: float, t: float) -> float:
        try:
            return math.exp(self.log_beta(math.log(alpha), t))
        except OverflowError:
            return math.inf


def constant_schedule(D: int, gamma: float, n: int) -> ConstantSchedule:
    """The reference constants: eta, delta, C, C', alpha_x, eps, c, xi.

    eta = gamma^D / (200 D); delta = gamma^(10D) eta / (10^6 D^4);
    C = 40 D exp(1000 D delta^-2 gamma^(-2D-10)); C' = 10^4 C / delta;
    alpha_x = delta/(10^8 C D) * exp(10^8 C D^3 delta^-1 (x-2n)/n);
    eps = alpha_0 delta^2 gamma^(10D) / (1000 C D); c = eps^4/(100 D^4);
    xi = alpha_0 / 100; beta_t(alpha) scales alpha by
    exp(1000 D delta^-2 gamma^(-2D-10) t / n) so that beta_0(alpha) = alpha.
    """
    if D < 1:
        raise ValueError("D must be >= 1")
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    eta = gamma**D / (200 * D)
    delta = gamma ** (10 * D) * eta / (1e6 * D**4)
    growth = 1000 * D * delta**-2 * gamma ** (-2 * D - 10)
    log_C = math.log(40 * D) + growth
    log_Cprime = math.log(1e4) + log_C - math.log(delta)
    alpha_base_log = math.log(delta) - math.log(1e8 * D) - log_C
    alpha_rate_log = log_C + math.log(1e8 * D**3) - math.log(delta)
    beta_rate_log = math.log(growth)
    sched = ConstantSchedule(
        kind="paper",
        D=D,
        gamma=gamma,
        n=n,
        eta=eta,
        delta=delta,
        log_C=log_C,
        log_Cprime=log_Cprime,
        alpha_base_log=alpha_base_log,
        alpha_rate_log=alpha_rate_log,
        beta_rate_log=beta_rate_log,
        log_eps=math.nan,
        log_c=math.nan,
        log_xi=math.nan,
    )
    log_alpha0 = sched.log_alpha(0)
    log_eps = (
        log_alpha0
        + 2 * math.log(delta)
        + 10 * D * math.log(gamma)
        - math.log(1000 * D)
        - log_C
    )
    log_c = 4 * log_eps - math.log(100 * D**4)
    log_xi = log_alpha0 - math.log(100)
    return ConstantSchedule(
        kind="paper",
        D=D,
        gamma=gamma,
        n=n,
        eta=eta,
        delta=delta,
        log_C=log_C,
        log_Cprime=log_Cprime,
        alpha_base_log=alpha_base_log,
        alpha_rate_log=alpha_rate_log,
        beta_rate_log=beta_rate_log,
        log_eps=log_eps,
        log_c=log_c,
        log_xi=log_xi,
    )


def desk_schedule(D: int, gamma: float, n: int) -> ConstantSchedule:
    """Tame constants usable at desk scale; same shapes, mild rates.

    delta = max(1/n, 0.05) so the completion tail is a few vertices; the
    alpha/beta error curves keep their exponential form with rate 1.
    """
    delta = max(1.0 / n, 0.05)
    return ConstantSchedule(
        kind="desk",
        D=D,
        gamma=gamma,
        n=n,
        eta=0.05,
        delta=delta,
        log_C=math.log(40 * D),
        log_Cprime=math.log(40 * D * 1e4 / delta),
        alpha_base_log=math.log(0.25),
        alpha_rate_log=0.0,
        beta_rate_log=0.0,
        log_eps=math.log(0.1),
        log_c=0.0,
        log_xi=math.log(0.25),
    )


# ---------------------------------------------------------------------------
# reservoir split


def split_reservoir(hhat: Graph, gamma: float, rng) -> tuple[Graph, Graph]:
    """Withhold each edge independently with probability gamma C(n,2)/e(H).

    Resamples (at most 1000 times) while the reservoir exceeds
    1.1 gamma C(n,2) edges.
    """
    if hhat.n < 2 or hhat.edge_count == 0:
        raise ValueError("host has no edges to split")
    pairs = hhat.n * (hhat.n - 1) // 2
    dens = hhat.edge_count / pairs
    if not 0 < gamma < dens:
        raise ValueError(f"gamma must lie in (0, {dens}); got {gamma}")
    q = gamma * pairs / hhat.edge_count
    cap = 1.1 * gamma * pairs
    edges = hhat.edges()
    for _ in range(1000):
        res = [e for e in edges if rng.random() < q]
        if len(res) <= cap:
            res_set = set(res)
            main = Graph(hhat.n, [e for e in edges if e not in res_set])
            return main, Graph(hhat.n, res)
    raise RuntimeError("reservoir kept exceeding 1.1 gamma C(n,2) edges")


# ---------------------------------------------------------------------------
# completion of an almost-spanning embedding


class _HostView:
    """Duck-typed host for random_embedding: just n and adjacency masks."""

    __slots__ = ("n", "adj_mask")

    def __init__(self, n: int, adj_mask):
        self.n = n
        self.adj_mask = adj_mask


def complete_embedding(
    guest: OrderedGuest,
    psi: PartialEmbedding,
    reservoir,
) -> tuple[PartialEmbedding, list[tuple[int, int]]]:
    """Extend psi over the unembedded tail using only reservoir edges.

    The tail must be independent with all left-neighbors already embedded.
    Each tail vertex may go to any unused host vertex adjacent (in the
    reservoir) to all its embedded neighbors; a perfect matching between
    tail vertices and unused host vertices realizes the extension.

    Returns the extended embedding and the reservoir edges it consumed.
    Raises CompletionFailure when no perfect matching exists.
    """
    order = guest.order.order
    n = guest.n
    tail_positions = list(range(psi.t, n))
    if not tail_positions:
        return psi, []
    unused = [v for v in range(psi.n_host) if not (psi.used_mask >> v & 1)]
    right_index = {v: i for i, v in enumerate(unused)}
    full_unused = 0
    for v in unused:
        full_unused |= 1 << v
    rows = []
    for p in tail_positions:
        left = guest.left_at[p]
        for u in left:
            if psi.images[u] is None:
                raise ValueError(
                    f"tail position {p} has unembedded left-neighbor {u}"
                )
        mask = full_unused
        for u in left:
            mask &= reservoir.adj_mask[psi.images[u]]
        rows.append(tuple(right_index[v] for v in bits(mask)))
    bg = BipartiteGraph(len(tail_positions), len(unused), tuple(rows))
    match_l, _, size = hopcroft_karp(bg)
    if size < len(tail_positions):
        raise CompletionFailure(
            f"tail of {len(tail_positions)} cannot be matched"
        )
    used_edges = []
    for i, p in enumerate(tail_positions):
        v = unused[match_l[i]]
        x = order[p]
        for u in guest.left_at[p]:
            used_edges.append((psi.images[u], v))
        psi.place(x, v)
    return psi, used_edges


# ---------------------------------------------------------------------------
# the packing process


@dataclass
class PackResult:
    embeddings: tuple[tuple[int, ...], ...]
    leftover: Graph
    leftover_main: Graph
    leftover_reservoir: Graph
    density_history: tuple[Fraction, ...]
    reservoir_edges_used: int


def _mask_graph(n: int, masks) -> Graph:
    return Graph(n, [(u, v) for u in range(n) for v in bits(masks[u]) if u < v])


def packing_process(
    seq: GuestSequence,
    hhat: Graph,
    gamma: float,
    delta: float,
    rng,
    check_conservation: bool = False,
) -> PackResult:
    """Embed every guest in sequence order; return embeddings and leftover.

    Each guest's first n - tail vertices are embedded by random_embedding
    into the evolving main host; the tail (at most floor(delta n) vertices,
    never more than the guest's independent uniform-degree suffix) is
    completed through the reservoir. With gamma = 0 the reservoir is empty
    and only degree-0 tails are completed (any other guest is embedded in
    full by random_embedding).

    Raises PackFailure on any embedding or completion failure (retryable)
    and ValueError on inconsistent input (a fault).
    """
    n = hhat.n
    if seq.n != n:
        raise ValueError("sequence prepared for a different host size")
    if seq.total_edges - seq.special_count * seq.ell > hhat.edge_count:
        raise ValueError("guests carry more edges than the host")
    if gamma > 0:
        main_g, res_g = split_reservoir(hhat, gamma, rng)
        main = list(main_g.adj_mask)
        res = list(res_g.adj_mask)
        e_res = res_g.edge_count
    else:
        main = list(hhat.adj_mask)
        res = [0] * n
        e_res = 0
    e_main = sum(m.bit_count() for m in main) // 2
    pairs = n * (n - 1) // 2 if n >= 2 else 1
    delta_n = int(delta * n)
    density_history = [Fraction(e_main, pairs)]
    embeddings = []
    res_used = 0
    host_view = _HostView(n, main)
    res_view = _HostView(n, res)

    def remove(masks, u, v):
        masks[u] &= ~(1 << v)
        masks[v] &= ~(1 << u)

    for s, guest in enumerate(seq.guests):
        tail = min(delta_n, guest.tail_size)
        if guest.tail_degree >= 1 and e_res == 0:
            tail = 0
        t_star = n - tail
        try:
            psi = random_embedding(
                guest, host_view, t_star, rng, guest_id=s
            )
        except EmbedFailure as exc:
            raise PackFailure(s, exc.t, "empty candidate set") from exc
        order = guest.order.order
        for p in range(t_star):
            v = order[p]
            iv = psi.images[v]
            for u in guest.left_at[p]:
                remove(main, psi.images[u], iv)
                e_main -= 1
        if tail:
            try:
                psi, used = complete_embedding(guest, psi, res_view)
            except CompletionFailure as exc:
                raise PackFailure(s, t_star, str(exc)) from exc
            for a, b in used:
                remove(res, a, b)
                e_res -= 1
                res_used += 1
        embeddings.append(tuple(psi.images))
        density_history.append(Fraction(e_main, pairs))
        if check_conservation:
            used_total = hhat.edge_count - e_main - e_res
            expect = sum(g.graph.edge_count for g in seq.guests[: s + 1])
            if used_total != expect:
                raise AssertionError(
                    f"edge conservation broken after guest {s}: "
                    f"{used_total} used vs {expect} embedded"
                )
    leftover_main = _mask_graph(n, main)
    leftover_res = _mask_graph(n, res)
    return PackResult(
        embeddings=tuple(embeddings),
        leftover=leftover_main.union_edges(leftover_res),
        leftover_main=leftover_main,
        leftover_reservoir=leftover_res,
        density_history=tuple(density_history),
        reservoir_edges_used=res_used,
    )
