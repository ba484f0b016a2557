"""Leftover-graph diagnostics measured after the almost-perfect stage.

These are observational only and never gate the pipeline: quasirandomness
of the leftover, dangling-weight balance, eroded-neighborhood ratios, and
the leaf/neighborhood interaction sums. Every quantity is recomputable from
(leftover, embeddings, weights) and the serialization is deterministic.
"""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

from .core import Graph, check_quasirandom
from .prep import GuestSequence, WeightMap


@dataclass(frozen=True)
class RatioStat:
    target: float
    worst_error: float
    witness: tuple
    degenerate: bool = False


@dataclass(frozen=True)
class LeftoverDiagnostics:
    n: int
    edge_count: int
    density: str  # exact fraction, as a string
    level: int
    quasi_exact_level2: float
    quasi_exact_witness: tuple
    quasi_sampled: float
    quasi_sampled_witness: tuple
    quasi_samples: int
    weight_balance: RatioStat  # w(v) against p n / 2
    eroded_single: RatioStat  # |N_H(v) \ im_s| against mu_eff p n
    eroded_pair: RatioStat  # |N_H(v) \ (im_s u im_s')| against mu_eff^2 p n
    weight_free_sum: RatioStat  # sum_s w_s(v) [u free] against mu_eff p n / 2
    leaf_pressure_max: float  # max_u,s sum_{v in N(u)} w_s(v), u free for s
    leaf_pressure_bound: float  # 10 p^2 n / mu_eff
    leaf_pressure_holds: bool
    mu_effective: str
    gamma_prime: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def _worst_ratio(values, targets, witnesses) -> RatioStat:
    worst = -1.0
    wit: tuple = ()
    degenerate = False
    target_seen = 0.0
    for val, tgt, w in zip(values, targets, witnesses):
        target_seen = tgt
        if tgt == 0:
            if val != 0:
                degenerate = True
                worst, wit = float("inf"), w
            continue
        err = abs(val / tgt - 1.0)
        if err > worst:
            worst, wit = err, w
    if worst < 0:
        worst, degenerate = 0.0, True
    return RatioStat(
        target=float(target_seen),
        worst_error=worst,
        witness=wit,
        degenerate=degenerate,
    )


def leftover_diagnostics(
    H: Graph,
    seq: GuestSequence,
    embeddings,
    weights: WeightMap,
    gamma_prime: float,
    level: int | None = None,
    sample_seed: int = 0,
) -> LeftoverDiagnostics:
    """Measure the leftover-graph properties, with witnesses.

    Quasirandomness is exact at level 2 and sampled (seeded, hence
    deterministic) at the full level 2D+3; the remaining statistics are
    exact. Ratios use mu_eff = floor(mu n)/n, the realized special fraction.
    """
    n = H.n
    if level is None:
        level = 2 * 2 + 3
    p = H.density()
    pf = float(p)
    exact2 = check_quasirandom(H, alpha=1.0, k=min(2, max(n, 1)), mode="exact")
    rng = random.Random(sample_seed)
    sampled = check_quasirandom(
        H,
        alpha=1.0,
        k=min(level, n),
        mode="sampled",
        samples=10 * n * level,
        rng=rng,
    )
    mu_eff = Fraction(seq.special_count, n) if n else Fraction(0)
    muf = float(mu_eff)

    # specials and their free (non-image) masks as numpy rows
    specials = [
        (s, g) for s, g in enumerate(seq.guests) if g.special
    ]
    S = len(specials)
    A = np.zeros((n, n), dtype=np.int64)
    for u, v in H.edges():
        A[u, v] = 1
        A[v, u] = 1
    free = np.ones((max(S, 1), n), dtype=np.int64)
    W = np.zeros((max(S, 1), n), dtype=np.int64)
    for row, (s, g) in enumerate(specials):
        phi = embeddings[s]
        for x in range(g.embedded_vertex_count()):
            free[row, phi[x]] = 0
        for x, cnt in weights.per_guest.get(s, {}).items():
            W[row, phi[x]] += cnt

    # P2: w(v) against p n / 2
    half = pf * n / 2
    weight_balance = _worst_ratio(
        [weights.host[v] for v in range(n)],
        [half] * n,
        [(v,) for v in range(n)],
    )

    deg = A.sum(axis=1)

    # P3: |N_H(v) \ im_s| = (1 +- e) mu p n
    if S:
        eroded = A @ free.T  # (n, S)
        target3 = muf * pf * n
        vals, tgts, wits = [], [], []
        for v in range(n):
            for row, (s, _g) in enumerate(specials):
                vals.append(int(eroded[v, row]))
                tgts.append(target3)
                wits.append((v, s))
        eroded_single = _worst_ratio(vals, tgts, wits)
    else:
        eroded_single = RatioStat(0.0, 0.0, (), True)

    # P4: pairs of distinct specials
    if S >= 2:
        target4 = muf * muf * pf * n
        vals, tgts, wits = [], [], []
        for i in range(S):
            for j in range(i + 1, S):
                both = free[i] & free[j]
                counts = A @ both
                for v in range(n):
                    vals.append(int(counts[v]))
                    tgts.append(target4)
                    wits.append((v, specials[i][0], specials[j][0]))
        eroded_pair = _worst_ratio(vals, tgts, wits)
    else:
        eroded_pair = RatioStat(0.0, 0.0, (), True)

    # P5: sum_s w_s(v) [u not in im_s] = (1 +- e) mu p n / 2, u != v
    if S:
        M = W.T @ free  # (n, n): row v, col u
        target5 = muf * pf * n / 2
        vals, tgts, wits = [], [], []
        for v in range(n):
            for u in range(n):
                if u == v:
                    continue
                vals.append(int(M[v, u]))
                tgts.append(target5)
                wits.append((v, u))
        weight_free_sum = _worst_ratio(vals, tgts, wits)
    else:
        weight_free_sum = RatioStat(0.0, 0.0, (), True)

    # P6: u free for s: sum over H-neighbors v of w_s(v) < 10 p^2 n / mu
    bound6 = 10 * pf * pf * n / muf if muf else float("inf")
    worst6 = 0.0
    if S:
        sums = A @ W.T  # (n, S)
        for row in range(S):
            for u in range(n):
                if free[row, u]:
                    worst6 = max(worst6, float(sums[u, row]))
    return LeftoverDiagnostics(
        n=n,
        edge_count=H.edge_count,
        density=str(p),
        level=level,
        quasi_exact_level2=exact2.worst_ratio_error,
        quasi_exact_witness=tuple(exact2.witness),
        quasi_sampled=sampled.worst_ratio_error,
        quasi_sampled_witness=tuple(sampled.witness),
        quasi_samples=10 * n * level,
        weight_balance=weight_balance,
        eroded_single=eroded_single,
        eroded_pair=eroded_pair,
        weight_free_sum=weight_free_sum,
        leaf_pressure_max=worst6,
        leaf_pressure_bound=bound6,
        leaf_pressure_holds=worst6 < bound6,
        mu_effective=str(mu_eff),
        gamma_prime=gamma_prime,
    )
