"""End-to-end orchestration: run configuration, the full packing pipeline
(almost-perfect packing, orientation repair, sequential leaf matching,
assembly), serializable certificates, and the tree-packing harnesses.

Randomness discipline: every run derives all stage randomness from a master
seed through split_seed(seed, label), a SHA-256 based split. Attempt k uses
the substream "attempt-k"; the instance (e.g. harness trees) is drawn once
from "instance". Identical (config, seed) therefore reproduce byte-identical
certificates.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import asdict, dataclass, replace
from fractions import Fraction

from .core import Graph, complete_graph, write_edge_list
from .diagnostics import LeftoverDiagnostics, leftover_diagnostics
from .leafmatch import MatchLeavesFailure, build_leaf_graphs, match_leaves
from .orient import OrientationFailure, orientation_switch, random_orientation
from .pack import PackFailure, packing_process
from .prep import (
    GuestSequence,
    RawGuest,
    build_subgraph_sequence,
    compute_weights,
)
from .trees import random_tree, tree_stats
from .validate import validate_packing

CERT_FORMAT = "graphpack-cert/1"


class BudgetExhausted(Exception):
    """No attempt succeeded within the configured budget (exit code 2)."""


class StageFailure(Exception):
    """Orientation or matching retries ran out for one packing (retryable)."""


def split_seed(seed: int, label: str) -> int:
    """Derive an independent substream seed: SHA-256 of "seed/label"."""
    digest = hashlib.sha256(f"{seed}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


@dataclass(frozen=True)
class RunConfig:
    """Knobs for a packing run; presets fill in gamma/delta when unset.

    The desk default mu = nu = 0 runs the degenerate pipeline (no special
    guests, no leaf stage): the only mode that can finish perfectly at desk
    sizes, where the leftover graph is too sparse for the orientation
    switches to move potential around. Positive mu/nu enable the full
    five-stage pipeline.
    """

    seed: int = 0
    attempts: int = 100
    preset: str = "desk"  # "desk" | "paper"
    mu: Fraction = Fraction(0)
    nu: Fraction = Fraction(0)
    gamma: float | None = None
    delta: float | None = None
    degeneracy: int = 2
    diagnostics: int = 0
    match_mode: str = "auto"
    mcmc_budget: int | None = None
    exact_cap: int = 12
    flip_cap: float = 0.5
    stage_retries: int = 20

    def effective_gamma(self) -> float:
        if self.gamma is not None:
            return self.gamma
        return 0.1

    def effective_delta(self, n: int) -> float:
        if self.delta is not None:
            return self.delta
        return max(1.0 / n, 0.05)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mu"] = str(self.mu)
        d["nu"] = str(self.nu)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        kw = dict(d)
        kw["mu"] = Fraction(kw["mu"])
        kw["nu"] = Fraction(kw["nu"])
        return cls(**kw)


@dataclass(frozen=True)
class PackingCertificate:
    """A self-contained, independently re-checkable packing record."""

    host_n: int
    host_edge_count: int
    host_sha256: str
    host_edges: tuple[tuple[int, int], ...]
    guests: tuple[dict, ...]  # {"n": int, "edges": [...], "special": bool}
    maps: tuple[tuple[int, ...], ...]
    seed: int
    config: dict
    instance: dict
    perfect: bool
    attempts_used: int
    diagnostics: dict | None = None

    def host_graph(self) -> Graph:
        return Graph(self.host_n, self.host_edges)

    def guest_graphs(self) -> list[Graph]:
        return [Graph(g["n"], [tuple(e) for e in g["edges"]]) for g in self.guests]

    def verify(self):
        """Re-validate from the certificate content alone."""
        return validate_packing(self.host_graph(), self.guest_graphs(), self.maps)

    def to_json(self) -> str:
        payload = {
            "format": CERT_FORMAT,
            "host": {
                "n": self.host_n,
                "edge_count": self.host_edge_count,
                "sha256": self.host_sha256,
                "edges": [list(e) for e in self.host_edges],
            },
            "guests": list(self.guests),
            "maps": [list(m) for m in self.maps],
            "seed": self.seed,
            "config": self.config,
            "instance": self.instance,
            "perfect": self.perfect,
            "attempts_used": self.attempts_used,
            "diagnostics": self.diagnostics,
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PackingCertificate":
        d = json.loads(text)
        if d.get("format") != CERT_FORMAT:
            raise ValueError(f"unsupported certificate format {d.get('format')!r}")
        return cls(
            host_n=d["host"]["n"],
            host_edge_count=d["host"]["edge_count"],
            host_sha256=d["host"]["sha256"],
            host_edges=tuple((e[0], e[1]) for e in d["host"]["edges"]),
            guests=tuple(d["guests"]),
            maps=tuple(tuple(m) for m in d["maps"]),
            seed=d["seed"],
            config=d["config"],
            instance=d["instance"],
            perfect=d["perfect"],
            attempts_used=d["attempts_used"],
            diagnostics=d["diagnostics"],
        )


def _assemble_maps(seq: GuestSequence, embeddings, sigmas) -> list[tuple[int, ...]]:
    """Final per-guest maps on the original input vertices.

    Non-omitted vertices keep their almost-perfect images; each omitted leaf
    takes its matched host vertex from the round of its parent's image.
    """
    by_leaf: dict[tuple[int, int], int] = {}
    for sigma in sigmas:
        by_leaf.update(sigma)
    maps = []
    for s, guest in enumerate(seq.guests):
        omitted = set(guest.omitted)
        phi = embeddings[s]
        out = []
        for x in range(guest.input_n):
            if x in omitted:
                out.append(by_leaf[(s, x)])
            else:
                out.append(phi[x])
        maps.append(tuple(out))
    return maps


@dataclass
class AttemptOutcome:
    seq: GuestSequence
    embeddings: tuple
    leftover: Graph
    weights: object
    sigmas: list
    maps: list[tuple[int, ...]]
    diagnostics: LeftoverDiagnostics | None


def _one_attempt(
    raw: list[RawGuest], hhat: Graph, cfg: RunConfig, rng
) -> AttemptOutcome:
    n = hhat.n
    seq = build_subgraph_sequence(
        raw, n, cfg.mu, cfg.nu, cfg.degeneracy, rng
    )
    pack = packing_process(
        seq,
        hhat,
        cfg.effective_gamma(),
        cfg.effective_delta(n),
        rng,
        check_conservation=cfg.diagnostics >= 2,
    )
    weights = compute_weights(seq, pack.embeddings)
    H = pack.leftover
    diag = None
    if cfg.diagnostics >= 1:
        diag = leftover_diagnostics(
            H,
            seq,
            pack.embeddings,
            weights,
            gamma_prime=0.5,
            sample_seed=split_seed(cfg.seed, "diagnostics"),
        )
    if seq.special_count == 0 or seq.ell == 0:
        sigmas: list = []
    else:
        if weights.total() != H.edge_count:
            raise ValueError(
                f"leaf stage needs sum of weights ({weights.total()}) to "
                f"equal leftover edges ({H.edge_count}); pad the sequence "
                "to perfect mode or set nu = 0"
            )
        for attempt in range(cfg.stage_retries):
            h0 = random_orientation(H, rng)
            try:
                oriented, _ = orientation_switch(
                    H, h0, list(weights.host), cfg.flip_cap, rng
                )
            except OrientationFailure:
                continue
            graphs = build_leaf_graphs(seq, oriented, weights, pack.embeddings)
            try:
                sigmas = match_leaves(
                    graphs,
                    seq,
                    mode=cfg.match_mode,
                    budget=cfg.mcmc_budget,
                    rng=rng,
                    exact_cap=cfg.exact_cap,
                )
            except MatchLeavesFailure:
                continue
            break
        else:
            raise StageFailure("orientation/matching retries exhausted")
    maps = _assemble_maps(seq, pack.embeddings, sigmas)
    return AttemptOutcome(
        seq=seq,
        embeddings=pack.embeddings,
        leftover=H,
        weights=weights,
        sigmas=sigmas,
        maps=maps,
        diagnostics=diag,
    )


def run_almost_perfect(
    raw: list[RawGuest], hhat: Graph, cfg: RunConfig
):
    """Retry just the almost-perfect stage: prep, packing, weights.

    Returns (seq, PackResult, WeightMap, attempts_used); this is what the
    leftover diagnostics run on, whether or not the later stages can
    succeed. Raises BudgetExhausted like perfect_packing.
    """
    last: Exception | None = None
    for a in range(cfg.attempts):
        rng = random.Random(split_seed(cfg.seed, f"attempt-{a}"))
        seq = build_subgraph_sequence(
            raw, hhat.n, cfg.mu, cfg.nu, cfg.degeneracy, rng
        )
        try:
            pack = packing_process(
                seq,
                hhat,
                cfg.effective_gamma(),
                cfg.effective_delta(hhat.n),
                rng,
                check_conservation=cfg.diagnostics >= 2,
            )
        except PackFailure as exc:
            last = exc
            continue
        weights = compute_weights(seq, pack.embeddings)
        return seq, pack, weights, a + 1
    raise BudgetExhausted(
        f"no packing success in {cfg.attempts} attempts; last: {last}"
    )


def perfect_packing(
    raw: list[RawGuest],
    hhat: Graph,
    cfg: RunConfig,
    instance: dict | None = None,
) -> PackingCertificate:
    """Run the full pipeline with trial-level restarts on retryable failures.

    Returns a validated certificate; raises BudgetExhausted after
    cfg.attempts failed attempts and ValueError on faults (inconsistent
    input). Guests' original edge counts may undershoot the host in packing
    mode, but the leaf stages demand the perfect-mode identity.
    """
    originals = [g.graph for g in raw]
    total = sum(g.edge_count for g in originals)
    if total > hhat.edge_count:
        raise ValueError(
            f"guests carry {total} edges, host only {hhat.edge_count}"
        )
    last: Exception | None = None
    for a in range(cfg.attempts):
        rng = random.Random(split_seed(cfg.seed, f"attempt-{a}"))
        try:
            out = _one_attempt(raw, hhat, cfg, rng)
        except (PackFailure, StageFailure) as exc:
            last = exc
            continue
        report = validate_packing(hhat, originals, out.maps)
        if not report.ok:
            raise AssertionError(
                f"assembled packing failed validation: {report.violation}"
            )
        return PackingCertificate(
            host_n=hhat.n,
            host_edge_count=hhat.edge_count,
            host_sha256=hashlib.sha256(
                write_edge_list(hhat).encode()
            ).hexdigest(),
            host_edges=tuple(hhat.edges()),
            guests=tuple(
                {
                    "n": g.n,
                    "edges": [list(e) for e in g.edges()],
                    "special": raw[i].special,
                }
                for i, g in enumerate(originals)
            ),
            maps=tuple(out.maps),
            seed=cfg.seed,
            config=cfg.to_dict(),
            instance=instance or {"kind": "custom"},
            perfect=report.perfect,
            attempts_used=a + 1,
            diagnostics=(
                json.loads(out.diagnostics.to_json())
                if out.diagnostics is not None
                else None
            ),
        )
    raise BudgetExhausted(
        f"no success in {cfg.attempts} attempts; last failure: {last}"
    )


# ---------------------------------------------------------------------------
# harnesses


def _selectable_leaves(t: Graph) -> int:
    """Independent leaves available for omission: one endpoint is discarded
    from every single-edge component."""
    count = 0
    for v in range(t.n):
        if t.degree(v) == 1:
            u = t.adj[v][0]
            if t.degree(u) == 1 and u < v:
                continue
            count += 1
    return count


def ringel_instance(n: int, cfg: RunConfig) -> list[RawGuest]:
    """2n-1 copies of one random n-vertex tree, specials last.

    The tree is resampled until it has floor(mu N) leaves and enough
    independent leaves for the omission.
    """
    if n < 3:
        raise ValueError("need n >= 3")
    N = 2 * n - 1
    k = int(cfg.mu * N)
    ell = int(cfg.nu * N)
    if k > n - 1:
        raise ValueError("floor(mu N) specials cannot fit n-vertex copies")
    inst_rng = random.Random(split_seed(cfg.seed, "ringel-instance"))
    for _ in range(1000):
        T = random_tree(n, inst_rng)
        stats = tree_stats(T)
        if stats.leaf_count >= k and _selectable_leaves(T) >= ell:
            break
    else:
        raise ValueError("could not sample a tree with enough leaves")
    assert N * (n - 1) == N * (N - 1) // 2
    raw = [RawGuest(graph=T, special=False) for _ in range(N - k)]
    raw += [RawGuest(graph=T, special=True) for _ in range(k)]
    return raw


def harness_ringel(n: int, cfg: RunConfig) -> PackingCertificate:
    """Pack 2n-1 copies of one random n-vertex tree into K_{2n-1}."""
    raw = ringel_instance(n, cfg)
    return perfect_packing(
        raw,
        complete_graph(2 * n - 1),
        _harness_config(cfg, D=1),
        instance={"kind": "ringel", "n": n},
    )


def gyarfas_instance(n: int, cfg: RunConfig) -> list[RawGuest]:
    """Random trees T_2..T_n, big trees first, specials last.

    Special guests are the floor(mu n) smallest trees that fit below
    n - floor(mu n) vertices and carry enough leaves; the instance is
    resampled while too few trees qualify.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    k = int(cfg.mu * n)
    ell = int(cfg.nu * n)
    inst_rng = random.Random(split_seed(cfg.seed, "gyarfas-instance"))
    for _ in range(100):
        trees = {i: random_tree(i, inst_rng) for i in range(2, n + 1)}
        eligible = [
            i
            for i, t in trees.items()
            if i <= n - k
            and tree_stats(t).leaf_count >= k
            and _selectable_leaves(t) >= ell
        ]
        if len(eligible) >= k:
            break
    else:
        raise ValueError("could not sample enough special-eligible trees")
    specials = set(sorted(eligible)[:k])
    non_special = [i for i in trees if i not in specials]
    non_special.sort(reverse=True)  # big trees while the host is dense
    order = non_special + sorted(specials, reverse=True)
    total = sum(i - 1 for i in range(2, n + 1))
    assert total == n * (n - 1) // 2
    return [RawGuest(graph=trees[i], special=i in specials) for i in order]


def harness_gyarfas(n: int, cfg: RunConfig) -> PackingCertificate:
    """Pack random trees T_2, ..., T_n (v(T_i) = i) into K_n."""
    raw = gyarfas_instance(n, cfg)
    return perfect_packing(
        raw,
        complete_graph(n),
        _harness_config(cfg, D=1),
        instance={"kind": "gyarfas", "n": n},
    )


def _harness_config(cfg: RunConfig, D: int) -> RunConfig:
    """Harness adjustments: tree degeneracy, and an empty reservoir unless
    the caller explicitly asked for one.

    In perfect mode any reservoir edge left unused must fit inside the
    floor(mu n) * floor(nu n) leftover; at desk sizes the completion cannot
    draw enough reservoir edges for that, so the harnesses embed spanning
    guests in full instead and keep every edge in the main host.
    """
    gamma = cfg.gamma if cfg.gamma is not None else 0.0
    return replace(cfg, degeneracy=D, gamma=gamma)
