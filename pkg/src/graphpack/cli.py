"""Command-line surface.

Subcommands: pack (manifest + host file), ringel, gyarfas, verify, tree-stats,
diagnose. Exit codes: 0 success, 2 failure-after-budget, 1 fault.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from .core import read_edge_list
from .pipeline import (
    BudgetExhausted,
    PackingCertificate,
    RunConfig,
    harness_gyarfas,
    harness_ringel,
    perfect_packing,
    split_seed,
)
from .prep import RawGuest, load_manifest
from .trees import random_tree, tree_stats

EXIT_OK = 0
EXIT_FAULT = 1
EXIT_BUDGET = 2


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attempts", type=int, default=100)
    p.add_argument("--preset", choices=["desk", "paper"], default="desk")
    p.add_argument("--mu", type=str, default=None, help="fraction, e.g. 1/4")
    p.add_argument("--nu", type=str, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--match-mode", choices=["auto", "exact", "mcmc"], default="auto")
    p.add_argument("--mcmc-budget", type=int, default=None)
    p.add_argument("--diagnostics", type=int, choices=[0, 1, 2], default=0)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--config", type=str, default=None, help="JSON config file")


def _config_from_args(args) -> RunConfig:
    if args.config:
        cfg = RunConfig.from_dict(json.loads(Path(args.config).read_text()))
    else:
        cfg = RunConfig()
    updates: dict = {
        "seed": args.seed,
        "attempts": args.attempts,
        "preset": args.preset,
        "match_mode": args.match_mode,
        "mcmc_budget": args.mcmc_budget,
        "diagnostics": args.diagnostics,
    }
    if args.mu is not None:
        updates["mu"] = Fraction(args.mu)
    if args.nu is not None:
        updates["nu"] = Fraction(args.nu)
    if args.gamma is not None:
        updates["gamma"] = args.gamma
    if args.delta is not None:
        updates["delta"] = args.delta
    return replace(cfg, **updates)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _finish(cert: PackingCertificate, out: str | None) -> int:
    _emit(cert.to_json(), out)
    print(
        f"perfect={cert.perfect} attempts={cert.attempts_used}",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_pack(args) -> int:
    cfg = _config_from_args(args)
    raw, n, mu, nu, D = load_manifest(args.manifest)
    host = read_edge_list(Path(args.host).read_text())
    if host.n != n:
        raise ValueError(f"manifest n={n} but host has {host.n} vertices")
    cfg = replace(cfg, degeneracy=D)
    if args.mu is None:
        cfg = replace(cfg, mu=mu)
    if args.nu is None:
        cfg = replace(cfg, nu=nu)
    raw = sorted(raw, key=lambda g: g.special)  # specials last
    if args.pad_perfect:
        deficit = host.edge_count - sum(g.graph.edge_count for g in raw)
        if deficit < 0:
            raise ValueError("guests already exceed the host")
        from .core import Graph

        pad = [
            RawGuest(graph=Graph(2, [(0, 1)]), special=False)
            for _ in range(deficit)
        ]
        specials = [g for g in raw if g.special]
        raw = [g for g in raw if not g.special] + pad + specials
    if args.compress:
        from .prep import compress

        specials = [g for g in raw if g.special]
        plain = [g.graph for g in raw if not g.special]
        overlays = compress(plain, host.n)
        raw = [
            RawGuest(graph=o.graph, special=False) for o in overlays
        ] + specials
    cert = perfect_packing(
        raw, host, cfg, instance={"kind": "manifest", "path": str(args.manifest)}
    )
    return _finish(cert, args.out)


def cmd_ringel(args) -> int:
    cfg = _config_from_args(args)
    return _finish(harness_ringel(args.n, cfg), args.out)


def cmd_gyarfas(args) -> int:
    cfg = _config_from_args(args)
    return _finish(harness_gyarfas(args.n, cfg), args.out)


def cmd_verify(args) -> int:
    cert = PackingCertificate.from_json(Path(args.cert).read_text())
    report = cert.verify()
    ok = report.ok and report.perfect == cert.perfect
    print(
        json.dumps(
            {
                "valid": report.ok,
                "perfect": report.perfect,
                "perfect_claim_matches": report.perfect == cert.perfect,
                "violation": report.violation,
                "used_edges": report.used_edges,
            },
            sort_keys=True,
        )
    )
    return EXIT_OK if ok else EXIT_FAULT


def cmd_tree_stats(args) -> int:
    rng = random.Random(split_seed(args.seed, "tree-stats"))
    lines = ["sample,n,leaf_count,max_degree"]
    for i in range(args.samples):
        st = tree_stats(random_tree(args.n, rng))
        lines.append(f"{i},{st.n},{st.leaf_count},{st.max_degree}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_diagnose(args) -> int:
    cert = PackingCertificate.from_json(Path(args.cert).read_text())
    if cert.diagnostics is not None and not args.rerun:
        _emit(json.dumps(cert.diagnostics, sort_keys=True) + "\n", args.out)
        return EXIT_OK
    inst = cert.instance
    cfg = RunConfig.from_dict(cert.config)
    cfg = replace(cfg, diagnostics=max(1, cfg.diagnostics))
    if inst.get("kind") == "ringel":
        new = harness_ringel(inst["n"], cfg)
    elif inst.get("kind") == "gyarfas":
        new = harness_gyarfas(inst["n"], cfg)
    else:
        raise ValueError(
            "certificate carries no diagnostics and its instance kind "
            f"{inst.get('kind')!r} cannot be re-run from the seed alone"
        )
    _emit(json.dumps(new.diagnostics, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="graphpack",
        description="Randomized perfect graph packing engine",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("pack", help="pack a guest manifest into a host file")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--host", required=True)
    sp.add_argument("--pad-perfect", action="store_true")
    sp.add_argument("--compress", action="store_true")
    _add_run_flags(sp)
    sp.set_defaults(func=cmd_pack)

    sp = sub.add_parser("ringel", help="pack 2n-1 copies of a random n-tree")
    sp.add_argument("--n", type=int, required=True)
    _add_run_flags(sp)
    sp.set_defaults(func=cmd_ringel)

    sp = sub.add_parser("gyarfas", help="pack random trees T_2..T_n into K_n")
    sp.add_argument("--n", type=int, required=True)
    _add_run_flags(sp)
    sp.set_defaults(func=cmd_gyarfas)

    sp = sub.add_parser("verify", help="re-validate a certificate")
    sp.add_argument("--cert", required=True)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("tree-stats", help="leaf/degree statistics as CSV")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", type=str, default=None)
    sp.set_defaults(func=cmd_tree_stats)

    sp = sub.add_parser("diagnose", help="emit leftover diagnostics for a cert")
    sp.add_argument("--cert", required=True)
    sp.add_argument("--rerun", action="store_true")
    sp.add_argument("--out", type=str, default=None)
    sp.set_defaults(func=cmd_diagnose)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BudgetExhausted as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except Exception as exc:  # faults
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_FAULT


if __name__ == "__main__":
    sys.exit(main())
