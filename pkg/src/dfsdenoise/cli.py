"""Command line interface: ``dfsdenoise {denoise,bench,verify,gen-signal,order}``.

Exit codes: 0 success, 1 a verification check failed, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import os
import sys
import time
from pathlib import Path

import numpy as np

from .bench import SpecError, emit_report, parse_spec_file, run_experiment
from .chain import EmbeddingViolation, dfs_order, random_dfs_order, verify_embedding, write_order
from .denoisers import (dfs_fused_lasso, derived_seeds, laplacian_smoothing, multi_dfs_average,
                        spanning_tree_wavelets, wavelet_denoise)
from .fl1d import FL1DProblem, fl1d, kkt_residual, solve_fl1d_oracle
from .graph import GraphError, Tree, _bfs, dfs_spanning_tree, grid_graph, load_edge_list, total_variation
from .potts import dfs_potts
from .signals import (add_noise, grid_piecewise_signal, read_signal, seeded_partition_signal,
                      tree_piecewise_signal, write_signal)
from .wavelets import build_tree_wavelets

METHODS = ("dfs", "dfs-avg", "laplacian", "wavelet", "dfs-potts")


class UsageError(Exception):
    pass


def _resolve_seed(seed):
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    print(f"seed: {seed}")
    return seed


def _load_graph(path, weighted=False):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"graph file not found: {p}")
    g = load_edge_list(p, weighted)
    if not g.is_connected():
        raise UsageError(f"graph in {p} is not connected ({g.n_components()} components)")
    return g


def _load_signal(path, n):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"signal file not found: {p}")
    y = read_signal(p)
    if y.size != n:
        raise UsageError(f"signal in {p} has {y.size} values, graph has {n} nodes")
    return y


# --------------------------------------------------------------------------

def cmd_denoise(args) -> int:
    g = _load_graph(args.graph, args.weighted)
    y = _load_signal(args.signal, g.n_nodes)
    seed = _resolve_seed(args.seed)
    lam = args.lam
    t0 = time.perf_counter()
    diag = {}
    if args.method == "dfs":
        s = derived_seeds(seed, 1)[0]
        print(f"derived seeds: {[int(v) for v in s]}")
        c = random_dfs_order(g, s, weighted=args.weighted)
        res = dfs_fused_lasso(g, c, y, lam, use_weights=args.weighted)
        theta, diag = res.theta_hat, res.diagnostics
    elif args.method == "dfs-avg":
        seeds = derived_seeds(seed, args.K)
        print(f"derived seeds: {[[int(v) for v in s] for s in seeds]}")
        res = multi_dfs_average(g, y, lam, args.K, seeds=seeds, combine=args.combine,
                                workers=args.threads)
        theta = res.theta_hat
    elif args.method == "laplacian":
        res = laplacian_smoothing(g, y, lam, weighted=args.weighted)
        theta, diag = res.theta_hat, res.diagnostics
    elif args.method == "wavelet":
        res = wavelet_denoise(spanning_tree_wavelets(g), y, lam)
        theta, diag = res.theta_hat, res.diagnostics
    else:
        s = derived_seeds(seed, 1)[0]
        print(f"derived seeds: {[int(v) for v in s]}")
        theta = dfs_potts(g, random_dfs_order(g, s), y, lam)
    elapsed = time.perf_counter() - t0
    write_signal(theta, args.out)
    for k, v in diag.items():
        print(f"{k}: {v}")
    print(f"tv before: {total_variation(g, y, args.weighted):.10g}")
    print(f"tv after: {total_variation(g, theta, args.weighted):.10g}")
    print(f"time: {elapsed:.4f}s")
    return 0


def cmd_bench(args) -> int:
    p = Path(args.spec)
    if not p.is_file():
        raise UsageError(f"spec file not found: {p}")
    try:
        spec = parse_spec_file(p)
    except SpecError as exc:
        raise UsageError(f"{p}: {exc}") from None
    if args.threads is not None:
        spec.threads = args.threads
    print(f"seed: {spec.seed}")
    report = run_experiment(spec)
    emit_report(report, args.out)
    print((Path(args.out) / "summary.txt").read_text(), end="")
    return 0


def cmd_gen_signal(args) -> int:
    seed = _resolve_seed(args.seed)
    ss = np.random.SeedSequence(seed).spawn(2)
    if args.kind == "grid-piecewise":
        if not args.grid:
            raise UsageError("grid-piecewise needs --grid RxC")
        r, c = (int(v) for v in args.grid.lower().split("x"))
        g = grid_graph(r, c)
        theta0 = grid_piecewise_signal(r, c, args.pieces, args.tv, ss[0])
    else:
        if not args.graph:
            raise UsageError(f"{args.kind} needs --graph")
        g = _load_graph(args.graph)
        if args.kind == "seeded-partition":
            theta0 = seeded_partition_signal(g, args.parts, args.tv, ss[0])
        else:
            if g.n_edges != g.n_nodes - 1:
                raise UsageError("tree-piecewise needs a tree graph")
            _, parent = _bfs(g.indptr, g.indices, 0)
            theta0 = tree_piecewise_signal(Tree(g, 0, parent), args.tv, args.sparsity, ss[0])
    y = add_noise(theta0, args.sigma, ss[1]) if args.sigma > 0 else theta0
    write_signal(y, args.out)
    if args.truth:
        write_signal(theta0, args.truth)
    print(f"nodes: {g.n_nodes}")
    print(f"tv: {total_variation(g, theta0):.10g}")
    return 0


def cmd_order(args) -> int:
    g = _load_graph(args.graph)
    if args.root is not None and args.seed is None:
        c = dfs_order(g, args.root)
    else:
        seed = _resolve_seed(args.seed)
        if args.root is not None:
            c = dfs_order(g, args.root, "random", seed)
        else:
            c = random_dfs_order(g, seed)
    write_order(c, args.out)
    print(f"nodes: {c.n_nodes} root: {c.order[0]}")
    return 0


# --------------------------------------------------------------------------
# verification suites

def verify_graph(g, trials: int, seed: int, solver=None, out=print) -> bool:
    """Run the embedding, oracle, wavelet and KKT checks; report each one.

    ``solver(y, lam, weights)`` defaults to the linear-time DP and can be
    swapped out to exercise the failure path.
    """
    solver = solver or fl1d
    ok_all = True

    def report(name, ok, detail):
        nonlocal ok_all
        ok_all &= ok
        out(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")

    # chain embedding bounds
    worst, bad = 0.0, None
    for i in range(trials):
        s = (seed, 0, i)
        rng = np.random.default_rng(s)
        c = random_dfs_order(g, s, weighted=g.is_weighted)
        theta = rng.normal(size=g.n_nodes) if i % 2 == 0 else \
            rng.normal(size=min(4, g.n_nodes))[rng.integers(min(4, g.n_nodes), size=g.n_nodes)]
        try:
            r = verify_embedding(g, c, theta)
        except EmbeddingViolation:
            bad = bad or s
            continue
        worst = max(worst, *r)
        if max(r) > 2 * (1 + 1e-12):
            bad = bad or s
    report("embedding", bad is None,
           f"max ratio {worst:.6f} over {trials} trials" + (f"; counterexample seed {bad}" if bad else ""))

    # DP against exhaustive oracle
    worst, bad = 0.0, None
    for i in range(trials):
        s = (seed, 1, i)
        rng = np.random.default_rng(s)
        n = int(rng.integers(1, 9))
        y = rng.normal(size=n)
        lam = float(rng.exponential(0.7))
        w = rng.uniform(0.2, 3.0, size=n - 1) if i % 2 else None
        ref = solve_fl1d_oracle(FL1DProblem(y, lam, w)).theta
        d = float(np.abs(np.asarray(solver(y, lam, w)) - ref).max())
        worst = max(worst, d)
        if not d <= 1e-8:
            bad = bad or s
    report("oracle", bad is None,
           f"max deviation {worst:.3e} over {trials} trials" + (f"; counterexample seed {bad}" if bad else ""))

    # wavelet orthonormality on a spanning tree, probed with random vectors
    basis = build_tree_wavelets(dfs_spanning_tree(g))
    rng = np.random.default_rng((seed, 2))
    x = rng.normal(size=(g.n_nodes, min(trials, 20)))
    err = float(np.abs(basis.matrix.T @ (basis.matrix @ x) - x).max())
    err = max(err, float(np.abs(basis.matrix @ (basis.matrix.T @ x) - x).max()))
    report("wavelet-orthonormal", err <= 1e-10, f"max round-trip error {err:.3e}")

    # KKT certificate of DFS fused lasso fits on the graph
    worst, bad = 0.0, None
    for i in range(trials):
        s = (seed, 3, i)
        rng = np.random.default_rng(s)
        c = random_dfs_order(g, s)
        y = c.permute(rng.normal(size=g.n_nodes))
        lam = float(rng.exponential(1.0))
        theta = np.asarray(solver(y, lam, None))
        res = kkt_residual(FL1DProblem(y, lam), theta)
        scaled = res / (1 + np.abs(y).max())
        worst = max(worst, scaled)
        if not scaled <= 1e-8:
            bad = bad or s
    report("kkt", bad is None,
           f"max scaled residual {worst:.3e} over {trials} trials" + (f"; counterexample seed {bad}" if bad else ""))
    return bool(ok_all)


def cmd_verify(args) -> int:
    g = _load_graph(args.graph, args.weighted)
    seed = _resolve_seed(args.seed)
    return 0 if verify_graph(g, args.trials, seed) else 1


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dfsdenoise", description="Linear-time graph denoising via DFS chains.")
    sub = ap.add_subparsers(dest="command", required=True)
    cores = os.cpu_count() or 1

    d = sub.add_parser("denoise", help="denoise a signal on a graph")
    d.add_argument("--graph", required=True)
    d.add_argument("--signal", required=True)
    d.add_argument("--method", choices=METHODS, default="dfs")
    d.add_argument("--lambda", dest="lam", type=float, required=True)
    d.add_argument("--K", type=int, default=5)
    d.add_argument("--combine", choices=("mean", "median"), default="mean")
    d.add_argument("--seed", type=int)
    d.add_argument("--out", required=True)
    d.add_argument("--weighted", action="store_true")
    d.add_argument("--threads", type=int, default=cores)
    d.set_defaults(func=cmd_denoise)

    b = sub.add_parser("bench", help="run a Monte Carlo benchmark from a spec file")
    b.add_argument("spec")
    b.add_argument("--out", required=True)
    b.add_argument("--threads", type=int)
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="check the library's invariants on a graph")
    v.add_argument("--graph", required=True)
    v.add_argument("--trials", type=int, default=100)
    v.add_argument("--seed", type=int)
    v.add_argument("--weighted", action="store_true")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("gen-signal", help="generate a synthetic signal and noisy data")
    s.add_argument("--kind", choices=("seeded-partition", "grid-piecewise", "tree-piecewise"), required=True)
    s.add_argument("--graph")
    s.add_argument("--grid", help="RxC, for grid-piecewise")
    s.add_argument("--tv", type=float, required=True)
    s.add_argument("--parts", type=int, default=10)
    s.add_argument("--pieces", type=int, default=5)
    s.add_argument("--sparsity", type=int, default=10)
    s.add_argument("--sigma", type=float, default=0.0)
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--truth")
    s.set_defaults(func=cmd_gen_signal)

    o = sub.add_parser("order", help="write a DFS node order")
    o.add_argument("--graph", required=True)
    o.add_argument("--root", type=int)
    o.add_argument("--seed", type=int)
    o.add_argument("--out", required=True)
    o.set_defaults(func=cmd_order)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
