"""Monte Carlo MSE benchmarks over lambda grids, with rate-slope fits.

For every graph case, signal repetition and noise draw, each estimator is
fitted across its whole lambda grid. Per repetition the lambda with the lowest
MSE averaged over draws is selected; the optimized MSE is that minimum
averaged over repetitions. Every random stream is derived from the master
seed and the cell indices, so results do not depend on thread scheduling.
"""
from __future__ import annotations

import csv
import io
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .chain import random_dfs_order, snake_orders
from .denoisers import LaplacianSmoother, chain_fits, combine_fits, wavelet_denoise
from .graph import (Graph, Tree, dfs_spanning_tree, grid_graph, load_edge_list,
                    largest_connected_component, random_connected_graph, random_geometric_graph)
from .potts import Potts1DProblem, solve_potts1d
from .signals import SignalSpec, random_tree
from .wavelets import build_tree_wavelets

__all__ = [
    "GraphCase",
    "Estimator",
    "ESTIMATORS",
    "ExperimentSpec",
    "Report",
    "SpecError",
    "default_lambda_grid",
    "run_experiment",
    "rate_slope",
    "emit_report",
    "read_table",
    "parse_spec_text",
    "parse_spec_file",
]


@dataclass
class GraphCase:
    label: str
    graph: Graph
    grid_shape: tuple | None = None
    tree: Tree | None = None

    @property
    def n(self) -> int:
        return self.graph.n_nodes

    @classmethod
    def grid(cls, rows: int, cols: int) -> "GraphCase":
        return cls(f"grid{rows}x{cols}", grid_graph(rows, cols), (rows, cols))

    @classmethod
    def from_tree(cls, t: Tree, label: str | None = None) -> "GraphCase":
        return cls(label or f"tree{t.n_nodes}", t.graph, None, t)


# --------------------------------------------------------------------------
# estimator registry
#
# An estimator prepares state for one graph (DFS orders, a Laplacian, a
# wavelet basis) and then maps (y, lam) to a fit. Randomized estimators are
# re-prepared for every noise draw; the rest once per graph.

@dataclass
class Estimator:
    name: str
    prepare: callable  # (case, seed_seq, K) -> fit(y, lam) -> theta
    randomized: bool
    scale: str  # which default lambda grid applies


def _seeds(ss: np.random.SeedSequence, k: int):
    return [s.generate_state(2) for s in ss.spawn(k)]


def _prep_dfs(case, ss, K):
    c = random_dfs_order(case.graph, _seeds(ss, 1)[0])
    return lambda y, lam: chain_fits([c], y, lam)[0]


def _prep_avg(combine):
    def prep(case, ss, K):
        chains = [random_dfs_order(case.graph, s) for s in _seeds(ss, K)]
        return lambda y, lam: combine_fits(chain_fits(chains, y, lam), combine)
    return prep


def _prep_snake(case, ss, K):
    if case.grid_shape is None:
        raise ValueError("snake orders need a grid graph")
    chains = list(snake_orders(*case.grid_shape))
    return lambda y, lam: chain_fits(chains, y, lam).mean(axis=0)


def _prep_laplacian(case, ss, K):
    smoother = LaplacianSmoother(case.graph)
    return lambda y, lam: smoother(y, lam).theta_hat


def _prep_wavelet(case, ss, K):
    tree = case.tree if case.tree is not None else dfs_spanning_tree(case.graph)
    basis = build_tree_wavelets(tree)
    return lambda y, lam: wavelet_denoise(basis, y, lam).theta_hat


def _prep_potts(case, ss, K):
    c = random_dfs_order(case.graph, _seeds(ss, 1)[0])

    def fit(y, lam):
        return c.unpermute(solve_potts1d(Potts1DProblem(c.permute(y), lam)).theta)
    return fit


ESTIMATORS = {
    "dfs": Estimator("dfs", _prep_dfs, True, "fused"),
    "dfs-avg": Estimator("dfs-avg", _prep_avg("mean"), True, "fused"),
    "dfs-median": Estimator("dfs-median", _prep_avg("median"), True, "fused"),
    "snake": Estimator("snake", _prep_snake, False, "fused"),
    "laplacian": Estimator("laplacian", _prep_laplacian, False, "laplacian"),
    "wavelet": Estimator("wavelet", _prep_wavelet, False, "wavelet"),
    "potts": Estimator("potts", _prep_potts, True, "potts"),
}

# log10 offsets around each family's natural lambda scale
_GRID_SPAN = {"fused": (-2.0, 2.0), "laplacian": (-2.0, 4.0), "wavelet": (-1.5, 1.0), "potts": (-1.5, 1.5)}


def default_lambda_grid(scale: str, n: int, sigma: float, count: int = 20, span=None) -> np.ndarray:
    """Log-spaced lambda grid for an estimator family.

    Fused-lasso type: ``sigma * n^(1/3)``; Laplacian: 1 (the penalty is
    scale free); wavelet: ``sigma * sqrt(2 log n)``; Potts: ``sigma^2 log n``.
    """
    lo, hi = span if span is not None else _GRID_SPAN[scale]
    centre = {
        "fused": sigma * n ** (1.0 / 3.0),
        "laplacian": 1.0,
        "wavelet": sigma * math.sqrt(2.0 * math.log(max(n, 2))),
        "potts": sigma**2 * math.log(max(n, 2)),
    }[scale]
    return centre * np.logspace(lo, hi, count)


# --------------------------------------------------------------------------

@dataclass
class ExperimentSpec:
    cases: list
    signal: SignalSpec
    estimators: list
    sigma: float = 1.0
    draws: int = 10
    repetitions: int = 1
    seed: int = 0
    K: int = 5
    lambda_count: int = 20
    lambda_spans: dict = field(default_factory=dict)  # estimator -> (lo, hi) override
    lambda_grids: dict = field(default_factory=dict)  # estimator -> explicit grid
    threads: int = 1

    def __post_init__(self):
        if not self.cases:
            raise ValueError("no graph cases")
        if self.draws < 1 or self.repetitions < 1:
            raise ValueError("draws and repetitions must be >= 1")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        for e in self.estimators:
            if e not in ESTIMATORS:
                raise ValueError(f"unknown estimator {e!r}")
        for e, grid in self.lambda_grids.items():
            if len(grid) == 0:
                raise ValueError(f"empty lambda grid for {e}")

    def grid_for(self, est: str, n: int) -> np.ndarray:
        if est in self.lambda_grids:
            return np.asarray(self.lambda_grids[est], dtype=np.float64)
        return default_lambda_grid(ESTIMATORS[est].scale, n, self.sigma, self.lambda_count,
                                   self.lambda_spans.get(est))


@dataclass
class CellResult:
    """Outcome of one (case, estimator) pair across repetitions and draws."""

    case: str
    n: int
    estimator: str
    lambdas: np.ndarray
    mse: np.ndarray  # (repetitions, draws, lambdas); NaN where a fit failed
    fit_seconds: np.ndarray  # (repetitions, draws): time for the whole grid
    prep_seconds: float = 0.0

    @property
    def curve(self) -> np.ndarray:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanmean(self.mse, axis=(0, 1))

    @property
    def curve_stderr(self) -> np.ndarray:
        m = self.mse.reshape(-1, self.mse.shape[-1])
        cnt = np.sum(~np.isnan(m), axis=0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sd = np.nanstd(m, axis=0, ddof=1) if m.shape[0] > 1 else np.zeros(m.shape[1])
        return np.where(cnt > 1, sd / np.sqrt(np.maximum(cnt, 1)), 0.0)

    def _per_rep(self):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            avg = np.nanmean(self.mse, axis=1)  # (repetitions, lambdas)
        # a repetition where every fit failed keeps NaN as its optimum
        best = np.argmin(np.where(np.isnan(avg), np.inf, avg), axis=1)
        return avg, best

    @property
    def optimized(self) -> float:
        avg, best = self._per_rep()
        return float(np.mean(avg[np.arange(avg.shape[0]), best]))

    @property
    def optimized_stderr(self) -> float:
        avg, best = self._per_rep()
        if avg.shape[0] > 1:
            vals = avg[np.arange(avg.shape[0]), best]
            return float(np.std(vals, ddof=1) / math.sqrt(vals.size))
        draws = self.mse[0, :, best[0]]
        draws = draws[~np.isnan(draws)]
        return float(np.std(draws, ddof=1) / math.sqrt(draws.size)) if draws.size > 1 else 0.0

    @property
    def best_lambda(self) -> float:
        counts = np.bincount(self._per_rep()[1], minlength=self.lambdas.size)
        return float(self.lambdas[int(np.argmax(counts))])

    @property
    def failures(self) -> int:
        return int(np.isnan(self.mse).sum())


@dataclass
class Report:
    cells: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (case, estimator, rep, draw, lambda, message)
    slopes: dict = field(default_factory=dict)  # estimator -> (slope, stderr)

    def cell(self, case: str, estimator: str) -> CellResult:
        for c in self.cells:
            if c.case == case and c.estimator == estimator:
                return c
        raise KeyError((case, estimator))

    def optimized(self, estimator: str) -> list:
        """``(n, optimized mse)`` pairs for one estimator, in case order."""
        return [(c.n, c.optimized) for c in self.cells if c.estimator == estimator]


def _broken(exc):
    """Stand-in fit for an estimator whose preparation failed."""
    def fit(y, lam):
        raise exc
    return fit


def _prepare(est, case, ss, K):
    try:
        return est.prepare(case, ss, K)
    except Exception as exc:
        return _broken(exc)


def _mse(a, b) -> float:
    d = a - b
    return float(d @ d) / d.size


def run_experiment(spec: ExperimentSpec) -> Report:
    report = Report()
    root = np.random.SeedSequence(spec.seed)
    for ci, case in enumerate(spec.cases):
        n = case.n
        grids = {e: spec.grid_for(e, n) for e in spec.estimators}
        fixed = {}
        prep_time = {}
        for ei, e in enumerate(spec.estimators):
            est = ESTIMATORS[e]
            if not est.randomized:
                t0 = time.perf_counter()
                fixed[e] = _prepare(est, case, None, spec.K)
                prep_time[e] = time.perf_counter() - t0
        signals = [spec.signal.make(case, np.random.SeedSequence(spec.seed, spawn_key=(ci, q, 0)))
                   for q in range(spec.repetitions)]

        def run_cell(qr):
            q, r = qr
            ss_noise = np.random.SeedSequence(spec.seed, spawn_key=(ci, q, r, 1))
            theta0 = signals[q]
            y = theta0 + np.random.default_rng(ss_noise).normal(0.0, spec.sigma, size=n)
            out = {}
            for ei, e in enumerate(spec.estimators):
                est = ESTIMATORS[e]
                if est.randomized:
                    fit = _prepare(est, case, np.random.SeedSequence(spec.seed, spawn_key=(ci, q, r, 2, ei)), spec.K)
                else:
                    fit = fixed[e]
                lams = grids[e]
                row = np.full(lams.size, np.nan)
                errs = []
                t0 = time.perf_counter()
                for li, lam in enumerate(lams):
                    try:
                        row[li] = _mse(fit(y, float(lam)), theta0)
                    except Exception as exc:  # recorded, never silent
                        errs.append((case.label, e, q, r, float(lam), repr(exc)))
                out[e] = (row, time.perf_counter() - t0, errs)
            return q, r, out

        cells = [(q, r) for q in range(spec.repetitions) for r in range(spec.draws)]
        if spec.threads > 1:
            with ThreadPoolExecutor(spec.threads) as ex:
                results = list(ex.map(run_cell, cells))
        else:
            results = [run_cell(c) for c in cells]

        for e in spec.estimators:
            mse = np.full((spec.repetitions, spec.draws, grids[e].size), np.nan)
            secs = np.zeros((spec.repetitions, spec.draws))
            for q, r, out in results:
                row, dt, errs = out[e]
                mse[q, r] = row
                secs[q, r] = dt
                report.failures.extend(errs)
            report.cells.append(CellResult(case.label, n, e, grids[e], mse, secs, prep_time.get(e, 0.0)))
    if report.failures:
        warnings.warn(f"{len(report.failures)} estimator fits failed and were excluded", RuntimeWarning)
    if len(spec.cases) >= 3:
        for e in spec.estimators:
            pts = report.optimized(e)
            if all(np.isfinite(p[1]) and p[1] > 0 for p in pts):
                report.slopes[e] = rate_slope([p[0] for p in pts], [p[1] for p in pts])
    return report


def rate_slope(sizes, mses) -> tuple[float, float]:
    """Least-squares slope of log MSE against log n, with its standard error."""
    sizes = np.asarray(sizes, dtype=np.float64)
    mses = np.asarray(mses, dtype=np.float64)
    if sizes.size < 3 or sizes.size != mses.size:
        raise ValueError("need at least 3 (n, mse) pairs")
    if np.any(sizes <= 0) or np.any(mses <= 0) or not np.all(np.isfinite(mses)):
        raise ValueError("sizes and MSEs must be positive and finite")
    fit = stats.linregress(np.log(sizes), np.log(mses))
    return float(fit.slope), float(fit.stderr)


# --------------------------------------------------------------------------
# report files

MSE_HEADER = ["case", "n", "estimator", "lambda", "mse_mean", "mse_stderr", "failures"]
CURVE_HEADER = ["case", "n", "lambda", "mse_mean"]
OPT_HEADER = ["case", "n", "estimator", "best_lambda", "optimized_mse", "optimized_stderr"]
SLOPE_HEADER = ["estimator", "slope", "stderr"]


def _write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in row])
    path.write_text(buf.getvalue())


def emit_report(r: Report, out_dir) -> dict:
    """Write ``mse_table.csv``, ``optimized.csv``, ``slopes.csv``,
    ``curves/<estimator>.csv`` and ``summary.txt``. Timings appear only in
    the summary, so the tables are byte-identical across reruns."""
    out = Path(out_dir)
    (out / "curves").mkdir(parents=True, exist_ok=True)
    rows, opt = [], []
    per_est: dict = {}
    for c in r.cells:
        curve, se = c.curve, c.curve_stderr
        fails = np.isnan(c.mse).sum(axis=(0, 1))
        for li, lam in enumerate(c.lambdas):
            rows.append([c.case, c.n, c.estimator, float(lam), float(curve[li]), float(se[li]), int(fails[li])])
            per_est.setdefault(c.estimator, []).append([c.case, c.n, float(lam), float(curve[li])])
        opt.append([c.case, c.n, c.estimator, c.best_lambda, c.optimized, c.optimized_stderr])
    _write_csv(out / "mse_table.csv", MSE_HEADER, rows)
    _write_csv(out / "optimized.csv", OPT_HEADER, opt)
    _write_csv(out / "slopes.csv", SLOPE_HEADER,
               [[e, float(s), float(se)] for e, (s, se) in sorted(r.slopes.items())])
    for e, pts in per_est.items():
        _write_csv(out / "curves" / f"{e}.csv", CURVE_HEADER, pts)
    lines = ["optimized MSE (mean +- stderr), mean seconds per lambda sweep"]
    for c in r.cells:
        lines.append(f"{c.case:>16} n={c.n:<8d} {c.estimator:<11} "
                     f"mse={c.optimized:.6g} +- {c.optimized_stderr:.2g} "
                     f"lambda*={c.best_lambda:.4g} time={c.fit_seconds.mean():.4f}s "
                     f"prep={c.prep_seconds:.4f}s failures={c.failures}")
    for e, (s, se) in sorted(r.slopes.items()):
        lines.append(f"slope {e}: {s:.4f} +- {se:.4f}")
    for f in r.failures:
        lines.append("failure: " + " ".join(map(str, f)))
    (out / "summary.txt").write_text("\n".join(lines) + "\n")
    return {"mse_table": out / "mse_table.csv", "optimized": out / "optimized.csv",
            "slopes": out / "slopes.csv", "summary": out / "summary.txt"}


def read_table(path) -> list[dict]:
    """Parse an emitted CSV; numeric columns come back as int or float."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    for row in rows:
        for k, v in row.items():
            if k in ("n", "failures"):
                row[k] = int(v)
            elif k not in ("case", "estimator"):
                row[k] = float(v)
    return rows


# --------------------------------------------------------------------------
# key = value spec files

class SpecError(ValueError):
    pass


_KEYS = {"graph", "sizes", "path", "weighted", "signal", "parts", "pieces", "sparsity", "tv",
         "tv_scale", "sigma", "estimators", "K", "lambda_count", "draws", "repetitions", "seed",
         "threads", "degree"}


def _cases(kv, where) -> list:
    kind = kv.get("graph", "grid")
    sizes = [s.strip() for s in kv.get("sizes", "").split(",") if s.strip()]
    seed = int(kv.get("seed", 0))
    try:
        if kind == "grid":
            out = []
            for s in sizes:
                r, c = s.lower().split("x")
                out.append(GraphCase.grid(int(r), int(c)))
            return out
        if kind == "file":
            if "path" not in kv:
                raise SpecError(f"{where('graph')}: graph = file needs a path")
            g = largest_connected_component(load_edge_list(kv["path"], kv.get("weighted", "false") == "true"))
            return [GraphCase(Path(kv["path"]).stem, g)]
        if kind == "tree":
            return [GraphCase.from_tree(random_tree(int(s), seed=(seed, i)), f"tree{s}") for i, s in enumerate(sizes)]
        if kind == "geometric":
            k = int(kv.get("degree", 3))
            return [GraphCase(f"geometric{s}", random_geometric_graph(int(s), k, seed=(seed, i)))
                    for i, s in enumerate(sizes)]
        if kind == "random":
            return [GraphCase(f"random{s}", random_connected_graph(int(s), int(s) // 2, seed=(seed, i)))
                    for i, s in enumerate(sizes)]
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"{where('sizes')}: bad size list ({exc})") from None
    raise SpecError(f"{where('graph')}: unknown graph kind {kind!r}")


def parse_spec_text(text: str, base_dir=None) -> ExperimentSpec:
    """Parse the flat ``key = value`` experiment format (see README)."""
    kv, line_of, spans = {}, {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        s = raw.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise SpecError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (p.strip() for p in s.split("=", 1))
        if key.startswith("lambda."):
            try:
                lo, hi = (float(v) for v in val.split(","))
            except ValueError:
                raise SpecError(f"line {lineno}: lambda span must be 'lo, hi'") from None
            spans[key[len("lambda."):]] = (lo, hi)
            line_of[key] = lineno
            continue
        if key not in _KEYS:
            raise SpecError(f"line {lineno}: unknown key {key!r}")
        kv[key] = val
        line_of[key] = lineno

    def where(key):
        return f"line {line_of[key]}" if key in line_of else "spec"

    if base_dir is not None and "path" in kv and not Path(kv["path"]).is_absolute():
        kv["path"] = str(Path(base_dir) / kv["path"])
    ests = [e.strip() for e in kv.get("estimators", "dfs").split(",") if e.strip()]
    for e in ests:
        if e not in ESTIMATORS:
            raise SpecError(f"{where('estimators')}: unknown estimator {e!r}")
    for e in spans:
        if e not in ESTIMATORS:
            raise SpecError(f"{where('lambda.' + e)}: unknown estimator {e!r}")

    def num(key, typ, default):
        try:
            return typ(kv[key]) if key in kv else default
        except ValueError:
            raise SpecError(f"{where(key)}: {key} must be {typ.__name__}, got {kv[key]!r}") from None

    try:
        signal = SignalSpec(kv.get("signal", "grid-piecewise"), parts=num("parts", int, 10),
                            pieces=num("pieces", int, 5), sparsity=num("sparsity", int, 10),
                            tv=num("tv", float, None), tv_scale=num("tv_scale", float, 1.0))
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"{where('signal')}: {exc}") from None
    cases = _cases(kv, where)
    if not cases:
        raise SpecError(f"{where('sizes')}: no graph sizes given")
    try:
        return ExperimentSpec(cases, signal, ests, sigma=num("sigma", float, 1.0),
                              draws=num("draws", int, 10), repetitions=num("repetitions", int, 1),
                              seed=num("seed", int, 0), K=num("K", int, 5),
                              lambda_count=num("lambda_count", int, 20), lambda_spans=spans,
                              threads=num("threads", int, os.cpu_count() or 1))
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def parse_spec_file(path) -> ExperimentSpec:
    path = Path(path)
    return parse_spec_text(path.read_text(), base_dir=path.parent)
