"""A small Monte Carlo benchmark, run the way the command line runs it.

The spec text below is the same format `dfsdenoise bench` reads from a file.
Results land in a report directory of CSV tables plus a text summary.
"""
import tempfile
from pathlib import Path

from dfsdenoise.bench import emit_report, parse_spec_text, read_table, run_experiment

SPEC = """
graph = grid
sizes = 20x20, 30x30, 45x45
signal = grid-piecewise
tv_scale = 5
sigma = 1
estimators = dfs, dfs-avg, laplacian
draws = 4
lambda_count = 12
seed = 7
"""

report = run_experiment(parse_spec_text(SPEC))
out = Path(tempfile.mkdtemp()) / "report"
emit_report(report, out)
print((out / "summary.txt").read_text())
for row in read_table(out / "optimized.csv"):
    print(f"{row['case']:>10} {row['estimator']:>9}  best lambda {row['best_lambda']:.3g}")
print("files:", sorted(p.name for p in out.iterdir()))
