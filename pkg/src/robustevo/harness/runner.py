"""Replicated experiment runs and cross-condition analysis on disk.

Layout of an experiment directory::

    rep_000/gen.csv        one row per generation
    rep_000/best_genome.txt
    summary.csv            one row per replication
    curve.csv, curve.svg   mean best-so-far curve
    phase.csv              best-solution phase histogram

``analyze`` reads such directories and writes (by default into
``<first dir>/analysis``) ``compare.csv`` (pairwise
Mann-Whitney tests with Bonferroni adjustment), ``stats.csv``, ``curve.csv``,
``curve.svg`` and ``phase.csv``.
"""

from __future__ import annotations

import csv
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..net import save_genome
from ..protocol import GenerationRecord, RunResult, run
from . import analysis
from .stats import bonferroni, mann_whitney_u

logger = logging.getLogger(__name__)

GEN_COLUMNS = ("generation", "episodes_used", "best_fitness", "best_performance", "best_so_far")
SUMMARY_COLUMNS = ("replication", "seed", "best_performance", "evaluation_at_best",
                   "episodes_used", "total_budget", "generations")
COMPARE_COLUMNS = ("pair", "U", "p", "p_adjusted")
STATS_COLUMNS = ("condition", "n", "mean", "median", "q1", "q3")


@dataclass
class SummaryTable:
    condition: str
    performances: list
    runs: list = field(default_factory=list)

    @property
    def stats(self) -> dict:
        return analysis.describe(self.performances)

    @property
    def median(self) -> float:
        return self.stats["median"]


def _fmt(x):
    return repr(float(x)) if isinstance(x, float) else str(x)


def _write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_gen_csv(path, records):
    _write_csv(path, GEN_COLUMNS, ([r.generation, r.episodes_used, r.best_fitness,
                                    r.best_performance, r.best_so_far] for r in records))


def read_gen_csv(path):
    with open(path, newline="") as fh:
        return [GenerationRecord(int(r["generation"]), int(r["episodes_used"]),
                                 float(r["best_fitness"]), float(r["best_performance"]),
                                 float(r["best_so_far"]))
                for r in csv.DictReader(fh)]


def _one_replication(config, index):
    protocol = replace(config.protocol, seed=config.protocol.seed + index)
    return run(protocol, config.optimizer, config.make_env())


def run_experiment(config, progress=None) -> SummaryTable:
    """Run every replication (seed = master seed + index) and write outputs.

    Replications are independent, so running them in worker processes does
    not change any result.
    """
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    indices = range(config.replications)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_one_replication, [config] * len(indices), indices))
    else:
        results = []
        for i in indices:
            results.append(_one_replication(config, i))
            if progress is not None:
                progress(i, results[-1])

    topology = config.make_env().topology
    rows = []
    for i, res in enumerate(results):
        rep_dir = out / f"rep_{i:03d}"
        rep_dir.mkdir(exist_ok=True)
        write_gen_csv(rep_dir / "gen.csv", res.records)
        if res.best_genome is not None:
            save_genome(rep_dir / "best_genome.txt", topology, res.best_genome)
        rows.append([i, config.protocol.seed + i, res.best_performance, res.evaluation_at_best,
                     res.episodes_used, res.total_budget, len(res.records)])
    _write_csv(out / "summary.csv", SUMMARY_COLUMNS, rows)
    label = config.name or out.name
    _write_curve_outputs(out, {label: results})
    return SummaryTable(label, [r.best_performance for r in results], results)


def load_experiment(directory) -> SummaryTable:
    """Rebuild a summary (with per-run records) from an experiment directory."""
    directory = Path(directory)
    summary = directory / "summary.csv"
    if not summary.exists():
        raise FileNotFoundError(f"{summary} not found")
    runs = []
    with open(summary, newline="") as fh:
        for row in csv.DictReader(fh):
            rep = int(row["replication"])
            records = read_gen_csv(directory / f"rep_{rep:03d}" / "gen.csv")
            runs.append(RunResult(best_genome=None,
                                  best_performance=float(row["best_performance"]),
                                  evaluation_at_best=int(row["evaluation_at_best"]),
                                  total_budget=int(row["total_budget"]), records=records))
    return SummaryTable(directory.name, [r.best_performance for r in runs], runs)


def _write_curve_outputs(out, groups):
    curve_rows, phase_rows, series = [], [], {}
    for label, runs in groups.items():
        x, y = analysis.best_so_far_curve(runs)
        series[label] = (x, y)
        curve_rows += [[label, int(a), float(b)] for a, b in zip(x, y)]
        phase_rows += [[label, k, float(v)] for k, v in enumerate(analysis.phase_histogram(runs))]
    _write_csv(out / "curve.csv", ("condition", "episodes", "mean_best_so_far"), curve_rows)
    _write_csv(out / "phase.csv", ("condition", "phase", "fraction"), phase_rows)
    (out / "curve.svg").write_text(analysis.curves_svg(series))


def compare(tables):
    """Pairwise two-sided Mann-Whitney tests, Bonferroni-adjusted over all pairs."""
    pairs = list(itertools.combinations(tables, 2))
    tests = [mann_whitney_u(a.performances, b.performances) for a, b in pairs]
    adjusted = bonferroni([p for _, p in tests], m=max(1, len(pairs))) if pairs else []
    return [(f"{a.condition} vs {b.condition}", u, p, q)
            for (a, b), (u, p), q in zip(pairs, tests, adjusted)]


def analyze(directories, out=None):
    """Compare experiment directories; returns the compare rows."""
    tables = [load_experiment(d) for d in directories]
    names = [t.condition for t in tables]
    if len(set(names)) != len(names):
        for t, d in zip(tables, directories):
            t.condition = str(d)
    out = Path(out) if out is not None else Path(directories[0]) / "analysis"
    out.mkdir(parents=True, exist_ok=True)
    rows = compare(tables)
    _write_csv(out / "compare.csv", COMPARE_COLUMNS, rows)
    _write_csv(out / "stats.csv", STATS_COLUMNS,
               ([t.condition] + [t.stats[k] for k in STATS_COLUMNS[1:]] for t in tables))
    _write_curve_outputs(out, {t.condition: t.runs for t in tables})
    return rows
