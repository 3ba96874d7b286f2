import csv
import itertools
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from robustevo.harness import (analyze, best_so_far_curve, bonferroni, compare, curves_svg,
                               load_config, load_experiment, mann_whitney_u, parse_config,
                               phase_histogram, run_experiment)
from robustevo.harness.analysis import describe, phase_of
from robustevo.harness.cli import main
from robustevo.harness.runner import (COMPARE_COLUMNS, GEN_COLUMNS, SUMMARY_COLUMNS,
                                      SummaryTable, read_gen_csv, write_gen_csv)
from robustevo.protocol import GenerationRecord, RunResult

SMALL = """
[env]
name = cartpole2

[optimizer]
algorithm = {algorithm}

[protocol]
nee = 2
nve = 5
f = 0.5
budget = 400
seed = {seed}

[experiment]
replications = 3
out = {out}
"""


# -- statistics -----------------------------------------------------------------

def _brute_force(a, b):
    pooled = np.concatenate([a, b])
    n1 = len(a)
    ranks = sps.rankdata(pooled)
    u_obs = ranks[:n1].sum() - n1 * (n1 + 1) / 2
    mean_u = n1 * len(b) / 2
    extreme = total = 0
    for idx in itertools.combinations(range(len(pooled)), n1):
        u = ranks[list(idx)].sum() - n1 * (n1 + 1) / 2
        total += 1
        extreme += abs(u - mean_u) >= abs(u_obs - mean_u) - 1e-9
    return u_obs, extreme / total


def test_mann_whitney_separated_triples():
    u, p = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert u == 0 and p == pytest.approx(0.1, abs=1e-15)
    u, p = mann_whitney_u([4, 5, 6], [1, 2, 3])
    assert u == 9 and p == pytest.approx(0.1, abs=1e-15)


def test_mann_whitney_identical_samples():
    u, p = mann_whitney_u([0.2, 0.5, 0.5, 0.9], [0.9, 0.5, 0.2, 0.5])
    assert u == 8.0 and p == 1.0


def test_mann_whitney_ten_vs_ten():
    u, p = mann_whitney_u(range(1, 11), range(11, 21))
    assert u == 0 and p < 0.001
    u, p = mann_whitney_u(range(1, 11), range(11, 21), exact=True)
    assert u == 0 and p == pytest.approx(2 / math.comb(20, 10), rel=1e-12)


def test_mann_whitney_rejects_empty_or_nan():
    with pytest.raises(ValueError):
        mann_whitney_u([], [1.0])
    with pytest.raises(ValueError):
        mann_whitney_u([np.nan], [1.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=6),
       st.lists(st.integers(0, 4), min_size=1, max_size=6))
def test_exact_branch_matches_enumeration(a, b):
    a, b = np.array(a, float), np.array(b, float)
    u, p = mann_whitney_u(a, b)
    u_ref, p_ref = _brute_force(a, b)
    assert u == u_ref and p == pytest.approx(p_ref, abs=1e-12)


def test_exact_branch_matches_scipy_without_ties():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.normal(size=7), rng.normal(0.5, 1, 8)
        u, p = mann_whitney_u(a, b)
        ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="exact")
        assert u == ref.statistic and p == pytest.approx(ref.pvalue, rel=1e-12)


def test_normal_branch_matches_scipy():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = np.round(rng.normal(size=12), 1)
        b = np.round(rng.normal(0.3, 1, 15), 1)
        u, p = mann_whitney_u(a, b)
        ref = sps.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic",
                               use_continuity=True)
        assert u == ref.statistic and p == pytest.approx(ref.pvalue, rel=1e-9)


def test_all_tied_large_samples():
    assert mann_whitney_u(np.ones(10), np.ones(12)) == (60.0, 1.0)


def test_bonferroni_examples():
    assert bonferroni([0.01], m=5)[0] == pytest.approx(0.05)
    assert bonferroni([0.5], m=5)[0] == 1.0
    assert bonferroni([0.0], m=100)[0] == 0.0
    assert bonferroni([0.01, 0.2]).tolist() == pytest.approx([0.02, 0.4])


@pytest.mark.parametrize("args", [([0.1, 0.2], 1), ([1.5], None), ([-0.1], None)])
def test_bonferroni_rejects(args):
    with pytest.raises(ValueError):
        bonferroni(*args)


# -- curves and phases ------------------------------------------------------------

def _run(perfs, step=10, at=None, budget=None):
    recs = [GenerationRecord(i, step * (i + 1), 0.0, p, max(perfs[: i + 1]))
            for i, p in enumerate(perfs)]
    best = int(np.argmax(perfs))
    return RunResult(None, max(perfs), at if at is not None else recs[best].episodes_used,
                     budget or step * len(perfs), recs)


def test_curve_is_running_max():
    x, y = best_so_far_curve([_run([0.1, 0.3, 0.2])])
    assert x.tolist() == [10, 20, 30] and y.tolist() == [0.1, 0.3, 0.3]


def test_curve_of_identical_runs_equals_one_run():
    r = _run([0.2, 0.1, 0.5, 0.4])
    x1, y1 = best_so_far_curve([r])
    x2, y2 = best_so_far_curve([r, r])
    assert np.array_equal(x1, x2) and np.array_equal(y1, y2)


def test_curve_on_ragged_ledgers():
    a = _run([0.1, 0.2, 0.3], step=10)
    b = _run([0.4, 0.0], step=15)
    x, y = best_so_far_curve([a, b])
    assert x.tolist() == [15, 20, 30]
    assert y.tolist() == pytest.approx([(0.1 + 0.4) / 2, (0.2 + 0.4) / 2, (0.3 + 0.4) / 2])


@given(st.lists(st.lists(st.floats(0, 1), min_size=1, max_size=8), min_size=1, max_size=4))
def test_curve_never_decreases(perf_lists):
    _, y = best_so_far_curve([_run(p) for p in perf_lists])
    assert np.all(np.diff(y) >= 0)


def test_phase_examples():
    assert phase_of(3.1e5, 3.2e6) == 0
    assert phase_of(3.2e5, 3.2e6) == 1
    assert phase_of(3.2e6, 3.2e6) == 9
    assert phase_of(3.3e6, 3.2e6) == 9


def test_phase_histogram_sums_to_one():
    runs = [_run([0.1, 0.5], at=a, budget=100) for a in (5, 15, 15, 99, 100)]
    h = phase_histogram(runs)
    assert h.sum() == pytest.approx(1.0)
    assert h.tolist() == [0.2, 0.4, 0, 0, 0, 0, 0, 0, 0, 0.4]


def test_describe():
    d = describe([1, 2, 3, 4])
    assert d == {"n": 4, "mean": 2.5, "median": 2.5, "q1": 1.75, "q3": 3.25}


def test_svg_is_well_formed():
    import xml.etree.ElementTree as ET
    svg = curves_svg({"a<b": ([0, 1, 2], [0.1, 0.2, 0.2]), "c": ([0, 2], [0.0, 0.5])})
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}polyline")) == 2


# -- config -------------------------------------------------------------------------

def test_parse_config_fills_dimension(tmp_path):
    cfg = parse_config(SMALL.format(algorithm="cmaes", seed=3, out=tmp_path), name="x")
    assert cfg.optimizer.n == 151 and cfg.optimizer.algorithm == "cmaes"
    assert cfg.protocol.period == 2 and cfg.replications == 3 and cfg.name == "x"
    over = cfg.with_overrides(seed=9, replications=1, out="elsewhere")
    assert over.protocol.seed == 9 and over.replications == 1 and over.out == "elsewhere"
    assert cfg.protocol.seed == 3


def test_env_params_reach_the_environment():
    cfg = parse_config("[env]\nname = racing\nn_steps = 100\n[optimizer]\nalgorithm = snes\n"
                       "[protocol]\nbudget = 50\nnee = 1\nnve = 1\n")
    env = cfg.make_env()
    assert env.n_steps == 100 and cfg.optimizer.n == env.topology.n_params == 252


@pytest.mark.parametrize("text", [
    "[env]\nname = cartpole2\n[optimizer]\nalgorithm = sss\n",
    "[env]\n[optimizer]\nalgorithm = sss\n[protocol]\n",
    "[env]\nname = pong\n[optimizer]\nalgorithm = sss\n[protocol]\n",
    "[env]\nname = cartpole2\n[optimizer]\nalgorithm = neat\n[protocol]\n",
    "[env]\nname = cartpole2\n[optimizer]\nalgorithm = sss\n[protocol]\nnee = 0\n",
    "[env]\nname = cartpole2\n[optimizer]\nalgorithm = sss\n[protocol]\nf = 0.3\n",
    "[env]\nname = cartpole2\n[optimizer]\nalgorithm = sss\n[protocol]\nbogus = 1\n",
    "[env]\nname = cartpole2\n[optimizer]\nalgorithm = sss\n[protocol]\n[experiment]\n"
    "replications = 0\n",
])
def test_bad_configs_rejected(text):
    with pytest.raises(ValueError):
        parse_config(text)


# -- runs on disk ---------------------------------------------------------------------

def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def _files(directory):
    return {p.relative_to(directory): p.read_bytes()
            for p in sorted(Path(directory).rglob("*")) if p.is_file()}


def test_run_experiment_writes_documented_files(tmp_path):
    out = tmp_path / "exp"
    table = run_experiment(parse_config(SMALL.format(algorithm="sss", seed=1, out=out), "exp"))
    assert len(table.performances) == 3
    summary = _read(out / "summary.csv")
    assert tuple(summary[0]) == SUMMARY_COLUMNS and len(summary) == 4
    assert [row[1] for row in summary[1:]] == ["1", "2", "3"]
    for i in range(3):
        gen = _read(out / f"rep_{i:03d}" / "gen.csv")
        assert tuple(gen[0]) == GEN_COLUMNS
        assert (out / f"rep_{i:03d}" / "best_genome.txt").exists()
    for name in ("curve.csv", "phase.csv", "curve.svg"):
        assert (out / name).exists()
    back = load_experiment(out)
    assert back.performances == table.performances
    assert [r.records for r in back.runs] == [r.records for r in table.runs]


def test_reruns_are_byte_identical(tmp_path):
    cfg = parse_config(SMALL.format(algorithm="cmaes", seed=4, out=tmp_path / "a"), "same")
    run_experiment(cfg)
    run_experiment(cfg.with_overrides(out=tmp_path / "b"))
    assert _files(tmp_path / "a") == _files(tmp_path / "b")


def test_parallel_workers_do_not_change_results(tmp_path):
    cfg = parse_config(SMALL.format(algorithm="snes", seed=5, out=tmp_path / "serial"), "same")
    run_experiment(cfg)
    par = cfg.with_overrides(out=tmp_path / "parallel")
    par.workers = 2
    run_experiment(par)
    assert _files(tmp_path / "serial") == _files(tmp_path / "parallel")


def test_gen_csv_round_trip(tmp_path):
    recs = [GenerationRecord(0, 10, 0.1, 1 / 3, 1 / 3), GenerationRecord(1, 20, 0.2, 0.25, 1 / 3)]
    write_gen_csv(tmp_path / "g.csv", recs)
    assert read_gen_csv(tmp_path / "g.csv") == recs


def test_compare_adjusts_over_all_pairs():
    tables = [SummaryTable("a", [1, 2, 3]), SummaryTable("b", [4, 5, 6]),
              SummaryTable("c", [7, 8, 9])]
    rows = compare(tables)
    assert [r[0] for r in rows] == ["a vs b", "a vs c", "b vs c"]
    for _, u, p, q in rows:
        assert u == 0 and p == pytest.approx(0.1) and q == pytest.approx(0.3)


def test_analyze_and_cli(tmp_path, capsys):
    paths = []
    for alg in ("sss", "xnes"):
        path = tmp_path / f"{alg}.ini"
        path.write_text(SMALL.format(algorithm=alg, seed=6, out=tmp_path / alg))
        paths.append(path)
        assert load_config(path).name == alg
    assert main(["run", str(paths[0]), "-q"]) == 0
    assert main(["run", str(paths[1]), "--replications", "2", "--seed", "8"]) == 0
    assert len(_read(tmp_path / "xnes" / "summary.csv")) == 3
    out = capsys.readouterr().out
    assert "replication 1" in out
    assert main(["analyze", str(tmp_path / "sss"), "--compare", str(tmp_path / "xnes"),
                 "--out", str(tmp_path / "cmp")]) == 0
    rows = _read(tmp_path / "cmp" / "compare.csv")
    assert tuple(rows[0]) == COMPARE_COLUMNS and rows[1][0] == "sss vs xnes"
    assert (tmp_path / "cmp" / "stats.csv").exists()
    assert main(["run", str(tmp_path / "missing.ini")]) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[env]\nname = nowhere\n[optimizer]\n[protocol]\n")
    assert main(["run", str(bad)]) == 2
    direct = analyze([tmp_path / "sss", tmp_path / "xnes"])
    assert len(direct) == 1 and (tmp_path / "sss" / "analysis" / "compare.csv").exists()


@pytest.mark.parametrize("path", sorted((Path(__file__).parent.parent / "configs").glob("*.ini")),
                         ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    cfg = load_config(path)
    assert cfg.optimizer.n == cfg.make_env().topology.n_params
