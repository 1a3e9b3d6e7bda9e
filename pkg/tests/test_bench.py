import csv
import io
import json
import math

import numpy as np
import pytest

from smbic import bench
from smbic.bench import ExperimentSpec, GridPoint, RhoRule, SpecError, metrics, parse_spec


def test_metrics_examples():
    assert metrics([3, 3, 3, 4], 3) == (0.75, 3.25)
    assert metrics([4] * 7, 4) == (1.0, 4.0)
    assert metrics([6] * 5, 5) == (0.0, 6.0)
    with pytest.raises(ValueError):
        metrics([], 2)


@pytest.mark.parametrize("text,N,expected", [
    ("n^-0.5", 400, 0.05),
    ("0.5*n^-0.5", 400, 0.025),
    ("n^(-0.5)", 10000, 0.01),
    ("0.02", 10, 0.02),
    ("1.5 * n^-0.5", 900, 0.05),
])
def test_rho_rule(text, N, expected):
    r = RhoRule.parse(text)
    assert r(N) == pytest.approx(expected, rel=1e-12)
    assert str(r) == text


def test_rho_rule_errors():
    with pytest.raises(ValueError):
        RhoRule.parse("log(n)")
    with pytest.raises(ValueError):
        RhoRule.parse("n^0.5")(100)
    with pytest.raises(ValueError):
        RhoRule.parse("0")(100)


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(generator="ergm")
    with pytest.raises(ValueError):
        ExperimentSpec(T=0)
    with pytest.raises(ValueError):
        ExperimentSpec(generator="sbm", alpha=(0.4,))
    with pytest.raises(ValueError):
        ExperimentSpec(generator="sbm", m=(20,))


def test_grid_size():
    s = ExperimentSpec(K0=(2, 3), N=(500, 1000), zeta=(1.0, 1.5, 2.0))
    assert len(s.grid()) == 12
    pt = s.grid()[0]
    assert pt == GridPoint("sbm", 2, 500, s.rho[0], 1.0)


def test_graph_key_ignores_zeta():
    r = RhoRule.parse("n^-0.5")
    assert GridPoint("sbm", 2, 500, r, 1.0).graph_key() == GridPoint("sbm", 2, 500, r, 2.0).graph_key()


def test_subsample_size_rules():
    r = RhoRule.parse("n^-0.5")
    assert bench.subsample_size_for(ExperimentSpec(), GridPoint("sbm", 2, 2000, r, 1.5)) == 510
    assert bench.subsample_size_for(ExperimentSpec(n=77), GridPoint("sbm", 2, 2000, r, 1.5)) == 77
    # outliers do not enter N in the rule
    g = ExperimentSpec(generator="gsbm", m=(100,))
    assert bench.subsample_size_for(g, GridPoint("gsbm", 2, 2000, r, 1.5, m=100)) == 510
    dense = GridPoint("sbm", 2, 100, RhoRule.parse("0.01"), 2.0)
    assert bench.subsample_size_for(ExperimentSpec(), dense) == 100


def test_parse_bundled_specs():
    sizes = {"example1": 36, "example2": 36, "example3": 36, "example4": 9, "example5": 15}
    for name in sizes:
        (spec,) = bench.load_spec(bench.bundled_spec_path(name))
        assert spec.name == name and spec.T == 100
        assert len(spec.grid()) == sizes[name]
    (ex1,) = bench.load_spec(bench.bundled_spec_path("example1"))
    assert ex1.K0 == (2, 3, 4, 5) and ex1.zeta == (1.0, 1.5, 2.0)
    with pytest.raises(FileNotFoundError):
        bench.bundled_spec_path("example9")


def test_parse_spec_fields():
    text = "[a]\ngenerator = dcsbm\nK0 = 2, 3\nN_nodes = 300\nalpha = 0.4, 0.8\nT = 7  # short\nseed = 4\nmodel = dcsbm\n"
    (s,) = parse_spec(text)
    assert (s.generator, s.K0, s.N, s.alpha, s.T, s.seed, s.model) == ("dcsbm", (2, 3), (300,), (0.4, 0.8), 7, 4, "dcsbm")


@pytest.mark.parametrize("text,line,fragment", [
    ("[a]\nK0 = 2\nbogus = 1\n", 3, "unknown key 'bogus'"),
    ("[a]\nK0 = 2\nK0 = 3\n", 3, ""),
    ("K0 = 2\n", 1, ""),
    ("[a]\ngenerator = ergm\n", 1, "generator"),
    ("[a]\nK0 = 2\nN_nodes = many\n", 3, "n_nodes"),
    ("", 1, "no [section]"),
])
def test_parse_spec_errors(text, line, fragment):
    with pytest.raises(SpecError) as info:
        parse_spec(text, "x.spec")
    msg = str(info.value)
    assert msg.startswith(f"x.spec:{line}:")
    assert fragment in msg


def _tiny_spec(**kw):
    base = dict(generator="sbm", K0=(2,), N=(200,), rho=(RhoRule.parse("0.3"),), beta=0.0,
                zeta=(1.0,), T=3, seed=5, n=40, K_max=4)
    base.update(kw)
    return ExperimentSpec(**base)


def test_single_replicate_disjoint_blocks():
    (row,) = bench.run_experiment(_tiny_spec(T=1), threads=1)
    assert row.prob in (0.0, 1.0)
    assert row.T == 1 and len(row.k_hats) == 1


def test_reproducible_and_thread_independent():
    spec = _tiny_spec(K0=(2, 3), T=4)
    a = bench.run_experiment(spec, threads=1)
    b = bench.run_experiment(spec, threads=1)
    c = bench.run_experiment(spec, threads=2)
    for x, y, z in zip(a, b, c):
        assert x.k_hats == y.k_hats == z.k_hats
        assert (x.prob, x.mean_k) == (y.prob, y.mean_k) == (z.prob, z.mean_k)


def test_replicate_order_independent():
    spec = _tiny_spec(T=5)
    pt = spec.grid()[0]
    fwd = [bench.run_replicate(spec, pt, t)[0] for t in range(5)]
    rev = [bench.run_replicate(spec, pt, t)[0] for t in reversed(range(5))][::-1]
    assert fwd == rev
    (row,) = bench.run_experiment(spec, threads=1)
    assert list(row.k_hats) == fwd
    assert (row.prob, row.mean_k) == metrics(fwd, 2)


def test_rejected_replicates_counted():
    # alpha = 0 makes half the weights 5/3; with rho = 0.5 most within-block pairs clamp
    spec = ExperimentSpec(generator="dcsbm", K0=(2,), N=(100,), rho=(RhoRule.parse("0.5"),), beta=0.0,
                          alpha=(0.0,), T=2, seed=1, n=30, K_max=3)
    (row,) = bench.run_experiment(spec, threads=1)
    assert row.failed == 2 and math.isnan(row.prob)
    assert json.loads(bench.rows_to_json([row]))[0]["prob"] is None


def test_csv_and_json_schema():
    rows = bench.run_experiment(_tiny_spec(T=2), threads=1)
    text = bench.rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(bench.CSV_COLUMNS)
    rec = next(csv.DictReader(io.StringIO(text)))
    assert rec["generator"] == "sbm" and rec["rho_rule"] == "0.3" and rec["T"] == "2"
    d = json.loads(bench.rows_to_json(rows))[0]
    assert set(d) == set(bench.CSV_COLUMNS) | {"k_hats", "failed"}


def test_loglog_slope():
    assert bench.loglog_slope([10], [1.0]) is None
    assert bench.loglog_slope([1, 2, 4, 8], [3, 6, 12, 24]) == pytest.approx(1.0)


def test_scaling_probe_single_N():
    res = bench.scaling_probe([600], fixed=100, reps=1, rho=0.05)
    assert res.slope is None
    assert res.table().splitlines() == ["N,seconds", res.table().splitlines()[1]]


def test_scaling_probe_validation():
    with pytest.raises(ValueError):
        bench.scaling_probe([500, 1000], fixed=600)
    with pytest.raises(ValueError):
        bench.scaling_probe([100, 2000], fixed=1000, axis="n")
    with pytest.raises(ValueError):
        bench.scaling_probe([100], fixed=1000, axis="K")


def test_scaling_probe_n_axis():
    # at sparse settings k-means over all N rows hides the n term; a dense graph
    # and K_max = 2 leave the sub-adjacency products as the dominant cost
    res = bench.scaling_probe([200, 400, 800, 1600], fixed=4000, reps=3, axis="n", rho=0.5, K0=2, K_max=2)
    assert res.axis == "n"
    assert 0.7 <= res.slope <= 1.4


def test_scaling_probe_N_axis():
    res = bench.scaling_probe([2000, 4000, 8000], fixed=300, reps=3, rho=0.02)
    assert 0.8 <= res.slope <= 1.4


def test_example1_easy_cell():
    spec = ExperimentSpec(K0=(2,), N=(500,), zeta=(1.0,), T=100, seed=1)
    (row,) = bench.run_experiment(spec, threads=1)
    assert row.prob >= 0.95
    assert 1.95 <= row.mean_k <= 2.05


def test_example3_outlier_cell():
    spec = ExperimentSpec(generator="gsbm", K0=(5,), N=(3000,), m=(100,), zeta=(1.5,), T=100, seed=3)
    (row,) = bench.run_experiment(spec, threads=1)
    assert row.prob >= 0.95
