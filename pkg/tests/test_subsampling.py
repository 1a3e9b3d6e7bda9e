import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import graph_from_dense, sub_from_dense
from smbic.subsampling import (
    NodeSet,
    extract_subadjacency,
    independent_pair_count,
    read_nodeset,
    recommended_subsample_size,
    sample_nodes,
    write_nodeset,
)
from smbic.synth import SbmParams, sample_sbm


def test_full_sample():
    assert sample_nodes(5, 5, seed=3).selected.tolist() == [0, 1, 2, 3, 4]


def test_sample_without_replacement():
    s = sample_nodes(2000, 510, seed=1)
    assert s.n == 510
    assert np.all(np.diff(s.selected) > 0)
    assert np.array_equal(s.index_of[s.selected], np.arange(510))
    assert np.count_nonzero(s.index_of >= 0) == 510


def test_sample_deterministic():
    assert np.array_equal(sample_nodes(100, 10, 4).selected, sample_nodes(100, 10, 4).selected)


def test_sample_too_large():
    with pytest.raises(ValueError):
        sample_nodes(5, 6, seed=0)


def test_singleton_uniform_over_seeds():
    # 10^5 seeds, chi-square goodness of fit against the uniform law on 10 nodes
    counts = np.bincount([sample_nodes(10, 1, s).selected[0] for s in range(100_000)], minlength=10)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_extract_complete_graph():
    a = sub_from_dense(np.ones((4, 4)) - np.eye(4), [0, 1])
    M = a.matrix.toarray()
    expected = np.ones((4, 2))
    expected[0, 0] = expected[1, 1] = 0
    assert np.array_equal(M, expected)


def test_extract_empty_graph():
    a = sub_from_dense(np.zeros((4, 4)), [1, 3])
    assert a.matrix.nnz == 0


def test_extract_path(path3):
    a = sub_from_dense(path3, [0, 1])
    assert a.matrix.toarray().tolist() == [[0, 1], [1, 0], [0, 1]]
    assert a.M == 3


def test_extract_rejects_foreign_nodeset():
    g = graph_from_dense(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        extract_subadjacency(g, NodeSet.from_ids([0], 5))


@pytest.mark.parametrize("N,n,M", [(10, 3, 24), (5, 5, 10), (2000, 510, 889695)])
def test_independent_pair_count(N, n, M):
    assert independent_pair_count(N, n) == M


def test_size_rule_example():
    assert recommended_subsample_size(2000, 2000 ** -0.5, 1.5) == 510


def test_size_rule_caps_at_N():
    assert recommended_subsample_size(100, 0.01, 10.0) == 100


def test_size_rule_small_case():
    # ln 3 = 1.0986..., so the ceiling is 2
    assert recommended_subsample_size(3, 1.0, 1.0) == 2


def test_size_rule_zero_density():
    with pytest.raises(ValueError, match="density estimate is zero"):
        recommended_subsample_size(100, 0.0, 1.5)


def test_nodeset_file_round_trip(tmp_path):
    s = sample_nodes(50, 7, seed=2)
    write_nodeset(s, tmp_path / "s.idx")
    t = read_nodeset(tmp_path / "s.idx")
    assert np.array_equal(s.selected, t.selected)
    assert t.num_nodes == 50


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 200), st.floats(0.01, 0.5), st.data())
def test_subadjacency_matches_full_adjacency(N, p, data):
    g, _ = sample_sbm(SbmParams(1, N, p, 0.5), seed=data.draw(st.integers(0, 10**6)))
    n = data.draw(st.integers(1, N))
    s = sample_nodes(N, n, data.draw(st.integers(0, 10**6)))
    a = extract_subadjacency(g, s)
    A = g.adjacency.toarray()
    AS = a.matrix.toarray()
    assert np.array_equal(AS, A[:, s.selected])
    assert np.all(AS[s.selected, np.arange(n)] == 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 60), st.data())
def test_distinct_pairs_equal_M(N, data):
    n = data.draw(st.integers(1, N))
    sel = set(sample_nodes(N, n, data.draw(st.integers(0, 1000))).selected.tolist())
    pairs = {(min(i, j), max(i, j)) for j in sel for i in range(N) if i != j}
    assert len(pairs) == independent_pair_count(N, n)
