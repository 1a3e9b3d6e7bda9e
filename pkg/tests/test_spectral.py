import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import subspace_angles

from conftest import sub_from_dense, two_cliques
from oracle import dense_svd_reference
from smbic.spectral import (
    KMeansConfig,
    Labeling,
    SpectralConfig,
    SvdConfig,
    assign_by_majority_link,
    cluster_rows_spherical,
    kmeans,
    spectral_cluster_dcsbm,
    spectral_cluster_sbm,
    truncated_svd,
    write_embedding_csv,
    write_labeling_csv,
)
from smbic.subsampling import NodeSet, extract_subadjacency, recommended_subsample_size, sample_nodes
from smbic.synth import DcsbmParams, SbmParams, sample_dcsbm, sample_sbm


def misclassification(pred, truth, K):
    # best label matching by brute force over the confusion matrix (K is small)
    from itertools import permutations

    C = np.zeros((K, K), dtype=int)
    np.add.at(C, (pred, truth), 1)
    best = max(sum(C[p[k], k] for k in range(K)) for p in permutations(range(K)))
    return 1 - best / truth.size


def test_rank_one():
    x = np.array([1.0, 2.0, 2.0, 0.0])
    y = np.array([3.0, 4.0])
    emb = truncated_svd(np.outer(x, y), 1)
    assert emb.sigma[0] == pytest.approx(np.linalg.norm(x) * np.linalg.norm(y), rel=1e-12)
    assert np.allclose(np.abs(emb.V[:, 0]), x / np.linalg.norm(x), atol=1e-12)


def test_zero_matrix_flags_rank_deficiency():
    emb = truncated_svd(np.zeros((6, 4)), 2)
    assert np.all(emb.sigma == 0)
    assert emb.rank_deficient
    assert np.allclose(emb.V.T @ emb.V, np.eye(2), atol=1e-8)


def test_K_larger_than_n():
    with pytest.raises(ValueError):
        truncated_svd(np.ones((5, 3)), 4)


def test_random_sparse_against_dense_reference():
    rng = np.random.default_rng(5)
    M = sp.random(200, 50, density=0.1, random_state=rng, data_rvs=lambda k: np.ones(k))
    for K in (1, 3, 5):
        emb = truncated_svd(M, K, seed=K)
        U, s = dense_svd_reference(M, K)
        assert np.max(subspace_angles(emb.V, U)) < 1e-6
        assert np.allclose(emb.sigma, s, rtol=1e-8)


def test_embedding_orthonormal_and_sorted():
    rng = np.random.default_rng(0)
    emb = truncated_svd(rng.random((120, 40)), 6)
    assert np.max(np.abs(emb.V.T @ emb.V - np.eye(6))) < 1e-8
    assert np.all(np.diff(emb.sigma) <= 0) and np.all(emb.sigma >= 0)


def test_svd_deterministic():
    rng = np.random.default_rng(1)
    M = rng.random((80, 30))
    a, b = truncated_svd(M, 4, seed=9), truncated_svd(M, 4, seed=9)
    assert np.array_equal(a.V, b.V) and np.array_equal(a.sigma, b.sigma)


def test_kmeans_two_point_masses():
    X = np.vstack([np.zeros((20, 2)), np.full((30, 2), 10.0)])
    lab = kmeans(X, 2)
    assert len(set(lab.labels[:20])) == 1 and len(set(lab.labels[20:])) == 1
    assert lab.labels[0] != lab.labels[-1]


def test_kmeans_single_cluster():
    X = np.random.default_rng(0).random((15, 3))
    lab = kmeans(X, 1)
    assert np.all(lab.labels == 0)
    assert lab.inertia == pytest.approx(((X - X.mean(0)) ** 2).sum())


def test_kmeans_separated_blobs():
    rng = np.random.default_rng(2)
    centers = np.array([[0, 0], [10, 0], [0, 10]], dtype=float)
    truth = np.repeat(np.arange(3), 50)
    X = centers[truth] + rng.normal(size=(150, 2))
    assert misclassification(kmeans(X, 3, seed=4).labels, truth, 3) == 0


def test_kmeans_recovers_empty_cluster():
    # five identical points and one outlier; K=3 forces a re-seed
    X = np.array([[0.0, 0.0]] * 5 + [[1.0, 1.0]])
    lab = kmeans(X, 3, KMeansConfig(restarts=1), seed=0)
    assert lab.labels.max() < 3


def test_kmeans_deterministic():
    X = np.random.default_rng(3).random((200, 4))
    assert np.array_equal(kmeans(X, 5, seed=1).labels, kmeans(X, 5, seed=1).labels)


def test_labeling_range_checked():
    with pytest.raises(ValueError):
        Labeling(np.array([0, 3]), 2)


def test_two_cliques_spectral_sbm():
    g = two_cliques(20)
    a = extract_subadjacency(g, NodeSet.from_ids(np.arange(0, 40, 2), 40))
    lab = spectral_cluster_sbm(a, 2)
    truth = np.repeat([0, 1], 20)
    assert misclassification(lab.labels, truth, 2) == 0


def test_spectral_K1():
    g = two_cliques(5)
    a = extract_subadjacency(g, NodeSet.from_ids([0, 7], 10))
    assert np.all(spectral_cluster_sbm(a, 1).labels == 0)


def test_spectral_sbm_planted_N2000():
    N = 2000
    rho = N ** -0.5
    g, truth = sample_sbm(SbmParams(3, N, rho, 0.15), seed=21)
    a = extract_subadjacency(g, sample_nodes(N, recommended_subsample_size(N, rho, 1.5), seed=21))
    lab = spectral_cluster_sbm(a, 3, seed=21)
    assert misclassification(lab.labels, truth.labels, 3) < 0.05


def test_spherical_agrees_with_plain_on_separated_sbm():
    g, truth = sample_sbm(SbmParams(3, 600, 0.3, 0.05), seed=3)
    a = extract_subadjacency(g, sample_nodes(600, 200, seed=3))
    plain = spectral_cluster_sbm(a, 3, seed=3).labels
    sph, _ = spectral_cluster_dcsbm(a, 3, seed=3)
    assert 1 - misclassification(sph.labels, plain, 3) >= 0.99


def test_spherical_zero_row_flagged():
    A = np.zeros((5, 5), dtype=int)
    for i, j in [(0, 1), (1, 2), (2, 3)]:
        A[i, j] = A[j, i] = 1
    a = sub_from_dense(A, [1, 2, 3])  # node 4 is isolated
    lab, psi = spectral_cluster_dcsbm(a, 2)
    assert psi.psi_hat[4] == 0.0
    assert 4 in lab.flagged.tolist()


def test_spherical_zero_row_joins_largest_cluster():
    V = np.array([[1.0, 0.0], [1.0, 0.1], [0.9, 0.0], [0.0, 1.0], [0.0, 0.0]])
    lab, psi = cluster_rows_spherical(V, 2)
    big = np.bincount(lab.labels[:4], minlength=2).argmax()
    assert lab.labels[4] == big
    assert lab.flagged.tolist() == [4]
    assert np.array_equal(psi.psi_hat[:4], np.linalg.norm(V[:4], axis=1))


def test_spectral_dcsbm_planted():
    N = 3000
    rho = N ** -0.5
    g, truth = sample_dcsbm(DcsbmParams(SbmParams(3, N, rho, 0.2), 0.6), seed=8)
    a = extract_subadjacency(g, sample_nodes(N, recommended_subsample_size(N, rho, 1.5), seed=8))
    lab, psi = spectral_cluster_dcsbm(a, 3, seed=8)
    assert misclassification(lab.labels, truth.labels, 3) < 0.05


def test_majority_link_rules():
    # selected nodes 0..4 with clusters (0,0,0,1,1); nodes 5..7 unselected
    A = np.zeros((8, 8), dtype=int)

    def link(i, j):
        A[i, j] = A[j, i] = 1

    for j in (0, 1, 2, 3):
        link(5, j)  # 3 links to cluster 0, 1 to cluster 1
    for j in (0, 1, 3, 4):
        link(6, j)  # tie 2-2
    a = sub_from_dense(A, [0, 1, 2, 3, 4])
    lab = assign_by_majority_link(a, [0, 0, 0, 1, 1], 2)
    assert lab.labels[5] == 0
    assert lab.labels[6] == 0
    assert lab.labels[7] == 0 and lab.flagged.tolist() == [7]
    assert lab.labels[:5].tolist() == [0, 0, 0, 1, 1]


def test_majority_link_path(path3):
    lab = assign_by_majority_link(sub_from_dense(path3, [0, 1]), [0, 1], 2)
    assert lab.labels.tolist() == [0, 1, 1]


def test_export_csv(tmp_path):
    emb = truncated_svd(np.eye(4), 2)
    write_embedding_csv(emb, tmp_path / "e.csv")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0].startswith("# sigma:") and lines[1] == "node_id,v1,v2" and len(lines) == 6
    write_labeling_csv(Labeling(np.array([0, 1, 1]), 2, flagged=np.array([2])), tmp_path / "l.csv")
    assert (tmp_path / "l.csv").read_text().splitlines()[-1] == "2,1,1"


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5))
def test_kmeans_inertia_permutation_invariant(seed, K):
    rng = np.random.default_rng(seed)
    X = rng.random((40, 3))
    lab = kmeans(X, K, KMeansConfig(restarts=2), seed=seed)

    def wcss(labels):
        # fsum is exactly rounded, so the result does not depend on the order of clusters
        return math.fsum(((X[labels == k] - X[labels == k].mean(0)) ** 2).sum() for k in np.unique(labels))

    perm = rng.permutation(K)
    assert wcss(perm[lab.labels]) == wcss(lab.labels)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_spherical_scale_invariance(seed):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(30, 3))
    # powers of two scale the mantissa exactly, so normalised rows are bit-identical
    c = 2.0 ** rng.integers(-8, 8, size=30)
    a, _ = cluster_rows_spherical(V, 3, seed=1)
    b, _ = cluster_rows_spherical(V * c[:, None], 3, seed=1)
    assert np.array_equal(a.labels, b.labels)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_subspace_matches_dense_reference(seed, K):
    rng = np.random.default_rng(seed)
    N, n = int(rng.integers(K + 1, 300)), int(rng.integers(K, 100))
    M = (rng.random((N, n)) < rng.uniform(0.05, 0.5)).astype(float)
    emb = truncated_svd(M, K, seed=seed)
    U, s = dense_svd_reference(M, K)
    if s[-1] > 1e-8 * s[0] and (K == min(N, n) or np.linalg.svd(M, compute_uv=False)[K] < s[-1] * (1 - 1e-6)):
        assert np.max(subspace_angles(emb.V, U)) < 1e-6
