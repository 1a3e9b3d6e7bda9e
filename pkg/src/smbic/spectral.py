"""Spectral machinery on the N x n sub-adjacency.

Left singular vectors of ``A_S`` give an ``N x K`` embedding; k-means on its
rows labels every node (SBM), or k-means on the row-normalised embedding does
(DCSBM), in which case the row norms double as degree estimates.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .rng import make_rng
from .subsampling import SubAdjacency


@dataclass(frozen=True)
class SvdConfig:
    oversampling: int = 10
    power_iters: int = 2
    # subspace iteration continues past ``power_iters`` until the top-K residuals
    # fall below tol * sigma_1 or ``max_iters`` is reached
    tol: float = 1e-10
    max_iters: int = 300


@dataclass(frozen=True)
class KMeansConfig:
    restarts: int = 10
    max_iters: int = 100
    tol: float = 1e-6


@dataclass(frozen=True)
class SpectralConfig:
    svd: SvdConfig = field(default_factory=SvdConfig)
    kmeans: KMeansConfig = field(default_factory=KMeansConfig)


@dataclass(frozen=True, eq=False)
class Embedding:
    V: np.ndarray
    sigma: np.ndarray
    rank_deficient: bool = False
    converged: bool = True
    iterations: int = 0

    @property
    def K(self) -> int:
        return self.V.shape[1]

    def leading(self, K: int) -> "Embedding":
        if K > self.K:
            raise ValueError(f"embedding has only {self.K} columns")
        tol = _zero_tol(self.sigma, self.V.shape[0])
        return Embedding(self.V[:, :K], self.sigma[:K], bool(self.sigma[K - 1] <= tol), self.converged, self.iterations)


@dataclass(frozen=True, eq=False)
class Labeling:
    labels: np.ndarray
    K: int
    # nodes whose label came from a fallback rule rather than the clustering itself
    flagged: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    inertia: float = float("nan")

    def __post_init__(self):
        lab = self.labels
        if lab.size and (lab.min() < 0 or lab.max() >= self.K):
            raise ValueError(f"labels outside [0, {self.K})")

    @property
    def n_nonempty(self) -> int:
        return int(np.count_nonzero(np.bincount(self.labels, minlength=self.K)))


@dataclass(frozen=True, eq=False)
class DegreeEstimates:
    psi_hat: np.ndarray
    zero_rows: np.ndarray


def _as_operator(a):
    if isinstance(a, SubAdjacency):
        return a.matrix
    if sp.issparse(a):
        return sp.csr_matrix(a, dtype=np.float64)
    return np.asarray(a, dtype=np.float64)


def _orth(Y: np.ndarray) -> np.ndarray:
    return scipy.linalg.qr(Y, mode="economic", check_finite=False)[0]


def _zero_tol(sigma: np.ndarray, dim: int) -> float:
    return max(sigma[0] if sigma.size else 0.0, 1.0) * dim * np.finfo(float).eps


def _fix_signs(U: np.ndarray, Vt: np.ndarray) -> None:
    # largest-magnitude entry of each left vector made positive
    idx = np.argmax(np.abs(U), axis=0)
    sgn = np.sign(U[idx, np.arange(U.shape[1])])
    sgn[sgn == 0] = 1.0
    U *= sgn
    Vt *= sgn[:, None]


def truncated_svd(a, K: int, cfg: SvdConfig = SvdConfig(), seed=0) -> Embedding:
    """Top-``K`` left singular vectors by randomized subspace iteration.

    Starts from a Gaussian sketch with ``K + oversampling`` columns, applies
    ``power_iters`` rounds of power iteration, and then keeps iterating until the
    Rayleigh-Ritz residuals ``||A v_i - sigma_i u_i||`` of the top ``K`` pairs are
    below ``tol * sigma_1``. Each round costs two products with ``A`` plus a thin
    QR, so the work is linear in the number of rows for fixed ``K``.

    Columns beyond the numerical rank come back as an orthonormal completion
    with zero singular values and ``rank_deficient`` set.
    """
    A = _as_operator(a)
    N, n = A.shape
    if not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= n = {n}, got K={K}")
    if K > N:
        raise ValueError(f"need K <= N = {N}, got K={K}")
    rng = make_rng(seed, "svd", K)
    width = min(n, N, K + cfg.oversampling)
    Q = _orth(A @ rng.standard_normal((n, width)))

    def ritz(Q):
        B = (A.T @ Q).T if sp.issparse(A) else Q.T @ A
        Ub, s, Vt = scipy.linalg.svd(np.asarray(B), full_matrices=False, check_finite=False)
        return Q @ Ub, s, Vt

    full_rank_sketch = width == min(N, n)
    it = 0
    while True:
        if it >= cfg.power_iters or full_rank_sketch:
            U, s, Vt = ritz(Q)
            R = A @ Vt[:K].T - U[:, :K] * s[:K]
            res = np.linalg.norm(R, axis=0).max() if K else 0.0
            converged = full_rank_sketch or res <= cfg.tol * max(s[0], np.finfo(float).tiny)
            if converged or it >= cfg.max_iters:
                break
        Q = _orth(A @ _orth(A.T @ Q))
        it += 1
    U, s, Vt = U[:, :K].copy(), s[:K].copy(), Vt[:K].copy()
    _fix_signs(U, Vt)
    deficient = bool(s[-1] <= _zero_tol(s, max(N, n)))
    return Embedding(U, s, deficient, bool(converged), it)


# k-means

def _sq_dists(X, x_sq, C):
    d = x_sq[:, None] - 2.0 * (X @ C.T) + np.einsum("ij,ij->i", C, C)[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def _kmeanspp(X, x_sq, K, rng):
    N = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(N)]
    closest = _sq_dists(X, x_sq, centers[:1])[:, 0]
    for k in range(1, K):
        total = closest.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, N - 1)
        else:
            idx = int(rng.integers(N))
        centers[k] = X[idx]
        np.minimum(closest, _sq_dists(X, x_sq, centers[k : k + 1])[:, 0], out=closest)
    return centers


def _lloyd(X, x_sq, centers, cfg: KMeansConfig):
    N, K = X.shape[0], centers.shape[0]
    for _ in range(cfg.max_iters):
        d = _sq_dists(X, x_sq, centers)
        labels = d.argmin(axis=1)
        counts = np.bincount(labels, minlength=K)
        new = np.zeros_like(centers)
        _accumulate(new, labels, X)
        empty = np.flatnonzero(counts == 0)
        nz = counts > 0
        new[nz] /= counts[nz, None]
        if empty.size:
            # re-seed each empty center at the point farthest from its assigned center
            own = d[np.arange(N), labels]
            far = np.argsort(-own, kind="stable")[: empty.size]
            new[empty] = X[far]
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if shift < cfg.tol and not empty.size:
            break
    d = _sq_dists(X, x_sq, centers)
    labels = d.argmin(axis=1)
    inertia = float(d[np.arange(N), labels].sum())
    return labels, centers, inertia


def _accumulate(out, labels, X):
    # per-cluster column sums; bincount keeps summation order fixed
    K = out.shape[0]
    for j in range(X.shape[1]):
        out[:, j] = np.bincount(labels, weights=X[:, j], minlength=K)


def kmeans(points: np.ndarray, K: int, cfg: KMeansConfig = KMeansConfig(), seed=0) -> Labeling:
    """Best-of-``restarts`` Lloyd's algorithm from k-means++ seeds (lowest within-cluster SS wins)."""
    X = np.ascontiguousarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("points must be a 2-d array")
    N = X.shape[0]
    if not 1 <= K <= N:
        raise ValueError(f"need 1 <= K <= N = {N}, got K={K}")
    if K == 1:
        c = X.mean(axis=0)
        return Labeling(np.zeros(N, dtype=np.int64), 1, inertia=float(((X - c) ** 2).sum()))
    x_sq = np.einsum("ij,ij->i", X, X)
    best = None
    for r in range(max(cfg.restarts, 1)):
        rng = make_rng(seed, "kmeans", K, r)
        labels, _, inertia = _lloyd(X, x_sq, _kmeanspp(X, x_sq, K, rng), cfg)
        if best is None or inertia < best[1]:
            best = (labels, inertia)
    return Labeling(best[0].astype(np.int64), K, inertia=best[1])


# spectral clustering

def cluster_rows(V: np.ndarray, K: int, cfg: KMeansConfig = KMeansConfig(), seed=0) -> Labeling:
    return kmeans(V[:, :K], K, cfg, seed)


def cluster_rows_spherical(V: np.ndarray, K: int, cfg: KMeansConfig = KMeansConfig(), seed=0,
                           empty_rows: np.ndarray | None = None) -> tuple[Labeling, DegreeEstimates]:
    """k-means on unit-normalised rows; zero rows join the largest cluster and are flagged.

    ``empty_rows`` marks rows known to be structurally zero (nodes with no
    stored entries in ``A_S``); their norm is forced to exactly 0.
    """
    V = V[:, :K]
    psi = np.sqrt(np.einsum("ij,ij->i", V, V))
    zero = psi <= 1e-12 * (psi.max() if psi.size else 0.0)
    if empty_rows is not None:
        zero |= empty_rows
    psi = np.where(zero, 0.0, psi)
    live = np.flatnonzero(~zero)
    dead = np.flatnonzero(zero)
    labels = np.zeros(V.shape[0], dtype=np.int64)
    if live.size == 0:
        return Labeling(labels, K, flagged=dead), DegreeEstimates(psi, dead)
    U = V[live] / psi[live, None]
    k_eff = min(K, live.size)
    sub = kmeans(U, k_eff, cfg, seed)
    labels[live] = sub.labels
    if dead.size:
        labels[dead] = int(np.bincount(sub.labels, minlength=K).argmax())
    return Labeling(labels, K, flagged=dead, inertia=sub.inertia), DegreeEstimates(psi, dead)


def _empty_rows(a) -> np.ndarray | None:
    if isinstance(a, SubAdjacency):
        return np.diff(a.matrix.indptr) == 0
    return None


def spectral_cluster_sbm(a, K: int, cfg: SpectralConfig = SpectralConfig(), seed=0) -> Labeling:
    emb = truncated_svd(a, K, cfg.svd, seed)
    return cluster_rows(emb.V, K, cfg.kmeans, seed)


def spectral_cluster_dcsbm(a, K: int, cfg: SpectralConfig = SpectralConfig(), seed=0) -> tuple[Labeling, DegreeEstimates]:
    emb = truncated_svd(a, K, cfg.svd, seed)
    return cluster_rows_spherical(emb.V, K, cfg.kmeans, seed, _empty_rows(a))


def assign_by_majority_link(a: SubAdjacency, g_n, K: int) -> Labeling:
    """Label unselected nodes by the selected-node cluster they link to most.

    Ties go to the smallest cluster index; unselected nodes with no links into
    the subsample get label 0 and are flagged. Selected nodes keep ``g_n``.
    """
    g_n = np.asarray(g_n, dtype=np.int64)
    if g_n.shape != (a.n,):
        raise ValueError(f"g_n must have length n = {a.n}")
    if g_n.size and (g_n.min() < 0 or g_n.max() >= K):
        raise ValueError(f"g_n values outside [0, {K})")
    onehot = sp.csr_matrix((np.ones(a.n), (np.arange(a.n), g_n)), shape=(a.n, K))
    counts = (a.matrix @ onehot).toarray()
    labels = counts.argmax(axis=1).astype(np.int64)
    sel = a.nodes.mask
    labels[a.nodes.selected] = g_n
    flagged = np.flatnonzero(~sel & (counts.sum(axis=1) == 0))
    return Labeling(labels, K, flagged=flagged)


# export

def write_embedding_csv(emb: Embedding, path: str | os.PathLike) -> None:
    """``node_id,v1..vK`` rows, preceded by a ``# sigma:`` comment line."""
    K = emb.K
    with open(path, "w") as fh:
        fh.write("# sigma: " + " ".join(repr(float(s)) for s in emb.sigma) + "\n")
        fh.write("node_id," + ",".join(f"v{k + 1}" for k in range(K)) + "\n")
        for i, row in enumerate(emb.V):
            fh.write(f"{i}," + ",".join(repr(float(x)) for x in row) + "\n")


def write_labeling_csv(lab: Labeling, path: str | os.PathLike) -> None:
    """``node_id,label,flagged`` rows."""
    flagged = np.zeros(lab.labels.size, dtype=bool)
    flagged[lab.flagged] = True
    with open(path, "w") as fh:
        fh.write("node_id,label,flagged\n")
        for i, (g, f) in enumerate(zip(lab.labels, flagged)):
            fh.write(f"{i},{g},{int(f)}\n")
