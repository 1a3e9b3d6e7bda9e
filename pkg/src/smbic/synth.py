"""Seeded generators for planted-partition benchmarks.

Three models are covered: the plain SBM with ``B = rho * (beta * 11' + (1 - beta) I)``,
its degree-corrected version with a three-point/uniform mixture for the node
activeness ``psi``, and an SBM contaminated by ``m`` outlier nodes.

Edges are drawn block pair by block pair with geometric skipping, so the cost
is proportional to the number of edges rather than to ``N**2``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .graph import SparseGraph
from .rng import make_rng

MAX_RETRIES = 100


class GeneratorError(ValueError):
    pass


class GeneratorRejection(GeneratorError):
    """A valid parameter set produced an unusable instance (empty block, too much clamping)."""


@dataclass(frozen=True)
class SbmParams:
    K0: int
    N: int
    rho: float
    beta: float
    pi: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.K0 < 1 or self.N < 1:
            raise GeneratorError("K0 and N must be positive")
        if self.N < self.K0:
            raise GeneratorError("N must be at least K0")
        if not 0 < self.rho <= 1:
            raise GeneratorError(f"rho must lie in (0, 1], got {self.rho}")
        if not 0 <= self.beta <= 1:
            raise GeneratorError(f"beta must lie in [0, 1], got {self.beta}")
        pi = self.proportions
        if pi.size != self.K0 or np.any(pi <= 0) or abs(pi.sum() - 1) > 1e-12:
            raise GeneratorError("pi must be a positive probability vector of length K0")

    @property
    def proportions(self) -> np.ndarray:
        if self.pi is None:
            return np.full(self.K0, 1.0 / self.K0)
        return np.asarray(self.pi, dtype=float)

    @property
    def B(self) -> np.ndarray:
        return planted_connectivity(self.K0, self.rho, self.beta)


@dataclass(frozen=True)
class DcsbmParams:
    base: SbmParams
    alpha: float

    def __post_init__(self):
        if not 0 <= self.alpha <= 1:
            raise GeneratorError(f"alpha must lie in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class OutlierParams:
    base: SbmParams
    m: int
    outlier_p: float = 0.1

    def __post_init__(self):
        if self.m < 0:
            raise GeneratorError("outlier count must be non-negative")
        if not 0 <= self.outlier_p <= 1:
            raise GeneratorError("outlier_p must be a probability")


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """Planted structure. ``labels`` covers the first ``len(labels)`` nodes; any
    further nodes of the graph are outliers with no community."""

    labels: np.ndarray
    B_star: np.ndarray
    psi_star: np.ndarray | None = None
    outliers: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    attempts: int = 1
    clamped_pairs: int = 0

    @property
    def K0(self) -> int:
        return self.B_star.shape[0]


def planted_connectivity(K0: int, rho: float, beta: float) -> np.ndarray:
    B = rho * (beta * np.ones((K0, K0)) + (1 - beta) * np.eye(K0))
    if np.any(B > 1) or np.any(B < 0):
        raise GeneratorError("planted connectivity has entries outside [0, 1]")
    return B


# edge sampling

def _bernoulli_positions(total: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Indices in ``range(total)`` of successes in ``total`` independent Bernoulli(p) trials."""
    if total <= 0 or p <= 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1:
        return np.arange(total, dtype=np.int64)
    out = []
    pos = -1
    while True:
        expected = (total - 1 - pos) * p
        batch = int(expected + 4 * np.sqrt(expected + 1) + 16)
        gaps = rng.geometric(p, size=batch)
        idx = pos + np.cumsum(gaps, dtype=np.int64)
        done = idx[-1] >= total
        if done:
            idx = idx[idx < total]
        out.append(idx)
        if done:
            break
        pos = int(idx[-1])
    return np.concatenate(out)


def _unrank_upper(lin: np.ndarray, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices over the strict upper triangle of a size x size matrix (row-major) to (i, j)."""
    # row i starts at offset i*size - i*(i+1)/2
    lin = lin.astype(np.int64)
    i = np.floor(((2 * size - 1) - np.sqrt((2 * size - 1) ** 2 - 8.0 * lin)) / 2).astype(np.int64)
    i = np.clip(i, 0, max(size - 2, 0))
    start = i * size - i * (i + 1) // 2
    # correct float rounding at row boundaries
    over = lin < start
    i[over] -= 1
    start = i * size - i * (i + 1) // 2
    nxt = (i + 1) * size - (i + 1) * (i + 2) // 2
    under = lin >= nxt
    i[under] += 1
    start = i * size - i * (i + 1) // 2
    j = lin - start + i + 1
    return i, j


def _block_pairs(members: list[np.ndarray], prob, rng) -> tuple[np.ndarray, np.ndarray]:
    """Sample edges for all block pairs; ``prob(k, l)`` gives the (upper bound) probability."""
    rows, cols = [], []
    K = len(members)
    for k in range(K):
        for l in range(k, K):
            a, b = members[k], members[l]
            p = prob(k, l)
            if k == l:
                lin = _bernoulli_positions(a.size * (a.size - 1) // 2, p, rng)
                i, j = _unrank_upper(lin, a.size)
                rows.append(a[i])
                cols.append(a[j])
            else:
                lin = _bernoulli_positions(a.size * b.size, p, rng)
                rows.append(a[lin // b.size])
                cols.append(b[lin % b.size])
    if not rows:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(rows), np.concatenate(cols)


def _draw_labels(p: SbmParams, rng, attempt_seed, tag):
    for attempt in range(MAX_RETRIES + 1):
        r = rng if attempt == 0 else make_rng(attempt_seed, tag, "retry", attempt)
        labels = r.choice(p.K0, size=p.N, p=p.proportions)
        if np.all(np.bincount(labels, minlength=p.K0) > 0):
            return labels, attempt + 1
    raise GeneratorRejection(f"empty planted block after {MAX_RETRIES} retries")


def _members(labels, K):
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(K + 1))
    return [order[bounds[k] : bounds[k + 1]] for k in range(K)]


def sample_sbm(p: SbmParams, seed) -> tuple[SparseGraph, GroundTruth]:
    """Multinomial(pi) labels, then independent Bernoulli(B[g_i, g_j]) edges for i < j."""
    B = p.B
    rng = make_rng(seed, "sbm")
    labels, attempts = _draw_labels(p, rng, seed, "sbm")
    rows, cols = _block_pairs(_members(labels, p.K0), lambda k, l: B[k, l], rng)
    g = SparseGraph.from_edges(p.N, rows, cols)
    return g, GroundTruth(labels, B, attempts=attempts)


def sample_psi(n: int, alpha: float, rng) -> np.ndarray:
    """Draws from ``alpha * U[3/5, 7/5] + (1-alpha)/2 * delta(1/3) + (1-alpha)/2 * delta(5/3)``."""
    comp = rng.choice(3, size=n, p=[alpha, (1 - alpha) / 2, (1 - alpha) / 2])
    eta = rng.uniform(3 / 5, 7 / 5, size=n)
    return np.where(comp == 0, eta, np.where(comp == 1, 1 / 3, 5 / 3))


def sample_dcsbm(p: DcsbmParams, seed) -> tuple[SparseGraph, GroundTruth]:
    """DCSBM with edges Bernoulli(min(1, psi_i B[g_i, g_j] psi_j)).

    ``psi`` is rescaled inside each planted block so that it sums to the block
    size. Pairs whose probability had to be clamped at 1 are counted; more than
    1% of all pairs is an error.
    """
    base = p.base
    B = base.B
    rng = make_rng(seed, "dcsbm")
    labels, attempts = _draw_labels(base, rng, seed, "dcsbm")
    psi = sample_psi(base.N, p.alpha, rng)
    members = _members(labels, base.K0)
    for idx in members:
        psi[idx] *= idx.size / psi[idx].sum()

    clamped = _count_clamped(members, psi, B)
    total_pairs = base.N * (base.N - 1) // 2
    if clamped > 0.01 * total_pairs:
        raise GeneratorRejection(f"{clamped} of {total_pairs} pairs have psi_i B psi_j > 1")

    top = np.array([psi[idx].max() for idx in members])
    bound = np.minimum(1.0, B * np.outer(top, top))
    rows, cols = _block_pairs(members, lambda k, l: bound[k, l], rng)
    # thinning: accept each candidate with probability p_ij / bound
    p_ij = np.minimum(1.0, psi[rows] * B[labels[rows], labels[cols]] * psi[cols])
    ub = bound[labels[rows], labels[cols]]
    keep = rng.random(rows.size) * ub < p_ij
    g = SparseGraph.from_edges(base.N, rows[keep], cols[keep])
    return g, GroundTruth(labels, B, psi_star=psi, attempts=attempts, clamped_pairs=clamped)


def _count_clamped(members, psi, B) -> int:
    count = 0
    K = len(members)
    for k in range(K):
        for l in range(k, K):
            if B[k, l] <= 0:
                continue
            a = np.sort(psi[members[k]])
            b = np.sort(psi[members[l]])
            thr = 1.0 / B[k, l]
            # pairs with a_i * b_j > thr
            hits = b.size - np.searchsorted(b, thr / a, side="right")
            if k == l:
                # ordered pairs including i == j; keep unordered distinct ones
                self_hits = np.count_nonzero(a * a > thr)
                count += (int(hits.sum()) - self_hits) // 2
            else:
                count += int(hits.sum())
    return count


def sample_gsbm_with_outliers(p: OutlierParams, seed) -> tuple[SparseGraph, GroundTruth]:
    """SBM on the first ``N`` nodes plus ``m`` outliers appended at ids ``N .. N+m-1``.

    Outliers link to each other with probability ``outlier_p``; normal node ``i``
    links to each outlier with probability ``v_i = u_i**2 / 10``, ``u_i ~ U[0, 1]``.
    """
    base = p.base
    B = base.B
    rng = make_rng(seed, "gsbm")
    labels, attempts = _draw_labels(base, rng, seed, "gsbm")
    rows, cols = _block_pairs(_members(labels, base.K0), lambda k, l: B[k, l], rng)
    N, m = base.N, p.m
    out_ids = np.arange(N, N + m)
    if m:
        lin = _bernoulli_positions(m * (m - 1) // 2, p.outlier_p, rng)
        i, j = _unrank_upper(lin, m)
        v = outlier_link_probs(N, rng)
        X = rng.random((N, m)) < v[:, None]
        xi, xj = np.nonzero(X)
        rows = np.concatenate([rows, out_ids[i], xi])
        cols = np.concatenate([cols, out_ids[j], out_ids[xj]])
    g = SparseGraph.from_edges(N + m, rows, cols)
    return g, GroundTruth(labels, B, outliers=out_ids, attempts=attempts)


def outlier_link_probs(N: int, rng) -> np.ndarray:
    return rng.uniform(0.0, 1.0, size=N) ** 2 / 10


def write_labels_csv(truth: GroundTruth, path: str | os.PathLike) -> None:
    """``node_id,label`` rows; outliers are written with label -1."""
    labels = np.concatenate([truth.labels, np.full(truth.outliers.size, -1)])
    with open(path, "w") as fh:
        fh.write("node_id,label\n")
        for i, lab in enumerate(labels):
            fh.write(f"{i},{lab}\n")
