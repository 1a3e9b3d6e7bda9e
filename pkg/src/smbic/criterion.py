"""Count statistics over the independent pair set and the SM-BIC score.

The independent pairs of a subsample are the selected-selected pairs ``(i, j)``
with ``i < j`` plus every unselected-selected pair; there are
``M = N n - n (n + 1) / 2`` of them. Block matrices below are stored
symmetrically: off-diagonal ``[k, l]`` holds the total for the unordered block
pair ``{k, l}``, so sums over ``k <= l`` run over the upper triangle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import DegreeEstimates, Labeling
from .subsampling import SubAdjacency

EPS = 1e-9


@dataclass(frozen=True, eq=False)
class PairCounts:
    o: np.ndarray
    n_pairs: np.ndarray
    M: int

    @property
    def K(self) -> int:
        return self.o.shape[0]


@dataclass(frozen=True, eq=False)
class WeightedPairCounts:
    n_psi: np.ndarray
    log_psi_edge_sum: float
    # edges whose endpoint weights multiply to 0; each contributed log(EPS)
    zero_weight_edges: int = 0


@dataclass(eq=False)
class FitResult:
    K: int
    labels: Labeling
    B_hat: np.ndarray
    loglik: float
    penalty: float
    score: float
    psi_hat: DegreeEstimates | None = None
    flags: list[str] = field(default_factory=list)
    subsample: str = ""

    def to_dict(self, with_labels: bool = False) -> dict:
        d = {
            "K": self.K,
            "score": self.score,
            "loglik": self.loglik,
            "penalty": self.penalty,
            "B_hat": self.B_hat.tolist(),
            "nonempty_clusters": self.labels.n_nonempty if self.labels is not None else 0,
            "flagged_nodes": int(self.labels.flagged.size) if self.labels is not None else 0,
            "flags": list(self.flags),
            "subsample": self.subsample,
        }
        if with_labels and self.labels is not None:
            d["labels"] = self.labels.labels.tolist()
            if self.psi_hat is not None:
                d["psi_hat"] = self.psi_hat.psi_hat.tolist()
        return d


def _upper(mat: np.ndarray) -> np.ndarray:
    return mat[np.triu_indices(mat.shape[0])]


def _symmetrize(C: np.ndarray) -> np.ndarray:
    S = C + C.T
    S[np.diag_indices_from(S)] = np.diag(C)
    return S


def _edge_list(a: SubAdjacency) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints ``(i, j)`` of every edge in the independent pair set."""
    mat = a.matrix
    rows = np.repeat(np.arange(a.N, dtype=np.int64), np.diff(mat.indptr))
    cols = mat.indices.astype(np.int64)
    col_of_row = a.nodes.index_of[rows]
    # selected-selected edges appear twice; keep the copy above the diagonal
    keep = (col_of_row < 0) | (col_of_row < cols)
    return rows[keep], a.nodes.selected[cols[keep]]


def _labels_of(labels) -> tuple[np.ndarray, int]:
    if isinstance(labels, Labeling):
        return labels.labels, labels.K
    raise TypeError("expected a Labeling")


def count_statistics(a: SubAdjacency, labels: Labeling) -> PairCounts:
    g, K = _labels_of(labels)
    if g.size != a.N:
        raise ValueError(f"labels must cover all {a.N} nodes")
    sel = a.nodes.selected
    total = np.bincount(g, minlength=K).astype(np.int64)
    s = np.bincount(g[sel], minlength=K).astype(np.int64)
    # unselected (row) x selected (column) pairs, then pairs inside the subsample
    C = np.outer(total - s, s)
    C += np.triu(np.outer(s, s), 1)
    C[np.diag_indices(K)] += s * (s - 1) // 2
    n_pairs = _symmetrize(C)

    i, j = _edge_list(a)
    O = np.bincount(g[i] * K + g[j], minlength=K * K).reshape(K, K).astype(np.int64)
    o = O + O.T
    o[np.diag_indices(K)] //= 2
    return PairCounts(o, n_pairs, a.M)


def weighted_pair_counts(a: SubAdjacency, labels: Labeling, psi) -> WeightedPairCounts:
    g, K = _labels_of(labels)
    w = psi.psi_hat if isinstance(psi, DegreeEstimates) else np.asarray(psi, dtype=float)
    if w.shape != (a.N,):
        raise ValueError(f"psi must have length {a.N}")
    if np.any(w < 0):
        raise ValueError("psi must be non-negative")
    sel = a.nodes.selected
    tot = np.bincount(g, weights=w, minlength=K)
    ws = np.bincount(g[sel], weights=w[sel], minlength=K)
    ws2 = np.bincount(g[sel], weights=w[sel] ** 2, minlength=K)
    # off-diagonal: tot_k ws_l + tot_l ws_k - ws_k ws_l; written with P + P.T so that
    # entry (k, l) is computed by the same operations as (l, k) under any relabelling
    P = np.outer(tot, ws)
    n_psi = (P + P.T) - np.outer(ws, ws)
    n_psi[np.diag_indices(K)] = (tot - ws) * ws + (ws * ws - ws2) / 2
    np.maximum(n_psi, 0.0, out=n_psi)

    i, j = _edge_list(a)
    prod = w[i] * w[j]
    zero = prod <= 0
    log_sum = float(np.log(prod[~zero]).sum() + zero.sum() * math.log(EPS))
    return WeightedPairCounts(n_psi, log_sum, int(zero.sum()))


def estimate_B_sbm(c: PairCounts, flags: list | None = None) -> np.ndarray:
    """``o / n`` per block pair, clamped to ``[EPS, 1 - EPS]``; empty block pairs get ``EPS``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        B = np.where(c.n_pairs > 0, c.o / np.maximum(c.n_pairs, 1), EPS)
    if flags is not None:
        if np.any(c.n_pairs == 0):
            flags.append("empty_block_pair")
        if np.any(_upper(B) < EPS) or np.any(_upper(B) > 1 - EPS):
            flags.append("B_clamped")
    return np.clip(B, EPS, 1 - EPS)


def estimate_B_dcsbm(c: PairCounts, w: WeightedPairCounts, flags: list | None = None) -> np.ndarray:
    """``o / n_psi`` per block pair, floored at ``EPS`` (a Poisson rate has no upper clamp)."""
    pos = w.n_psi > 0
    B = np.where(pos, c.o / np.where(pos, w.n_psi, 1.0), EPS)
    if flags is not None:
        if not np.all(pos):
            flags.append("empty_block_pair")
        if np.any(_upper(B) < EPS):
            flags.append("B_clamped")
    return np.maximum(B, EPS)


def loglik_bernoulli(c: PairCounts, B: np.ndarray) -> float:
    o, n, b = _upper(c.o).astype(float), _upper(c.n_pairs).astype(float), _upper(B)
    if np.any(b <= 0) or np.any(b >= 1):
        raise ValueError("Bernoulli probabilities must lie strictly inside (0, 1)")
    # fsum is exactly rounded, so relabelling the blocks cannot change the last bit
    return math.fsum((o * np.log(b) + (n - o) * np.log1p(-b)).tolist())


def loglik_poisson(c: PairCounts, w: WeightedPairCounts, B: np.ndarray, include_psi_term: bool = True) -> float:
    o, npsi, b = _upper(c.o).astype(float), _upper(w.n_psi), _upper(B)
    if np.any(b <= 0):
        raise ValueError("Poisson rates must be positive")
    base = w.log_psi_edge_sum if include_psi_term else 0.0
    return math.fsum([base] + (o * np.log(b) - npsi * b).tolist())


def penalty(n: int, K: int, M: int) -> float:
    """``n ln K + K (K + 1) / 4 * ln M``."""
    if n < 1 or K < 1 or M < 1:
        raise ValueError("penalty needs n, K, M >= 1")
    return n * math.log(K) + K * (K + 1) / 4 * math.log(M)


def smbic_score(loglik: float, pen: float) -> float:
    if not (math.isfinite(loglik) and math.isfinite(pen)):
        raise ValueError(f"non-finite criterion input: loglik={loglik}, penalty={pen}")
    return loglik - pen


def normalize_psi_by_block(psi: np.ndarray, labels: np.ndarray, K: int) -> np.ndarray:
    """Rescale ``psi`` so it sums to the block size inside each estimated block."""
    tot = np.bincount(labels, weights=psi, minlength=K)
    size = np.bincount(labels, minlength=K)
    scale = np.where(tot > 0, size / np.where(tot > 0, tot, 1.0), 1.0)
    return psi * scale[labels]


def fit_sbm(a: SubAdjacency, labels: Labeling) -> FitResult:
    flags: list[str] = []
    c = count_statistics(a, labels)
    B = estimate_B_sbm(c, flags)
    ll = loglik_bernoulli(c, B)
    pen = penalty(a.n, labels.K, c.M)
    if labels.n_nonempty < labels.K:
        flags.append("empty_cluster")
    if labels.flagged.size:
        flags.append("fallback_labels")
    return FitResult(labels.K, labels, B, ll, pen, smbic_score(ll, pen), flags=flags)


def fit_dcsbm(a: SubAdjacency, labels: Labeling, psi: DegreeEstimates,
              include_psi_term: bool = True, psi_normalization: str = "raw") -> FitResult:
    flags: list[str] = []
    w_arr = psi.psi_hat
    if psi_normalization == "block":
        w_arr = normalize_psi_by_block(w_arr, labels.labels, labels.K)
    elif psi_normalization != "raw":
        raise ValueError("psi_normalization must be 'raw' or 'block'")
    c = count_statistics(a, labels)
    w = weighted_pair_counts(a, labels, w_arr)
    if w.zero_weight_edges:
        flags.append("zero_psi_edge")
    B = estimate_B_dcsbm(c, w, flags)
    ll = loglik_poisson(c, w, B, include_psi_term)
    pen = penalty(a.n, labels.K, c.M)
    if labels.n_nonempty < labels.K:
        flags.append("empty_cluster")
    if labels.flagged.size:
        flags.append("fallback_labels")
    return FitResult(labels.K, labels, B, ll, pen, smbic_score(ll, pen), psi_hat=psi, flags=flags)
