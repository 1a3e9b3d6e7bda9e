"""Choose the number of communities by maximising SM-BIC over K = 1..K_max.

One subsample is drawn and shared by every candidate. For each K the nodes
are labelled by spectral clustering of the sub-adjacency, the block matrix is
estimated by its plug-in ratio, and the penalised log-likelihood is scored.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import criterion
from .graph import SparseGraph, degree_stats
from .spectral import (
    KMeansConfig,
    SpectralConfig,
    SvdConfig,
    assign_by_majority_link,
    cluster_rows,
    cluster_rows_spherical,
    truncated_svd,
)
from .subsampling import (
    NodeSet,
    SubAdjacency,
    extract_subadjacency,
    recommended_subsample_size,
    sample_nodes,
)

log = logging.getLogger(__name__)

MODELS = ("sbm", "dcsbm")


def default_spectral() -> SpectralConfig:
    # k-means only needs the subspace to a few digits; the noise directions
    # near the bulk edge converge slowly, so a tight tolerance mostly costs time
    return SpectralConfig(SvdConfig(tol=1e-6, max_iters=150), KMeansConfig())


@dataclass(frozen=True)
class SelectionConfig:
    """Settings for one model-selection run.

    The subsample size is ``n`` when given; otherwise it is
    ``min(N, ceil(zeta * ln N / rho))`` where ``rho`` is either a known density
    or, when ``rho is None``, the observed edge density of the graph.
    """

    K_max: int = 10
    model: str = "sbm"
    seed: int = 0
    n: int | None = None
    zeta: float = 1.5
    rho: float | None = None
    spectral: SpectralConfig = field(default_factory=default_spectral)
    # "spectral": every node labelled by k-means on its embedding row;
    # "majority": only selected nodes are, the rest follow their majority link
    assignment: str = "spectral"
    include_psi_term: bool = True
    psi_normalization: str = "raw"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.K_max < 1:
            raise ValueError("K_max must be at least 1")
        if self.n is not None and self.n < self.K_max:
            raise ValueError(f"subsample size n={self.n} is smaller than K_max={self.K_max}")
        if self.assignment not in ("spectral", "majority"):
            raise ValueError("assignment must be 'spectral' or 'majority'")
        if self.n is None and not self.zeta > 0:
            raise ValueError("zeta must be positive")

    def subsample_size(self, g: SparseGraph) -> int:
        if self.n is not None:
            return self.n
        rho = self.rho if self.rho is not None else degree_stats(g).density_hat
        return recommended_subsample_size(g.num_nodes, rho, self.zeta)


@dataclass(eq=False)
class SelectionReport:
    per_k: list[criterion.FitResult]
    K_hat: int
    N: int
    n: int
    M: int
    subsample: str
    timings: dict[str, float]
    config: SelectionConfig
    nodes: NodeSet | None = None

    @property
    def scores(self) -> np.ndarray:
        return np.array([f.score for f in self.per_k])

    def summary(self) -> str:
        curve = " ".join(f"{f.K}:{f.score:.4f}" for f in self.per_k)
        return f"K_hat={self.K_hat}\nscores {curve}"

    def to_dict(self, with_labels: bool = False) -> dict:
        per_k = []
        for f in self.per_k:
            d = f.to_dict(with_labels)
            for key in ("score", "loglik"):
                if not math.isfinite(d[key]):
                    d[key] = None
            per_k.append(d)
        return {
            "K_hat": self.K_hat,
            "N": self.N,
            "n": self.n,
            "M": self.M,
            "subsample": self.subsample,
            "per_k": per_k,
            "timings": self.timings,
            "config": asdict(self.config),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=2)


def _argmax_first(scores) -> int:
    best = 0
    for i, s in enumerate(scores):
        if s > scores[best]:
            best = i
    return best


def _fit_one(a: SubAdjacency, V: np.ndarray, K: int, cfg: SelectionConfig, empty_rows) -> criterion.FitResult:
    kcfg = cfg.spectral.kmeans
    if cfg.model == "sbm":
        lab = cluster_rows(V, K, kcfg, cfg.seed)
        if cfg.assignment == "majority":
            lab = assign_by_majority_link(a, lab.labels[a.nodes.selected], K)
        return criterion.fit_sbm(a, lab)
    lab, psi = cluster_rows_spherical(V, K, kcfg, cfg.seed, empty_rows)
    if cfg.assignment == "majority":
        lab = assign_by_majority_link(a, lab.labels[a.nodes.selected], K)
    return criterion.fit_dcsbm(a, lab, psi, cfg.include_psi_term, cfg.psi_normalization)


def select_k_from_subsample(a: SubAdjacency, cfg: SelectionConfig) -> SelectionReport:
    """Score every candidate K on a fixed sub-adjacency.

    The leading K_max singular vectors are computed once; candidate K uses the
    first K of them, which is the same subspace a rank-K decomposition returns.
    """
    if a.n < cfg.K_max:
        raise ValueError(f"subsample size n={a.n} is smaller than K_max={cfg.K_max}")
    K_max = min(cfg.K_max, a.N)
    digest = a.digest()
    timings = {}
    t0 = time.perf_counter()
    emb = truncated_svd(a, K_max, cfg.spectral.svd, cfg.seed)
    timings["svd"] = time.perf_counter() - t0
    if not emb.converged:
        log.debug("truncated SVD stopped after %d iterations without meeting tol", emb.iterations)
    empty_rows = np.diff(a.matrix.indptr) == 0

    fits = []
    t0 = time.perf_counter()
    for K in range(1, K_max + 1):
        try:
            fit = _fit_one(a, emb.V, K, cfg, empty_rows)
        except (ValueError, np.linalg.LinAlgError) as exc:
            log.warning("candidate K=%d failed: %s", K, exc)
            fit = criterion.FitResult(K, None, np.full((K, K), np.nan), -math.inf,
                                      criterion.penalty(a.n, K, a.M), -math.inf, flags=[f"error: {exc}"])
        if emb.sigma[K - 1] <= 0:
            fit.flags.append("rank_deficient")
        fit.subsample = digest
        fits.append(fit)
    timings["fit"] = time.perf_counter() - t0
    k_hat = fits[_argmax_first([f.score for f in fits])].K
    return SelectionReport(fits, k_hat, a.N, a.n, a.M, digest, timings, cfg, a.nodes)


def select_k(g: SparseGraph, cfg: SelectionConfig, nodes: NodeSet | None = None) -> SelectionReport:
    """Subsample ``g`` once and run :func:`select_k_from_subsample`.

    ``nodes`` replays a previously drawn subsample instead of drawing one.
    """
    t0 = time.perf_counter()
    if nodes is None:
        n = cfg.subsample_size(g)
        if n < cfg.K_max:
            raise ValueError(f"subsample size n={n} is smaller than K_max={cfg.K_max}")
        nodes = sample_nodes(g.num_nodes, n, cfg.seed)
    a = extract_subadjacency(g, nodes)
    t_sub = time.perf_counter() - t0
    report = select_k_from_subsample(a, cfg)
    report.timings = {"subsample": t_sub, **report.timings}
    return report
