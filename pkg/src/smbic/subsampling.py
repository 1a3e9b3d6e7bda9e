"""Node-pair subsampling.

A uniform sample ``S`` of ``n`` nodes is drawn without replacement and every
edge variable incident to at least one selected node is kept, giving the
``N x n`` matrix ``A_S`` with ``A_S[i, s_j] = A[i, j]``.
"""

from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import SparseGraph
from .rng import make_rng


@dataclass(frozen=True, eq=False)
class NodeSet:
    """Sorted selected node ids plus the inverse map.

    ``index_of[j]`` is the column of node ``j`` in ``A_S``, or -1 if ``j`` was not selected.
    """

    selected: np.ndarray
    index_of: np.ndarray

    @classmethod
    def from_ids(cls, ids, num_nodes: int) -> "NodeSet":
        sel = np.asarray(ids, dtype=np.int64)
        if sel.ndim != 1 or sel.size == 0:
            raise ValueError("node set must be a non-empty 1-d array")
        if np.any(np.diff(sel) <= 0):
            sel = np.unique(sel)
            if sel.size != len(ids):
                raise ValueError("node set contains duplicates")
        if sel[0] < 0 or sel[-1] >= num_nodes:
            raise IndexError(f"selected node outside [0, {num_nodes})")
        index_of = np.full(num_nodes, -1, dtype=np.int64)
        index_of[sel] = np.arange(sel.size)
        return cls(sel, index_of)

    @property
    def n(self) -> int:
        return self.selected.size

    @property
    def num_nodes(self) -> int:
        return self.index_of.size

    @property
    def mask(self) -> np.ndarray:
        return self.index_of >= 0


@dataclass(frozen=True, eq=False)
class SubAdjacency:
    matrix: sp.csr_matrix
    nodes: NodeSet

    @property
    def N(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    @property
    def M(self) -> int:
        return independent_pair_count(self.N, self.n)

    def digest(self) -> str:
        """Content hash of the matrix and node set; identifies the subsample a fit was scored on."""
        h = hashlib.sha256()
        for arr in (self.matrix.indptr, self.matrix.indices, self.nodes.selected):
            h.update(np.ascontiguousarray(arr, dtype=np.int64).tobytes())
        return h.hexdigest()[:16]


def sample_nodes(N: int, n: int, seed) -> NodeSet:
    """Uniform sample of ``n`` distinct nodes out of ``N``."""
    if not 1 <= n <= N:
        raise ValueError(f"subsample size n={n} must satisfy 1 <= n <= N={N}")
    rng = make_rng(seed, "nodes")
    sel = np.sort(rng.choice(N, size=n, replace=False))
    return NodeSet.from_ids(sel, N)


def extract_subadjacency(g: SparseGraph, s: NodeSet) -> SubAdjacency:
    if s.num_nodes != g.num_nodes:
        raise ValueError("node set was drawn for a graph of a different size")
    # column slicing a CSC copy is O(nnz of the selected columns)
    cols = g.adjacency.tocsc()[:, s.selected]
    mat = sp.csr_matrix(cols, dtype=np.float64)
    mat.sort_indices()
    return SubAdjacency(mat, s)


def independent_pair_count(N: int, n: int) -> int:
    """Number of distinct node pairs with at least one selected endpoint."""
    if not 1 <= n <= N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    return N * n - n * (n + 1) // 2


def recommended_subsample_size(N: int, rho_hat: float, zeta: float) -> int:
    """``min(N, ceil(zeta * ln(N) / rho_hat))``."""
    if N < 2:
        raise ValueError("N must be at least 2")
    if rho_hat == 0:
        raise ValueError("density estimate is zero")
    if not 0 < rho_hat <= 1:
        raise ValueError(f"rho_hat must lie in (0, 1], got {rho_hat}")
    if not zeta > 0:
        raise ValueError(f"zeta must be positive, got {zeta}")
    return min(N, math.ceil(zeta * math.log(N) / rho_hat))


def write_nodeset(s: NodeSet, path: str | os.PathLike) -> None:
    with open(path, "w") as fh:
        fh.write(f"# nodes: {s.num_nodes}\n")
        np.savetxt(fh, s.selected, fmt="%d")


def read_nodeset(path: str | os.PathLike, num_nodes: int | None = None) -> NodeSet:
    declared = None
    ids = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                key, _, val = s.lstrip("#").partition(":")
                if key.strip() == "nodes":
                    declared = int(val)
                continue
            try:
                ids.append(int(s))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected one integer node id, got {s!r}") from None
    N = num_nodes if num_nodes is not None else declared
    if N is None:
        raise ValueError(f"{path}: node count unknown (no '# nodes:' header)")
    if declared is not None and num_nodes is not None and declared != num_nodes:
        raise ValueError(f"{path}: subsample drawn for {declared} nodes, graph has {num_nodes}")
    return NodeSet.from_ids(ids, N)
