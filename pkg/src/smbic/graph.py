"""Sparse undirected graphs: construction, validation, edge-list I/O and degree statistics."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

log = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Malformed edge-list input."""


@dataclass(frozen=True)
class IngestSummary:
    lines: int = 0
    comments: int = 0
    self_loops: int = 0
    duplicates: int = 0

    def as_lines(self) -> str:
        return "\n".join(f"{k}={v}" for k, v in self.__dict__.items())


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Simple undirected graph held as a symmetric 0/1 CSR matrix with zero diagonal.

    Construct through :meth:`from_edges` or :meth:`from_adjacency`; both validate.
    The adjacency arrays are marked read-only.
    """

    adjacency: sp.csr_matrix
    summary: IngestSummary = field(default_factory=IngestSummary)

    def __post_init__(self):
        validate_adjacency(self.adjacency)
        for arr in (self.adjacency.data, self.adjacency.indices, self.adjacency.indptr):
            arr.flags.writeable = False

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return self.adjacency.nnz // 2

    @classmethod
    def from_edges(cls, num_nodes: int, rows, cols, summary: IngestSummary | None = None) -> "SparseGraph":
        """Build from (possibly repeated, unordered) endpoint arrays.

        Self-loops are dropped and duplicates collapse to a single edge.
        """
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if rows.shape != cols.shape:
            raise ValueError("rows and cols differ in length")
        if num_nodes < 1:
            raise ValueError("num_nodes must be >= 1")
        if rows.size and (min(rows.min(), cols.min()) < 0 or max(rows.max(), cols.max()) >= num_nodes):
            raise IndexError(f"edge endpoint outside [0, {num_nodes})")
        loops = rows == cols
        lo = np.minimum(rows[~loops], cols[~loops])
        hi = np.maximum(rows[~loops], cols[~loops])
        keys = np.unique(lo * num_nodes + hi)
        lo, hi = keys // num_nodes, keys % num_nodes
        n_dup = int((~loops).sum() - keys.size)
        adj = sp.csr_matrix(
            (np.ones(2 * keys.size, dtype=np.int8), (np.concatenate([lo, hi]), np.concatenate([hi, lo]))),
            shape=(num_nodes, num_nodes),
        )
        adj.sort_indices()
        base = summary or IngestSummary()
        summary = IngestSummary(base.lines, base.comments, base.self_loops + int(loops.sum()), base.duplicates + n_dup)
        return cls(adj, summary)

    @classmethod
    def from_adjacency(cls, a) -> "SparseGraph":
        """Wrap an existing adjacency (dense or sparse). No repair is attempted."""
        adj = sp.csr_matrix(a, dtype=np.int8)
        adj.eliminate_zeros()
        adj.sort_indices()
        return cls(adj)

    def edges(self) -> np.ndarray:
        """Upper-triangular edge list, shape (num_edges, 2), lexicographically sorted."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return np.column_stack([coo.row[order], coo.col[order]]).astype(np.int64)


def validate_adjacency(adj) -> None:
    if not sp.issparse(adj) or adj.format != "csr":
        raise TypeError("adjacency must be a scipy CSR matrix")
    n, m = adj.shape
    if n != m or n < 1:
        raise ValueError(f"adjacency must be square and non-empty, got {adj.shape}")
    if adj.nnz and not np.all(adj.data == 1):
        raise ValueError("adjacency entries must all equal 1")
    if adj.diagonal().any():
        raise ValueError("adjacency has self-loops (nonzero diagonal)")
    if (adj != adj.T).nnz:
        raise ValueError("adjacency is not symmetric")


def load_edge_list(path: str | os.PathLike, indexing: str = "zero", num_nodes: int | None = None) -> SparseGraph:
    """Read a whitespace-separated edge list.

    Lines starting with ``#`` are ignored, except a header of the form
    ``# nodes: N`` which declares the node count. Without a declaration the
    node count is one past the largest index seen.

    Parameters
    ----------
    indexing : {"zero", "one"}
        Whether node ids in the file start at 0 or 1.
    num_nodes : int, optional
        Overrides any header declaration.
    """
    if indexing not in ("zero", "one"):
        raise ValueError("indexing must be 'zero' or 'one'")
    offset = 1 if indexing == "one" else 0
    rows, cols = [], []
    declared = None
    n_lines = n_comments = 0
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                n_comments += 1
                key, _, val = s.lstrip("#").partition(":")
                if key.strip().lower() == "nodes":
                    try:
                        declared = int(val)
                    except ValueError:
                        raise GraphFormatError(f"{path}:{lineno}: bad node-count header {s!r}") from None
                continue
            parts = s.split()
            if len(parts) < 2:
                raise GraphFormatError(f"{path}:{lineno}: expected two node ids, got {s!r}")
            try:
                i, j = int(parts[0]) - offset, int(parts[1]) - offset
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-integer node id in {s!r}") from None
            if i < 0 or j < 0:
                raise GraphFormatError(f"{path}:{lineno}: negative node id for {indexing}-based indexing")
            n_lines += 1
            rows.append(i)
            cols.append(j)
    n = num_nodes if num_nodes is not None else declared
    top = max(max(rows, default=-1), max(cols, default=-1))
    if n is None:
        n = top + 1
    elif top >= n:
        raise IndexError(f"{path}: node index {top + offset} out of bounds for {n} declared nodes")
    g = SparseGraph.from_edges(max(n, 1), rows, cols, IngestSummary(n_lines, n_comments, 0, 0))
    if g.summary.self_loops:
        log.warning("%s: dropped %d self-loops", path, g.summary.self_loops)
    return g


def write_edge_list(g: SparseGraph, path: str | os.PathLike, indexing: str = "zero") -> None:
    """Write ``g`` with a ``# nodes: N`` header so isolated trailing nodes survive a round trip."""
    offset = 1 if indexing == "one" else 0
    with open(path, "w") as fh:
        fh.write(f"# nodes: {g.num_nodes}\n")
        np.savetxt(fh, g.edges() + offset, fmt="%d")


@dataclass(frozen=True)
class DegreeSummary:
    degrees: np.ndarray
    mean_degree: float
    max_degree: int
    density_hat: float


def degree_stats(g: SparseGraph) -> DegreeSummary:
    n = g.num_nodes
    deg = np.diff(g.adjacency.indptr)
    density = 2.0 * g.num_edges / (n * (n - 1)) if n > 1 else 0.0
    return DegreeSummary(
        degrees=deg,
        mean_degree=2.0 * g.num_edges / n,
        max_degree=int(deg.max()) if n else 0,
        density_hat=density,
    )


def largest_component(g: SparseGraph) -> tuple[SparseGraph, np.ndarray]:
    """Restrict to the largest connected component; returns the subgraph and kept original ids."""
    _, comp = connected_components(g.adjacency, directed=False)
    keep = np.flatnonzero(comp == np.bincount(comp).argmax())
    return SparseGraph.from_adjacency(g.adjacency[keep][:, keep]), keep
