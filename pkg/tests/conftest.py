import os
import sys

import numpy as np
import pytest
import scipy.sparse as sp

sys.path.insert(0, os.path.dirname(__file__))

from smbic.graph import SparseGraph
from smbic.subsampling import NodeSet, extract_subadjacency


def graph_from_dense(A) -> SparseGraph:
    return SparseGraph.from_adjacency(sp.csr_matrix(np.asarray(A, dtype=np.int8)))


def sub_from_dense(A, S):
    g = graph_from_dense(A)
    return extract_subadjacency(g, NodeSet.from_ids(S, g.num_nodes))


def two_cliques(size: int) -> SparseGraph:
    block = np.ones((size, size), dtype=np.int8) - np.eye(size, dtype=np.int8)
    return SparseGraph.from_adjacency(sp.csr_matrix(sp.block_diag([block, block]), dtype=np.int8))


@pytest.fixture
def path3():
    # 0 - 1 - 2
    return np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
