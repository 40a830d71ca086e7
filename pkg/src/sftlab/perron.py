"""Graph components, periods and Perron data of nonnegative matrices."""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np
import scipy.linalg
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

POWER_TOL = 1e-12
POWER_MAX_ITER = 100_000


def strong_components(adjacency):
    """Label strongly connected components of a directed graph.

    Returns
    -------
    labels : ndarray of int
        Component label per vertex.
    nontrivial : ndarray of bool
        ``nontrivial[c]`` is True when component ``c`` carries a cycle
        (more than one vertex, or a self-loop).
    """
    adj = np.asarray(adjacency) != 0
    n = adj.shape[0]
    count, labels = connected_components(csr_matrix(adj), directed=True, connection="strong")
    nontrivial = np.zeros(count, dtype=bool)
    sizes = np.bincount(labels, minlength=count)
    nontrivial[sizes > 1] = True
    loops = np.flatnonzero(np.diag(adj))
    nontrivial[labels[loops]] = True
    return labels, nontrivial


def period(adjacency):
    """Period of an irreducible directed graph (gcd of cycle lengths)."""
    adj = np.asarray(adjacency) != 0
    n = adj.shape[0]
    order, preds = breadth_first_order(csr_matrix(adj), 0, directed=True, return_predecessors=True)
    level = np.full(n, -1)
    level[0] = 0
    for v in order[1:]:
        level[v] = level[preds[v]] + 1
    g = 0
    rows, cols = np.nonzero(adj)
    for u, v in zip(rows, cols):
        g = gcd(g, int(level[u] + 1 - level[v]))
    return g if g > 0 else 1


@dataclass(frozen=True)
class PerronData:
    """Perron root with left/right eigenvectors, normalized so that
    ``right.sum() == 1`` and ``left @ right == 1``."""

    root: float
    left: np.ndarray
    right: np.ndarray
    method: str
    iterations: int


def _power(matrix, tol, max_iter, block=32):
    """Normalized power iteration; after every ``block`` steps without
    convergence the iteration matrix is squared, so slow spectral gaps
    cost logarithmically many blocks."""
    b = matrix / matrix.max()
    v = np.ones(matrix.shape[0])
    v /= v.sum()
    it = 0
    while it < max_iter:
        for _ in range(block):
            it += 1
            w = b @ v
            w /= w.sum()
            if np.max(np.abs(w - v)) <= tol * np.max(w):
                return w, it
            v = w
        b = b @ b
        b /= b.max()
    return None, it


def perron(matrix, tol=POWER_TOL, max_iter=POWER_MAX_ITER):
    """Perron data of an irreducible nonnegative matrix.

    Power iteration from the all-ones vector is used on aperiodic
    matrices; periodic matrices, and aperiodic ones where the iteration
    stalls, go through a dense eigensolve. The root is finally taken as
    the two-sided quotient ``l M r / l r``, which is second-order accurate
    in the vector errors.
    """
    m = np.asarray(matrix, dtype=float)
    n = m.shape[0]
    if n == 1:
        one = np.ones(1)
        return PerronData(float(m[0, 0]), one, one, "scalar", 0)
    right = left = None
    iterations = 0
    method = "power"
    if period(m) == 1:
        right, it_r = _power(m, tol, max_iter)
        left, it_l = _power(m.T, tol, max_iter) if right is not None else (None, 0)
        iterations = it_r + it_l
    if right is None or left is None:
        method = "eig"
        vals, vl, vr = scipy.linalg.eig(m, left=True, right=True)
        k = int(np.argmax(vals.real))
        right = np.abs(vr[:, k].real)
        left = np.abs(vl[:, k].real)
    right = right / right.sum()
    left = left / (left @ right)
    root = float(left @ (m @ right)) / float(left @ right)
    return PerronData(root, left, right, method, iterations)


def stationary_vector(transition, support=None):
    """Stationary probability vector of a stochastic matrix restricted to
    ``support`` (an irreducible closed class); zero elsewhere."""
    p = np.asarray(transition, dtype=float)
    n = p.shape[0]
    idx = np.arange(n) if support is None else np.asarray(support)
    sub = p[np.ix_(idx, idx)]
    k = len(idx)
    a = sub.T - np.eye(k)
    a[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    pi_sub = np.linalg.solve(a, b)
    pi_sub = np.clip(pi_sub, 0.0, None)
    pi_sub /= pi_sub.sum()
    pi = np.zeros(n)
    pi[idx] = pi_sub
    return pi
