"""Spectral graph matching between an expected and a detected point set.

Assignments are pairs ``a = (p_i, r_i')``, indexed ``a = i * n + i'``.
The affinity between two assignments penalizes the larger of their
horizontal and vertical displacements:

    U(a, b) = exp(-dh^2 / delta_h - dv^2 / delta_v)
    dh = max(|x_pi - x_ri'|, |x_pj - x_rj'|),  dv likewise in y

with ``delta_h = (W / (H + W))**2`` and ``delta_v = (H / (H + W))**2`` for the
detected bounding box of width W and height H. The principal eigenvector
of U is binarized greedily into a one-to-one cluster C with score
``S = x^T U x``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import NumericalError

DENSE_LIMIT = 4096
SPARSE_DROP = 1e-12


@dataclass
class AffinityMatrix:
    U: object
    m: int
    n: int
    delta_h: float
    delta_v: float
    dh: np.ndarray
    dv: np.ndarray

    @property
    def k(self) -> int:
        return self.m * self.n

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.U)

    def pair(self, a: int) -> tuple[int, int]:
        return divmod(int(a), self.n)

    def entries(self, idx) -> np.ndarray:
        """Dense sub-block ``U[idx][:, idx]``."""
        idx = np.asarray(idx, dtype=int)
        if self.is_sparse:
            return self.U[idx][:, idx].toarray()
        return self.U[np.ix_(idx, idx)]


@dataclass
class MatchSolution:
    x: np.ndarray
    cluster: list
    score: float
    eigenvalue: float = float("nan")

    @property
    def n_matched(self) -> int:
        return len(self.cluster)


def box_weights(height_box: float, width_box: float) -> tuple[float, float]:
    tot = height_box + width_box
    return (width_box / tot) ** 2, (height_box / tot) ** 2


def build_affinity(P, R, height_box: float, width_box: float, dense_limit: int = DENSE_LIMIT) -> AffinityMatrix:
    P = np.asarray(P, dtype=float).reshape(-1, 2)
    R = np.asarray(R, dtype=float).reshape(-1, 2)
    m, n = len(P), len(R)
    if m < 1 or n < 1:
        raise ValueError("both point sets must be non-empty")
    if height_box <= 0 or width_box <= 0:
        raise ValueError("box dimensions must be positive")
    dlt_h, dlt_v = box_weights(height_box, width_box)
    dh = np.abs(P[:, None, 0] - R[None, :, 0]).ravel()
    dv = np.abs(P[:, None, 1] - R[None, :, 1]).ravel()
    k = m * n
    if k <= dense_limit:
        U = np.exp(-np.maximum.outer(dh, dh) ** 2 / dlt_h - np.maximum.outer(dv, dv) ** 2 / dlt_v)
    else:
        blocks = []
        step = max(1, 2_000_000 // k)
        for s in range(0, k, step):
            blk = np.exp(-np.maximum.outer(dh[s:s + step], dh) ** 2 / dlt_h
                         - np.maximum.outer(dv[s:s + step], dv) ** 2 / dlt_v)
            blk[blk < SPARSE_DROP] = 0.0
            blocks.append(sparse.csr_matrix(blk))
        U = sparse.vstack(blocks, format="csr")
    return AffinityMatrix(U, m, n, dlt_h, dlt_v, dh, dv)


def principal_eigenvector(U, tol: float = 1e-10, max_iter: int = 10_000) -> tuple[np.ndarray, float]:
    """Power iteration from the normalized all-ones vector.

    Iterates on ``U + sigma I`` with ``sigma`` half the Rayleigh quotient of
    the start vector. The shift keeps the eigenvectors; for a nonnegative
    matrix it also moves eigenvalues near ``-lambda_max`` (nearly bipartite
    supports) away from the dominant one, where plain iteration oscillates.
    Stops when successive unit iterates differ by at most ``tol``. Returns
    ``(v, lambda)`` with ``v >= 0``, ``||v|| = 1`` and ``lambda = v^T U v``.
    """
    if isinstance(U, AffinityMatrix):
        U = U.U
    k = U.shape[0]
    v = np.full(k, 1.0 / np.sqrt(k))
    sigma = 0.5 * max(float(v @ (U @ v)), 0.0)
    for _ in range(max_iter):
        u = U @ v + sigma * v
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return v, 0.0
        u /= nu
        if np.linalg.norm(u - v) <= tol:
            v = u
            break
        v = u
    else:
        Uv = U @ v
        lam = float(v @ Uv)
        raise NumericalError("power iteration did not converge", float(np.linalg.norm(Uv - lam * v)))
    v = np.abs(v)
    return v, float(v @ (U @ v))


def greedy_binarize(v, aff: AffinityMatrix) -> MatchSolution:
    """Accept the largest remaining entry, discard every assignment sharing
    its expected or detected point, repeat until nothing positive remains."""
    v = np.array(v, dtype=float, copy=True)
    m, n = aff.m, aff.n
    x = np.zeros(m * n)
    work = v.reshape(m, n)
    cluster = []
    while True:
        a = int(np.argmax(work))
        if not work.flat[a] > 0:
            break
        i, j = divmod(a, n)
        cluster.append((i, j))
        x[a] = 1.0
        work[i, :] = 0.0
        work[:, j] = 0.0
    idx = np.nonzero(x)[0]
    score = float(aff.entries(idx).sum()) if len(idx) else 0.0
    return MatchSolution(x, cluster, score)


def cluster_score(aff: AffinityMatrix, cluster) -> float:
    idx = [i * aff.n + j for i, j in cluster]
    return float(aff.entries(idx).sum()) if idx else 0.0


def match(P, R, height_box: float, width_box: float) -> MatchSolution:
    aff = build_affinity(P, R, height_box, width_box)
    v, lam = principal_eigenvector(aff.U)
    sol = greedy_binarize(v, aff)
    sol.eigenvalue = lam
    return sol
