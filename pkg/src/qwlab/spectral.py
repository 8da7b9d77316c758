"""Eigenstructure of walk operators and the never-arriving subspace.

The projector P built here spans every eigenvector of U with no amplitude
on the final-vertex subspace.  A walk started inside ran(P) is never
detected, so trace(P) > 0 is exactly the infinite-hitting-time condition;
the per-vertex coin-overlap blocks of P identify which local coin states
avoid (or cannot avoid) being trapped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import BasisIndexing, ColoredGraph

__all__ = [
    "EigenCluster",
    "SpectralReport",
    "CoinOverlapMatrix",
    "eigenspace_clusters",
    "infinite_hitting_projector",
    "escape_probability",
    "coin_overlap_matrix",
    "degeneracy_condition",
    "SUFFICIENT_FOR_INFINITE",
    "INCONCLUSIVE",
    "report_to_dict",
]

CLUSTER_TOL = 1e-8
NULLSPACE_RTOL = 1e-9

SUFFICIENT_FOR_INFINITE = "sufficient_for_infinite"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True, eq=False)
class EigenCluster:
    """One (numerically) degenerate eigenvalue of a unitary with its eigenbasis."""

    eigenvalue: complex
    multiplicity: int
    basis: np.ndarray  # D x multiplicity, orthonormal columns


@dataclass(frozen=True, eq=False)
class SpectralReport:
    """Spectral decomposition of U together with the trapped-subspace projector.

    ``basis`` spans ran(p_hat) with orthonormal columns; ``contributions``
    counts the trapped dimensions contributed by each cluster, in cluster
    order.  Warnings record nullspace rank decisions that fell within 10x
    of the singular value cutoff.
    """

    clusters: tuple[EigenCluster, ...]
    p_hat: np.ndarray
    basis: np.ndarray
    trace_p: float
    contributions: tuple[int, ...]
    warnings: tuple[str, ...] = ()

    @property
    def trace_int(self) -> int:
        return int(round(self.trace_p))

    @property
    def dim(self) -> int:
        return self.p_hat.shape[0]


def _as_matrix(u) -> np.ndarray:
    return np.asarray(getattr(u, "matrix", u), dtype=complex)


def eigenspace_clusters(u, tol: float = CLUSTER_TOL) -> tuple[EigenCluster, ...]:
    """Eigenvalues of a unitary grouped by absolute distance <= tol.

    Eigenvalues are sorted by phase and chains of neighbors within tol are
    merged (including the wrap across the branch cut); each cluster's
    eigenbasis is re-orthonormalized by QR.
    """
    m = _as_matrix(u)
    d = m.shape[0]
    w, v = np.linalg.eig(m)
    order = np.argsort(np.angle(w))
    w, v = w[order], v[:, order]

    groups: list[list[int]] = [[0]]
    for i in range(1, d):
        if abs(w[i] - w[i - 1]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    if len(groups) > 1 and abs(w[groups[0][0]] - w[groups[-1][-1]]) <= tol:
        groups[0] = groups.pop() + groups[0]

    clusters = []
    for idx in groups:
        block = v[:, idx]
        q, _ = np.linalg.qr(block)
        lam = complex(np.mean(w[idx]))
        lam /= abs(lam)
        clusters.append(EigenCluster(lam, len(idx), q))
    assert sum(c.multiplicity for c in clusters) == d
    return tuple(clusters)


def _final_range_basis(p_f, dim: int) -> np.ndarray:
    """Orthonormal basis of ran(P_f) as columns, from a matrix or index list."""
    arr = np.asarray(p_f)
    if arr.ndim == 1:
        basis = np.zeros((dim, arr.size), dtype=complex)
        basis[arr.astype(int), np.arange(arr.size)] = 1.0
        return basis
    if arr.shape != (dim, dim):
        raise ValueError("projector dimension mismatch")
    w, v = np.linalg.eigh(arr.astype(complex))
    cols = v[:, w > 0.5]
    if not np.allclose(arr, cols @ cols.conj().T, atol=1e-10):
        raise ValueError("p_f is not a projector")
    return cols


def infinite_hitting_projector(
    u,
    p_f,
    *,
    cluster_tol: float = CLUSTER_TOL,
    null_rtol: float = NULLSPACE_RTOL,
) -> SpectralReport:
    """Projector onto eigenvectors of U with no final-vertex overlap.

    For a cluster with orthonormal eigenbasis V (dim k) the trapped
    directions solve the homogeneous d x k system F* V a = 0, where F spans
    the rank-d final subspace; the solution space has dimension k - rank.
    Rank decisions use singular values with a relative cutoff; values inside
    [cutoff, 10*cutoff) are reported as warnings rather than failures.
    """
    m = _as_matrix(u)
    d = m.shape[0]
    fin = _final_range_basis(p_f, d)
    clusters = eigenspace_clusters(m, tol=cluster_tol)

    pieces = []
    contributions = []
    warnings: list[str] = []
    for ci, cluster in enumerate(clusters):
        overlap = fin.conj().T @ cluster.basis  # d x k
        sv = np.linalg.svd(overlap, compute_uv=False)
        smax = sv[0] if sv.size else 0.0
        cutoff = null_rtol * smax
        if smax == 0.0:
            rank = 0
        else:
            rank = int(np.sum(sv > cutoff))
            band = np.sum((sv > cutoff) & (sv <= 10 * cutoff))
            if band:
                warnings.append(
                    f"cluster {ci} (eigenvalue {cluster.eigenvalue:.6f}): "
                    f"{band} singular value(s) within 10x of cutoff"
                )
        null_dim = cluster.multiplicity - rank
        contributions.append(null_dim)
        if null_dim:
            _, _, vh = np.linalg.svd(overlap)
            null_vecs = vh[rank:].conj().T  # k x null_dim
            pieces.append(cluster.basis @ null_vecs)

    if pieces:
        stacked = np.hstack(pieces)
        basis, _ = np.linalg.qr(stacked)
        p_hat = basis @ basis.conj().T
    else:
        basis = np.zeros((d, 0), dtype=complex)
        p_hat = np.zeros((d, d), dtype=complex)

    return SpectralReport(
        clusters=clusters,
        p_hat=p_hat,
        basis=basis,
        trace_p=float(np.real(np.trace(p_hat))),
        contributions=tuple(contributions),
        warnings=tuple(warnings),
    )


def escape_probability(report: SpectralReport, state: np.ndarray) -> float:
    """Mass of a state (vector or density matrix) inside the trapped subspace."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        amps = report.basis.conj().T @ state
        return float(np.real(np.vdot(amps, amps)))
    if state.ndim == 2:
        return float(np.real(np.trace(report.p_hat @ state)))
    raise ValueError("state must be a vector or a density matrix")


@dataclass(frozen=True, eq=False)
class CoinOverlapMatrix:
    """The d x d block of the trapped projector at one vertex.

    Hermitian and positive semidefinite; coin states in the kernel are
    exactly the local starting states with no trapped component.
    """

    vertex: int
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def zero_eigenvalue_count(self) -> int:
        return int(np.sum(self.eigenvalues < 1e-8))


def coin_overlap_matrix(
    report: SpectralReport, g: ColoredGraph, vertex: int
) -> CoinOverlapMatrix:
    idx = BasisIndexing.from_graph(g)
    rows = np.asarray(idx.vertex_indices(vertex))
    block = report.p_hat[np.ix_(rows, rows)]
    herm_defect = float(np.max(np.abs(block - block.conj().T))) if block.size else 0.0
    if herm_defect > 1e-10:
        raise ValueError(f"coin-overlap block not Hermitian (defect {herm_defect:.3e})")
    block = (block + block.conj().T) / 2
    w, v = np.linalg.eigh(block)
    if w.size and w[0] < -1e-10:
        raise ValueError(f"coin-overlap block not PSD (min eigenvalue {w[0]:.3e})")
    return CoinOverlapMatrix(vertex, block, w, v)


def degeneracy_condition(u_or_clusters, coin_dim: int) -> str:
    """Sufficient condition for a trapped subspace to exist for some final vertex.

    A cluster of multiplicity above the coin dimension always admits a
    combination with zero overlap on any single vertex's coin block; for
    continuous walks pass ``coin_dim=1``.
    """
    if isinstance(u_or_clusters, tuple):
        clusters = u_or_clusters
    else:
        clusters = eigenspace_clusters(u_or_clusters)
    if any(c.multiplicity > coin_dim for c in clusters):
        return SUFFICIENT_FOR_INFINITE
    return INCONCLUSIVE


def report_to_dict(report: SpectralReport) -> dict:
    return {
        "eigenvalues": [
            {
                "value": [float(c.eigenvalue.real), float(c.eigenvalue.imag)],
                "multiplicity": c.multiplicity,
                "trapped_dim": report.contributions[i],
            }
            for i, c in enumerate(report.clusters)
        ],
        "trace_p": report.trace_p,
        "trace_p_int": report.trace_int,
        "warnings": list(report.warnings),
    }
