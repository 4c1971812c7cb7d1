"""Gender-subspace analysis: difference matrices, PCA, projection, removal.

The eigensolver is self-contained. A full cyclic-Jacobi decomposition handles
k = d; for k < d the top components come from deflated power iteration
(fixed deterministic start vector, Rayleigh-quotient convergence 1e-12,
10,000 iteration cap per component) followed by a Rayleigh-Ritz rotation of
the recovered subspace. All fits are deterministic: components are
sign-normalized so their largest-magnitude coordinate is positive, and equal
eigenvalues are ordered by the first differing coordinate.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

from .errors import AlignmentError, DegenerateDataError
from .store import AlignedPair

_RAYLEIGH_TOL = 1e-12
_MAX_POWER_ITER = 10_000
_DEGENERACY_THRESHOLD = 1e-12


@dataclass(frozen=True)
class DifferenceMatrix:
    """Per-pair embedding differences at the target token, one row per pair."""

    rows: np.ndarray  # n x d, float64
    labels: tuple[tuple[str, int, str], ...]  # (sentence_id, token index, surface)


@dataclass(frozen=True)
class PcaResult:
    components: np.ndarray        # k x d, orthonormal rows
    explained_ratio: np.ndarray   # k, nonincreasing, eigenvalue / trace
    mean: np.ndarray              # d, zero when fitted uncentered
    total_variance: float


def difference_matrix(
    pairs: Sequence[AlignedPair], targets: dict[str, int]
) -> DifferenceMatrix:
    """Row i = vectors_a[target] - vectors_b[target] of pair i, input order."""
    rows = []
    labels = []
    for pair in pairs:
        if pair.sentence_id not in targets:
            raise AlignmentError(f"no target token for sentence {pair.sentence_id!r}")
        t = targets[pair.sentence_id]
        if not 0 <= t < len(pair.tokens_a):
            raise AlignmentError(
                f"target index {t} out of bounds for sentence {pair.sentence_id!r}"
            )
        row = pair.vectors_a[t].astype(np.float64) - pair.vectors_b[t].astype(np.float64)
        if not np.all(np.isfinite(row)):
            raise AlignmentError(f"non-finite difference for sentence {pair.sentence_id!r}")
        rows.append(row)
        labels.append((pair.sentence_id, t, pair.tokens_a[t]))
    if not rows:
        raise AlignmentError("no pairs given")
    return DifferenceMatrix(np.vstack(rows), tuple(labels))


def _jacobi_eigh(C: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Full spectrum of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors-as-rows), unsorted.
    """
    A = np.array(C, dtype=np.float64, copy=True)
    d = A.shape[0]
    V = np.eye(d)
    scale = max(float(np.sum(np.abs(np.diag(A)))), 1e-300)
    for _ in range(100):
        off_mass = A * A
        np.fill_diagonal(off_mass, 0.0)
        if math.sqrt(float(np.sum(off_mass))) <= 1e-14 * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if abs(apq) <= 1e-20 * scale:
                    continue
                h = A[q, q] - A[p, p]
                if abs(apq) * 1e15 < abs(h):
                    t = apq / h  # tiny rotation; avoids overflow in theta**2
                else:
                    theta = h / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (
                        abs(theta) + math.sqrt(theta * theta + 1.0)
                    )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p, row_q = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                v_p, v_q = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * v_p - s * v_q
                V[:, q] = s * v_p + c * v_q
    return np.diag(A).copy(), V.T.copy()


def _orthogonalize(v: np.ndarray, basis: list[np.ndarray]) -> np.ndarray:
    for b in basis:
        v = v - (v @ b) * b
    return v


def _fresh_direction(basis: list[np.ndarray], d: int) -> np.ndarray:
    """First standard basis vector with a usable component outside ``basis``."""
    threshold = 0.5 / math.sqrt(d)
    for m in range(d):
        cand = np.zeros(d)
        cand[m] = 1.0
        cand = _orthogonalize(cand, basis)
        nrm = float(np.linalg.norm(cand))
        if nrm > threshold:
            return cand / nrm
    raise DegenerateDataError("no direction left to deflate")  # len(basis) == d

def _power_deflation(C: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k eigenpairs by deflated power iteration plus Rayleigh-Ritz polish."""
    d = C.shape[0]
    scale = max(float(np.trace(C)), 1e-300)
    comps: list[np.ndarray] = []
    for _ in range(k):
        v = _fresh_direction(comps, d)
        Cv = C @ v
        lam_prev = math.inf
        best_delta = math.inf
        stagnant = 0
        for _ in range(_MAX_POWER_ITER):
            w = _orthogonalize(Cv, comps)
            nrm = float(np.linalg.norm(w))
            if nrm <= 1e-18 * scale:
                break  # deflated operator is null here: eigenvalue ~ 0
            v_next = w / nrm
            Cv = C @ v_next
            lam = float(v_next @ Cv)
            vec_delta = float(np.linalg.norm(v_next - v))
            v = v_next
            # Rayleigh stagnation alone stops while the vector still drifts;
            # require the iterate to settle too, or to have provably stopped
            # improving (near-degenerate eigenvalues).
            if vec_delta > 0.99 * best_delta:
                stagnant += 1
            else:
                stagnant = 0
            best_delta = min(best_delta, vec_delta)
            if abs(lam - lam_prev) <= _RAYLEIGH_TOL * scale and (
                vec_delta <= 1e-12 or stagnant >= 200
            ):
                break
            lam_prev = lam
        comps.append(v)
    V = np.vstack(comps)
    # Rayleigh-Ritz: re-diagonalize within the recovered subspace
    B = V @ C @ V.T
    ritz_vals, ritz_vecs = _jacobi_eigh(0.5 * (B + B.T))
    return ritz_vals, ritz_vecs @ V


def _normalize_components(eigvals: np.ndarray, comps: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sign-normalize, then sort by eigenvalue with lexicographic tie-breaking."""
    comps = comps.copy()
    for i in range(comps.shape[0]):
        idx = int(np.argmax(np.abs(comps[i])))
        if comps[i, idx] < 0:
            comps[i] = -comps[i]
    order = sorted(
        range(len(eigvals)), key=lambda i: (-eigvals[i], tuple(comps[i]))
    )
    return eigvals[order], comps[order]


def pca(matrix: DifferenceMatrix | np.ndarray, k: int, center: bool = True) -> PcaResult:
    """Top-k principal components of the row sample; ratios against the trace.

    Covariance divisor is n-1 when centered and n when not (uncentered PCA
    keeps the second-moment reading of the difference vectors).
    """
    X = matrix.rows if isinstance(matrix, DifferenceMatrix) else np.asarray(matrix, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {X.shape}")
    n, d = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows for PCA, got {n}")
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")
    if not np.all(np.isfinite(X)):
        raise ValueError("non-finite entries in input matrix")
    mean = X.mean(axis=0) if center else np.zeros(d)
    Xc = X - mean
    divisor = (n - 1) if center else n
    C = (Xc.T @ Xc) / divisor
    C = 0.5 * (C + C.T)
    total_variance = float(np.trace(C))
    if total_variance < _DEGENERACY_THRESHOLD:
        raise DegenerateDataError(
            f"total variance {total_variance:.3e} below {_DEGENERACY_THRESHOLD:.0e}"
        )
    if k == d:
        eigvals, comps = _jacobi_eigh(C)
    else:
        eigvals, comps = _power_deflation(C, k)
    eigvals = np.clip(eigvals, 0.0, None)
    eigvals, comps = _normalize_components(eigvals, comps)
    ratio = eigvals / total_variance
    result = PcaResult(
        components=comps,
        explained_ratio=ratio,
        mean=mean,
        total_variance=total_variance,
    )
    _assert_orthonormal(result.components)
    return result


def _assert_orthonormal(components: np.ndarray, tol: float = 1e-6) -> None:
    gram = components @ components.T
    residual = float(np.max(np.abs(gram - np.eye(components.shape[0]))))
    if residual > tol:
        raise DegenerateDataError(f"components not orthonormal (residual {residual:.2e})")


def project(vectors: np.ndarray, pca_result: PcaResult, j: int) -> np.ndarray:
    """Coordinates of (mean-shifted) rows on the first j components."""
    V = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if not 1 <= j <= pca_result.components.shape[0]:
        raise ValueError(f"j must be in [1, {pca_result.components.shape[0]}], got {j}")
    if V.shape[1] != pca_result.components.shape[1]:
        raise ValueError(
            f"dim mismatch: vectors have {V.shape[1]}, PCA has {pca_result.components.shape[1]}"
        )
    return (V - pca_result.mean) @ pca_result.components[:j].T


def project_out(v: np.ndarray, pca_result: PcaResult, j: int) -> np.ndarray:
    """Remove the span of the first j components from a single vector."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("project_out expects a 1-D vector")
    if not 1 <= j <= pca_result.components.shape[0]:
        raise ValueError(f"j must be in [1, {pca_result.components.shape[0]}], got {j}")
    if v.shape[0] != pca_result.components.shape[1]:
        raise ValueError(
            f"dim mismatch: vector has {v.shape[0]}, PCA has {pca_result.components.shape[1]}"
        )
    shifted = v - pca_result.mean
    coords = pca_result.components[:j] @ shifted
    return v - coords @ pca_result.components[:j]


def write_scree_csv(result: PcaResult, dest: TextIO) -> None:
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(["component_index", "explained_ratio"])
    for i, ratio in enumerate(result.explained_ratio):
        writer.writerow([i, repr(float(ratio))])


def write_scatter_csv(
    rows: Iterable[tuple[str, str, str, float, float]], dest: TextIO
) -> None:
    """Rows are (sentence_id, surface, context_gender, pc1, pc2)."""
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(["sentence_id", "surface", "context_gender", "pc1", "pc2"])
    for sid, surface, gender, pc1, pc2 in rows:
        writer.writerow([sid, surface, gender, repr(float(pc1)), repr(float(pc2))])
