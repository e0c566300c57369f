"""Dense linear-algebra helpers shared by the design routines.

Everything here is a pure function of its inputs: symmetric PSD square
roots (with pseudo-inverse handling for rank-deficient covariances), a
sign-normalized SVD, and Gram-Schmidt under a covariance metric.
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    "PsdFactorization",
    "psd_sqrt",
    "top_right_singular_vectors",
    "metric_orthogonalize",
    "restriction1_residual",
]

DEFAULT_REL_TOL = 1e-10
_SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class PsdFactorization:
    """Square root and pseudo-inverse square root of a symmetric PSD matrix.

    ``inv_sqrt`` inverts ``sqrt`` on the range of the factored matrix and is
    zero on its null space.
    """

    sqrt: np.ndarray
    inv_sqrt: np.ndarray
    rank: int
    eigen_tol: float


def psd_sqrt(S, rel_tol=DEFAULT_REL_TOL):
    """Symmetric square root of a PSD matrix via eigendecomposition.

    Parameters
    ----------
    S : array_like, shape (n, n)
        Symmetric positive semi-definite matrix.
    rel_tol : float
        Eigenvalues below ``rel_tol * max_eigenvalue`` are treated as exact
        zeros (they count against the rank and are excluded from the
        pseudo-inverse).

    Returns
    -------
    PsdFactorization

    Raises
    ------
    ValueError
        If ``S`` is not square, not symmetric, or has an eigenvalue more
        negative than ``-rel_tol * max_eigenvalue``.
    """
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {S.shape}")
    if not 0.0 < rel_tol < 1.0:
        raise ValueError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    scale = np.linalg.norm(S)
    asym = np.linalg.norm(S - S.T)
    if asym > _SYMMETRY_TOL * max(scale, 1.0):
        raise ValueError(f"matrix is not symmetric (||S - S^T||_F = {asym:.3e})")
    S = 0.5 * (S + S.T)
    n = S.shape[0]
    if scale == 0.0:
        zero = np.zeros((n, n))
        return PsdFactorization(zero, zero.copy(), 0, rel_tol)

    lam, U = np.linalg.eigh(S)
    cutoff = rel_tol * lam.max()
    if lam.min() < -cutoff:
        raise ValueError(
            f"matrix is not PSD: eigenvalue {lam.min():.3e} below -{cutoff:.3e}"
        )
    keep = lam > cutoff
    root = np.zeros_like(lam)
    inv_root = np.zeros_like(lam)
    root[keep] = np.sqrt(lam[keep])
    inv_root[keep] = 1.0 / root[keep]
    sqrt = (U * root) @ U.T
    inv_sqrt = (U * inv_root) @ U.T
    return PsdFactorization(
        sqrt=0.5 * (sqrt + sqrt.T),
        inv_sqrt=0.5 * (inv_sqrt + inv_sqrt.T),
        rank=int(keep.sum()),
        eigen_tol=rel_tol,
    )


def top_right_singular_vectors(Mx, P):
    """Leading ``P`` right singular vectors of ``Mx`` with a fixed sign.

    Each returned column is flipped so that its entry of largest absolute
    value is positive (the first such entry on ties). When ``P`` exceeds
    ``min(Mx.shape)`` the extra columns complete an orthonormal basis and
    carry zero singular values.

    Returns
    -------
    V : ndarray, shape (N, P)
    singular_values : ndarray, shape (P,)
    """
    Mx = np.atleast_2d(np.asarray(Mx, dtype=float))
    N = Mx.shape[1]
    if not 1 <= P <= N:
        raise ValueError(f"P must satisfy 1 <= P <= N={N}, got {P}")
    _, sv, Vt = np.linalg.svd(Mx, full_matrices=True)
    V = Vt[:P].T.copy()
    values = np.zeros(P)
    values[: min(P, sv.size)] = sv[:P]
    pivot = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivot, np.arange(P)])
    signs[signs == 0] = 1.0
    return V * signs, values


def metric_orthogonalize(A, Sx, tol=1e-10):
    """Make the rows of ``A`` orthonormal under the ``Sx`` metric.

    The rows are mapped to whitened coordinates ``A Sx^(1/2)``,
    Gram-Schmidt orthonormalized in order, and mapped back, so the result
    satisfies ``A' Sx A'^T = I`` and spans the same whitened row space.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    fac = psd_sqrt(Sx)
    if fac.rank < fac.sqrt.shape[0]:
        raise ValueError("Sx must be positive definite")
    W = A @ fac.sqrt
    Q = np.zeros_like(W)
    for i, row in enumerate(W):
        norm0 = np.linalg.norm(row)
        v = row.copy()
        # two passes keep the basis orthogonal to working precision
        for _ in range(2):
            v -= Q[:i].T @ (Q[:i] @ v)
        norm = np.linalg.norm(v)
        if norm0 == 0.0 or norm <= tol * norm0:
            raise ValueError(
                f"row {i} of A is linearly dependent on the preceding rows "
                "in the Sx metric"
            )
        Q[i] = v / norm
    return Q @ fac.inv_sqrt


def restriction1_residual(A, Sx):
    """Largest normalized off-diagonal of ``A Sx A^T`` (0 when rows are orthogonal)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    C = A @ Sx @ A.T
    d = np.sqrt(np.clip(np.diag(C), 0.0, None))
    if np.any(d == 0.0):
        return np.inf
    R = C / np.outer(d, d)
    np.fill_diagonal(R, 0.0)
    return float(np.max(np.abs(R))) if R.size else 0.0
