"""Generalized Bussgang decomposition ``z = B y + eta`` of a quantizer bank.

``y = A x`` are the analog branch outputs and ``z`` the quantized ones.
``B`` is the linear-MMSE regression of ``z`` on ``y`` and ``eta`` is the
residual, uncorrelated with ``y`` by construction.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

__all__ = ["BussgangModel", "estimate_bussgang", "bussgang_from_rho", "mean_product_stderr"]


@dataclass(frozen=True)
class BussgangModel:
    B: np.ndarray
    Sigma_eta: Optional[np.ndarray]
    sample_count: int = 0
    # heteroskedasticity-robust standard errors of B (sample estimates only)
    B_stderr: Optional[np.ndarray] = None
    Sigma_eta_stderr: Optional[np.ndarray] = None


def estimate_bussgang(inputs, outputs, cond_tol=1e-12):
    """Sample estimate of the Bussgang gain and residual covariance.

    Parameters
    ----------
    inputs : array_like, shape (n, P)
        Analog branch outputs ``A x``, one run per row.
    outputs : array_like, shape (n, P)
        Matching quantizer outputs ``z``.

    Both are centred before forming 1/n sample covariances. Standard
    errors for ``B`` use the sandwich form of the least-squares covariance;
    those for ``Sigma_eta`` are the standard errors of the mean residual
    products.
    """
    Y = np.asarray(inputs, dtype=float)
    Z = np.asarray(outputs, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Z.ndim == 1:
        Z = Z[:, None]
    if Y.shape != Z.shape:
        raise ValueError(f"inputs {Y.shape} and outputs {Z.shape} differ in shape")
    n, P = Y.shape
    Y = Y - Y.mean(axis=0)
    Z = Z - Z.mean(axis=0)

    Cy = Y.T @ Y / n
    lam, U = np.linalg.eigh(Cy)
    if lam[0] <= cond_tol * max(lam[-1], np.finfo(float).tiny):
        direction = np.array2string(U[:, 0], precision=4)
        raise ValueError(f"input covariance is singular along direction {direction}")
    Czy = Z.T @ Y / n
    Cz = Z.T @ Z / n
    Cy_inv = np.linalg.inv(Cy)
    B = Czy @ Cy_inv
    Sigma_eta = Cz - B @ Cy @ B.T
    Sigma_eta = 0.5 * (Sigma_eta + Sigma_eta.T)

    eta = Z - Y @ B.T
    B_se = np.empty((P, P))
    for i in range(P):
        meat = (Y * eta[:, i : i + 1] ** 2).T @ Y / n
        cov = Cy_inv @ meat @ Cy_inv / n
        B_se[i] = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    eta_se = np.empty((P, P))
    for i in range(P):
        for j in range(i, P):
            eta_se[i, j] = eta_se[j, i] = mean_product_stderr(eta[:, i], eta[:, j])
    return BussgangModel(B, Sigma_eta, n, B_se, eta_se)


def bussgang_from_rho(rho):
    """Diagonal Bussgang gain ``diag(1 - rho)`` of uncorrelated centroid quantizers."""
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    if np.any(rho < 0) or np.any(rho > 1):
        raise ValueError(f"distortion factors must lie in [0, 1], got {rho}")
    return BussgangModel(np.diag(1.0 - rho), None, 0)


def mean_product_stderr(a, b):
    """Standard error of ``mean(a * b)``."""
    prod = np.asarray(a) * np.asarray(b)
    return float(prod.std() / np.sqrt(prod.size))
