"""Task-based quantizer design for linear tasks.

The task estimate is ``s_tilde = Gamma x``. An analog matrix ``A`` feeds
``P`` scalar quantizers and a digital matrix ``D`` maps their outputs to
``s_hat = D Q(A x)``. The optimal design whitens ``x``, keeps the ``P``
leading right singular directions of ``Gamma Sigma_x^(1/2)`` and inverts
that map digitally. Its quantizer-dependent MSE is a sum of eigenvalues of
``Gamma Sigma_x Gamma^T`` weighted by per-branch distortion factors.
"""
from dataclasses import dataclass, field
from typing import Callable, Optional
import warnings

import numpy as np

from .bussgang import BussgangModel
from .mathkit import (
    metric_orthogonalize,
    psd_sqrt,
    restriction1_residual,
    top_right_singular_vectors,
)
from .scalar_quantizer import (
    ScalarQuantizer,
    levels_per_quantizer,
    lloyd_max_empirical,
    lloyd_max_gaussian,
    quantize,
    uniform_quantizer,
)

__all__ = [
    "LinearTaskModel",
    "TaskQuantizerDesign",
    "gaussian_linear_model",
    "channel_estimation_model",
    "design_theorem1",
    "design_no_combining",
    "optimal_digital",
    "analytic_mse_prop2",
    "analytic_mse_theorem1",
    "branch_quantize",
    "run_pipeline",
]

Sampler = Callable[[np.random.Generator, int], tuple]


@dataclass(frozen=True)
class LinearTaskModel:
    """Joint model of the task ``s`` and the measurements ``x``.

    ``sampler(rng, n)`` returns ``(s, x)`` with shapes ``(n, K)`` and
    ``(n, N)``. ``gaussian`` marks models whose measurements are jointly
    Gaussian, which lets designs share one closed-form quantizer.
    """

    Gamma: np.ndarray
    Sigma_x: np.ndarray
    sampler: Sampler
    mmse_floor: float
    Sigma_s: Optional[np.ndarray] = None
    gaussian: bool = True
    name: str = "custom"
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        Gamma = np.atleast_2d(np.asarray(self.Gamma, dtype=float))
        Sigma_x = np.atleast_2d(np.asarray(self.Sigma_x, dtype=float))
        if Sigma_x.shape != (Gamma.shape[1],) * 2:
            raise ValueError(
                f"Gamma has {Gamma.shape[1]} columns but Sigma_x is {Sigma_x.shape}"
            )
        fac = psd_sqrt(Sigma_x)
        if fac.rank < Sigma_x.shape[0]:
            raise ValueError("Sigma_x must be positive definite")
        if self.mmse_floor < 0:
            raise ValueError("mmse_floor must be non-negative")
        object.__setattr__(self, "Gamma", Gamma)
        object.__setattr__(self, "Sigma_x", Sigma_x)

    @property
    def K(self):
        return self.Gamma.shape[0]

    @property
    def N(self):
        return self.Gamma.shape[1]

    def sample(self, rng, n):
        return self.sampler(rng, n)


@dataclass(frozen=True)
class TaskQuantizerDesign:
    """Analog/digital matrices plus the per-branch scalar quantizers.

    For quadratic tasks ``A`` acts on the centred lifted vector and the
    digital output is shifted by the task mean (see ``quadratic_task``).
    """

    A: np.ndarray
    D: np.ndarray
    quantizers: tuple
    eigenvalues: np.ndarray
    rho: np.ndarray
    P: int
    M: int
    M_tilde: int
    kind: str = "lloyd"
    notes: tuple = field(default=())


def gaussian_linear_model(Gamma, Sigma_x, Sigma_s=None, name="custom"):
    """Jointly Gaussian pair with ``E[s | x] = Gamma x``.

    Without ``Sigma_s`` the task is exactly ``s = Gamma x``; otherwise
    ``s = Gamma x + e`` with independent ``e ~ N(0, Sigma_s - Gamma Sigma_x Gamma^T)``.
    """
    Gamma = np.atleast_2d(np.asarray(Gamma, dtype=float))
    Sigma_x = np.atleast_2d(np.asarray(Sigma_x, dtype=float))
    L = np.linalg.cholesky(Sigma_x)
    explained = Gamma @ Sigma_x @ Gamma.T
    if Sigma_s is None:
        residual_factor = None
        floor = 0.0
    else:
        Sigma_s = np.atleast_2d(np.asarray(Sigma_s, dtype=float))
        residual = Sigma_s - explained
        try:
            residual_factor = psd_sqrt(residual, rel_tol=1e-9).sqrt
        except ValueError as exc:
            raise ValueError("Sigma_s - Gamma Sigma_x Gamma^T must be PSD") from exc
        floor = float(np.trace(residual))

    def sampler(rng, n):
        x = rng.standard_normal((n, L.shape[0])) @ L.T
        s = x @ Gamma.T
        if residual_factor is not None:
            s = s + rng.standard_normal((n, Gamma.shape[0])) @ residual_factor
        return s, x

    return LinearTaskModel(Gamma, Sigma_x, sampler, max(floor, 0.0), Sigma_s, True, name)


def channel_estimation_model(K_taps, N, noise_var=1.0, pilot_seed=7, name=None):
    """Channel estimation from a noisy convolution with a known pilot.

    ``s ~ N(0, I_K)`` are the taps, ``x = F s + w`` with ``F`` the ``N x K``
    Toeplitz convolution matrix of a seeded +/-1 pilot (first symbol fixed
    to +1) and ``w ~ N(0, noise_var I)``. ``Gamma`` is the Wiener matrix.
    """
    if N < K_taps:
        raise ValueError(f"need N >= K_taps, got N={N}, K_taps={K_taps}")
    if noise_var <= 0:
        raise ValueError(f"noise_var must be positive, got {noise_var}")
    rng = np.random.default_rng(pilot_seed)
    pilot = rng.choice([-1.0, 1.0], size=N)
    pilot *= pilot[0]
    F = np.zeros((N, K_taps))
    for k in range(K_taps):
        F[k:, k] = pilot[: N - k]
    Sigma_s = np.eye(K_taps)
    Sigma_x = F @ Sigma_s @ F.T + noise_var * np.eye(N)
    Gamma = np.linalg.solve(Sigma_x, F @ Sigma_s).T
    floor = float(np.trace(Sigma_s) - np.trace(Gamma @ F @ Sigma_s))
    noise_sd = np.sqrt(noise_var)

    def sampler(rng, n):
        s = rng.standard_normal((n, K_taps))
        x = s @ F.T + noise_sd * rng.standard_normal((n, N))
        return s, x

    return LinearTaskModel(
        Gamma, Sigma_x, sampler, max(floor, 0.0), Sigma_s, True,
        name or f"channel_k{K_taps}", {"F": F, "pilot": pilot},
    )


def _branch_quantizers(kind, M_tilde, P, branch_samples=None, seed=0):
    if branch_samples is None:
        make = lloyd_max_gaussian if kind == "lloyd" else uniform_quantizer
        q = make(M_tilde, 1.0)
        return (q,) * P
    qs = []
    for p in range(P):
        y = branch_samples[:, p]
        if M_tilde == 1:
            qs.append(ScalarQuantizer([0.0], [], 1.0, "lloyd_empirical"))
        elif kind == "lloyd":
            qs.append(lloyd_max_empirical(y, M_tilde, seed=seed))
        else:
            qs.append(uniform_quantizer(M_tilde, 1.0))
    return tuple(qs)


def design_theorem1(model, P, M, quantizer_kind="lloyd", training_samples=10**6, seed=0):
    """Optimal design under uncorrelated (metric-orthogonal) analog rows.

    Parameters
    ----------
    model : LinearTaskModel
    P : int
        Number of scalar quantizers, ``1 <= P <= N``.
    M : int
        Overall number of quantization levels; each branch gets
        ``floor(M ** (1 / P))``.
    quantizer_kind : {"lloyd", "uniform"}
    training_samples, seed
        Only used for non-Gaussian models, whose branch quantizers are
        designed from samples.

    Returns
    -------
    TaskQuantizerDesign
        ``A = V^T Sigma_x^(-1/2)`` and ``D = Gamma Sigma_x^(1/2) V`` where
        ``V`` holds the leading right singular vectors of
        ``Gamma Sigma_x^(1/2)``.
    """
    if quantizer_kind not in ("lloyd", "uniform"):
        raise ValueError(f"unknown quantizer kind {quantizer_kind!r}")
    if not 1 <= P <= model.N:
        raise ValueError(f"P must satisfy 1 <= P <= N={model.N}, got {P}")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    notes = ()
    if P > model.K:
        msg = f"P={P} exceeds the task dimension K={model.K}; extra branches carry no task energy"
        warnings.warn(msg, stacklevel=2)
        notes = (msg,)

    fac = psd_sqrt(model.Sigma_x)
    Gt = model.Gamma @ fac.sqrt
    V, _ = top_right_singular_vectors(Gt, P)
    A = V.T @ fac.inv_sqrt
    D = Gt @ V
    M_tilde = levels_per_quantizer(M, P)
    eigenvalues = np.square(np.linalg.svd(Gt, compute_uv=False))

    if model.gaussian:
        quantizers = _branch_quantizers(quantizer_kind, M_tilde, P)
        rho = np.array([q.rho for q in quantizers])
    else:
        rng = np.random.default_rng(seed)
        _, x_train = model.sample(rng, training_samples)
        quantizers = _branch_quantizers(quantizer_kind, M_tilde, P, x_train @ A.T, seed)
        _, x_eval = model.sample(rng, training_samples)
        y_eval = x_eval @ A.T
        rho = np.array([
            np.mean(np.square(quantize(q, y_eval[:, p]) - y_eval[:, p])) / np.mean(y_eval[:, p] ** 2)
            for p, q in enumerate(quantizers)
        ])
    return TaskQuantizerDesign(
        A, D, quantizers, eigenvalues, rho, P, int(M), M_tilde, quantizer_kind, notes
    )


def design_no_combining(model, M, quantizer_kind="lloyd"):
    """Baseline with one quantizer per measurement and only digital processing.

    The analog stage is the metric-orthonormalized identity (a triangular
    whitening, so branch ``p`` only sees ``x_1..x_p``) and ``D`` is the
    optimal digital matrix for it.
    """
    A = metric_orthogonalize(np.eye(model.N), model.Sigma_x)
    P = model.N
    M_tilde = levels_per_quantizer(M, P)
    quantizers = _branch_quantizers(quantizer_kind, M_tilde, P)
    D = optimal_digital(model, A)
    fac = psd_sqrt(model.Sigma_x)
    eigenvalues = np.square(np.linalg.svd(model.Gamma @ fac.sqrt, compute_uv=False))
    rho = np.array([q.rho for q in quantizers])
    return TaskQuantizerDesign(A, D, quantizers, eigenvalues, rho, P, int(M), M_tilde, quantizer_kind)


def _check_restriction1(A, Sigma_x, tol=1e-8):
    residual = restriction1_residual(A, Sigma_x)
    if residual > tol:
        raise ValueError(
            f"analog rows are not orthogonal in the Sigma_x metric (residual {residual:.3e})"
        )


def optimal_digital(model, A):
    """``Gamma Sigma_x A^T (A Sigma_x A^T)^(-1)`` for metric-orthogonal ``A``."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    _check_restriction1(A, model.Sigma_x)
    SA = model.Sigma_x @ A.T
    return np.linalg.solve(A @ SA, (model.Gamma @ SA).T).T


def analytic_mse_prop2(model, A, B):
    """Quantizer-dependent MSE of ``A`` with its optimal digital matrix.

    ``B`` is a diagonal Bussgang gain, as a matrix or a ``BussgangModel``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = B.B if isinstance(B, BussgangModel) else np.atleast_2d(np.asarray(B, dtype=float))
    off = B - np.diag(np.diag(B))
    if np.max(np.abs(off), initial=0.0) > 1e-10:
        raise ValueError("Bussgang gain must be diagonal")
    _check_restriction1(A, model.Sigma_x)
    G, S = model.Gamma, model.Sigma_x
    GSA = G @ S @ A.T
    C = A @ S @ A.T
    captured = GSA @ B @ np.linalg.solve(C, GSA.T)
    return float(np.trace(G @ S @ G.T) - np.trace(captured))


def analytic_mse_theorem1(eigenvalues, rho, P, K):
    """Eigenvalue-weighted distortion sum of the optimal design.

    With ``P >= K`` this is ``sum_{i<=K} lambda_i rho_i``; otherwise the
    ``K - P`` discarded eigenvalues are added in full. Eigenvalues must be
    sorted in descending order; missing trailing ones count as zero.
    """
    lam = np.asarray(eigenvalues, dtype=float).reshape(-1)
    rho = np.asarray(rho, dtype=float).reshape(-1)
    if lam.size > 1 and np.any(np.diff(lam) > 1e-12 * max(abs(lam[0]), 1.0)):
        raise ValueError("eigenvalues must be sorted in descending order")
    kept = min(P, K)
    if rho.size < min(kept, lam.size):
        raise ValueError(f"need at least {kept} distortion factors, got {rho.size}")
    lam = np.concatenate((lam, np.zeros(max(0, K - lam.size))))[:K]
    head = min(kept, lam.size)
    return float(np.dot(lam[:head], rho[:head]) + lam[head:].sum())


def branch_quantize(quantizers, Y):
    """Apply quantizer ``p`` to column ``p`` of ``Y`` (shape ``(n, P)``)."""
    Z = np.empty_like(Y)
    for p, q in enumerate(quantizers):
        Z[:, p] = quantize(q, Y[:, p])
    return Z


def run_pipeline(design, x, bypass_quantizer=False):
    """``D Q(A x)`` for one measurement vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    X = np.atleast_2d(x)
    Y = X @ design.A.T
    Z = Y if bypass_quantizer else branch_quantize(design.quantizers, Y)
    out = Z @ design.D.T
    return out[0] if x.ndim == 1 else out
