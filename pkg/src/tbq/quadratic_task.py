"""Quadratic tasks ``s_k = x^T C_k x`` handled as linear tasks on the lift.

With ``xbar = vec(x x^T)`` (column stacking) the task is ``s = G xbar``,
``G`` having rows ``vec(C_k)^T``. The analog stage acts on the centred
lift, ``y = A (xbar - E[xbar])``, and the digital stage adds the task mean
back, ``s_hat = D Q(y) + E[s]``. The lifted covariance has rank at most
``N (N + 1) / 2`` because ``xbar`` repeats every off-diagonal product.
"""
from dataclasses import dataclass
import warnings

import numpy as np

from .linear_task import TaskQuantizerDesign, branch_quantize
from .mathkit import psd_sqrt, top_right_singular_vectors
from .scalar_quantizer import (
    ScalarQuantizer,
    levels_per_quantizer,
    lloyd_max_empirical,
    quantize,
    uniform_quantizer,
)

__all__ = [
    "QuadraticTaskModel",
    "lift",
    "build_G",
    "gaussian_fourth_moments",
    "empirical_moments",
    "quadratic_task_model",
    "covariance_recovery_model",
    "branch_inputs",
    "design_corollary1",
    "design_no_combining_quadratic",
    "run_quadratic_pipeline",
]

_CHUNK = 100_000


@dataclass(frozen=True)
class QuadraticTaskModel:
    Sigma_x: np.ndarray
    C_list: tuple
    G: np.ndarray
    mean_xbar: np.ndarray
    Sigma_xbar: np.ndarray
    mean_s: np.ndarray
    name: str = "custom"

    @property
    def N(self):
        return self.Sigma_x.shape[0]

    @property
    def K(self):
        return self.G.shape[0]

    def sample(self, rng, n):
        """Draw ``(s, x)`` with ``x ~ N(0, Sigma_x)`` and ``s = (x^T C_k x)_k``."""
        L = np.linalg.cholesky(self.Sigma_x)
        x = rng.standard_normal((n, self.N)) @ L.T
        s = np.einsum("ni,kij,nj->nk", x, self._C, x, optimize=True)
        return s, x

    @property
    def _C(self):
        return np.stack(self.C_list)


def lift(x):
    """``vec(x x^T)``; a batch of row vectors lifts row by row."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.outer(x, x).ravel(order="F")
    # column-major vec of x x^T: entry j*N + i holds x_i x_j
    return np.einsum("nj,ni->nji", x, x).reshape(x.shape[0], -1)


def _symmetrize(C_list):
    mats = [np.atleast_2d(np.asarray(C, dtype=float)) for C in C_list]
    if not mats:
        raise ValueError("need at least one quadratic form")
    N = mats[0].shape[0]
    for k, C in enumerate(mats):
        if C.shape != (N, N):
            raise ValueError(f"C_{k} has shape {C.shape}, expected {(N, N)}")
    return tuple(0.5 * (C + C.T) for C in mats)


def build_G(C_list):
    """Stack ``vec(C_k)^T`` of the symmetrized forms into a ``K x N^2`` matrix."""
    return np.stack([C.ravel(order="F") for C in _symmetrize(C_list)])


def gaussian_fourth_moments(Sigma_x):
    """Mean and covariance of ``vec(x x^T)`` for ``x ~ N(0, Sigma_x)``.

    Uses ``Cov(x_i x_j, x_k x_l) = S_ik S_jl + S_il S_jk``.
    """
    S = np.asarray(Sigma_x, dtype=float)
    N = S.shape[0]
    T = np.einsum("ik,jl->jilk", S, S) + np.einsum("il,jk->jilk", S, S)
    cov = T.reshape(N * N, N * N)
    return S.ravel(order="F").copy(), 0.5 * (cov + cov.T)


def empirical_moments(samples):
    """Sample mean and 1/n covariance of the lifted rows of ``samples``."""
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    n, N = X.shape
    if n < N * N:
        raise ValueError(f"need at least N^2={N * N} samples, got {n}")
    if n < 10 * N**4:
        warnings.warn(
            f"{n} samples is below the recommended 10 N^4 = {10 * N**4}", stacklevel=2
        )
    total = np.zeros(N * N)
    outer = np.zeros((N * N, N * N))
    for start in range(0, n, _CHUNK):
        L = lift(X[start : start + _CHUNK])
        total += L.sum(axis=0)
        outer += L.T @ L
    mean = total / n
    cov = outer / n - np.outer(mean, mean)
    return mean, 0.5 * (cov + cov.T)


def quadratic_task_model(Sigma_x, C_list, moments="analytic", samples=None, name="custom"):
    """Assemble a quadratic task model.

    ``moments="empirical"`` estimates the lifted mean and covariance from
    ``samples`` (rows of ``x``) instead of the Gaussian identity.
    """
    Sigma_x = np.atleast_2d(np.asarray(Sigma_x, dtype=float))
    C_list = _symmetrize(C_list)
    if C_list[0].shape != Sigma_x.shape:
        raise ValueError("quadratic forms and Sigma_x differ in dimension")
    np.linalg.cholesky(Sigma_x)
    G = build_G(C_list)
    if moments == "analytic":
        mean_xbar, Sigma_xbar = gaussian_fourth_moments(Sigma_x)
    elif moments == "empirical":
        if samples is None:
            raise ValueError("empirical moments need samples")
        mean_xbar, Sigma_xbar = empirical_moments(samples)
    else:
        raise ValueError(f"unknown moments mode {moments!r}")
    mean_s = np.array([np.trace(C @ Sigma_x) for C in C_list])
    return QuadraticTaskModel(Sigma_x, C_list, G, mean_xbar, Sigma_xbar, mean_s, name)


def covariance_recovery_model(n_blocks=4, block_dim=3):
    """Recover the upper triangle of the sample covariance of ``n_blocks`` i.i.d. blocks.

    Each block ``y_l`` is ``N(0, Sigma_y)`` with ``Sigma_y[i, j] = exp(-|i - j|)``;
    ``x`` stacks the blocks and ``s`` lists ``(1/n_blocks) sum_l y_l[i] y_l[j]``
    for ``i <= j`` in row-major order.
    """
    idx = np.arange(block_dim)
    Sigma_y = np.exp(-np.abs(idx[:, None] - idx[None, :]))
    Sigma_x = np.kron(np.eye(n_blocks), Sigma_y)
    N = n_blocks * block_dim
    C_list = []
    for i in range(block_dim):
        for j in range(i, block_dim):
            C = np.zeros((N, N))
            for l in range(n_blocks):
                C[l * block_dim + i, l * block_dim + j] += 1.0
                C[l * block_dim + j, l * block_dim + i] += 1.0
            C_list.append(C / (2.0 * n_blocks))
    return quadratic_task_model(Sigma_x, C_list, name="covariance_recovery")


def branch_inputs(A, model, x):
    """``A (lift(x) - E[xbar])`` for rows of ``x``, without materializing the lift."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    N = model.N
    # vec is column-major, so row p of A reshapes (Fortran order) to a form A_p
    forms = A.reshape(A.shape[0], N, N, order="F")
    offset = A @ model.mean_xbar
    out = np.empty((X.shape[0], A.shape[0]))
    for start in range(0, X.shape[0], _CHUNK):
        xc = X[start : start + _CHUNK]
        out[start : start + _CHUNK] = np.einsum("ni,pij,nj->np", xc, forms, xc, optimize=True)
    return out - offset


def _empirical_rho(quantizers, Y):
    rho = np.empty(len(quantizers))
    for p, q in enumerate(quantizers):
        y = Y[:, p]
        energy = np.mean(y * y)
        rho[p] = np.mean(np.square(quantize(q, y) - y)) / energy if energy > 0 else 1.0
    return rho


def _train_quantizers(A, model, M_tilde, kind, training_samples, seed):
    if M_tilde == 1:
        # centred branch inputs: the single level sits at the mean, rho = 1 exactly
        q = ScalarQuantizer([0.0], [], 1.0, "lloyd_empirical")
        return (q,) * A.shape[0], np.ones(A.shape[0])
    seq = np.random.SeedSequence(seed)
    train_seq, eval_seq = seq.spawn(2)
    _, x_train = model.sample(np.random.default_rng(train_seq), training_samples)
    Y = branch_inputs(A, model, x_train)
    quantizers = []
    for p in range(A.shape[0]):
        if kind == "lloyd":
            quantizers.append(lloyd_max_empirical(Y[:, p], M_tilde, seed=seed))
        else:
            quantizers.append(uniform_quantizer(M_tilde, float(np.mean(Y[:, p] ** 2))))
    del Y
    # distortion factors are measured on a fresh draw, not the training set
    _, x_eval = model.sample(np.random.default_rng(eval_seq), training_samples)
    rho = _empirical_rho(quantizers, branch_inputs(A, model, x_eval))
    quantizers = tuple(
        ScalarQuantizer(q.levels, q.boundaries, float(r), q.design_kind, q.variance)
        for q, r in zip(quantizers, rho)
    )
    return quantizers, rho


def design_corollary1(model, P, M, training_samples=10**6, seed=0, quantizer_kind="lloyd",
                      factorization=None):
    """Optimal restricted design for the lifted (linearized) quadratic task.

    Parameters
    ----------
    model : QuadraticTaskModel
    P : int
        Number of branches; at most ``rank(Sigma_xbar)``.
    M : int
        Overall number of quantization levels.
    training_samples : int
        Size of the training set for the per-branch sample Lloyd quantizers,
        and of the separate evaluation set for their distortion factors.
    seed : int
    quantizer_kind : {"lloyd", "uniform"}
    factorization : PsdFactorization, optional
        Precomputed ``psd_sqrt(model.Sigma_xbar)``.

    Returns
    -------
    TaskQuantizerDesign
        ``A = V^T Sigma_xbar^(+1/2)`` (pseudo-inverse root) and
        ``D = G Sigma_xbar^(1/2) V``; ``rho`` holds the measured factors.
    """
    if quantizer_kind not in ("lloyd", "uniform"):
        raise ValueError(f"unknown quantizer kind {quantizer_kind!r}")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    fac = factorization if factorization is not None else psd_sqrt(model.Sigma_xbar)
    if not 1 <= P <= fac.rank:
        raise ValueError(f"P={P} must lie in [1, rank(Sigma_xbar)={fac.rank}]")
    Gt = model.G @ fac.sqrt
    V, _ = top_right_singular_vectors(Gt, P)
    A = V.T @ fac.inv_sqrt
    D = Gt @ V
    M_tilde = levels_per_quantizer(M, P)
    eigenvalues = np.square(np.linalg.svd(Gt, compute_uv=False))
    quantizers, rho = _train_quantizers(A, model, M_tilde, quantizer_kind, training_samples, seed)
    return TaskQuantizerDesign(A, D, quantizers, eigenvalues, rho, P, int(M), M_tilde, quantizer_kind)


def design_no_combining_quadratic(model, M, training_samples=10**6, seed=0, factorization=None):
    """Baseline quantizing every whitened direction of the lifted vector.

    One branch per nonzero eigenvalue of ``Sigma_xbar`` (the distinct
    products ``x_i x_j``), followed by the optimal digital matrix.
    """
    fac = factorization if factorization is not None else psd_sqrt(model.Sigma_xbar)
    lam, U = np.linalg.eigh(model.Sigma_xbar)
    order = np.argsort(lam)[::-1][: fac.rank]
    A = (U[:, order] / np.sqrt(lam[order])).T
    D = model.G @ model.Sigma_xbar @ A.T
    P = A.shape[0]
    M_tilde = levels_per_quantizer(M, P)
    Gt = model.G @ fac.sqrt
    eigenvalues = np.square(np.linalg.svd(Gt, compute_uv=False))
    quantizers, rho = _train_quantizers(A, model, M_tilde, "lloyd", training_samples, seed)
    return TaskQuantizerDesign(A, D, quantizers, eigenvalues, rho, P, int(M), M_tilde, "lloyd")


def run_quadratic_pipeline(design, model, x, bypass_quantizer=False):
    """``D Q(A (lift(x) - E[xbar])) + E[s]`` for one vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    Y = branch_inputs(design.A, model, np.atleast_2d(x))
    Z = Y if bypass_quantizer else branch_quantize(design.quantizers, Y)
    out = Z @ design.D.T + model.mean_s
    return out[0] if x.ndim == 1 else out
