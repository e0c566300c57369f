"""Scalar quantizers: Lloyd-Max (Gaussian and sample-based), uniform, and
high-rate distortion approximations.

A quantizer with ``m`` levels has ``m - 1`` ascending decision boundaries.
A value lying exactly on a boundary is assigned to the upper cell.
"""
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.optimize import minimize_scalar, root
from scipy.special import ndtr, ndtri

__all__ = [
    "ScalarQuantizer",
    "ConvergenceError",
    "lloyd_max_gaussian",
    "lloyd_max_empirical",
    "uniform_quantizer",
    "quantize",
    "distortion_factor",
    "gaussian_cell_moments",
    "highrate_rho",
    "levels_per_quantizer",
    "format_quantizer",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


class ConvergenceError(RuntimeError):
    """Lloyd iteration hit its iteration cap."""

    def __init__(self, message, last_delta):
        super().__init__(message)
        self.last_delta = last_delta


@dataclass(frozen=True)
class ScalarQuantizer:
    levels: np.ndarray
    boundaries: np.ndarray
    rho: float
    design_kind: str
    variance: float = field(default=1.0)

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float).reshape(-1)
        boundaries = np.asarray(self.boundaries, dtype=float).reshape(-1)
        if levels.size < 1 or boundaries.size != levels.size - 1:
            raise ValueError("need m >= 1 levels and m - 1 boundaries")
        if np.any(np.diff(levels) <= 0) or np.any(np.diff(boundaries) <= 0):
            raise ValueError("levels and boundaries must be strictly increasing")
        if boundaries.size and not (
            np.all(levels[:-1] < boundaries) and np.all(boundaries < levels[1:])
        ):
            raise ValueError("levels and boundaries must interleave")
        levels.setflags(write=False)
        boundaries.setflags(write=False)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "boundaries", boundaries)

    @property
    def n_levels(self):
        return self.levels.size

    def __call__(self, values):
        return quantize(self, values)


def quantize(q, value):
    """Map ``value`` (scalar or array) to the level of its cell."""
    idx = np.searchsorted(q.boundaries, value, side="right")
    out = q.levels[idx]
    return float(out) if np.ndim(out) == 0 else out


def gaussian_cell_moments(edges, variance=1.0):
    """Mass, first and second moment of N(0, variance) on each cell.

    ``edges`` holds the ``m + 1`` cell edges and may contain ``-inf``/``inf``.
    """
    sigma = math.sqrt(variance)
    t = np.asarray(edges, dtype=float) / sigma
    cdf = ndtr(t)
    pdf = np.where(np.isfinite(t), _INV_SQRT_2PI * np.exp(-0.5 * np.square(np.where(np.isfinite(t), t, 0.0))), 0.0)
    t_pdf = np.where(np.isfinite(t), t, 0.0) * pdf
    mass = np.diff(cdf)
    m1 = sigma * (pdf[:-1] - pdf[1:])
    m2 = variance * (mass + t_pdf[:-1] - t_pdf[1:])
    return mass, m1, m2


def _edges(boundaries):
    return np.concatenate(([-np.inf], boundaries, [np.inf]))


def _gaussian_mse(levels, boundaries, variance):
    mass, m1, m2 = gaussian_cell_moments(_edges(boundaries), variance)
    return float(np.sum(m2 - 2.0 * levels * m1 + np.square(levels) * mass))


def _polish_fixed_point(boundaries, variance):
    # Lloyd converges linearly and stalls ~1e-7 short of the fixed point for
    # many levels; a root solve on midpoint(centroids(b)) = b finishes it.
    def residual(b):
        mass, m1, _ = gaussian_cell_moments(_edges(np.sort(b)), variance)
        c = m1 / np.maximum(mass, np.finfo(float).tiny)
        return 0.5 * (c[1:] + c[:-1]) - b

    sol = root(residual, boundaries, method="hybr", options={"xtol": 1e-15})
    polished = sol.x
    if (
        np.all(np.isfinite(polished))
        and np.all(np.diff(polished) > 0)
        and np.max(np.abs(residual(polished))) < np.max(np.abs(residual(boundaries)))
    ):
        return polished
    return boundaries


def lloyd_max_gaussian(n_levels, variance=1.0, tol=1e-12, max_iter=10_000):
    """Lloyd-Max quantizer for a zero-mean Gaussian input.

    Alternates the centroid step (closed-form truncated-Gaussian means) and
    the midpoint step, starting from levels at equiprobable quantiles, until
    the relative change in distortion drops below ``tol``.
    """
    if n_levels < 1:
        raise ValueError(f"number of levels must be >= 1, got {n_levels}")
    if variance <= 0:
        raise ValueError(f"variance must be positive, got {variance}")
    if n_levels == 1:
        return ScalarQuantizer(np.zeros(1), np.zeros(0), 1.0, "lloyd_gaussian", variance)

    sigma = math.sqrt(variance)
    levels = sigma * ndtri((np.arange(n_levels) + 0.5) / n_levels)
    boundaries = 0.5 * (levels[1:] + levels[:-1])
    prev = np.inf
    delta = np.inf
    for _ in range(max_iter):
        mass, m1, _ = gaussian_cell_moments(_edges(boundaries), variance)
        levels = m1 / mass
        # distortion of the centroid quantizer on the current cells
        distortion = variance - float(np.sum(mass * np.square(levels)))
        boundaries = 0.5 * (levels[1:] + levels[:-1])
        delta = abs(prev - distortion) / distortion
        if delta < tol:
            break
        prev = distortion
    else:
        raise ConvergenceError(
            f"Lloyd-Max did not converge in {max_iter} iterations "
            f"(last relative change {delta:.3e})",
            delta,
        )
    boundaries = _polish_fixed_point(boundaries, variance)
    mass, m1, _ = gaussian_cell_moments(_edges(boundaries), variance)
    levels = m1 / mass
    # symmetrize away rounding asymmetry
    levels = 0.5 * (levels - levels[::-1])
    boundaries = 0.5 * (levels[1:] + levels[:-1])
    rho = _gaussian_mse(levels, boundaries, variance) / variance
    return ScalarQuantizer(levels, boundaries, rho, "lloyd_gaussian", variance)


def lloyd_max_empirical(samples, n_levels, seed=0, max_iter=1000):
    """One-dimensional k-means (sample Lloyd) quantizer.

    Levels start at equiprobable sample quantiles. A cell that empties out
    is reseeded at the sample with the largest squared error to its current
    level, so the codebook always keeps ``n_levels`` entries. ``seed`` drives
    the choice among distinct values when the quantile start collides.

    The returned ``rho`` is the mean squared quantization error over the
    samples divided by their second moment.
    """
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    if x.size == 0:
        raise ValueError("samples must be non-empty")
    if n_levels < 1:
        raise ValueError(f"number of levels must be >= 1, got {n_levels}")
    distinct = np.unique(x)
    if distinct.size < n_levels:
        raise ValueError(
            f"{distinct.size} distinct sample values cannot support {n_levels} levels"
        )
    n = x.size
    csum = np.concatenate(([0.0], np.cumsum(x)))

    levels = np.quantile(x, (np.arange(n_levels) + 0.5) / n_levels)
    levels = np.unique(levels)
    if levels.size < n_levels:
        rng = np.random.default_rng(seed)
        spare = np.setdiff1d(distinct, levels)
        extra = rng.choice(spare, n_levels - levels.size, replace=False)
        levels = np.sort(np.concatenate((levels, extra)))

    cuts = None
    for _ in range(max_iter):
        boundaries = 0.5 * (levels[1:] + levels[:-1])
        new_cuts = np.concatenate(([0], np.searchsorted(x, boundaries, side="left"), [n]))
        if cuts is not None and np.array_equal(new_cuts, cuts):
            break
        cuts = new_cuts
        counts = np.diff(cuts)
        empty = np.flatnonzero(counts == 0)
        sums = csum[cuts[1:]] - csum[cuts[:-1]]
        new_levels = levels.copy()
        full = counts > 0
        new_levels[full] = sums[full] / counts[full]
        if empty.size:
            err = np.square(x - np.repeat(new_levels, counts))
            err[np.isin(x, new_levels[full])] = -1.0
            for j in empty:
                pick = int(np.argmax(err))
                new_levels[j] = x[pick]
                err[x == x[pick]] = -1.0
        levels = np.sort(new_levels)

    boundaries = 0.5 * (levels[1:] + levels[:-1])
    q = ScalarQuantizer(levels, boundaries, 0.0, "lloyd_empirical", float(np.mean(x * x)))
    rho = distortion_factor(q, x)
    return ScalarQuantizer(levels, boundaries, rho, "lloyd_empirical", q.variance)


def uniform_quantizer(n_levels, variance=1.0, xtol=1e-8):
    """Mid-rise uniform quantizer with MSE-optimal step for N(0, variance)."""
    if n_levels < 1:
        raise ValueError(f"number of levels must be >= 1, got {n_levels}")
    if n_levels == 1:
        return ScalarQuantizer(np.zeros(1), np.zeros(0), 1.0, "uniform", variance)
    sigma = math.sqrt(variance)
    offsets = np.arange(n_levels) - 0.5 * (n_levels - 1)

    def mse(step):
        levels = offsets * step
        return _gaussian_mse(levels, 0.5 * (levels[1:] + levels[:-1]), 1.0)

    # bounded Brent search: golden-section steps with parabolic acceleration
    res = minimize_scalar(
        mse,
        bounds=(1e-6, 16.0 / (n_levels - 1)),
        method="bounded",
        options={"xatol": xtol},
    )
    levels = offsets * res.x * sigma
    boundaries = 0.5 * (levels[1:] + levels[:-1])
    rho = _gaussian_mse(levels, boundaries, variance) / variance
    return ScalarQuantizer(levels, boundaries, rho, "uniform", variance)


def distortion_factor(q, input):
    """Quantization MSE divided by the input's second moment.

    ``input`` is either a sample array or a Gaussian law given as
    ``{"variance": v}`` (zero mean). A zero second moment is accepted only
    when the quantization error is exactly zero too, in which case 0 is
    returned.
    """
    if isinstance(input, dict):
        variance = float(input["variance"])
        if variance <= 0:
            raise ValueError("input second moment must be positive")
        return _gaussian_mse(q.levels, q.boundaries, variance) / variance
    x = np.asarray(input, dtype=float).reshape(-1)
    energy = float(np.mean(x * x))
    mse = float(np.mean(np.square(quantize(q, x) - x)))
    if energy == 0.0:
        if mse == 0.0:
            return 0.0
        raise ValueError("input has zero second moment")
    return mse / energy


def highrate_rho(n_levels, kind="nonuniform"):
    """High-rate distortion factor of a quantizer on a Gaussian input.

    Only meaningful for many levels; it exceeds 1 at ``n_levels = 1``.
    """
    if kind == "nonuniform":
        return (math.pi * math.sqrt(3.0) / 2.0) * n_levels ** -2.0
    if kind == "uniform":
        return 1.47 * n_levels ** -1.74
    raise ValueError(f"unknown quantizer kind {kind!r}")


def levels_per_quantizer(M, P):
    """Largest integer ``m`` with ``m**P <= M``, in exact integer arithmetic."""
    M, P = int(M), int(P)
    if M < 1 or P < 1:
        raise ValueError("M and P must be >= 1")
    m = max(1, int(round(M ** (1.0 / P))))
    while m ** P > M:
        m -= 1
    while (m + 1) ** P <= M:
        m += 1
    return m


def format_quantizer(q):
    """Text dump: ``levels:``, ``boundaries:`` and ``rho:`` lines, 15 significant digits."""
    fmt = lambda vals: " ".join(f"{v:.15g}" for v in vals)
    return (
        f"levels: {fmt(q.levels)}\n"
        f"boundaries: {fmt(q.boundaries)}\n"
        f"rho: {q.rho:.15g}\n"
    )
