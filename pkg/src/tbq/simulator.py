"""Monte Carlo MSE evaluation and bit-budget sweeps.

Runs are split into fixed-size chunks. Chunk ``c`` draws from a generator
seeded by ``SeedSequence(seed, spawn_key=(c,))``, so the statistics depend
only on ``(seed, runs, chunk_size)`` and never on how many workers process
the chunks. Partial sums are merged in chunk order.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from .linear_task import (
    analytic_mse_theorem1,
    design_theorem1,
    run_pipeline,
)
from .quadratic_task import QuadraticTaskModel, design_corollary1, run_quadratic_pipeline

__all__ = ["SimResult", "SweepRow", "chunk_rng", "simulate", "sweep_bits"]

DEFAULT_CHUNK = 50_000


@dataclass(frozen=True)
class SimResult:
    mse_total: float
    mse_quantizer: float
    stderr_total: float
    stderr_quantizer: float
    runs: int
    seed: int
    # mean of ||s - s_tilde||^2 over the same runs (linear tasks)
    mse_floor: float = math.nan
    stderr_floor: float = math.nan


@dataclass(frozen=True)
class SweepRow:
    bits: int
    M: int
    M_tilde: int
    result: SimResult
    analytic_mse: float
    design: object = None


def chunk_rng(seed, chunk_index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk_index,)))


def _chunk_sums(model, design, seed, index, n, bypass):
    rng = chunk_rng(seed, index)
    s, x = model.sample(rng, n)
    if isinstance(model, QuadraticTaskModel):
        s_hat = run_quadratic_pipeline(design, model, x, bypass)
        e_tot = np.sum(np.square(s - s_hat), axis=1)
        e_q = e_floor = np.full(n, np.nan)
    else:
        s_hat = run_pipeline(design, x, bypass)
        s_tilde = x @ model.Gamma.T
        e_tot = np.sum(np.square(s - s_hat), axis=1)
        e_q = np.sum(np.square(s_tilde - s_hat), axis=1)
        e_floor = np.sum(np.square(s - s_tilde), axis=1)
    stack = np.stack([e_tot, e_q, e_floor])
    return stack.sum(axis=1), np.square(stack).sum(axis=1)


def simulate(model, design, runs=500_000, seed=0, workers=1, chunk_size=DEFAULT_CHUNK,
             bypass_quantizer=False):
    """Estimate ``E||s - s_hat||^2`` (and ``E||Gamma x - s_hat||^2`` for linear tasks).

    Parameters
    ----------
    model : LinearTaskModel or QuadraticTaskModel
    design : TaskQuantizerDesign
    runs : int
        Number of Monte Carlo draws, at least 100.
    seed : int
    workers : int
        Thread count; does not change the result.
    chunk_size : int
    bypass_quantizer : bool
        Feed the analog outputs straight to the digital stage.

    Returns
    -------
    SimResult
        Standard errors are ``std / sqrt(runs)`` of the per-run squared error.
    """
    if runs < 100:
        raise ValueError(f"runs must be >= 100, got {runs}")
    sizes = [min(chunk_size, runs - start) for start in range(0, runs, chunk_size)]
    jobs = [(model, design, seed, i, n, bypass_quantizer) for i, n in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda job: _chunk_sums(*job), jobs))
    else:
        parts = [_chunk_sums(*job) for job in jobs]

    total = np.zeros(3)
    total_sq = np.zeros(3)
    for s1, s2 in parts:
        total += s1
        total_sq += s2
    mean = total / runs
    var = np.clip(total_sq / runs - np.square(mean), 0.0, None) * runs / (runs - 1)
    se = np.sqrt(var / runs)
    return SimResult(
        mse_total=float(mean[0]),
        mse_quantizer=float(mean[1]),
        stderr_total=float(se[0]),
        stderr_quantizer=float(se[1]),
        runs=int(runs),
        seed=int(seed),
        mse_floor=float(mean[2]),
        stderr_floor=float(se[2]),
    )


def sweep_bits(model, P, bit_budgets, quantizer_kind="lloyd", runs=500_000, seed=0,
               training_samples=10**6, workers=1):
    """Design and simulate one task-based quantizer per total-bit budget.

    A budget of ``b`` bits means ``M = 2**b`` overall levels. The analytic
    column is the quantizer-dependent MSE for linear tasks and the total MSE
    for quadratic ones (whose MMSE floor is zero). Quadratic designs train
    on data seeded from ``(seed, b)``.
    """
    rows = []
    for b in sorted(bit_budgets):
        if b < 1:
            raise ValueError(f"bit budgets must be >= 1, got {b}")
        M = 2 ** int(b)
        if isinstance(model, QuadraticTaskModel):
            design_seed = np.random.SeedSequence(seed, spawn_key=(int(b),)).generate_state(1)[0]
            design = design_corollary1(model, P, M, training_samples, int(design_seed), quantizer_kind)
        else:
            design = design_theorem1(model, P, M, quantizer_kind, training_samples, seed)
        result = simulate(model, design, runs, seed, workers)
        analytic = analytic_mse_theorem1(design.eigenvalues, design.rho, design.P, model.K)
        rows.append(SweepRow(int(b), M, design.M_tilde, result, analytic, design))
    return rows
