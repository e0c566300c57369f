"""Config-driven experiments: presets, CSV results and SVG figures."""
from dataclasses import dataclass, field
import csv
import io
import json
import math
import os
import re
import tempfile
from typing import Optional

import numpy as np

from .linear_task import (
    analytic_mse_prop2,
    analytic_mse_theorem1,
    channel_estimation_model,
    design_no_combining,
    design_theorem1,
    gaussian_linear_model,
)
from .bussgang import bussgang_from_rho
from .mathkit import psd_sqrt
from .quadratic_task import (
    QuadraticTaskModel,
    branch_inputs,
    covariance_recovery_model,
    design_corollary1,
    design_no_combining_quadratic,
    quadratic_task_model,
)
from .simulator import simulate

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "build_model",
    "run_experiment",
    "emit_histograms",
    "CSV_HEADER",
]

CSV_HEADER = [
    "experiment", "system", "bits", "M", "M_tilde", "P", "mse_sim",
    "mse_sim_stderr", "mse_analytic", "mmse_floor", "runs", "seed",
]
SYSTEMS = ("proposed-lloyd", "proposed-uniform", "no-combining")
PRESET_TASK = {
    "channel_k2": "linear",
    "channel_k8": "linear",
    "covariance_recovery": "quadratic",
}
# (K taps, N measurements); noise variance 1 and pilot seed 7 for both
CHANNEL_PRESETS = {"channel_k2": (2, 8), "channel_k8": (8, 16)}


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names file, line and field."""


@dataclass
class ExperimentConfig:
    task: str
    preset: str
    bit_budgets: list
    P: Optional[int] = None
    matrices: Optional[dict] = None
    quantizer: str = "lloyd"
    runs: int = 500_000
    seed: int = 0
    training_samples: int = 1_000_000
    workers: int = 1
    plot: bool = True
    source: str = field(default="<config>", repr=False)


def _field_line(text, name):
    m = re.search(r'"%s"\s*:' % re.escape(name), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _where(source, text, name):
    line = _field_line(text, name)
    loc = f"{source}:{line}" if line else source
    return f"{loc}: field '{name}'"


def load_config(path):
    """Parse and validate a JSON experiment config."""
    source = os.fspath(path)
    try:
        with open(source) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{source}: cannot read config ({exc.strerror})") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}:1: top level must be a JSON object")

    def fail(name, msg):
        raise ConfigError(f"{_where(source, text, name)}: {msg}")

    known = set(ExperimentConfig.__dataclass_fields__) - {"source"}
    for key in raw:
        if key not in known:
            fail(key, "unknown field")
    for name in ("task", "preset", "bit_budgets"):
        if name not in raw:
            raise ConfigError(f"{source}: missing required field '{name}'")

    task = raw["task"]
    if task not in ("linear", "quadratic"):
        fail("task", f"must be 'linear' or 'quadratic', got {task!r}")
    preset = raw["preset"]
    if preset not in (*PRESET_TASK, "custom"):
        fail("preset", f"must be one of {sorted((*PRESET_TASK, 'custom'))}, got {preset!r}")
    if preset != "custom" and PRESET_TASK[preset] != task:
        fail("preset", f"preset {preset!r} is a {PRESET_TASK[preset]} task, not {task!r}")
    matrices = raw.get("matrices")
    if (preset == "custom") != (matrices is not None):
        fail("matrices", "must be given exactly when preset is 'custom'")
    if matrices is not None:
        if not isinstance(matrices, dict):
            fail("matrices", "must be an object")
        needed = ("Gamma", "Sigma_x") if task == "linear" else ("Sigma_x", "C")
        for key in needed:
            if key not in matrices:
                fail("matrices", f"missing '{key}' for a {task} task")

    budgets = raw["bit_budgets"]
    if (
        not isinstance(budgets, list) or not budgets
        or not all(isinstance(b, int) and not isinstance(b, bool) and b >= 1 for b in budgets)
    ):
        fail("bit_budgets", "must be a non-empty list of integers >= 1")

    def integer(name, default, lo):
        value = raw.get(name, default)
        if value is None and default is None:
            return None
        if not isinstance(value, int) or isinstance(value, bool) or value < lo:
            fail(name, f"must be an integer >= {lo}, got {value!r}")
        return value

    quantizer = raw.get("quantizer", "lloyd")
    if quantizer not in ("lloyd", "uniform"):
        fail("quantizer", f"must be 'lloyd' or 'uniform', got {quantizer!r}")
    plot = raw.get("plot", True)
    if not isinstance(plot, bool):
        fail("plot", "must be true or false")
    return ExperimentConfig(
        task=task,
        preset=preset,
        bit_budgets=list(budgets),
        P=integer("P", None, 1),
        matrices=matrices,
        quantizer=quantizer,
        runs=integer("runs", 500_000, 100),
        seed=integer("seed", 0, 0),
        training_samples=integer("training_samples", 1_000_000, 100),
        workers=integer("workers", 1, 1),
        plot=plot,
        source=source,
    )


def build_model(config):
    if config.preset in CHANNEL_PRESETS:
        K, N = CHANNEL_PRESETS[config.preset]
        return channel_estimation_model(K, N, 1.0, 7, name=config.preset)
    if config.preset == "covariance_recovery":
        return covariance_recovery_model()
    m = config.matrices
    try:
        if config.task == "linear":
            return gaussian_linear_model(m["Gamma"], m["Sigma_x"], m.get("Sigma_s"))
        return quadratic_task_model(m["Sigma_x"], m["C"])
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise ConfigError(f"{config.source}: field 'matrices': {exc}") from exc


def _check_writable(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with tempfile.NamedTemporaryFile(dir=out_dir, prefix=".tbq-probe-"):
        pass


def _fmt(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.15g}"


def _rows_for_budget(config, model, P, bits, systems, fac):
    quadratic = isinstance(model, QuadraticTaskModel)
    floor = 0.0 if quadratic else model.mmse_floor
    M = 2 ** bits
    # same per-budget training seed as sweep_bits
    design_seed = int(np.random.SeedSequence(config.seed, spawn_key=(bits,)).generate_state(1)[0])
    rows = []
    for system in systems:
        analytic = None
        if system.startswith("proposed-"):
            kind = system.split("-", 1)[1]
            if quadratic:
                design = design_corollary1(model, P, M, config.training_samples, design_seed, kind, fac)
            else:
                design = design_theorem1(model, P, M, kind)
            analytic = floor + analytic_mse_theorem1(design.eigenvalues, design.rho, design.P, model.K)
        elif quadratic:
            design = design_no_combining_quadratic(model, M, config.training_samples, design_seed, fac)
        else:
            design = design_no_combining(model, M)
            analytic = floor + analytic_mse_prop2(model, design.A, bussgang_from_rho(design.rho))
        result = simulate(model, design, config.runs, config.seed, config.workers)
        rows.append([
            config.preset, system, bits, M, design.M_tilde, design.P, result.mse_total,
            result.stderr_total, analytic, floor, result.runs, result.seed,
        ])
    return rows


def run_experiment(config, out_dir, systems=SYSTEMS):
    """Run every (budget, system) pair and write ``results.csv`` (plus ``plot.svg``).

    Returns the CSV rows as lists of raw values.
    """
    _check_writable(out_dir)
    model = build_model(config)
    P = config.P if config.P is not None else model.K
    fac = psd_sqrt(model.Sigma_xbar) if isinstance(model, QuadraticTaskModel) else None
    rows = []
    for bits in sorted(config.bit_budgets):
        rows.extend(_rows_for_budget(config, model, P, bits, systems, fac))

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])
    with open(os.path.join(out_dir, "results.csv"), "w", newline="") as fh:
        fh.write(buf.getvalue())
    if config.plot:
        from .plotting import plot_mse_curves
        plot_mse_curves(rows, os.path.join(out_dir, "plot.svg"), title=config.preset)
    return rows


def emit_histograms(config, out_dir, draws=1_000_000):
    """Histogram every analog branch output of the proposed design.

    Writes ``hist_branch_<p>.svg`` per branch and ``hist_moments.csv`` with
    the branch mean, variance, skewness, excess kurtosis and the standard
    error of the kurtosis under normality. Returns the moment rows.
    """
    _check_writable(out_dir)
    model = build_model(config)
    P = config.P if config.P is not None else model.K
    rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(0xB1,)))
    _, x = model.sample(rng, draws)
    if isinstance(model, QuadraticTaskModel):
        design = design_corollary1(model, P, 1, seed=config.seed)
        Y = branch_inputs(design.A, model, x)
    else:
        design = design_theorem1(model, P, 1)
        Y = x @ design.A.T
    from .plotting import plot_branch_histogram
    moments = []
    for p in range(Y.shape[1]):
        y = Y[:, p]
        c = y - y.mean()
        var = float(np.mean(c * c))
        skew = float(np.mean(c**3) / var**1.5)
        kurt = float(np.mean(c**4) / var**2 - 3.0)
        moments.append([p + 1, float(y.mean()), var, skew, kurt, math.sqrt(24.0 / draws)])
        plot_branch_histogram(y, os.path.join(out_dir, f"hist_branch_{p + 1}.svg"), p + 1)
    with open(os.path.join(out_dir, "hist_moments.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["branch", "mean", "variance", "skewness", "excess_kurtosis", "kurtosis_stderr"])
        for row in moments:
            writer.writerow([_fmt(v) for v in row])
    return moments
