"""Static SVG figures. Output is byte-stable for identical inputs."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "tbq"
_SVG_META = {"Date": None, "Creator": None}


def plot_mse_curves(rows, path, title=None):
    """Log-scale MSE vs overall bits, one simulated and one analytic curve per system.

    ``rows`` are result rows in the ``results.csv`` column order.
    """
    fig, ax = plt.subplots(figsize=(6, 4.5))
    systems = list(dict.fromkeys(r[1] for r in rows))
    for i, system in enumerate(systems):
        sel = [r for r in rows if r[1] == system]
        bits = [r[2] for r in sel]
        color = f"C{i}"
        ax.semilogy(bits, [r[6] for r in sel], "o-", color=color, label=f"{system} (sim)")
        analytic = [(b, r[8]) for b, r in zip(bits, sel) if r[8] is not None]
        if analytic:
            b, v = zip(*analytic)
            ax.semilogy(b, v, "x--", color=color, label=f"{system} (analytic)")
    ax.set_xlabel("overall number of bits")
    ax.set_ylabel("MSE")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)


def plot_branch_histogram(y, path, branch):
    """Freedman-Diaconis histogram of one branch with its best-fit Gaussian."""
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.hist(y, bins="fd", density=True, color="0.6", label="empirical")
    mu, sd = float(np.mean(y)), float(np.std(y))
    grid = np.linspace(np.min(y), np.max(y), 400)
    ax.plot(grid, np.exp(-0.5 * ((grid - mu) / sd) ** 2) / (sd * np.sqrt(2 * np.pi)), "r-",
            label="best-fit Gaussian")
    ax.set_title(f"branch {branch}")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
