"""Static figures for sweep results, written as SVG."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": (4.0, 3.0),
    "svg.hashsalt": "qrepeater",
    "svg.fonttype": "none",
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_optimal_rates(optima: dict, path, title: str = "") -> None:
    """Optimal rate, per-memory rate and optimal buffer length versus M."""
    Ms = sorted(optima)
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        rate = [optima[m].rate for m in Ms]
        err = [3 * optima[m].rate_stderr for m in Ms]
        ax.errorbar(Ms, rate, yerr=err, marker="o", color="C0", capsize=2, label="optimal rate")
        ax.plot(Ms, [optima[m].per_memory_rate for m in Ms], "s--", color="C2",
                label="per-memory rate")
        ax.set_xlabel("memories per end node M")
        ax.set_ylabel("rate (ebit/s)")
        ax.set_xticks(Ms)
        ax2 = ax.twinx()
        ax2.plot(Ms, [optima[m].N_buffer for m in Ms], "^:", color="C3", label="optimal buffer")
        ax2.set_ylabel("optimal buffer (steps)")
        lines = ax.get_legend_handles_labels()
        lines2 = ax2.get_legend_handles_labels()
        ax.legend(lines[0] + lines2[0], lines[1] + lines2[1], loc="upper left")
        if title:
            ax.set_title(title)
        _save(fig, path)


def plot_rate_sweep(sweeps: dict, path) -> None:
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for m in sorted(sweeps):
            ax.plot([r.N_buffer for r in sweeps[m]], [r.rate for r in sweeps[m]], label=f"M={m}")
        ax.set_xlabel("buffer length (steps)")
        ax.set_ylabel("rate (ebit/s)")
        ax.legend()
        _save(fig, path)


def plot_fidelity_densities(densities: dict, path) -> None:
    """Overlay the conditional fidelity densities, one step curve per M."""
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        lo = 1.0
        for m in sorted(densities):
            d = densities[m]
            if not d:
                continue
            x = [c for c, _ in d]
            y = [v for _, v in d]
            ax.step(x, y, where="mid", label=f"M={m}")
            lo = min(lo, min(c for c, v in d if v > 0))
        ax.set_xlim(max(0.0, lo - 0.02), 1.0)
        ax.set_xlabel("fidelity")
        ax.set_ylabel("probability density")
        ax.legend()
        _save(fig, path)
