"""Optional log-log figures rendered from the emitted plot-data files."""

from __future__ import annotations

from pathlib import Path

from .io import read_plot_data


def render_loglog(series: dict[str, Path], out: Path, title: str = "", xlabel: str = "delta", ylabel: str = "") -> Path:
    """Draw every ``label -> plot-data file`` pair on one log-log axis and save a PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for label, path in series.items():
        x, y = read_plot_data(path)
        ax.loglog(x, y, marker="o", ms=3, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    out = Path(out)
    # fixed metadata keeps the file stable across runs
    fig.savefig(out, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return out
