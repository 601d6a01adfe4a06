"""CSV output and companion figures."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .. import __version__
from .experiments import ExperimentResult


def _fmt(value):
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.12g}"
    return str(value)


def render_csv(result: ExperimentResult, config) -> str:
    """CSV text: one ``#`` metadata line, a header, one row per grid point."""
    meta = {"config_hash": config.digest(), "seed": config.master_seed,
            "version": __version__, "kind": result.kind}
    meta.update(result.metadata)
    buf = io.StringIO()
    buf.write("# " + " ".join(f"{k}={v}" for k, v in meta.items() if v != "") + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([_fmt(row[c]) for c in result.columns])
    return buf.getvalue()


def render_trace(trace: dict) -> str:
    return json.dumps(trace, indent=2, sort_keys=True, allow_nan=True) + "\n"


def figure_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".png")


def plot_result(result: ExperimentResult, path) -> Path:
    """Draw the experiment's curves into ``path`` (PNG)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = result.rows
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    if result.kind == "rank_vs_l":
        x = [r["l"] for r in rows]
        ax.errorbar(x, [r["rank_mean"] for r in rows],
                    yerr=[2 * r["rank_se"] for r in rows], marker="o", ms=4,
                    label="mean numerical rank")
        ax.plot(x, x, "k--", lw=0.8, label="full rank")
        ax.set_xlabel("L")
        ax.set_ylabel("rank")
    else:
        key = "snr_db" if result.kind == "rate_vs_snr" else "target_rate"
        x = [r[key] for r in rows]
        ax.errorbar(x, [r["r2_mean"] for r in rows], yerr=[2 * r["r2_se"] for r in rows],
                    marker="o", ms=4, label="R2 optimized")
        ax.errorbar(x, [r["r2_eq_mean"] for r in rows],
                    yerr=[2 * r["r2_eq_se"] for r in rows], marker="s", ms=4,
                    ls="--", label="R2 equal power")
        if result.kind == "target_rate_sweep":
            ax.plot(x, [r["r1_mean"] for r in rows], marker="^", ms=4, label="R1")
            ax.set_xlabel("target rate R1* [bits/s/Hz]")
        else:
            ax.set_xlabel("SNR P1 = P2 [dB]")
        ax.set_ylabel("rate [bits/s/Hz]")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def write_outputs(result, config, out_path=None, plot=False):
    """Write CSV (or a trace for single trials) and optionally the figure.

    Returns the text that was written.
    """
    if isinstance(result, dict):
        text = render_trace(result)
    else:
        text = render_csv(result, config)
    if out_path is None:
        return text
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(text)
    if plot and not isinstance(result, dict):
        plot_result(result, figure_path(out_path))
    return text
