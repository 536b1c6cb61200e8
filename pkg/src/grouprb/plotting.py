"""Figures written next to the delimited output. Uses the non-interactive Agg backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_STYLE = {
    "figure.dpi": 110,
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
}
_MODE_LABELS = {
    "standard": "exact samples",
    "exact_haar": "exact samples",
    "approx": "random-walk samples",
    "walk": "random-walk samples",
    "generator": "generators only",
}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def decay_figure(record, path) -> None:
    """Mean sequence fidelity against m with the fitted curve, one panel per sector."""
    sectors = list(record.repetitions[0].runs) if record.repetitions else ["all"]
    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(1, len(sectors), figsize=(4.2 * len(sectors), 3.2), squeeze=False)
        for ax, sector in zip(axes[0], sectors):
            for rep in record.repetitions:
                run, fit = rep.runs[sector], rep.fits[sector]
                line = ax.errorbar(run.m_values, run.means, yerr=run.std_errs, fmt="o", ms=2.5,
                                   lw=0.8, alpha=0.7)
                grid = np.linspace(min(run.m_values), max(run.m_values), 200)
                ax.plot(grid, fit.predict(grid), lw=0.8, color=line[0].get_color())
            ax.set_xlabel("sequence length m")
            ax.set_ylabel("mean sequence fidelity")
            if sector != "all":
                ax.set_title(sector.replace("_", "-") + " sector")
        _save(fig, path)


def comparison_figure(rows, path) -> None:
    """Mean and median error against p, one line per protocol."""
    modes = list(dict.fromkeys(r.mode for r in rows))
    with plt.rc_context(_STYLE):
        fig, (left, right) = plt.subplots(1, 2, figsize=(8, 3.2))
        for mode in modes:
            sel = [r for r in rows if r.mode == mode]
            ps = [r.p for r in sel]
            label = _MODE_LABELS.get(mode, mode)
            left.errorbar(ps, [r.mean_error for r in sel], yerr=[r.std_error for r in sel],
                          marker="o", ms=3, capsize=2, label=label)
            right.plot(ps, [r.median_error for r in sel], marker="o", ms=3, label=label)
        left.set_ylabel("mean error")
        right.set_ylabel("median error")
        for ax in (left, right):
            ax.set_xlabel("p")
            ax.set_yscale("log")
        left.legend(frameon=False)
        _save(fig, path)


def table_figure(report, path) -> None:
    """Mean error per row of a reproduced table, with the reference values if any."""
    labels = [row.label for row in report.rows]
    x = np.arange(len(labels))
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots(figsize=(max(4.0, 0.9 * len(labels) + 1.5), 3.2))
        ax.bar(x - 0.2, [row.mean_error for row in report.rows], width=0.4, label="this run")
        ref = [row.reference_mean if row.reference_mean is not None else np.nan for row in report.rows]
        if not np.all(np.isnan(ref)):
            ax.bar(x + 0.2, ref, width=0.4, label="reference")
        ax.set_xticks(x, labels, rotation=30, ha="right")
        ax.set_ylabel("mean error")
        ax.set_yscale("log")
        ax.set_title(report.name)
        ax.legend(frameon=False)
        _save(fig, path)
