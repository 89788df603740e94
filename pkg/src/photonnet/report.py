"""Figures for experiment results (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .netspec import RunResult  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "axes.linewidth": 0.6,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
    "legend.frameon": False,
    "axes.prop_cycle": matplotlib.cycler(color=matplotlib.colormaps["tab20"].colors),
}


def _xvalue(v) -> float:
    return float(v[0]) if isinstance(v, (list, tuple)) else float(v)


def _pattern_label(names, pattern) -> str:
    return " ".join(f"{n}={b}" for n, b in zip(names, pattern))


def _log_if_wide(ax) -> None:
    values = [y for line in ax.get_lines() for y in line.get_ydata() if y > 0]
    if values and min(values) < 1e-2 * max(values):
        ax.set_yscale("log")
        ax.set_ylim(bottom=max(min(values) / 3, 1e-12))


def render_figure(result: RunResult, path: str | Path) -> Path:
    """Plot probabilities (and photon numbers, when requested) per sweep point.

    Sweeps become line plots against the swept parameter; a single point
    becomes a bar chart of the outcome table.
    """
    path = Path(path)
    names = result.detector_names
    has_numbers = any(p.numbers for p in result.points)
    with plt.rc_context(STYLE):
        ncols = 2 if has_numbers else 1
        fig, axes = plt.subplots(1, ncols, figsize=(7.5 * ncols, 4.5), squeeze=False)
        ax = axes[0, 0]
        if result.parameter is None:
            point = result.points[0]
            labels = [_pattern_label(names, pat) for pat, _ in point.outcomes]
            labels += [f"click {n}" for n in point.marginals]
            values = [p for _, p in point.outcomes] + list(point.marginals.values())
            ax.bar(range(len(values)), values, color="0.35")
            ax.set_xticks(range(len(values)), labels, rotation=45, ha="right")
            ax.set_ylabel("probability")
        else:
            xs = [_xvalue(p.value) for p in result.points]
            first = result.points[0]
            for k, (pat, _) in enumerate(first.outcomes):
                ys = [p.outcomes[k][1] for p in result.points]
                ax.plot(xs, ys, marker="o", ms=3, lw=1, label=_pattern_label(names, pat))
            for name in first.marginals:
                ys = [p.marginals[name] for p in result.points]
                ax.plot(xs, ys, marker="s", ms=3, lw=1.5, ls="--", label=f"click {name}")
            ax.set_xlabel(result.parameter)
            ax.set_ylabel("probability")
            _log_if_wide(ax)
            if first.outcomes or first.marginals:
                ax.legend(fontsize=7, loc="upper left", bbox_to_anchor=(1.01, 1.0))
        ax.set_title(result.experiment.name)
        if has_numbers:
            ax2 = axes[0, 1]
            modes = list(result.points[0].numbers)
            if result.parameter is None:
                vals = [result.points[0].numbers[m] for m in modes]
                ax2.bar(range(len(modes)), vals, color="0.55")
                ax2.set_xticks(range(len(modes)), modes)
            else:
                xs = [_xvalue(p.value) for p in result.points]
                for m in modes:
                    ax2.plot(xs, [p.numbers[m] for p in result.points], marker="o", ms=3, lw=1, label=m)
                ax2.set_xlabel(result.parameter)
                ax2.legend(fontsize=7)
            ax2.set_ylabel("mean photon number")
        fig.tight_layout()
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, dpi=120)
        plt.close(fig)
    return path
