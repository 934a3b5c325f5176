"""Figures for suite reports.

Rendering uses the non-interactive Agg backend, so it works headless. Each
figure is written atomically as PNG next to the CSV output of ``report``.
"""

from __future__ import annotations

import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from uplift_sgt.fairness import BOUNDS, Metric  # noqa: E402
from uplift_sgt.fileio import atomic_write_bytes  # noqa: E402

STRATEGY_KEYS = (
    ("NoOffer", "profit_no_offer"),
    ("FullOffer", "profit_full_offer"),
    ("Oracle", "profit_oracle"),
    ("Uplift", "profit_uplift"),
    ("SGT", "profit_sgt"),
)

# PNG metadata would otherwise embed the matplotlib version string.
_PNG_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=100, metadata=_PNG_META)
    plt.close(fig)
    atomic_write_bytes(path, buf.getvalue())
    return path


def _cells_at(report: dict, budget: float):
    for camp in report["campaigns"]:
        for cell in camp["cells"]:
            if cell["budget"] == budget:
                yield camp["campaign"], cell


def plot_gap_closed(report: dict, path: Path) -> Path:
    """Mean gap closed per budget, with the min-max range as error bars."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for key, label, marker in (
        ("summary", "vs. Oracle", "o"),
        ("summary_budgeted", "vs. budgeted Oracle", "s"),
    ):
        rows = [r for r in report[key] if r["mean"] is not None]
        if not rows:
            continue
        x = np.array([100 * r["budget"] for r in rows])
        mean = np.array([r["mean"] for r in rows])
        err = np.array([[r["mean"] - r["min"] for r in rows], [r["max"] - r["mean"] for r in rows]])
        ax.errorbar(x, mean, yerr=err, marker=marker, capsize=4, label=label)
    ax.axhline(0.0, color="grey", linewidth=0.8)
    ax.set_xlabel("budget (% of population)")
    ax.set_ylabel("optimality gap closed (%)")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_profits(report: dict, budget: float, path: Path) -> Path:
    """Grouped profit bars per campaign for every strategy at one budget."""
    cells = [(c, cell) for c, cell in _cells_at(report, budget) if cell["gap"] is not None]
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(cells) + 2), 4))
    width = 0.8 / len(STRATEGY_KEYS)
    x = np.arange(len(cells))
    for k, (name, key) in enumerate(STRATEGY_KEYS):
        vals = [cell["gap"][key] for _, cell in cells]
        ax.bar(x + (k - 2) * width, vals, width, label=name)
    ax.set_xticks(x)
    ax.set_xticklabels([str(c) for c, _ in cells])
    ax.set_xlabel("campaign")
    ax.set_ylabel("profit")
    ax.set_title(f"budget {100 * budget:g}%")
    ax.legend(fontsize="small", ncol=len(STRATEGY_KEYS))
    fig.tight_layout()
    return _save(fig, path)


def _mean_metric_values(report: dict, budget: float) -> dict[tuple[str, str], dict[str, float]]:
    acc: dict[tuple[str, str], dict[str, list[float]]] = {}
    for _, cell in _cells_at(report, budget):
        for rep in cell["fairness"]:
            slot = acc.setdefault((rep["attribute"], rep["mode"]), {})
            for res in rep["results"]:
                if res["value"] is not None:
                    slot.setdefault(res["metric"], []).append(res["value"])
    return {k: {m: float(np.mean(v)) for m, v in d.items()} for k, d in acc.items()}


def plot_fairness(report: dict, budget: float, path: Path) -> Path:
    """Mean metric values per attribute, base and enhanced, over ideal bands."""
    means = _mean_metric_values(report, budget)
    attributes = sorted({a for a, _ in means})
    metrics = [m.value for m in Metric]
    fig, axes = plt.subplots(1, max(1, len(attributes)), figsize=(4 * max(1, len(attributes)), 4))
    axes = np.atleast_1d(axes)
    x = np.arange(len(metrics))
    for ax, attr in zip(axes, attributes):
        for i, m in enumerate(metrics):
            lo, hi = BOUNDS[Metric(m)]
            ax.fill_between([i - 0.4, i + 0.4], lo, hi, color="tab:green", alpha=0.15, linewidth=0)
        for offset, mode, colour in ((-0.15, "base", "tab:blue"), (0.15, "enhanced", "tab:orange")):
            vals = means.get((attr, mode), {})
            xs = [i + offset for i, m in enumerate(metrics) if m in vals]
            ys = [vals[m] for m in metrics if m in vals]
            ax.bar(xs, ys, 0.3, color=colour, label=mode)
        ax.axhline(0.0, color="grey", linewidth=0.8)
        ax.set_xticks(x)
        ax.set_xticklabels(metrics, rotation=45)
        ax.set_title(attr)
    axes[0].legend(fontsize="small")
    fig.suptitle(f"fairness at budget {100 * budget:g}% (shaded: ideal band)")
    fig.tight_layout()
    return _save(fig, path)


def render_suite_figures(report: dict, out_dir, budget: float | None = None) -> list[Path]:
    """Write the gap, profit and fairness figures into ``out_dir``.

    Args:
      report: a suite report as produced by ``run_suite``.
      out_dir: destination directory, created if needed.
      budget: budget used for the per-budget figures; defaults to 10% when
        evaluated, else the first budget.
    """
    out_dir = Path(out_dir)
    budgets = report["budgets"]
    if budget is None:
        budget = 0.10 if 0.10 in budgets else budgets[0]
    return [
        plot_gap_closed(report, out_dir / "gap_closed.png"),
        plot_profits(report, budget, out_dir / "profits.png"),
        plot_fairness(report, budget, out_dir / "fairness.png"),
    ]
