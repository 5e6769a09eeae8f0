"""Figures for reports, rendered off-screen to image files."""
from __future__ import annotations

from fractions import Fraction

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .stats import EmpiricalCDF, normal_cdf  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 3.8),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "savefig.dpi": 120,
}


def _num(x) -> float:
    if isinstance(x, str):
        return float(Fraction(x))
    return float(x)


def _save(fig, path: str) -> str:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def cdf_figure(cdf: EmpiricalCDF, path: str, title: str = "") -> str:
    """Step CDF of a sample against the standard normal CDF."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        xs = np.linspace(min(cdf.values[0], -4.0), max(cdf.values[-1], 4.0), 800)
        ax.plot(xs, normal_cdf(xs), color="0.2", lw=1.2, label="standard normal")
        ax.step(cdf.values, cdf.cdf(cdf.values), where="post", color="tab:blue", lw=1.0,
                label="generator")
        ax.set_xlabel("<w, x>")
        ax.set_ylabel("CDF")
        ax.set_title(title)
        ax.legend(loc="upper left")
        return _save(fig, path)


def fooling_figure(report: dict, path: str) -> str:
    """Measured error per row with its confidence half-width and the target eps."""
    rows = report["results"]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        pos = np.arange(len(rows))
        err = [_num(r["error"]) for r in rows]
        hw = [_num(r.get("ci_half_width") or 0.0) for r in rows]
        ax.bar(pos, err, yerr=hw, color="tab:blue", capsize=3, label="|uniform - generator|")
        targets = [r.get("eps_target") for r in rows]
        if any(t is not None for t in targets):
            ax.scatter(pos, [np.nan if t is None else _num(t) for t in targets], marker="_",
                       s=400, color="tab:red", label="eps target")
        ax.set_xticks(pos, [f"{r['function_id']}\n{r['generator_id']}" for r in rows], fontsize=7)
        ax.set_ylabel("fooling error")
        ax.legend()
        return _save(fig, path)


def lemma_figure(report: dict, path: str) -> str:
    """Attained quantity divided by its bound for every check (pass means <= 1)."""
    rows = report["results"]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.0, 0.3 * len(rows) + 1.5))
        ratios = []
        for r in rows:
            b = _num(r["bound"])
            ratios.append(_num(r["quantity"]) / b if b else 0.0)
        colors = ["tab:green" if r["passed"] else "tab:red" for r in rows]
        pos = np.arange(len(rows))
        ax.barh(pos, ratios, color=colors)
        ax.axvline(1.0, color="0.2", lw=1.0, ls="--")
        ax.set_yticks(pos, [r["name"] for r in rows], fontsize=7)
        ax.invert_yaxis()
        ax.set_xlabel("quantity / bound")
        return _save(fig, path)


def report_figure(report: dict, path: str) -> str:
    if report["kind"] == "fooling":
        return fooling_figure(report, path)
    return lemma_figure(report, path)
