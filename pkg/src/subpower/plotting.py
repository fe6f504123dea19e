"""Figure rendering for experiment tables.

Tables remain the source of truth: every figure is a single-file SVG
written next to the CSV, with the plotted summary rows embedded as an
XML comment so the numbers can be recovered from the figure alone.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .experiments import ResultTable  # noqa: E402

plt.rcParams.update({
    "figure.figsize": (6.0, 3.8),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
    "svg.hashsalt": "subpower",
})

__all__ = ["render_table"]


def _cells_of(table: ResultTable) -> list[tuple]:
    seen: list[tuple] = []
    for row in table.rows:
        if row["stat"] != "mean":
            continue
        key = (row["D"], row["K"], row["m"], row["sigma"])
        if key not in seen:
            seen.append(key)
    return seen


def _summary_comment(table: ResultTable) -> str:
    lines = ["data: experiment summary rows (metric, stat, D, K, m, sigma, k, value)"]
    for row in table.rows:
        if row["stat"] == "value":
            continue
        lines.append(
            f"{row['metric']}, {row['stat']}, D={row['D']}, K={row['K']}, "
            f"m={row['m']}, sigma={row['sigma']}, k={row['k']}, value={row['value']}"
        )
    return "\n".join(lines)


def _embed_comment(path, comment: str) -> None:
    with open(path, encoding="utf-8") as f:
        text = f.read()
    marker = "</svg>"
    safe = comment.replace("--", "- -")
    text = text.replace(marker, f"<!--\n{safe}\n-->\n{marker}", 1)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


def _plot_recovery(table: ResultTable, ax) -> None:
    cells = _cells_of(table)
    labels, spm, pm = [], [], []
    for d, k, m, sigma in cells:
        labels.append(f"D={d}\nK={k}\nm={m}")
        spm.append(table.values("spm_error", stat="mean", D=d, K=k, m=m, sigma=sigma)[0])
        pm.append(table.values("pm_error", stat="mean", D=d, K=k, m=m, sigma=sigma)[0])
    xs = range(len(labels))
    ax.semilogy(xs, [max(v, 1e-17) for v in spm], "o-", label="subspace ascent")
    ax.semilogy(xs, [max(v, 1e-17) for v in pm], "s--", label="power method")
    ax.set_xticks(list(xs), labels)
    ax.set_ylabel("mean recovery error")
    ax.legend()


def _plot_noise(table: ResultTable, ax) -> None:
    groups: dict[tuple, list[tuple]] = {}
    for d, k, m, sigma in _cells_of(table):
        groups.setdefault((d, k, m), []).append(sigma)
    for (d, k, m), sigmas in groups.items():
        pos = sorted(float(s) for s in sigmas if s != "" and float(s) > 0)
        for metric, style in (("spm_error", "o-"), ("pm_error", "s--")):
            means = [table.values(metric, stat="mean", D=d, K=k, m=m, sigma=s)[0]
                     for s in pos]
            ax.loglog(pos, [max(v, 1e-17) for v in means], style,
                      label=f"{metric.split('_')[0]} D={d} K={k} m={m}")
    ax.set_xlabel("entry noise level")
    ax.set_ylabel("mean recovery error")
    ax.legend(fontsize=7)


def _plot_deflation(table: ResultTable, ax) -> None:
    match = ResultTable._match
    for d, k, m, sigma in _cells_of(table):
        ks = sorted({int(r["k"]) for r in table.rows
                     if r["stat"] == "mean" and r["k"] != ""
                     and match(r["D"], d) and match(r["K"], k)
                     and match(r["m"], m) and match(r["sigma"], sigma)})
        mean = [table.values("direction_error", stat="mean", D=d, K=k, m=m,
                             sigma=sigma, k=j)[0] for j in ks]
        std = [table.values("direction_error", stat="std", D=d, K=k, m=m,
                            sigma=sigma, k=j)[0] for j in ks]
        line = ax.semilogy(ks, [max(v, 1e-17) for v in mean],
                           label=f"D={d} K={k} m={m} sigma={sigma}")[0]
        lo = [max(a - b, 1e-17) for a, b in zip(mean, std)]
        hi = [a + b for a, b in zip(mean, std)]
        ax.fill_between(ks, lo, hi, alpha=0.2, color=line.get_color())
    ax.set_xlabel("recovery round")
    ax.set_ylabel("direction error")
    ax.legend(fontsize=7)


def _plot_grammian(table: ResultTable, ax) -> None:
    cells = _cells_of(table)
    labels, mean, std = [], [], []
    for d, k, m, sigma in cells:
        labels.append(f"D={d}\nK={k}")
        mean.append(table.values("grammian_min_eig", stat="mean", D=d, K=k, m=m)[0])
        std.append(table.values("grammian_min_eig", stat="std", D=d, K=k, m=m)[0])
    xs = range(len(labels))
    ax.errorbar(xs, mean, yerr=std, fmt="o-")
    ax.set_xticks(list(xs), labels)
    ax.set_ylabel("min Grammian eigenvalue")
    ax.set_ylim(bottom=0)


def _plot_init(table: ResultTable, ax) -> None:
    cells = _cells_of(table)
    labels, mean, std, ref = [], [], [], []
    for d, k, m, sigma in cells:
        n = (int(m) + 1) // 2
        labels.append(f"D={d}\nK={k}\nm={m}")
        mean.append(table.values("objective_at_random", stat="mean",
                                 D=d, K=k, m=m)[0])
        std.append(table.values("objective_at_random", stat="std",
                                D=d, K=k, m=m)[0])
        ref.append(int(k) / int(d) ** n)
    xs = range(len(labels))
    ax.errorbar(xs, mean, yerr=std, fmt="o-", label="mean objective at random start")
    ax.plot(xs, ref, "k:", label="K / D^n")
    ax.set_xticks(list(xs), labels)
    ax.set_yscale("log")
    ax.legend()


_PLOTTERS = {
    "fig-recovery": _plot_recovery,
    "fig-noise": _plot_noise,
    "fig-deflation": _plot_deflation,
    "fig-grammian": _plot_grammian,
    "fig-init": _plot_init,
}


def render_table(table: ResultTable, experiment: str, path) -> None:
    """Render the experiment's summary view to a single SVG file."""
    fig, ax = plt.subplots()
    _PLOTTERS[experiment](table, ax)
    ax.set_title(experiment)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    _embed_comment(path, _summary_comment(table))
