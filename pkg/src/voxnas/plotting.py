"""Evolution-figure rendering for exported trajectory series."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def plot_evolution(rows: list[dict], out_path: str, title: str = "Search evolution"):
    """Render trained dice per iteration with the running best overlaid.

    Rows are parsed trajectory entries (search phase). Iterations without a
    trained dice (penalties) are omitted from the scatter, matching how the
    evolution is usually displayed.
    """
    trained = [
        (r["iteration"], r["dice"]) for r in rows
        if r["phase"] == "search" and r["dice"] is not None
    ]
    best_line = []
    best = None
    for r in rows:
        if r["phase"] != "search":
            continue
        if r["dice"] is not None and (best is None or r["dice"] > best):
            best = r["dice"]
        if best is not None:
            best_line.append((r["iteration"], best))

    fig, ax = plt.subplots(figsize=(7, 4))
    if trained:
        xs, ys = zip(*trained)
        ax.plot(xs, ys, ".", color="tab:blue", alpha=0.6, label="validation dice")
    if best_line:
        xs, ys = zip(*best_line)
        ax.step(xs, ys, where="post", color="tab:red", label="best so far")
    ax.set_xlabel("iteration")
    ax.set_ylabel("validation dice")
    ax.set_ylim(0.0, 1.0)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
