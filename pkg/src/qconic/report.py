"""Figures written next to the delimited outputs (CSV sweeps, traces)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def sweep_figure(rows, path):
    """Difficulty after each surgery step, one polyline per (r, a)."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for row in rows:
        if not row.ledger:
            continue
        style = "-" if row.link == "P" else "--"
        color = "tab:blue" if row.ledger_ok else "tab:red"
        ax1.plot(range(len(row.ledger)), row.ledger, style, color=color, alpha=0.25, lw=0.8)
    ax1.set_xlabel("surgery step")
    ax1.set_ylabel("difficulty")
    ax1.set_title("ledger per link")
    single = [r for r in rows if r.link == "P"]
    ok = [r for r in single if r.ledger_ok]
    bad = [r for r in single if not r.ledger_ok]
    ax2.scatter([r.r for r in ok], [r.a for r in ok], s=12, c="tab:green", label="pass")
    if bad:
        ax2.scatter([r.r for r in bad], [r.a for r in bad], s=18, c="tab:red", marker="x",
                    label="fail")
    ax2.set_xlabel("r")
    ax2.set_ylabel("a")
    ax2.set_title("one-point link checks")
    ax2.legend(loc="upper left", fontsize=8)
    return _finish(fig, path)


def trace_figure(trace, path):
    """Total difficulty and number of base points along a driver trace."""
    d = [_lo(trace.initial_difficulty)] + [_lo(s.difficulty) for s in trace.steps]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.step(range(len(d)), d, where="post", color="tab:blue")
    ax.set_xlabel("step")
    ax.set_ylabel("total difficulty")
    ax.set_title(f"{trace.driver}: {trace.scenario.name}")
    return _finish(fig, path)


def _lo(text: str) -> int:
    # difficulties print as "7", "{1,2}" or ">=3"; plot the lower end
    t = text.strip("{}>= ")
    return min(int(x) for x in t.split(","))
