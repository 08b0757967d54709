"""Matplotlib renderings of the experiment outputs.

Figures are written next to the delimited files so a run's directory is
self-contained: an error-spectrum panel (eigenvalue and L2 eigenfunction
errors against the normalized mode number) and an operation-cost panel
against the macroelement blocksize.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _level_label(level: int, s: int) -> str:
    if level == 0:
        return "max continuity"
    bs = 2 ** (s - level)
    return f"blocksize {bs}" + (" (C0 FEA)" if level == s else "")


def error_spectrum_figure(level_records: dict, n_iga: int, ne: int, title: str, path) -> None:
    """EV and EFL curves per partitioning level versus i / N_iga.

    ``level_records`` maps level -> list of ErrorRecord.
    """
    s = ne.bit_length() - 1
    fig, axes = plt.subplots(1, 2, figsize=(11, 4.2))
    for level in sorted(level_records):
        recs = level_records[level]
        x = [(r.position + 1) / n_iga for r in recs]
        ev = [max(r.ev, 1e-18) for r in recs]
        style = dict(lw=2.2, color="k", zorder=5) if level == 0 else dict(lw=1.2)
        axes[0].semilogy(x, ev, label=_level_label(level, s), **style)
        pts = [((r.position + 1) / n_iga, r.efl) for r in recs if not math.isnan(r.efl)]
        if pts:
            axes[1].semilogy(*zip(*pts), marker=".", ms=3, **style)
    axes[0].set_xlabel(r"$i / N$")
    axes[0].set_ylabel("eigenvalue error")
    axes[1].set_xlabel(r"$i / N$")
    axes[1].set_ylabel(r"eigenfunction $L^2$ error")
    axes[0].legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)


def flops_blocksize_figure(rows: list[dict], title: str, path) -> None:
    """Per-operation FLOP totals versus blocksize (one row per level)."""
    rows = sorted(rows, key=lambda r: -r["level"])
    bs = [r["blocksize"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    for key, label in (
        ("fact_flops", "factorization"),
        ("fb_flops", "f/b elimination"),
        ("matvec_flops", "mat-vec product"),
        ("total_flops", "total"),
    ):
        vals = [r[key] for r in rows]
        if any(v > 0 for v in vals):
            ax.loglog(bs, vals, marker="o", base=2, label=label)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("blocksize")
    ax.set_ylabel("operations")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=140)
    plt.close(fig)
